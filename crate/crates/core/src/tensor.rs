//! Minimal dense matrix and vector kernels used by the translation model.
//!
//! Everything is row-major `Vec<F>` with explicit shapes. The model only
//! needs matrix-vector products, outer-product accumulation, and a few
//! elementwise maps, so there is no general tensor machinery here. Loops are
//! written over slices so they autovectorize.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Debug;

use num_traits::Float;
use rand::Rng;

/// Element type of all model state: `f32` for training and checkpoints,
/// `f64` for numerical verification.
pub trait Scalar: Float + Default + Debug + 'static {
    fn from_f64(x: f64) -> Self {
        Self::from(x).expect("finite f64 converts to every supported scalar")
    }
    fn to_f64(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).expect("scalar converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Dense row-major matrix. Vectors are represented as plain slices; a bias
/// term is a `Mat` with one row.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat<F> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

impl<F: Scalar> Mat<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![F::zero(); rows * cols] }
    }

    /// Entries drawn independently from `U(-scale, scale)`. Sampling happens
    /// in f64 so f32 and f64 models built from the same seed agree.
    pub fn uniform<R: Rng>(rows: usize, cols: usize, scale: f64, rng: &mut R) -> Self {
        let mut m = Mat::zeros(rows, cols);
        for v in m.data.iter_mut() {
            *v = F::from_f64(rng.gen_range(-scale..scale));
        }
        m
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<F>) -> Self {
        assert_eq!(data.len(), rows * cols, "shape does not match element count");
        Mat { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn row(&self, r: usize) -> &[F] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [F] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[F] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [F] {
        &mut self.data
    }

    pub fn fill(&mut self, value: F) {
        for v in self.data.iter_mut() {
            *v = value;
        }
    }

    /// `out = self * x` where `x` has `cols` elements and `out` has `rows`.
    pub fn matvec(&self, x: &[F], out: &mut [F]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (r, o) in out.iter_mut().enumerate() {
            *o = dot(self.row(r), x);
        }
    }

    /// `out += self * x`.
    pub fn matvec_add(&self, x: &[F], out: &mut [F]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (r, o) in out.iter_mut().enumerate() {
            *o = *o + dot(self.row(r), x);
        }
    }

    /// `out += selfᵀ * x` where `x` has `rows` elements and `out` has `cols`.
    pub fn matvec_t_add(&self, x: &[F], out: &mut [F]) {
        debug_assert_eq!(x.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        for (r, &xr) in x.iter().enumerate() {
            axpy(xr, self.row(r), out);
        }
    }

    /// `self += a ⊗ b` (rank-one update; `a` spans rows, `b` spans columns).
    pub fn outer_add(&mut self, a: &[F], b: &[F]) {
        debug_assert_eq!(a.len(), self.rows);
        debug_assert_eq!(b.len(), self.cols);
        for (r, &ar) in a.iter().enumerate() {
            if ar != F::zero() {
                axpy(ar, b, self.row_mut(r));
            }
        }
    }
}

pub fn dot<F: Scalar>(a: &[F], b: &[F]) -> F {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = F::zero();
    for (&x, &y) in a.iter().zip(b.iter()) {
        acc = acc + x * y;
    }
    acc
}

/// `y += alpha * x`.
pub fn axpy<F: Scalar>(alpha: F, x: &[F], y: &mut [F]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x.iter()) {
        *yi = *yi + alpha * xi;
    }
}

pub fn add_assign<F: Scalar>(y: &mut [F], x: &[F]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x.iter()) {
        *yi = *yi + xi;
    }
}

pub fn scale_in_place<F: Scalar>(x: &mut [F], s: F) {
    for v in x.iter_mut() {
        *v = *v * s;
    }
}

pub fn tanh_in_place<F: Scalar>(x: &mut [F]) {
    for v in x.iter_mut() {
        *v = v.tanh();
    }
}

pub fn sigmoid_in_place<F: Scalar>(x: &mut [F]) {
    for v in x.iter_mut() {
        *v = F::one() / (F::one() + (-*v).exp());
    }
}

/// Numerically stable log-softmax: `out[i] = x[i] - max - ln Σ exp(x - max)`.
pub fn log_softmax<F: Scalar>(x: &[F], out: &mut [F]) {
    debug_assert_eq!(x.len(), out.len());
    let mut max = F::neg_infinity();
    for &v in x {
        if v > max {
            max = v;
        }
    }
    let mut sum = F::zero();
    for (&v, o) in x.iter().zip(out.iter_mut()) {
        let s = v - max;
        *o = s;
        sum = sum + s.exp();
    }
    let lse = sum.ln();
    for o in out.iter_mut() {
        *o = *o - lse;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matvec_against_hand_computed_product() {
        let m = Mat::from_rows(2, 3, vec![1.0f64, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let mut out = [0.0; 2];
        m.matvec(&[1.0, 0.5, -1.0], &mut out);
        assert_eq!(out, [1.0 + 1.0 - 3.0, 4.0 + 2.5 - 6.0]);
    }

    #[test]
    fn transpose_matvec_matches_explicit_transpose() {
        let m = Mat::from_rows(2, 3, vec![1.0f64, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let mut out = [0.0; 3];
        m.matvec_t_add(&[2.0, -1.0], &mut out);
        assert_eq!(out, [2.0 - 4.0, 4.0 - 5.0, 6.0 - 6.0]);
    }

    #[test]
    fn outer_add_accumulates_rank_one_update() {
        let mut m = Mat::zeros(2, 2);
        m.outer_add(&[1.0f64, 2.0], &[3.0, 4.0]);
        m.outer_add(&[1.0, 0.0], &[1.0, 1.0]);
        assert_eq!(m.as_slice(), &[4.0, 5.0, 6.0, 8.0]);
    }

    #[test]
    fn log_softmax_sums_to_one_after_exp() {
        let x = [0.3f64, -1.2, 2.5, 0.0];
        let mut out = [0.0; 4];
        log_softmax(&x, &mut out);
        let total: f64 = out.iter().map(|v| v.exp()).sum();
        assert!((total - 1.0).abs() < 1e-12);
        // Shift invariance.
        let shifted: [f64; 4] = [100.3, 98.8, 102.5, 100.0];
        let mut out2 = [0.0; 4];
        log_softmax(&shifted, &mut out2);
        for (a, b) in out.iter().zip(out2.iter()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn uniform_init_is_seed_deterministic() {
        use rand::SeedableRng;
        let mut r1 = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut r2 = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let a: Mat<f32> = Mat::uniform(3, 4, 0.1, &mut r1);
        let b: Mat<f32> = Mat::uniform(3, 4, 0.1, &mut r2);
        assert_eq!(a, b);
    }
}
