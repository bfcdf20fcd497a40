//! Adam with global gradient-norm clipping, the epoch loop with seeded
//! reshuffling and best-dev selection, and fine-tuning with frozen
//! embedding tensors.

use alloc::vec::Vec;

// In no_std builds the f64 transcendentals come from this trait (via libm).
#[allow(unused_imports)]
use num_traits::Float;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::nmt::backward::loss_and_gradients;
use crate::nmt::forward::corpus_loss;
use crate::nmt::{ModelParameters, NmtError, TrainConfig};
use crate::tensor::{scale_in_place, Scalar};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// First and second moment estimates, one slot per parameter tensor.
#[derive(Debug, Clone)]
pub struct AdamState<F> {
    m: ModelParameters<F>,
    v: ModelParameters<F>,
    step: u64,
}

impl<F: Scalar> AdamState<F> {
    pub fn new(like: &ModelParameters<F>) -> Self {
        AdamState { m: like.zeros_like(), v: like.zeros_like(), step: 0 }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// Scales the whole gradient so its global L2 norm does not exceed
/// `clip_norm`. Norms are accumulated in f64. Returns the post-clip norm,
/// recomputed after scaling rather than assumed.
pub fn clip_global_norm<F: Scalar>(grads: &mut ModelParameters<F>, clip_norm: f64) -> f64 {
    let norm = global_norm(grads);
    if norm <= clip_norm || norm == 0.0 {
        return norm;
    }
    let scale = F::from_f64(clip_norm / norm);
    for (_, t) in grads.tensors_mut() {
        scale_in_place(t.as_mut_slice(), scale);
    }
    global_norm(grads)
}

fn global_norm<F: Scalar>(grads: &ModelParameters<F>) -> f64 {
    let mut sq = 0.0f64;
    for (_, t) in grads.tensors() {
        for &g in t.as_slice() {
            let g = g.to_f64();
            sq += g * g;
        }
    }
    sq.sqrt()
}

/// One Adam update. Tensors whose names appear in `frozen` are skipped
/// entirely: no parameter change and no moment update, so a later unfrozen
/// step sees no stale state.
pub fn adam_step<F: Scalar>(
    params: &mut ModelParameters<F>,
    grads: &ModelParameters<F>,
    state: &mut AdamState<F>,
    learning_rate: f64,
    frozen: &[&str],
) {
    state.step += 1;
    let t = state.step;
    let bias1 = 1.0 - ADAM_BETA1.powi(t as i32);
    let bias2 = 1.0 - ADAM_BETA2.powi(t as i32);

    let b1 = F::from_f64(ADAM_BETA1);
    let b2 = F::from_f64(ADAM_BETA2);
    let omb1 = F::from_f64(1.0 - ADAM_BETA1);
    let omb2 = F::from_f64(1.0 - ADAM_BETA2);
    let inv_bias1 = F::from_f64(1.0 / bias1);
    let inv_bias2 = F::from_f64(1.0 / bias2);
    let lr = F::from_f64(learning_rate);
    let eps = F::from_f64(ADAM_EPS);

    let mut p_t = params.tensors_mut();
    let g_t = grads.tensors();
    let AdamState { m, v, .. } = state;
    let mut m_t = m.tensors_mut();
    let mut v_t = v.tensors_mut();
    for i in 0..p_t.len() {
        let name = p_t[i].0;
        if frozen.contains(&name) {
            continue;
        }
        let p = p_t[i].1.as_mut_slice();
        let g = g_t[i].1.as_slice();
        let m = m_t[i].1.as_mut_slice();
        let v = v_t[i].1.as_mut_slice();
        for k in 0..p.len() {
            m[k] = b1 * m[k] + omb1 * g[k];
            v[k] = b2 * v[k] + omb2 * g[k] * g[k];
            let m_hat = m[k] * inv_bias1;
            let v_hat = v[k] * inv_bias2;
            p[k] = p[k] - lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    /// 1-based epoch number.
    pub epoch: usize,
    /// Mean per-token negative log-likelihood over the epoch's minibatches.
    pub train_loss: f64,
    /// Mean per-token negative log-likelihood on the dev corpus after the
    /// epoch.
    pub dev_loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<F> {
    /// Parameters of the epoch with the lowest dev loss (the initial
    /// parameters when zero epochs were run).
    pub params: ModelParameters<F>,
    pub epochs: Vec<EpochStats>,
    /// 1-based; 0 means no epoch ran.
    pub best_epoch: usize,
    /// Infinity when no epoch ran.
    pub best_dev_loss: f64,
    /// Global gradient norm after clipping, one entry per optimizer step.
    pub post_clip_norms: Vec<f64>,
    /// Minibatches skipped because no pair in them was trainable.
    pub skipped_minibatches: usize,
}

fn trainable(pair: &(Vec<usize>, Vec<usize>)) -> bool {
    !pair.0.is_empty() && pair.1.len() >= 2
}

fn train_inner<F, O>(
    params: ModelParameters<F>,
    corpus: &[(Vec<usize>, Vec<usize>)],
    dev: &[(Vec<usize>, Vec<usize>)],
    cfg: &TrainConfig,
    frozen: &[&str],
    mut epoch_observer: O,
) -> Result<TrainOutcome<F>, NmtError>
where
    F: Scalar,
    O: FnMut(&EpochStats, &ModelParameters<F>),
{
    cfg.validate()?;
    if !corpus.iter().any(trainable) {
        return Err(NmtError::EmptyCorpus { role: "training" });
    }
    if dev.is_empty() {
        return Err(NmtError::EmptyCorpus { role: "development" });
    }

    let mut params = params;
    let mut adam = AdamState::new(&params);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..corpus.len()).collect();

    let mut best_params = params.clone();
    let mut best_epoch = 0usize;
    let mut best_dev_loss = f64::INFINITY;
    let mut epochs = Vec::with_capacity(cfg.epochs);
    let mut post_clip_norms = Vec::new();
    let mut skipped_minibatches = 0usize;

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_nll = 0.0f64;
        let mut epoch_tokens = 0usize;
        for (step, chunk) in order.chunks(cfg.minibatch_size).enumerate() {
            let batch: Vec<&(Vec<usize>, Vec<usize>)> = chunk
                .iter()
                .map(|&i| &corpus[i])
                .filter(|p| trainable(p))
                .collect();
            if batch.is_empty() {
                skipped_minibatches += 1;
                continue;
            }
            let batch_tokens: usize = batch.iter().map(|(_, t)| t.len() - 1).sum();
            let (loss, mut grads) = loss_and_gradients(&params, &batch)?;
            if !loss.is_finite() {
                return Err(NmtError::NonFiniteLoss { epoch, step });
            }
            epoch_nll += loss * batch_tokens as f64;
            epoch_tokens += batch_tokens;
            post_clip_norms.push(clip_global_norm(&mut grads, cfg.clip_norm));
            adam_step(&mut params, &grads, &mut adam, cfg.learning_rate, frozen);
            if !params.all_finite() {
                return Err(NmtError::NonFiniteLoss { epoch, step });
            }
        }
        let train_loss = epoch_nll / epoch_tokens as f64;
        let dev_loss = corpus_loss(&params, dev)?;
        let stats = EpochStats { epoch, train_loss, dev_loss };
        epoch_observer(&stats, &params);
        epochs.push(stats);
        if dev_loss < best_dev_loss {
            best_dev_loss = dev_loss;
            best_params = params.clone();
            best_epoch = epoch;
        }
    }

    Ok(TrainOutcome {
        params: best_params,
        epochs,
        best_epoch,
        best_dev_loss,
        post_clip_norms,
        skipped_minibatches,
    })
}

/// Maximum-likelihood training: minibatch Adam on the mean per-token
/// negative log-likelihood, the pair order reshuffled every epoch from the
/// seeded stream, global gradient norm clipped to `cfg.clip_norm` before
/// each update. Returns the parameters of the best-dev epoch. The observer
/// sees each epoch's stats and end-of-epoch parameters (for logging or
/// per-epoch snapshots).
pub fn train<F, O>(
    params: ModelParameters<F>,
    corpus: &[(Vec<usize>, Vec<usize>)],
    dev: &[(Vec<usize>, Vec<usize>)],
    cfg: &TrainConfig,
    epoch_observer: O,
) -> Result<TrainOutcome<F>, NmtError>
where
    F: Scalar,
    O: FnMut(&EpochStats, &ModelParameters<F>),
{
    train_inner(params, corpus, dev, cfg, &[], epoch_observer)
}

/// Identical to `train` except the embedding matrices receive zero updates
/// (they are bit-identical afterwards). Callers pass the reduced
/// fine-tuning learning rate in `cfg`.
pub fn fine_tune<F, O>(
    params: ModelParameters<F>,
    corpus: &[(Vec<usize>, Vec<usize>)],
    dev: &[(Vec<usize>, Vec<usize>)],
    cfg: &TrainConfig,
    epoch_observer: O,
) -> Result<TrainOutcome<F>, NmtError>
where
    F: Scalar,
    O: FnMut(&EpochStats, &ModelParameters<F>),
{
    train_inner(params, corpus, dev, cfg, &["src_emb", "tgt_emb"], epoch_observer)
}
