//! Forward computation: bidirectional encoding, additive attention, decoder
//! steps with log-softmax output, and teacher-forced sequence scoring.
//!
//! Scoring accumulates in f64 regardless of the parameter precision so that
//! corpus losses are reproducible sums.

use alloc::vec;
use alloc::vec::Vec;

use crate::nmt::{GruWeights, ModelParameters, NmtError};
use crate::tensor::{axpy, dot, log_softmax, sigmoid_in_place, tanh_in_place, Scalar};

/// Source annotations: one vector of width `2 * hidden_dim` per source
/// position, plus the attention keys `u_a · h_i` precomputed once per
/// sentence because every decoder step reuses them.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderStates<F> {
    pub(crate) h: Vec<Vec<F>>,
    pub(crate) att_keys: Vec<Vec<F>>,
}

impl<F: Scalar> EncoderStates<F> {
    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    /// Annotation vector at source position `i`.
    pub fn annotation(&self, i: usize) -> &[F] {
        &self.h[i]
    }
}

/// Decoder recurrent state and the current target position.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderState<F> {
    pub s: Vec<F>,
    pub t: usize,
}

/// Intermediate activations of one recurrent step, kept for backprop.
#[derive(Debug, Clone)]
pub(crate) struct GruStepCache<F> {
    pub x: Vec<F>,
    pub h_prev: Vec<F>,
    pub z: Vec<F>,
    pub r: Vec<F>,
    pub hbar: Vec<F>,
}

pub(crate) fn gru_step_cached<F: Scalar>(
    w: &GruWeights<F>,
    x: &[F],
    h_prev: &[F],
) -> (Vec<F>, GruStepCache<F>) {
    let hidden = w.u_z.rows();
    debug_assert_eq!(h_prev.len(), hidden);

    let mut z = w.b_z.row(0).to_vec();
    w.w_z.matvec_add(x, &mut z);
    w.u_z.matvec_add(h_prev, &mut z);
    sigmoid_in_place(&mut z);

    let mut r = w.b_r.row(0).to_vec();
    w.w_r.matvec_add(x, &mut r);
    w.u_r.matvec_add(h_prev, &mut r);
    sigmoid_in_place(&mut r);

    let rh: Vec<F> = r.iter().zip(h_prev).map(|(&ri, &hi)| ri * hi).collect();
    let mut hbar = w.b_h.row(0).to_vec();
    w.w_h.matvec_add(x, &mut hbar);
    w.u_h.matvec_add(&rh, &mut hbar);
    tanh_in_place(&mut hbar);

    let h_new: Vec<F> = z
        .iter()
        .zip(h_prev.iter())
        .zip(hbar.iter())
        .map(|((&zi, &hi), &hb)| (F::one() - zi) * hi + zi * hb)
        .collect();
    let cache = GruStepCache { x: x.to_vec(), h_prev: h_prev.to_vec(), z, r, hbar };
    (h_new, cache)
}

/// Annotations plus the per-position step caches, in forward pass order
/// then backward pass order.
pub(crate) type EncodeTrace<F> = (EncoderStates<F>, Vec<GruStepCache<F>>, Vec<GruStepCache<F>>);

/// Runs the bidirectional encoder, also returning the step caches.
pub(crate) fn encode_cached<F: Scalar>(
    p: &ModelParameters<F>,
    source_ids: &[usize],
) -> Result<EncodeTrace<F>, NmtError> {
    if source_ids.is_empty() {
        return Err(NmtError::EmptySource);
    }
    let cfg = p.config();
    for &id in source_ids {
        if id >= cfg.src_vocab {
            return Err(NmtError::IdOutOfRange { id, vocab_size: cfg.src_vocab });
        }
    }
    let m = source_ids.len();
    let hidden = cfg.hidden_dim;

    let mut fwd_states: Vec<Vec<F>> = Vec::with_capacity(m);
    let mut fwd_caches = Vec::with_capacity(m);
    let mut state = vec![F::zero(); hidden];
    for &id in source_ids {
        let (next, cache) = gru_step_cached(&p.enc_fwd, p.src_emb.row(id), &state);
        fwd_caches.push(cache);
        fwd_states.push(next.clone());
        state = next;
    }

    let mut bwd_states: Vec<Vec<F>> = vec![Vec::new(); m];
    let mut bwd_caches = Vec::with_capacity(m);
    let mut state = vec![F::zero(); hidden];
    for i in (0..m).rev() {
        let (next, cache) = gru_step_cached(&p.enc_bwd, p.src_emb.row(source_ids[i]), &state);
        bwd_caches.push(cache);
        bwd_states[i] = next.clone();
        state = next;
    }

    let mut h = Vec::with_capacity(m);
    let mut att_keys = Vec::with_capacity(m);
    for i in 0..m {
        let mut hi = Vec::with_capacity(2 * hidden);
        hi.extend_from_slice(&fwd_states[i]);
        hi.extend_from_slice(&bwd_states[i]);
        let mut key = vec![F::zero(); hidden];
        p.attn_u.matvec(&hi, &mut key);
        att_keys.push(key);
        h.push(hi);
    }
    Ok((EncoderStates { h, att_keys }, fwd_caches, bwd_caches))
}

/// Reads the source sentence into annotation vectors.
pub fn encode<F: Scalar>(
    p: &ModelParameters<F>,
    source_ids: &[usize],
) -> Result<EncoderStates<F>, NmtError> {
    encode_cached(p, source_ids).map(|(enc, _, _)| enc)
}

/// Initial decoder state from the first backward encoder state:
/// s_0 = tanh(w_init · h_backward_first).
pub fn initial_state<F: Scalar>(p: &ModelParameters<F>, enc: &EncoderStates<F>) -> DecoderState<F> {
    let hidden = p.config().hidden_dim;
    let hb_first = &enc.h[0][hidden..];
    let mut s = vec![F::zero(); hidden];
    p.w_init.matvec(hb_first, &mut s);
    tanh_in_place(&mut s);
    DecoderState { s, t: 0 }
}

pub(crate) struct AttnCache<F> {
    /// tanh(w_a s_prev + u_a h_i) per source position.
    pub u: Vec<Vec<F>>,
    pub alpha: Vec<F>,
    pub c: Vec<F>,
}

pub(crate) fn attention_cached<F: Scalar>(
    p: &ModelParameters<F>,
    s_prev: &[F],
    enc: &EncoderStates<F>,
) -> AttnCache<F> {
    let hidden = p.config().hidden_dim;
    let m = enc.len();
    let mut q = vec![F::zero(); hidden];
    p.attn_w.matvec(s_prev, &mut q);

    let mut u = Vec::with_capacity(m);
    let mut scores = Vec::with_capacity(m);
    let v = p.attn_v.row(0);
    for key in &enc.att_keys {
        let mut ui: Vec<F> = q.iter().zip(key.iter()).map(|(&a, &b)| a + b).collect();
        tanh_in_place(&mut ui);
        scores.push(dot(v, &ui));
        u.push(ui);
    }

    // Stable softmax over the scores.
    let mut max = F::neg_infinity();
    for &s in &scores {
        if s > max {
            max = s;
        }
    }
    let mut alpha: Vec<F> = scores.iter().map(|&s| (s - max).exp()).collect();
    let mut sum = F::zero();
    for &a in &alpha {
        sum = sum + a;
    }
    for a in alpha.iter_mut() {
        *a = *a / sum;
    }

    let mut c = vec![F::zero(); 2 * hidden];
    for (ai, hi) in alpha.iter().zip(enc.h.iter()) {
        axpy(*ai, hi, &mut c);
    }
    AttnCache { u, alpha, c }
}

/// Additive attention: weights α over source positions and the context
/// vector c = Σ α_i h_i.
pub fn attention_context<F: Scalar>(
    p: &ModelParameters<F>,
    s_prev: &DecoderState<F>,
    enc: &EncoderStates<F>,
) -> (Vec<F>, Vec<F>) {
    let cache = attention_cached(p, &s_prev.s, enc);
    (cache.c, cache.alpha)
}

pub(crate) struct StepCache<F> {
    pub y_prev: usize,
    pub attn: AttnCache<F>,
    pub gru: GruStepCache<F>,
    pub r_in: Vec<F>,
    pub r: Vec<F>,
    pub logp: Vec<F>,
}

pub(crate) fn decoder_step_cached<F: Scalar>(
    p: &ModelParameters<F>,
    y_prev: usize,
    state: &DecoderState<F>,
    enc: &EncoderStates<F>,
) -> (DecoderState<F>, StepCache<F>) {
    let cfg = p.config();
    assert!(y_prev < cfg.tgt_vocab, "target id out of range");
    let attn = attention_cached(p, &state.s, enc);
    let e_y = p.tgt_emb.row(y_prev);

    let mut gin = Vec::with_capacity(cfg.dec_input_dim());
    gin.extend_from_slice(e_y);
    gin.extend_from_slice(&attn.c);
    let (s_new, gru) = gru_step_cached(&p.dec, &gin, &state.s);

    let mut r_in = Vec::with_capacity(cfg.readout_input_dim());
    r_in.extend_from_slice(e_y);
    r_in.extend_from_slice(&s_new);
    r_in.extend_from_slice(&attn.c);
    let mut r = p.readout_b.row(0).to_vec();
    p.readout_w.matvec_add(&r_in, &mut r);
    tanh_in_place(&mut r);

    let mut logits = p.out_b.row(0).to_vec();
    p.out_w.matvec_add(&r, &mut logits);
    let mut logp = vec![F::zero(); logits.len()];
    log_softmax(&logits, &mut logp);

    let next = DecoderState { s: s_new, t: state.t + 1 };
    (next, StepCache { y_prev, attn, gru, r_in, r, logp })
}

/// One decoder step: attends over the source, advances the recurrent state
/// on (embedding(y_prev), context), and emits log-probabilities over the
/// target vocabulary.
pub fn decoder_step<F: Scalar>(
    p: &ModelParameters<F>,
    y_prev: usize,
    state: &DecoderState<F>,
    enc: &EncoderStates<F>,
) -> (Vec<F>, DecoderState<F>) {
    let (next, cache) = decoder_step_cached(p, y_prev, state, enc);
    (cache.logp, next)
}

/// Teacher-forced log-probability of `target_ids` (wrapped in the begin and
/// end markers) given `source_ids`: the sum over steps of the chosen
/// log-probabilities, accumulated in f64.
pub fn sequence_logprob<F: Scalar>(
    p: &ModelParameters<F>,
    source_ids: &[usize],
    target_ids: &[usize],
) -> Result<f64, NmtError> {
    if target_ids.len() < 2 {
        return Err(NmtError::EmptyTarget);
    }
    let tgt_vocab = p.config().tgt_vocab;
    for &id in target_ids {
        if id >= tgt_vocab {
            return Err(NmtError::IdOutOfRange { id, vocab_size: tgt_vocab });
        }
    }
    let enc = encode(p, source_ids)?;
    let mut state = initial_state(p, &enc);
    let mut total = 0.0f64;
    for step in 1..target_ids.len() {
        let (logp, next) = decoder_step(p, target_ids[step - 1], &state, &enc);
        total += logp[target_ids[step]].to_f64();
        state = next;
    }
    Ok(total)
}

/// Mean negative log-likelihood per target token over `pairs`, teacher
/// forced, accumulated in f64. This is the training and dev objective.
pub fn corpus_loss<F: Scalar>(
    p: &ModelParameters<F>,
    pairs: &[(Vec<usize>, Vec<usize>)],
) -> Result<f64, NmtError> {
    if pairs.is_empty() {
        return Err(NmtError::EmptyCorpus { role: "evaluation" });
    }
    let mut nll = 0.0f64;
    let mut tokens = 0usize;
    for (src, tgt) in pairs {
        nll -= sequence_logprob(p, src, tgt)?;
        tokens += tgt.len() - 1;
    }
    Ok(nll / tokens as f64)
}
