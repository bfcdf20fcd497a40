//! Reverse-mode differentiation of the teacher-forced loss, written out by
//! hand against the forward pass in `forward.rs`.
//!
//! The loss is mean negative log-likelihood per target token over a
//! minibatch. Backward walks decoder steps from last to first carrying the
//! gradient of the recurrent state, then folds attention-key and
//! decoder-initialization gradients into the annotation gradients, and
//! finally walks the two encoder directions.

use alloc::vec;
use alloc::vec::Vec;

use crate::nmt::forward::{
    decoder_step_cached, encode_cached, initial_state, EncoderStates, GruStepCache, StepCache,
};
use crate::nmt::{GruWeights, ModelParameters, NmtError};
use crate::tensor::{add_assign, axpy, dot, Scalar};

struct PairTrace<F> {
    source_ids: Vec<usize>,
    target_ids: Vec<usize>,
    enc: EncoderStates<F>,
    /// Step caches for source positions 0..m (forward direction).
    fwd_caches: Vec<GruStepCache<F>>,
    /// Step caches pushed while walking positions m-1..0, so position i
    /// lives at index m-1-i.
    bwd_caches: Vec<GruStepCache<F>>,
    s0: Vec<F>,
    steps: Vec<StepCache<F>>,
}

fn pair_forward<F: Scalar>(
    p: &ModelParameters<F>,
    source_ids: &[usize],
    target_ids: &[usize],
) -> Result<(f64, PairTrace<F>), NmtError> {
    if target_ids.len() < 2 {
        return Err(NmtError::EmptyTarget);
    }
    let tgt_vocab = p.config().tgt_vocab;
    for &id in target_ids {
        if id >= tgt_vocab {
            return Err(NmtError::IdOutOfRange { id, vocab_size: tgt_vocab });
        }
    }
    let (enc, fwd_caches, bwd_caches) = encode_cached(p, source_ids)?;
    let mut state = initial_state(p, &enc);
    let s0 = state.s.clone();
    let mut steps = Vec::with_capacity(target_ids.len() - 1);
    let mut logprob = 0.0f64;
    for t in 1..target_ids.len() {
        let (next, cache) = decoder_step_cached(p, target_ids[t - 1], &state, &enc);
        logprob += cache.logp[target_ids[t]].to_f64();
        steps.push(cache);
        state = next;
    }
    let trace = PairTrace {
        source_ids: source_ids.to_vec(),
        target_ids: target_ids.to_vec(),
        enc,
        fwd_caches,
        bwd_caches,
        s0,
        steps,
    };
    Ok((logprob, trace))
}

/// Backward through one recurrent step. `dh` is the loss gradient with
/// respect to the step's output state. Accumulates weight gradients into
/// `g` and returns (d input, d previous state).
fn gru_backward<F: Scalar>(
    w: &GruWeights<F>,
    g: &mut GruWeights<F>,
    cache: &GruStepCache<F>,
    dh: &[F],
) -> (Vec<F>, Vec<F>) {
    let hidden = dh.len();
    let one = F::one();

    // h = (1-z) h_prev + z hbar
    let mut dh_prev: Vec<F> = dh
        .iter()
        .zip(&cache.z)
        .map(|(&d, &z)| d * (one - z))
        .collect();
    let da_h: Vec<F> = dh
        .iter()
        .zip(&cache.z)
        .zip(&cache.hbar)
        .map(|((&d, &z), &hb)| d * z * (one - hb * hb))
        .collect();

    // hbar = tanh(w_h x + u_h (r ⊙ h_prev) + b_h)
    let rh: Vec<F> = cache
        .r
        .iter()
        .zip(&cache.h_prev)
        .map(|(&r, &h)| r * h)
        .collect();
    g.w_h.outer_add(&da_h, &cache.x);
    g.u_h.outer_add(&da_h, &rh);
    add_assign(g.b_h.row_mut(0), &da_h);
    let mut d_rh = vec![F::zero(); hidden];
    w.u_h.matvec_t_add(&da_h, &mut d_rh);
    let dr: Vec<F> = d_rh
        .iter()
        .zip(&cache.h_prev)
        .map(|(&d, &h)| d * h)
        .collect();
    for i in 0..hidden {
        dh_prev[i] = dh_prev[i] + d_rh[i] * cache.r[i];
    }

    // Gate pre-activations.
    let da_z: Vec<F> = dh
        .iter()
        .zip(&cache.hbar)
        .zip(&cache.h_prev)
        .zip(&cache.z)
        .map(|(((&d, &hb), &h), &z)| d * (hb - h) * z * (one - z))
        .collect();
    let da_r: Vec<F> = dr
        .iter()
        .zip(&cache.r)
        .map(|(&d, &r)| d * r * (one - r))
        .collect();
    g.w_z.outer_add(&da_z, &cache.x);
    g.u_z.outer_add(&da_z, &cache.h_prev);
    add_assign(g.b_z.row_mut(0), &da_z);
    g.w_r.outer_add(&da_r, &cache.x);
    g.u_r.outer_add(&da_r, &cache.h_prev);
    add_assign(g.b_r.row_mut(0), &da_r);

    w.u_z.matvec_t_add(&da_z, &mut dh_prev);
    w.u_r.matvec_t_add(&da_r, &mut dh_prev);

    let mut dx = vec![F::zero(); cache.x.len()];
    w.w_z.matvec_t_add(&da_z, &mut dx);
    w.w_r.matvec_t_add(&da_r, &mut dx);
    w.w_h.matvec_t_add(&da_h, &mut dx);
    (dx, dh_prev)
}

/// Accumulates the gradient of `scale * nll(pair)` into `grads`.
fn pair_backward<F: Scalar>(
    p: &ModelParameters<F>,
    grads: &mut ModelParameters<F>,
    trace: &PairTrace<F>,
    scale: F,
) {
    let cfg = p.config();
    let hidden = cfg.hidden_dim;
    let emb = cfg.emb_dim;
    let m = trace.enc.len();

    // Gradients accumulated across decoder steps, folded in afterwards.
    let mut d_att_keys: Vec<Vec<F>> = vec![vec![F::zero(); hidden]; m];
    let mut d_annotations: Vec<Vec<F>> = vec![vec![F::zero(); 2 * hidden]; m];
    let mut ds_next = vec![F::zero(); hidden];

    for (step_idx, st) in trace.steps.iter().enumerate().rev() {
        let target = trace.target_ids[step_idx + 1];

        // Output softmax: d logits = scale * (p - onehot(target)).
        let mut dlogits: Vec<F> = st.logp.iter().map(|&lp| lp.exp() * scale).collect();
        dlogits[target] = dlogits[target] - scale;
        add_assign(grads.out_b.row_mut(0), &dlogits);
        grads.out_w.outer_add(&dlogits, &st.r);
        let mut dr = vec![F::zero(); hidden];
        p.out_w.matvec_t_add(&dlogits, &mut dr);

        // Readout tanh layer over r_in = [e_y; s_t; c].
        let da: Vec<F> = dr
            .iter()
            .zip(&st.r)
            .map(|(&d, &r)| d * (F::one() - r * r))
            .collect();
        add_assign(grads.readout_b.row_mut(0), &da);
        grads.readout_w.outer_add(&da, &st.r_in);
        let mut d_r_in = vec![F::zero(); cfg.readout_input_dim()];
        p.readout_w.matvec_t_add(&da, &mut d_r_in);

        let mut d_e_y = d_r_in[..emb].to_vec();
        let mut ds: Vec<F> = d_r_in[emb..emb + hidden].to_vec();
        add_assign(&mut ds, &ds_next);
        let mut dc = d_r_in[emb + hidden..].to_vec();

        // Decoder recurrence on gin = [e_y; c] with previous state s_{t-1}.
        let (dgin, mut ds_prev) = gru_backward(&p.dec, &mut grads.dec, &st.gru, &ds);
        add_assign(&mut d_e_y, &dgin[..emb]);
        add_assign(&mut dc, &dgin[emb..]);

        // Attention: c = Σ α_i h_i.
        let alpha = &st.attn.alpha;
        let mut dalpha = vec![F::zero(); m];
        for i in 0..m {
            dalpha[i] = dot(&dc, &trace.enc.h[i]);
            axpy(alpha[i], &dc, &mut d_annotations[i]);
        }
        // Softmax backward.
        let mut weighted = F::zero();
        for i in 0..m {
            weighted = weighted + alpha[i] * dalpha[i];
        }
        let v = p.attn_v.row(0);
        let mut dq = vec![F::zero(); hidden];
        for i in 0..m {
            let de = alpha[i] * (dalpha[i] - weighted);
            let ui = &st.attn.u[i];
            axpy(de, ui, grads.attn_v.row_mut(0));
            let keys = &mut d_att_keys[i];
            for k in 0..hidden {
                let dpre = de * v[k] * (F::one() - ui[k] * ui[k]);
                dq[k] = dq[k] + dpre;
                keys[k] = keys[k] + dpre;
            }
        }
        // q = w_a s_{t-1}; the previous state is the decoder GRU's h_prev.
        let s_prev = &st.gru.h_prev;
        grads.attn_w.outer_add(&dq, s_prev);
        p.attn_w.matvec_t_add(&dq, &mut ds_prev);

        add_assign(grads.tgt_emb.row_mut(st.y_prev), &d_e_y);
        ds_next = ds_prev;
    }

    // s_0 = tanh(w_init · h_backward_first).
    let dpre0: Vec<F> = ds_next
        .iter()
        .zip(&trace.s0)
        .map(|(&d, &s)| d * (F::one() - s * s))
        .collect();
    let hb_first = &trace.enc.h[0][hidden..];
    grads.w_init.outer_add(&dpre0, hb_first);
    let mut dhb0 = vec![F::zero(); hidden];
    p.w_init.matvec_t_add(&dpre0, &mut dhb0);
    add_assign(&mut d_annotations[0][hidden..], &dhb0);

    // Attention keys: key_i = u_a · h_i, shared by all steps.
    for i in 0..m {
        grads.attn_u.outer_add(&d_att_keys[i], &trace.enc.h[i]);
        p.attn_u.matvec_t_add(&d_att_keys[i], &mut d_annotations[i]);
    }

    // Forward encoder chain: state i feeds state i+1.
    let mut carry = vec![F::zero(); hidden];
    for i in (0..m).rev() {
        let mut dstate = d_annotations[i][..hidden].to_vec();
        add_assign(&mut dstate, &carry);
        let (dx, dprev) =
            gru_backward(&p.enc_fwd, &mut grads.enc_fwd, &trace.fwd_caches[i], &dstate);
        add_assign(grads.src_emb.row_mut(trace.source_ids[i]), &dx);
        carry = dprev;
    }

    // Backward encoder chain: state i feeds state i-1, so the "previous
    // state" of position i is position i+1 and the walk ascends. Cache j
    // holds position m-1-j, hence the reversed iteration.
    let mut carry = vec![F::zero(); hidden];
    for (i, cache) in trace.bwd_caches.iter().rev().enumerate() {
        let mut dstate = d_annotations[i][hidden..].to_vec();
        add_assign(&mut dstate, &carry);
        let (dx, dprev) = gru_backward(&p.enc_bwd, &mut grads.enc_bwd, cache, &dstate);
        add_assign(grads.src_emb.row_mut(trace.source_ids[i]), &dx);
        carry = dprev;
    }
}

/// Mean per-token negative log-likelihood over the minibatch and its
/// gradient with respect to every parameter tensor. The returned loss is
/// bit-identical to `corpus_loss` on the same pairs.
pub fn loss_and_gradients<F: Scalar>(
    p: &ModelParameters<F>,
    pairs: &[&(Vec<usize>, Vec<usize>)],
) -> Result<(f64, ModelParameters<F>), NmtError> {
    if pairs.is_empty() {
        return Err(NmtError::EmptyCorpus { role: "minibatch" });
    }
    let mut traces = Vec::with_capacity(pairs.len());
    let mut nll = 0.0f64;
    let mut tokens = 0usize;
    for (src, tgt) in pairs {
        let (logprob, trace) = pair_forward(p, src, tgt)?;
        nll -= logprob;
        tokens += tgt.len() - 1;
        traces.push(trace);
    }
    let loss = nll / tokens as f64;

    let mut grads = p.zeros_like();
    let scale = F::from_f64(1.0 / tokens as f64);
    for trace in &traces {
        pair_backward(p, &mut grads, trace, scale);
    }
    Ok((loss, grads))
}
