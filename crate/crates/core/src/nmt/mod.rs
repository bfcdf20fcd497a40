//! Attentional encoder-decoder translation model: a bidirectional gated
//! recurrent encoder, an additive-attention decoder, maximum-likelihood
//! training with Adam and global gradient-norm clipping, fine-tuning with
//! frozen embeddings, and a versioned checkpoint codec.
//!
//! The element type is generic: `f32` is the production precision (matching
//! the checkpoint format), `f64` exists so gradients can be verified against
//! central finite differences without drowning in rounding error.

mod backward;
mod checkpoint;
mod forward;
mod optim;

pub use backward::loss_and_gradients;
pub use checkpoint::{
    checkpoint_decode, checkpoint_encode, CheckpointError, CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use forward::{
    attention_context, corpus_loss, decoder_step, encode, initial_state, sequence_logprob,
    DecoderState, EncoderStates,
};
pub use optim::{
    clip_global_norm, fine_tune, train, AdamState, EpochStats, TrainOutcome, ADAM_BETA1,
    ADAM_BETA2, ADAM_EPS,
};

use alloc::string::String;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::tensor::{Mat, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NmtError {
    #[error("source id sequence is empty")]
    EmptySource,
    #[error("target id sequence needs at least beginning and end markers")]
    EmptyTarget,
    #[error("{role} corpus is empty")]
    EmptyCorpus { role: &'static str },
    #[error("id {id} is out of range for vocabulary of {vocab_size}")]
    IdOutOfRange { id: usize, vocab_size: usize },
    #[error("invalid configuration: {reason}")]
    InvalidConfig { reason: String },
    #[error("loss became non-finite at epoch {epoch}, step {step}")]
    NonFiniteLoss { epoch: usize, step: usize },
}

/// Architecture dimensions. The attention space and readout width both
/// equal `hidden_dim`; annotation vectors are `2 * hidden_dim` wide.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelConfig {
    pub src_vocab: usize,
    pub tgt_vocab: usize,
    pub emb_dim: usize,
    pub hidden_dim: usize,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), NmtError> {
        for (name, v) in [
            ("src_vocab", self.src_vocab),
            ("tgt_vocab", self.tgt_vocab),
            ("emb_dim", self.emb_dim),
            ("hidden_dim", self.hidden_dim),
        ] {
            if v == 0 {
                return Err(NmtError::InvalidConfig {
                    reason: alloc::format!("{name} must be at least 1"),
                });
            }
        }
        Ok(())
    }

    /// Decoder recurrent input: target embedding plus attention context.
    pub(crate) fn dec_input_dim(&self) -> usize {
        self.emb_dim + 2 * self.hidden_dim
    }

    /// Readout input: [embedding(y_prev); s_t; c_t].
    pub(crate) fn readout_input_dim(&self) -> usize {
        self.emb_dim + 3 * self.hidden_dim
    }
}

/// Training hyperparameters. Paper-scale defaults; `desk()` is the preset
/// sized so the full experiment pipeline runs in minutes on one core.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub emb_dim: usize,
    pub hidden_dim: usize,
    pub epochs: usize,
    pub minibatch_size: usize,
    pub learning_rate: f64,
    pub clip_norm: f64,
    pub seed: u64,
    pub desk_scale_preset: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            emb_dim: 500,
            hidden_dim: 1024,
            epochs: 10,
            minibatch_size: 80,
            learning_rate: 2e-4,
            clip_norm: 1.0,
            seed: 0,
            desk_scale_preset: false,
        }
    }
}

impl TrainConfig {
    pub fn desk() -> Self {
        TrainConfig {
            emb_dim: 32,
            hidden_dim: 64,
            minibatch_size: 16,
            desk_scale_preset: true,
            ..TrainConfig::default()
        }
    }

    /// Vocabulary cap that goes with this preset.
    pub fn vocab_cap(&self) -> usize {
        if self.desk_scale_preset {
            200
        } else {
            30_000
        }
    }

    pub fn validate(&self) -> Result<(), NmtError> {
        if self.emb_dim == 0 || self.hidden_dim == 0 {
            return Err(NmtError::InvalidConfig { reason: "dims must be at least 1".into() });
        }
        if self.minibatch_size == 0 {
            return Err(NmtError::InvalidConfig {
                reason: "minibatch_size must be at least 1".into(),
            });
        }
        if self.learning_rate <= 0.0 || !self.learning_rate.is_finite() {
            return Err(NmtError::InvalidConfig {
                reason: "learning_rate must be positive".into(),
            });
        }
        if self.clip_norm <= 0.0 || !self.clip_norm.is_finite() {
            return Err(NmtError::InvalidConfig { reason: "clip_norm must be positive".into() });
        }
        Ok(())
    }

    pub fn model_config(&self, src_vocab: usize, tgt_vocab: usize) -> ModelConfig {
        ModelConfig {
            src_vocab,
            tgt_vocab,
            emb_dim: self.emb_dim,
            hidden_dim: self.hidden_dim,
        }
    }
}

/// One gated recurrent cell: update gate z, reset gate r, candidate state.
/// `w_*` act on the input, `u_*` on the previous hidden state; biases are
/// single-row matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct GruWeights<F> {
    pub w_z: Mat<F>,
    pub u_z: Mat<F>,
    pub b_z: Mat<F>,
    pub w_r: Mat<F>,
    pub u_r: Mat<F>,
    pub b_r: Mat<F>,
    pub w_h: Mat<F>,
    pub u_h: Mat<F>,
    pub b_h: Mat<F>,
}

impl<F: Scalar> GruWeights<F> {
    fn uniform(input_dim: usize, hidden: usize, scale: f64, rng: &mut ChaCha8Rng) -> Self {
        GruWeights {
            w_z: Mat::uniform(hidden, input_dim, scale, rng),
            u_z: Mat::uniform(hidden, hidden, scale, rng),
            b_z: Mat::zeros(1, hidden),
            w_r: Mat::uniform(hidden, input_dim, scale, rng),
            u_r: Mat::uniform(hidden, hidden, scale, rng),
            b_r: Mat::zeros(1, hidden),
            w_h: Mat::uniform(hidden, input_dim, scale, rng),
            u_h: Mat::uniform(hidden, hidden, scale, rng),
            b_h: Mat::zeros(1, hidden),
        }
    }

    fn zeros(input_dim: usize, hidden: usize) -> Self {
        GruWeights {
            w_z: Mat::zeros(hidden, input_dim),
            u_z: Mat::zeros(hidden, hidden),
            b_z: Mat::zeros(1, hidden),
            w_r: Mat::zeros(hidden, input_dim),
            u_r: Mat::zeros(hidden, hidden),
            b_r: Mat::zeros(1, hidden),
            w_h: Mat::zeros(hidden, input_dim),
            u_h: Mat::zeros(hidden, hidden),
            b_h: Mat::zeros(1, hidden),
        }
    }
}

/// Every weight tensor of the model. The named-tensor registry
/// (`tensors`/`tensors_mut`) fixes one canonical order shared by the
/// optimizer, gradient clipping, the checkpoint manifest, and the gradient
/// checker.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParameters<F> {
    config: ModelConfig,
    pub src_emb: Mat<F>,
    pub tgt_emb: Mat<F>,
    pub enc_fwd: GruWeights<F>,
    pub enc_bwd: GruWeights<F>,
    pub dec: GruWeights<F>,
    /// Attention: score_i = v · tanh(w_a s_prev + u_a h_i).
    pub attn_w: Mat<F>,
    pub attn_u: Mat<F>,
    pub attn_v: Mat<F>,
    /// Decoder initialization: s_0 = tanh(w_init · h_backward_first).
    pub w_init: Mat<F>,
    pub readout_w: Mat<F>,
    pub readout_b: Mat<F>,
    pub out_w: Mat<F>,
    pub out_b: Mat<F>,
}

/// Initialization scale for all non-bias weights.
const INIT_SCALE: f64 = 0.08;

impl<F: Scalar> ModelParameters<F> {
    /// Seeded uniform(-0.08, 0.08) initialization; biases start at zero.
    /// The draw order is the canonical tensor order, so a seed pins every
    /// weight.
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self, NmtError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = config.hidden_dim;
        let e = config.emb_dim;
        Ok(ModelParameters {
            config,
            src_emb: Mat::uniform(config.src_vocab, e, INIT_SCALE, &mut rng),
            tgt_emb: Mat::uniform(config.tgt_vocab, e, INIT_SCALE, &mut rng),
            enc_fwd: GruWeights::uniform(e, h, INIT_SCALE, &mut rng),
            enc_bwd: GruWeights::uniform(e, h, INIT_SCALE, &mut rng),
            dec: GruWeights::uniform(config.dec_input_dim(), h, INIT_SCALE, &mut rng),
            attn_w: Mat::uniform(h, h, INIT_SCALE, &mut rng),
            attn_u: Mat::uniform(h, 2 * h, INIT_SCALE, &mut rng),
            attn_v: Mat::uniform(1, h, INIT_SCALE, &mut rng),
            w_init: Mat::uniform(h, h, INIT_SCALE, &mut rng),
            readout_w: Mat::uniform(h, config.readout_input_dim(), INIT_SCALE, &mut rng),
            readout_b: Mat::zeros(1, h),
            out_w: Mat::uniform(config.tgt_vocab, h, INIT_SCALE, &mut rng),
            out_b: Mat::zeros(1, config.tgt_vocab),
        })
    }

    /// Same shapes, all zeros: gradient and optimizer-moment storage.
    pub fn zeros_like(&self) -> Self {
        let c = self.config;
        ModelParameters {
            config: c,
            src_emb: Mat::zeros(c.src_vocab, c.emb_dim),
            tgt_emb: Mat::zeros(c.tgt_vocab, c.emb_dim),
            enc_fwd: GruWeights::zeros(c.emb_dim, c.hidden_dim),
            enc_bwd: GruWeights::zeros(c.emb_dim, c.hidden_dim),
            dec: GruWeights::zeros(c.dec_input_dim(), c.hidden_dim),
            attn_w: Mat::zeros(c.hidden_dim, c.hidden_dim),
            attn_u: Mat::zeros(c.hidden_dim, 2 * c.hidden_dim),
            attn_v: Mat::zeros(1, c.hidden_dim),
            w_init: Mat::zeros(c.hidden_dim, c.hidden_dim),
            readout_w: Mat::zeros(c.hidden_dim, c.readout_input_dim()),
            readout_b: Mat::zeros(1, c.hidden_dim),
            out_w: Mat::zeros(c.tgt_vocab, c.hidden_dim),
            out_b: Mat::zeros(1, c.tgt_vocab),
        }
    }

    pub fn config(&self) -> ModelConfig {
        self.config
    }

    /// All tensors in canonical order.
    pub fn tensors(&self) -> Vec<(&'static str, &Mat<F>)> {
        let mut t = Vec::with_capacity(37);
        t.push(("src_emb", &self.src_emb));
        t.push(("tgt_emb", &self.tgt_emb));
        for (prefix, g) in [
            ("enc_fwd", &self.enc_fwd),
            ("enc_bwd", &self.enc_bwd),
            ("dec", &self.dec),
        ] {
            t.push((gru_name(prefix, "w_z"), &g.w_z));
            t.push((gru_name(prefix, "u_z"), &g.u_z));
            t.push((gru_name(prefix, "b_z"), &g.b_z));
            t.push((gru_name(prefix, "w_r"), &g.w_r));
            t.push((gru_name(prefix, "u_r"), &g.u_r));
            t.push((gru_name(prefix, "b_r"), &g.b_r));
            t.push((gru_name(prefix, "w_h"), &g.w_h));
            t.push((gru_name(prefix, "u_h"), &g.u_h));
            t.push((gru_name(prefix, "b_h"), &g.b_h));
        }
        t.push(("attn.w_a", &self.attn_w));
        t.push(("attn.u_a", &self.attn_u));
        t.push(("attn.v", &self.attn_v));
        t.push(("init.w_s", &self.w_init));
        t.push(("readout.w", &self.readout_w));
        t.push(("readout.b", &self.readout_b));
        t.push(("out.w", &self.out_w));
        t.push(("out.b", &self.out_b));
        t
    }

    /// Mutable view of all tensors, same canonical order as `tensors`.
    pub fn tensors_mut(&mut self) -> Vec<(&'static str, &mut Mat<F>)> {
        let mut t: Vec<(&'static str, &mut Mat<F>)> = Vec::with_capacity(37);
        t.push(("src_emb", &mut self.src_emb));
        t.push(("tgt_emb", &mut self.tgt_emb));
        for (prefix, g) in [
            ("enc_fwd", &mut self.enc_fwd),
            ("enc_bwd", &mut self.enc_bwd),
            ("dec", &mut self.dec),
        ] {
            t.push((gru_name(prefix, "w_z"), &mut g.w_z));
            t.push((gru_name(prefix, "u_z"), &mut g.u_z));
            t.push((gru_name(prefix, "b_z"), &mut g.b_z));
            t.push((gru_name(prefix, "w_r"), &mut g.w_r));
            t.push((gru_name(prefix, "u_r"), &mut g.u_r));
            t.push((gru_name(prefix, "b_r"), &mut g.b_r));
            t.push((gru_name(prefix, "w_h"), &mut g.w_h));
            t.push((gru_name(prefix, "u_h"), &mut g.u_h));
            t.push((gru_name(prefix, "b_h"), &mut g.b_h));
        }
        t.push(("attn.w_a", &mut self.attn_w));
        t.push(("attn.u_a", &mut self.attn_u));
        t.push(("attn.v", &mut self.attn_v));
        t.push(("init.w_s", &mut self.w_init));
        t.push(("readout.w", &mut self.readout_w));
        t.push(("readout.b", &mut self.readout_b));
        t.push(("out.w", &mut self.out_w));
        t.push(("out.b", &mut self.out_b));
        t
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|(_, m)| m.numel()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|(_, m)| m.as_slice().iter().all(|v| v.is_finite()))
    }
}

fn gru_name(prefix: &str, field: &str) -> &'static str {
    // Tensor names are compile-time constants; this match keeps the
    // registry loops readable without a macro.
    const NAMES: [(&str, &str, &str); 27] = [
        ("enc_fwd", "w_z", "enc_fwd.w_z"),
        ("enc_fwd", "u_z", "enc_fwd.u_z"),
        ("enc_fwd", "b_z", "enc_fwd.b_z"),
        ("enc_fwd", "w_r", "enc_fwd.w_r"),
        ("enc_fwd", "u_r", "enc_fwd.u_r"),
        ("enc_fwd", "b_r", "enc_fwd.b_r"),
        ("enc_fwd", "w_h", "enc_fwd.w_h"),
        ("enc_fwd", "u_h", "enc_fwd.u_h"),
        ("enc_fwd", "b_h", "enc_fwd.b_h"),
        ("enc_bwd", "w_z", "enc_bwd.w_z"),
        ("enc_bwd", "u_z", "enc_bwd.u_z"),
        ("enc_bwd", "b_z", "enc_bwd.b_z"),
        ("enc_bwd", "w_r", "enc_bwd.w_r"),
        ("enc_bwd", "u_r", "enc_bwd.u_r"),
        ("enc_bwd", "b_r", "enc_bwd.b_r"),
        ("enc_bwd", "w_h", "enc_bwd.w_h"),
        ("enc_bwd", "u_h", "enc_bwd.u_h"),
        ("enc_bwd", "b_h", "enc_bwd.b_h"),
        ("dec", "w_z", "dec.w_z"),
        ("dec", "u_z", "dec.u_z"),
        ("dec", "b_z", "dec.b_z"),
        ("dec", "w_r", "dec.w_r"),
        ("dec", "u_r", "dec.u_r"),
        ("dec", "b_r", "dec.b_r"),
        ("dec", "w_h", "dec.w_h"),
        ("dec", "u_h", "dec.u_h"),
        ("dec", "b_h", "dec.b_h"),
    ];
    NAMES
        .iter()
        .find(|(p, f, _)| *p == prefix && *f == field)
        .map(|(_, _, full)| *full)
        .expect("known gru tensor name")
}
