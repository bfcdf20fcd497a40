//! Greedy and beam-search decoding with optional length normalization.
//!
//! Both decoders start from the begin marker, feed the previously chosen
//! token back in, and stop on the end marker or after `max_len` generated
//! tokens. Scores are log-probabilities accumulated in f64.

use alloc::vec;
use alloc::vec::Vec;

use crate::nmt::{
    decoder_step, encode, initial_state, DecoderState, ModelParameters, NmtError,
};
use crate::tensor::Scalar;
use crate::vocab::{BOS_ID, EOS_ID};

/// Generation cap: the tokenized length cap plus headroom for the end
/// marker and subword growth.
pub const DEFAULT_MAX_LEN: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodeConfig {
    pub beam_size: usize,
    /// Maximum number of generated tokens per hypothesis.
    pub max_len: usize,
    /// When set, hypotheses are ranked by logprob divided by generated
    /// length; the end marker counts as generated, a truncation does not.
    pub length_normalize: bool,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        DecodeConfig { beam_size: 1, max_len: DEFAULT_MAX_LEN, length_normalize: true }
    }
}

impl DecodeConfig {
    pub fn validate(&self) -> Result<(), NmtError> {
        if self.beam_size == 0 {
            return Err(NmtError::InvalidConfig {
                reason: "beam_size must be at least 1".into(),
            });
        }
        if self.max_len == 0 {
            return Err(NmtError::InvalidConfig { reason: "max_len must be at least 1".into() });
        }
        Ok(())
    }
}

/// A decoded candidate. `ids` never includes the begin or end marker.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    pub ids: Vec<usize>,
    /// Accumulated log-probability; includes the end marker's contribution
    /// when `finished`.
    pub logprob: f64,
    /// True when the model emitted the end marker, false when the length
    /// cap cut the hypothesis off.
    pub finished: bool,
}

impl Hypothesis {
    /// Tokens the model actually emitted: the end marker counts, a
    /// truncation adds nothing.
    pub fn generated_len(&self) -> usize {
        self.ids.len() + usize::from(self.finished)
    }

    pub fn score(&self, length_normalize: bool) -> f64 {
        if length_normalize {
            self.logprob / self.generated_len().max(1) as f64
        } else {
            self.logprob
        }
    }
}

fn check_reserved_ids<F: Scalar>(p: &ModelParameters<F>) -> Result<(), NmtError> {
    if p.config().tgt_vocab <= EOS_ID {
        return Err(NmtError::InvalidConfig {
            reason: "target vocabulary lacks the reserved marker ids".into(),
        });
    }
    Ok(())
}

struct Live<F> {
    ids: Vec<usize>,
    logprob: f64,
    state: DecoderState<F>,
}

/// Beam search returning the whole final pool, best first.
///
/// Each step expands every live hypothesis over the full vocabulary and
/// keeps the `beam_size` best extensions by accumulated log-probability
/// (ties: candidate ids ascending). An extension that emits the end marker
/// moves to the finished pool, which is not capped; hypotheses still live
/// at the length cap join it as truncated. The pool is ranked by score
/// (ties: fewer ids, then ids ascending).
pub fn beam_search_all<F: Scalar>(
    p: &ModelParameters<F>,
    source_ids: &[usize],
    cfg: &DecodeConfig,
) -> Result<Vec<Hypothesis>, NmtError> {
    cfg.validate()?;
    check_reserved_ids(p)?;
    let enc = encode(p, source_ids)?;
    let vocab = p.config().tgt_vocab;
    let mut live = vec![Live {
        ids: Vec::new(),
        logprob: 0.0,
        state: initial_state(p, &enc),
    }];
    let mut finished: Vec<Hypothesis> = Vec::new();

    for _ in 0..cfg.max_len {
        if live.is_empty() {
            break;
        }
        // One decoder step per parent; its next state is shared by all
        // token candidates expanded from it.
        let mut expansions = Vec::with_capacity(live.len());
        for hyp in &live {
            let y_prev = hyp.ids.last().copied().unwrap_or(BOS_ID);
            expansions.push(decoder_step(p, y_prev, &hyp.state, &enc));
        }
        let mut cands: Vec<(usize, usize, f64)> = Vec::with_capacity(live.len() * vocab);
        for (pi, (logp, _)) in expansions.iter().enumerate() {
            for (y, &lp) in logp.iter().enumerate() {
                cands.push((pi, y, live[pi].logprob + lp.to_f64()));
            }
        }
        // All live ids have equal length here, so comparing parent ids then
        // the new token is a lexicographic order over candidate sequences.
        cands.sort_by(|a, b| {
            b.2.total_cmp(&a.2)
                .then_with(|| live[a.0].ids.cmp(&live[b.0].ids))
                .then_with(|| a.1.cmp(&b.1))
        });
        cands.truncate(cfg.beam_size);

        let mut next_live = Vec::with_capacity(cands.len());
        for (pi, y, logprob) in cands {
            if y == EOS_ID {
                finished.push(Hypothesis { ids: live[pi].ids.clone(), logprob, finished: true });
            } else {
                let mut ids = live[pi].ids.clone();
                ids.push(y);
                next_live.push(Live { ids, logprob, state: expansions[pi].1.clone() });
            }
        }
        live = next_live;
    }

    let mut pool = finished;
    pool.extend(
        live.into_iter()
            .map(|h| Hypothesis { ids: h.ids, logprob: h.logprob, finished: false }),
    );
    pool.sort_by(|a, b| {
        b.score(cfg.length_normalize)
            .total_cmp(&a.score(cfg.length_normalize))
            .then_with(|| a.ids.len().cmp(&b.ids.len()))
            .then_with(|| a.ids.cmp(&b.ids))
    });
    Ok(pool)
}

/// Beam search returning only the winning hypothesis.
pub fn beam_search<F: Scalar>(
    p: &ModelParameters<F>,
    source_ids: &[usize],
    cfg: &DecodeConfig,
) -> Result<Hypothesis, NmtError> {
    beam_search_all(p, source_ids, cfg).map(|pool| {
        pool.into_iter().next().expect("pool holds at least one hypothesis")
    })
}

/// Greedy decoding: the single highest-probability token at every step.
///
/// Candidates are compared by the same accumulated f64 sums beam search
/// uses (ties: lowest id), so this is exactly beam search with beam 1.
pub fn greedy_decode<F: Scalar>(
    p: &ModelParameters<F>,
    source_ids: &[usize],
    max_len: usize,
) -> Result<Hypothesis, NmtError> {
    if max_len == 0 {
        return Err(NmtError::InvalidConfig { reason: "max_len must be at least 1".into() });
    }
    check_reserved_ids(p)?;
    let enc = encode(p, source_ids)?;
    let mut state = initial_state(p, &enc);
    let mut ids: Vec<usize> = Vec::new();
    let mut logprob = 0.0f64;

    for _ in 0..max_len {
        let y_prev = ids.last().copied().unwrap_or(BOS_ID);
        let (logp, next) = decoder_step(p, y_prev, &state, &enc);
        let mut best = 0usize;
        let mut best_sum = logprob + logp[0].to_f64();
        for (y, &lp) in logp.iter().enumerate().skip(1) {
            let cand = logprob + lp.to_f64();
            if cand > best_sum {
                best = y;
                best_sum = cand;
            }
        }
        logprob = best_sum;
        if best == EOS_ID {
            return Ok(Hypothesis { ids, logprob, finished: true });
        }
        ids.push(best);
        state = next;
    }
    Ok(Hypothesis { ids, logprob, finished: false })
}

/// Decodes every source sentence, skipping ones the encoder rejects.
/// Returns the winning id sequences (empty for skipped sentences) and the
/// indices that were skipped.
pub fn translate_corpus<F: Scalar>(
    p: &ModelParameters<F>,
    sources: &[Vec<usize>],
    cfg: &DecodeConfig,
) -> Result<(Vec<Vec<usize>>, Vec<usize>), NmtError> {
    cfg.validate()?;
    check_reserved_ids(p)?;
    let mut out = Vec::with_capacity(sources.len());
    let mut skipped = Vec::new();
    for (i, src) in sources.iter().enumerate() {
        match beam_search(p, src, cfg) {
            Ok(h) => out.push(h.ids),
            Err(NmtError::EmptySource) | Err(NmtError::IdOutOfRange { .. }) => {
                out.push(Vec::new());
                skipped.push(i);
            }
            Err(e) => return Err(e),
        }
    }
    Ok((out, skipped))
}
