//! Case-sensitive tokenized corpus BLEU (4-gram modified precision with
//! brevity penalty, single reference), matching the behavior of the usual
//! corpus-level evaluation script: counts are aggregated over the whole
//! corpus before any ratio is taken, and no smoothing is applied.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

// In no_std builds the f64 transcendentals come from this trait (via libm).
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("hypothesis and reference corpora differ in length ({hyps} vs {refs})")]
    LengthMismatch { hyps: usize, refs: usize },
    #[error("cannot score an empty corpus")]
    EmptyCorpus,
}

/// Corpus-level BLEU with its components. `bleu` is in [0, 1]; the paper
/// convention multiplies by 100.
#[derive(Debug, Clone, PartialEq)]
pub struct BleuReport {
    pub bleu: f64,
    pub precisions: [f64; 4],
    pub brevity_penalty: f64,
    pub hyp_len: usize,
    pub ref_len: usize,
}

impl BleuReport {
    pub fn percent(&self) -> f64 {
        self.bleu * 100.0
    }
}

/// All contiguous n-grams of `tokens` with multiplicity.
pub fn ngram_counts(tokens: &[String], n: usize) -> BTreeMap<Vec<String>, u64> {
    assert!(n >= 1, "n-gram order must be at least 1");
    let mut counts = BTreeMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w.to_vec()).or_insert(0) += 1;
        }
    }
    counts
}

/// Corpus BLEU over token lists, one reference per hypothesis. Matching is
/// case-sensitive and exact. Any zero 1..4-gram precision makes the whole
/// score zero.
pub fn corpus_bleu(
    hypotheses: &[Vec<String>],
    references: &[Vec<String>],
) -> Result<BleuReport, MetricsError> {
    if hypotheses.len() != references.len() {
        return Err(MetricsError::LengthMismatch {
            hyps: hypotheses.len(),
            refs: references.len(),
        });
    }
    if hypotheses.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }

    let mut matched = [0u64; 4];
    let mut total = [0u64; 4];
    let mut hyp_len = 0usize;
    let mut ref_len = 0usize;
    for (hyp, re) in hypotheses.iter().zip(references.iter()) {
        hyp_len += hyp.len();
        ref_len += re.len();
        for n in 1..=4usize {
            let hyp_counts = ngram_counts(hyp, n);
            let ref_counts = ngram_counts(re, n);
            for (gram, &h) in &hyp_counts {
                total[n - 1] += h;
                let r = ref_counts.get(gram).copied().unwrap_or(0);
                matched[n - 1] += h.min(r);
            }
        }
    }

    let mut precisions = [0.0f64; 4];
    for n in 0..4 {
        if total[n] > 0 {
            precisions[n] = matched[n] as f64 / total[n] as f64;
        }
    }

    if hyp_len == 0 {
        return Ok(BleuReport {
            bleu: 0.0,
            precisions,
            brevity_penalty: 0.0,
            hyp_len,
            ref_len,
        });
    }

    let c = hyp_len as f64;
    let r = ref_len as f64;
    let brevity_penalty = if c > r { 1.0 } else { (1.0 - r / c).exp() };
    let bleu = if precisions.contains(&0.0) {
        0.0
    } else {
        let mean_log: f64 = precisions.iter().map(|p| p.ln()).sum::<f64>() / 4.0;
        brevity_penalty * mean_log.exp()
    };

    Ok(BleuReport { bleu, precisions, brevity_penalty, hyp_len, ref_len })
}
