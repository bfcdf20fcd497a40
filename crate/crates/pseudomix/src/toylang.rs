//! Deterministic toy languages for desk-scale experiments. Pivot-language
//! sentences are sampled without repetition, then relabeled token-wise into
//! a source and a target language through fixed affine index maps with a
//! controlled per-token noise rate. The triples are partitioned into
//! disjoint splits (training, mother-model, fine-tuning, dev, test).

use std::collections::BTreeSet;

use pseudomix_core::corpus::{
    CorpusKind, MultiParallelCorpus, ParallelCorpus, Provenance, Sentence, SentencePair, Triple,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SOURCE_LANG: &str = "xx";
pub const PIVOT_LANG: &str = "pv";
pub const TARGET_LANG: &str = "yy";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ToyLangError {
    #[error("noise_rate {rate} is outside [0, 1)")]
    BadNoiseRate { rate: f64 },
    #[error("sentence lengths must satisfy 1 <= min <= max, got {min}..{max}")]
    BadLengths { min: usize, max: usize },
    #[error("every vocabulary needs at least one token")]
    EmptyVocabulary,
    #[error("cannot draw {requested} distinct pivot sentences from {available} possible")]
    TooFewSentences { requested: usize, available: u128 },
}

/// How many triples each split receives. Splits never share a pivot
/// sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSizes {
    /// Multi-parallel triples the synthetic corpora are built from.
    pub train: usize,
    /// Pivot-to-source and pivot-to-target training pairs for the mother
    /// models.
    pub mother: usize,
    pub mother_dev: usize,
    /// Ground-truth source-target pairs for fine-tuning.
    pub real: usize,
    pub dev: usize,
    pub test: usize,
}

impl SplitSizes {
    pub fn total(&self) -> usize {
        self.train + self.mother + self.mother_dev + self.real + self.dev + self.test
    }
}

/// Virtual-language parameters. Token `i` of the pivot maps to source token
/// `(7i + 3) mod source_vocab` and target token `(11i + 5) mod target_vocab`;
/// with equal vocabulary sizes coprime to 7 and 11 the maps are bijective.
/// Each mapped token is independently replaced by a uniformly random one
/// with probability `noise_rate`.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyLanguageSpec {
    pub pivot_vocab: usize,
    pub source_vocab: usize,
    pub target_vocab: usize,
    pub noise_rate: f64,
    pub min_len: usize,
    pub max_len: usize,
    pub sizes: SplitSizes,
    pub seed: u64,
}

impl ToyLanguageSpec {
    pub fn validate(&self) -> Result<(), ToyLangError> {
        if !(0.0..1.0).contains(&self.noise_rate) {
            return Err(ToyLangError::BadNoiseRate { rate: self.noise_rate });
        }
        if self.min_len == 0 || self.min_len > self.max_len {
            return Err(ToyLangError::BadLengths { min: self.min_len, max: self.max_len });
        }
        if self.pivot_vocab == 0 || self.source_vocab == 0 || self.target_vocab == 0 {
            return Err(ToyLangError::EmptyVocabulary);
        }
        Ok(())
    }

    pub fn map_source(&self, pivot_index: usize) -> usize {
        (7 * pivot_index + 3) % self.source_vocab
    }

    pub fn map_target(&self, pivot_index: usize) -> usize {
        (11 * pivot_index + 5) % self.target_vocab
    }

    /// Distinct pivot sentences available under the length bounds.
    fn available_sentences(&self) -> u128 {
        let mut total: u128 = 0;
        for len in self.min_len..=self.max_len {
            let mut c: u128 = 1;
            for _ in 0..len {
                c = c.saturating_mul(self.pivot_vocab as u128);
            }
            total = total.saturating_add(c);
        }
        total
    }
}

/// The generated splits. All sides are real text of the toy world.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToyData {
    pub train: MultiParallelCorpus,
    pub mother: MultiParallelCorpus,
    pub mother_dev: MultiParallelCorpus,
    pub real: MultiParallelCorpus,
    pub dev: MultiParallelCorpus,
    pub test: MultiParallelCorpus,
}

fn pivot_token(i: usize) -> String {
    format!("p{i}")
}

fn source_token(i: usize) -> String {
    format!("s{i}")
}

fn target_token(i: usize) -> String {
    format!("t{i}")
}

/// Generates all splits from one seeded stream. Identical specs produce
/// identical data; pivot sentences are globally distinct, so the splits are
/// disjoint as multisets.
pub fn generate(spec: &ToyLanguageSpec) -> Result<ToyData, ToyLangError> {
    spec.validate()?;
    let total = spec.sizes.total();
    let available = spec.available_sentences();
    if total as u128 > available {
        return Err(ToyLangError::TooFewSentences { requested: total, available });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut triples: Vec<Triple> = Vec::with_capacity(total);
    // Rejection sampling is cut off so a near-exhausted space fails loudly
    // instead of looping.
    let max_attempts = total.saturating_mul(50).saturating_add(1000);
    let mut attempts = 0usize;
    while triples.len() < total {
        attempts += 1;
        if attempts > max_attempts {
            return Err(ToyLangError::TooFewSentences { requested: total, available });
        }
        let len = rng.gen_range(spec.min_len..=spec.max_len);
        let pivot: Vec<usize> = (0..len).map(|_| rng.gen_range(0..spec.pivot_vocab)).collect();
        if !seen.insert(pivot.clone()) {
            continue;
        }

        let derive = |mapped: usize, vocab: usize, rng: &mut ChaCha8Rng| -> usize {
            // The uniform draw happens for every token, so the same seed
            // yields the same sentence skeletons at any noise rate.
            let u: f64 = rng.gen();
            if u < spec.noise_rate {
                rng.gen_range(0..vocab)
            } else {
                mapped
            }
        };
        let source: Vec<String> = pivot
            .iter()
            .map(|&i| source_token(derive(spec.map_source(i), spec.source_vocab, &mut rng)))
            .collect();
        let target: Vec<String> = pivot
            .iter()
            .map(|&i| target_token(derive(spec.map_target(i), spec.target_vocab, &mut rng)))
            .collect();
        let pivot_tokens: Vec<String> = pivot.iter().map(|&i| pivot_token(i)).collect();

        triples.push(Triple {
            source: Sentence::new(source, Provenance::Real, SOURCE_LANG),
            pivot: Sentence::new(pivot_tokens, Provenance::Real, PIVOT_LANG),
            target: Sentence::new(target, Provenance::Real, TARGET_LANG),
        });
    }

    let mut rest = triples;
    let mut take = |n: usize| -> MultiParallelCorpus {
        let tail = rest.split_off(n);
        let head = std::mem::replace(&mut rest, tail);
        MultiParallelCorpus::new(head, SOURCE_LANG, PIVOT_LANG, TARGET_LANG)
    };
    let s = spec.sizes;
    Ok(ToyData {
        train: take(s.train),
        mother: take(s.mother),
        mother_dev: take(s.mother_dev),
        real: take(s.real),
        dev: take(s.dev),
        test: take(s.test),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TripleSide {
    Source,
    Pivot,
    Target,
}

/// Extracts two sides of a multi-parallel corpus as a real parallel corpus,
/// e.g. the pivot-to-target pairs a mother model trains on.
pub fn side_pairs(multi: &MultiParallelCorpus, from: TripleSide, to: TripleSide) -> ParallelCorpus {
    assert_ne!(from, to, "a pair needs two different sides");
    let lang = |side: TripleSide| match side {
        TripleSide::Source => multi.source_language(),
        TripleSide::Pivot => multi.pivot_language(),
        TripleSide::Target => multi.target_language(),
    };
    let sentence = |t: &Triple, side: TripleSide| match side {
        TripleSide::Source => t.source.clone(),
        TripleSide::Pivot => t.pivot.clone(),
        TripleSide::Target => t.target.clone(),
    };
    let pairs: Vec<SentencePair> = multi
        .triples()
        .iter()
        .map(|t| SentencePair { source: sentence(t, from), target: sentence(t, to) })
        .collect();
    ParallelCorpus::from_pairs(pairs, lang(from), lang(to), CorpusKind::Real)
        .expect("real triple sides always form a valid real corpus")
}
