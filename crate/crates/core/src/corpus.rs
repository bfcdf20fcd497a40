//! Parallel corpora with per-side provenance, pivot alignment, and the
//! half-sample mixing that builds a blended synthetic corpus from a
//! source-originated and a target-originated one.
//!
//! All operations are pure and deterministic: sampling takes explicit seeds
//! and duplicate bookkeeping uses ordered collections.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CorpusError {
    #[error("corpus sides have {left} and {right} lines; they must align")]
    LineCountMismatch { left: usize, right: usize },
    #[error("source and target language are both '{lang}'")]
    SameLanguage { lang: String },
    #[error("pair {index} does not match the corpus provenance pattern for kind {kind}")]
    ProvenanceViolation { kind: &'static str, index: usize },
    #[error("a mixed corpus needs at least one pair of each originated pattern")]
    IncompleteMix,
    #[error("expected language pair {expected_src}-{expected_tgt}, found {found_src}-{found_tgt}")]
    LanguageMismatch {
        expected_src: String,
        expected_tgt: String,
        found_src: String,
        found_tgt: String,
    },
    #[error("pivot languages disagree: left target is '{left_target}', right source is '{right_source}'")]
    PivotMismatch { left_target: String, right_source: String },
    #[error("{role} corpus must have kind {expected}, found {found}")]
    WrongKind { role: &'static str, expected: &'static str, found: &'static str },
    #[error("{role} corpus is empty")]
    EmptyInput { role: &'static str },
    #[error("translator failed on triple {index}")]
    TranslatorFailure { index: usize },
    #[error("cannot sample {requested} pairs from a corpus of {available}")]
    SampleTooLarge { requested: usize, available: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Provenance {
    Real,
    Synthetic,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Real => "real",
            Provenance::Synthetic => "synthetic",
        }
    }
}

/// One sentence: tokens, an immutable provenance tag, and a language code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    tokens: Vec<String>,
    provenance: Provenance,
    language: String,
}

impl Sentence {
    /// Tokens may be empty (a blank line) but never contain empty strings.
    pub fn new(tokens: Vec<String>, provenance: Provenance, language: impl Into<String>) -> Self {
        assert!(
            tokens.iter().all(|t| !t.is_empty()),
            "sentence tokens must be non-empty strings"
        );
        Sentence { tokens, provenance, language: language.into() }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn language(&self) -> &str {
        &self.language
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentencePair {
    pub source: Sentence,
    pub target: Sentence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusKind {
    /// Both sides from real text.
    Real,
    /// Real source, machine-translated target.
    SourceOriginated,
    /// Machine-translated source, real target.
    TargetOriginated,
    /// Half-sampled blend of the two originated patterns.
    Mixed,
}

impl CorpusKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CorpusKind::Real => "real",
            CorpusKind::SourceOriginated => "source_originated",
            CorpusKind::TargetOriginated => "target_originated",
            CorpusKind::Mixed => "mixed",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "real" => CorpusKind::Real,
            "source_originated" => CorpusKind::SourceOriginated,
            "target_originated" => CorpusKind::TargetOriginated,
            "mixed" => CorpusKind::Mixed,
            _ => return None,
        })
    }

    /// The (source, target) provenance pattern implied by a uniform kind.
    fn uniform_pattern(self) -> Option<(Provenance, Provenance)> {
        match self {
            CorpusKind::Real => Some((Provenance::Real, Provenance::Real)),
            CorpusKind::SourceOriginated => Some((Provenance::Real, Provenance::Synthetic)),
            CorpusKind::TargetOriginated => Some((Provenance::Synthetic, Provenance::Real)),
            CorpusKind::Mixed => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParallelCorpus {
    pairs: Vec<SentencePair>,
    source_language: String,
    target_language: String,
    kind: CorpusKind,
}

impl ParallelCorpus {
    /// Validates languages and the kind/provenance pattern. A `Mixed` corpus
    /// must contain at least one pair of each originated pattern.
    pub fn from_pairs(
        pairs: Vec<SentencePair>,
        source_language: impl Into<String>,
        target_language: impl Into<String>,
        kind: CorpusKind,
    ) -> Result<Self, CorpusError> {
        let source_language = source_language.into();
        let target_language = target_language.into();
        if source_language == target_language {
            return Err(CorpusError::SameLanguage { lang: source_language });
        }
        for (index, pair) in pairs.iter().enumerate() {
            if pair.source.language != source_language || pair.target.language != target_language {
                return Err(CorpusError::LanguageMismatch {
                    expected_src: source_language,
                    expected_tgt: target_language,
                    found_src: pair.source.language.clone(),
                    found_tgt: pair.target.language.clone(),
                });
            }
            let pat = (pair.source.provenance, pair.target.provenance);
            match kind.uniform_pattern() {
                Some(expected) if pat != expected => {
                    return Err(CorpusError::ProvenanceViolation { kind: kind.as_str(), index });
                }
                Some(_) => {}
                None => {
                    // Mixed pairs must be one of the two originated patterns.
                    if pat != (Provenance::Real, Provenance::Synthetic)
                        && pat != (Provenance::Synthetic, Provenance::Real)
                    {
                        return Err(CorpusError::ProvenanceViolation {
                            kind: kind.as_str(),
                            index,
                        });
                    }
                }
            }
        }
        if kind == CorpusKind::Mixed {
            let has_so = pairs
                .iter()
                .any(|p| p.source.provenance == Provenance::Real);
            let has_to = pairs
                .iter()
                .any(|p| p.source.provenance == Provenance::Synthetic);
            if !(has_so && has_to) {
                return Err(CorpusError::IncompleteMix);
            }
        }
        Ok(ParallelCorpus { pairs, source_language, target_language, kind })
    }

    /// Builds a uniform-kind corpus from aligned token lines.
    pub fn from_token_lines(
        source_lines: Vec<Vec<String>>,
        target_lines: Vec<Vec<String>>,
        source_language: impl Into<String>,
        target_language: impl Into<String>,
        kind: CorpusKind,
    ) -> Result<Self, CorpusError> {
        if source_lines.len() != target_lines.len() {
            return Err(CorpusError::LineCountMismatch {
                left: source_lines.len(),
                right: target_lines.len(),
            });
        }
        let (sp, tp) = kind
            .uniform_pattern()
            .expect("mixed corpora need explicit per-pair patterns");
        let source_language = source_language.into();
        let target_language = target_language.into();
        let pairs = source_lines
            .into_iter()
            .zip(target_lines)
            .map(|(s, t)| SentencePair {
                source: Sentence::new(s, sp, source_language.clone()),
                target: Sentence::new(t, tp, target_language.clone()),
            })
            .collect();
        ParallelCorpus::from_pairs(pairs, source_language, target_language, kind)
    }

    /// Rebuilds a subset or reordering of an existing corpus. Skips the
    /// mixed-kind existence check: filtering can legitimately drop the last
    /// pair of one pattern, and the per-pair pattern validity is unchanged
    /// by taking a subset.
    fn with_pairs(&self, pairs: Vec<SentencePair>) -> Self {
        ParallelCorpus {
            pairs,
            source_language: self.source_language.clone(),
            target_language: self.target_language.clone(),
            kind: self.kind,
        }
    }

    pub fn pairs(&self) -> &[SentencePair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn kind(&self) -> CorpusKind {
        self.kind
    }

    pub fn source_language(&self) -> &str {
        &self.source_language
    }

    pub fn target_language(&self) -> &str {
        &self.target_language
    }

    pub fn source_token_lines(&self) -> impl Iterator<Item = &[String]> {
        self.pairs.iter().map(|p| p.source.tokens())
    }

    pub fn target_token_lines(&self) -> impl Iterator<Item = &[String]> {
        self.pairs.iter().map(|p| p.target.tokens())
    }

    /// Applies a per-side token transformation (for example subword
    /// segmentation), preserving provenance, languages, and kind.
    pub fn transform_tokens<FS, FT>(&self, mut source_fn: FS, mut target_fn: FT) -> Self
    where
        FS: FnMut(&[String]) -> Vec<String>,
        FT: FnMut(&[String]) -> Vec<String>,
    {
        let pairs = self
            .pairs
            .iter()
            .map(|p| SentencePair {
                source: Sentence::new(
                    source_fn(p.source.tokens()),
                    p.source.provenance,
                    p.source.language.clone(),
                ),
                target: Sentence::new(
                    target_fn(p.target.tokens()),
                    p.target.provenance,
                    p.target.language.clone(),
                ),
            })
            .collect();
        self.with_pairs(pairs)
    }

    /// Uniform sample of `k` pairs without replacement, preserving the
    /// original relative order. Used to equalize corpus sizes.
    pub fn subsample(&self, k: usize, seed: u64) -> Result<Self, CorpusError> {
        if k > self.pairs.len() {
            return Err(CorpusError::SampleTooLarge {
                requested: k,
                available: self.pairs.len(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut indices: Vec<usize> = (0..self.pairs.len()).collect();
        let (picked, _) = indices.partial_shuffle(&mut rng, k);
        let mut picked: Vec<usize> = picked.to_vec();
        picked.sort_unstable();
        let pairs = picked.into_iter().map(|i| self.pairs[i].clone()).collect();
        Ok(self.with_pairs(pairs))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Triple {
    pub source: Sentence,
    pub pivot: Sentence,
    pub target: Sentence,
}

/// Sentence triples over a fixed (source, pivot, target) language tuple;
/// all sides are real text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiParallelCorpus {
    triples: Vec<Triple>,
    source_language: String,
    pivot_language: String,
    target_language: String,
}

impl MultiParallelCorpus {
    pub fn new(
        triples: Vec<Triple>,
        source_language: impl Into<String>,
        pivot_language: impl Into<String>,
        target_language: impl Into<String>,
    ) -> Self {
        let corpus = MultiParallelCorpus {
            triples,
            source_language: source_language.into(),
            pivot_language: pivot_language.into(),
            target_language: target_language.into(),
        };
        for t in &corpus.triples {
            assert!(
                t.source.provenance == Provenance::Real
                    && t.pivot.provenance == Provenance::Real
                    && t.target.provenance == Provenance::Real,
                "multi-parallel corpora hold real text only"
            );
            assert!(
                t.source.language == corpus.source_language
                    && t.pivot.language == corpus.pivot_language
                    && t.target.language == corpus.target_language,
                "triple languages must match the corpus languages"
            );
        }
        corpus
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn source_language(&self) -> &str {
        &self.source_language
    }

    pub fn pivot_language(&self) -> &str {
        &self.pivot_language
    }

    pub fn target_language(&self) -> &str {
        &self.target_language
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AlignStats {
    pub triples: usize,
    pub duplicates_removed: usize,
    /// True when the inputs shared no pivot segment at all.
    pub zero_matches: bool,
}

fn normalized_line(tokens: &[String]) -> String {
    tokens.join(" ")
}

/// Joins a source-pivot corpus with a pivot-target corpus on exact equality
/// of the normalized pivot line. Duplicate pivot segments produce the full
/// cross product of their occurrences; exact-duplicate triples are then
/// removed. Output order follows the source-pivot corpus.
pub fn pivot_align(
    src_pivot: &ParallelCorpus,
    pivot_tgt: &ParallelCorpus,
) -> Result<(MultiParallelCorpus, AlignStats), CorpusError> {
    if src_pivot.target_language != pivot_tgt.source_language {
        return Err(CorpusError::PivotMismatch {
            left_target: src_pivot.target_language.clone(),
            right_source: pivot_tgt.source_language.clone(),
        });
    }
    for (role, corpus) in [("source-pivot", src_pivot), ("pivot-target", pivot_tgt)] {
        if corpus.kind != CorpusKind::Real {
            return Err(CorpusError::WrongKind {
                role,
                expected: CorpusKind::Real.as_str(),
                found: corpus.kind.as_str(),
            });
        }
    }

    let mut by_pivot: alloc::collections::BTreeMap<String, Vec<usize>> =
        alloc::collections::BTreeMap::new();
    for (i, pair) in pivot_tgt.pairs.iter().enumerate() {
        by_pivot
            .entry(normalized_line(pair.source.tokens()))
            .or_default()
            .push(i);
    }

    let mut seen: BTreeSet<(Vec<String>, Vec<String>, Vec<String>)> = BTreeSet::new();
    let mut triples = Vec::new();
    let mut duplicates_removed = 0usize;
    for left in &src_pivot.pairs {
        let key = normalized_line(left.target.tokens());
        let Some(matches) = by_pivot.get(&key) else { continue };
        for &j in matches {
            let right = &pivot_tgt.pairs[j];
            let dedup_key = (
                left.source.tokens().to_vec(),
                left.target.tokens().to_vec(),
                right.target.tokens().to_vec(),
            );
            if !seen.insert(dedup_key) {
                duplicates_removed += 1;
                continue;
            }
            triples.push(Triple {
                source: left.source.clone(),
                pivot: left.target.clone(),
                target: right.target.clone(),
            });
        }
    }

    let stats = AlignStats {
        triples: triples.len(),
        duplicates_removed,
        zero_matches: triples.is_empty(),
    };
    let multi = MultiParallelCorpus::new(
        triples,
        src_pivot.source_language.clone(),
        src_pivot.target_language.clone(),
        pivot_tgt.target_language.clone(),
    );
    Ok((multi, stats))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectSide {
    /// Replace the source side with translations of the pivot.
    Source,
    /// Replace the target side with translations of the pivot.
    Target,
}

/// Builds a synthetic parallel corpus from a multi-parallel corpus by
/// translating the pivot side. `side = Target` yields a source-originated
/// corpus (real source, synthetic target); `side = Source` the reverse.
/// The translator returns `None` to signal failure, which aborts with the
/// offending triple index.
pub fn project_synthetic<F>(
    multi: &MultiParallelCorpus,
    side: ProjectSide,
    mut translator: F,
) -> Result<ParallelCorpus, CorpusError>
where
    F: FnMut(&[String]) -> Option<Vec<String>>,
{
    let mut pairs = Vec::with_capacity(multi.len());
    for (index, triple) in multi.triples.iter().enumerate() {
        let translated = translator(triple.pivot.tokens())
            .ok_or(CorpusError::TranslatorFailure { index })?;
        let pair = match side {
            ProjectSide::Target => SentencePair {
                source: triple.source.clone(),
                target: Sentence::new(
                    translated,
                    Provenance::Synthetic,
                    multi.target_language.clone(),
                ),
            },
            ProjectSide::Source => SentencePair {
                source: Sentence::new(
                    translated,
                    Provenance::Synthetic,
                    multi.source_language.clone(),
                ),
                target: triple.target.clone(),
            },
        };
        pairs.push(pair);
    }
    let kind = match side {
        ProjectSide::Target => CorpusKind::SourceOriginated,
        ProjectSide::Source => CorpusKind::TargetOriginated,
    };
    ParallelCorpus::from_pairs(
        pairs,
        multi.source_language.clone(),
        multi.target_language.clone(),
        kind,
    )
}

/// Half-samples two pair lists (floor of the first, ceiling of the second),
/// concatenates, and shuffles, all from one seeded stream.
fn half_sample_mix(
    first: &[SentencePair],
    second: &[SentencePair],
    seed: u64,
) -> Vec<SentencePair> {
    let take_first = first.len() / 2;
    let take_second = second.len().div_ceil(2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut out = Vec::with_capacity(take_first + take_second);
    for (pairs, take) in [(first, take_first), (second, take_second)] {
        let mut indices: Vec<usize> = (0..pairs.len()).collect();
        let (picked, _) = indices.partial_shuffle(&mut rng, take);
        for &i in picked.iter() {
            out.push(pairs[i].clone());
        }
    }
    out.shuffle(&mut rng);
    out
}

/// Blends a source-originated corpus with a target-originated one by
/// sampling half of each (⌊N₁/2⌋ + ⌈N₂/2⌉) without replacement and
/// shuffling. Deterministic for a fixed seed.
pub fn mix_pseudo(
    source_originated: &ParallelCorpus,
    target_originated: &ParallelCorpus,
    seed: u64,
) -> Result<ParallelCorpus, CorpusError> {
    if source_originated.kind != CorpusKind::SourceOriginated {
        return Err(CorpusError::WrongKind {
            role: "first",
            expected: CorpusKind::SourceOriginated.as_str(),
            found: source_originated.kind.as_str(),
        });
    }
    if target_originated.kind != CorpusKind::TargetOriginated {
        return Err(CorpusError::WrongKind {
            role: "second",
            expected: CorpusKind::TargetOriginated.as_str(),
            found: target_originated.kind.as_str(),
        });
    }
    if source_originated.source_language != target_originated.source_language
        || source_originated.target_language != target_originated.target_language
    {
        return Err(CorpusError::LanguageMismatch {
            expected_src: source_originated.source_language.clone(),
            expected_tgt: source_originated.target_language.clone(),
            found_src: target_originated.source_language.clone(),
            found_tgt: target_originated.target_language.clone(),
        });
    }
    if source_originated.is_empty() {
        return Err(CorpusError::EmptyInput { role: "source-originated" });
    }
    if target_originated.is_empty() {
        return Err(CorpusError::EmptyInput { role: "target-originated" });
    }

    let pairs = half_sample_mix(&source_originated.pairs, &target_originated.pairs, seed);
    ParallelCorpus::from_pairs(
        pairs,
        source_originated.source_language.clone(),
        source_originated.target_language.clone(),
        CorpusKind::Mixed,
    )
}

/// Same half-sampling as `mix_pseudo` but for two corpora of one common
/// kind (used by the beam-size ablation, which blends two corpora built
/// from the same side). The result keeps that kind.
pub fn mix_same_kind(
    first: &ParallelCorpus,
    second: &ParallelCorpus,
    seed: u64,
) -> Result<ParallelCorpus, CorpusError> {
    if first.kind != second.kind {
        return Err(CorpusError::WrongKind {
            role: "second",
            expected: first.kind.as_str(),
            found: second.kind.as_str(),
        });
    }
    if first.source_language != second.source_language
        || first.target_language != second.target_language
    {
        return Err(CorpusError::LanguageMismatch {
            expected_src: first.source_language.clone(),
            expected_tgt: first.target_language.clone(),
            found_src: second.source_language.clone(),
            found_tgt: second.target_language.clone(),
        });
    }
    if first.is_empty() {
        return Err(CorpusError::EmptyInput { role: "first" });
    }
    if second.is_empty() {
        return Err(CorpusError::EmptyInput { role: "second" });
    }
    let pairs = half_sample_mix(&first.pairs, &second.pairs, seed);
    Ok(first.with_pairs(pairs))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FilterStats {
    pub kept: usize,
    pub removed: usize,
}

/// Removes pairs where either side exceeds `max_units` tokens. Run after
/// subword segmentation so the cap counts subword units.
pub fn filter_length(corpus: &ParallelCorpus, max_units: usize) -> (ParallelCorpus, FilterStats) {
    let pairs: Vec<SentencePair> = corpus
        .pairs
        .iter()
        .filter(|p| p.source.len() <= max_units && p.target.len() <= max_units)
        .cloned()
        .collect();
    let stats = FilterStats { kept: pairs.len(), removed: corpus.len() - pairs.len() };
    (corpus.with_pairs(pairs), stats)
}

/// Removes pairs where either side has no tokens.
pub fn drop_empty(corpus: &ParallelCorpus) -> (ParallelCorpus, FilterStats) {
    let pairs: Vec<SentencePair> = corpus
        .pairs
        .iter()
        .filter(|p| !p.source.is_empty() && !p.target.is_empty())
        .cloned()
        .collect();
    let stats = FilterStats { kept: pairs.len(), removed: corpus.len() - pairs.len() };
    (corpus.with_pairs(pairs), stats)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusStats {
    pub size: usize,
    pub avg_source_len: Option<f64>,
    pub avg_target_len: Option<f64>,
}

pub fn corpus_stats(corpus: &ParallelCorpus) -> CorpusStats {
    if corpus.is_empty() {
        return CorpusStats { size: 0, avg_source_len: None, avg_target_len: None };
    }
    let n = corpus.len() as f64;
    let src: usize = corpus.pairs.iter().map(|p| p.source.len()).sum();
    let tgt: usize = corpus.pairs.iter().map(|p| p.target.len()).sum();
    CorpusStats {
        size: corpus.len(),
        avg_source_len: Some(src as f64 / n),
        avg_target_len: Some(tgt as f64 / n),
    }
}
