//! Byte-pair-encoding subword segmentation with exact inversion.
//!
//! Words are represented as character sequences whose final character
//! carries the end-of-word marker `</w>` merged onto it ("ab" becomes
//! `["a", "b</w>"]`). Learning repeatedly merges the most frequent adjacent
//! unit pair, weighted by word frequency, with lexicographic tie-breaking so
//! the merge list is a pure function of the corpus. Application replays
//! merges greedily by learned rank; `bpe_undo` is its exact inverse.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write as _;

/// End-of-word marker appended to the final character of every word.
pub const EOW_MARKER: &str = "</w>";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SubwordError {
    #[error("cannot learn merges from an empty corpus")]
    EmptyCorpus,
    #[error("unit stream ends inside a token that started at unit {start}")]
    UnterminatedToken { start: usize },
    #[error("unit {unit_index} contains an end-of-word marker before its final character")]
    InteriorMarker { unit_index: usize },
    #[error("unit {unit_index} is empty or consists only of the end-of-word marker")]
    EmptyUnit { unit_index: usize },
    #[error("merge table is missing the '#version 1' header")]
    MissingHeader,
    #[error("merge table line {line} is not 'left SPACE right'")]
    MalformedMergeLine { line: usize },
    #[error("merge table line {line} repeats an earlier pair")]
    DuplicateMerge { line: usize },
}

/// An ordered byte-pair merge table. Immutable once built; `apply` and
/// `undo` are pure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BpeModel {
    merges: Vec<(String, String)>,
    /// Position of each pair in `merges`; lower rank applies first.
    ranks: BTreeMap<(String, String), usize>,
}

impl BpeModel {
    pub fn from_merges(merges: Vec<(String, String)>) -> Self {
        let ranks = merges
            .iter()
            .enumerate()
            .map(|(i, pair)| (pair.clone(), i))
            .collect();
        BpeModel { merges, ranks }
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    pub fn num_merges(&self) -> usize {
        self.merges.len()
    }

    /// Serializes to the merge table text format: a `#version 1` header
    /// followed by one `left right` line per merge, in learned order.
    pub fn to_text(&self) -> String {
        let mut out = String::from("#version 1\n");
        for (l, r) in &self.merges {
            let _ = writeln!(out, "{l} {r}");
        }
        out
    }

    /// Parses the merge table text format. Blank lines are not allowed
    /// between merges; the header is mandatory.
    pub fn from_text(text: &str) -> Result<Self, SubwordError> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim_end() == "#version 1" => {}
            _ => return Err(SubwordError::MissingHeader),
        }
        let mut merges = Vec::new();
        let mut seen = BTreeMap::new();
        for (i, line) in lines.enumerate() {
            let line_no = i + 2;
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(' ');
            let (l, r) = match (parts.next(), parts.next(), parts.next()) {
                (Some(l), Some(r), None) if !l.is_empty() && !r.is_empty() => (l, r),
                _ => return Err(SubwordError::MalformedMergeLine { line: line_no }),
            };
            let pair = (l.to_string(), r.to_string());
            if seen.insert(pair.clone(), ()).is_some() {
                return Err(SubwordError::DuplicateMerge { line: line_no });
            }
            merges.push(pair);
        }
        Ok(BpeModel::from_merges(merges))
    }
}

/// Splits one token into its initial unit sequence: one unit per character,
/// with the marker merged onto the final character.
fn initial_units(token: &str) -> Vec<String> {
    debug_assert!(!token.is_empty(), "tokenizer never produces empty tokens");
    let count = token.chars().count();
    let mut units = Vec::with_capacity(count);
    for (i, c) in token.chars().enumerate() {
        let mut u = String::new();
        u.push(c);
        if i + 1 == count {
            u.push_str(EOW_MARKER);
        }
        units.push(u);
    }
    units
}

/// Counts adjacent unit pairs across the word-frequency table.
fn count_pairs(
    words: &BTreeMap<Vec<String>, u64>,
) -> BTreeMap<(String, String), u64> {
    let mut counts: BTreeMap<(String, String), u64> = BTreeMap::new();
    for (units, &freq) in words {
        for w in units.windows(2) {
            *counts.entry((w[0].clone(), w[1].clone())).or_insert(0) += freq;
        }
    }
    counts
}

/// Replaces every adjacent occurrence of `pair` in `units`, left to right.
fn merge_pair_in(units: &mut Vec<String>, pair: &(String, String)) {
    let mut out = Vec::with_capacity(units.len());
    let mut i = 0;
    while i < units.len() {
        if i + 1 < units.len() && units[i] == pair.0 && units[i + 1] == pair.1 {
            let mut merged = units[i].clone();
            merged.push_str(&pair.1);
            out.push(merged);
            i += 2;
        } else {
            out.push(units[i].clone());
            i += 1;
        }
    }
    *units = out;
}

/// Learns up to `num_merges` merges from token lines. Each iteration merges
/// the currently most frequent adjacent pair (ties broken by lexicographic
/// order of the pair) and stops early once no pair occurs at least twice.
pub fn bpe_learn<'a, I>(lines: I, num_merges: usize) -> Result<BpeModel, SubwordError>
where
    I: IntoIterator<Item = &'a [String]>,
{
    let mut words: BTreeMap<Vec<String>, u64> = BTreeMap::new();
    for line in lines {
        for token in line {
            if token.is_empty() {
                continue;
            }
            *words.entry(initial_units(token)).or_insert(0) += 1;
        }
    }
    if words.is_empty() {
        return Err(SubwordError::EmptyCorpus);
    }

    let mut merges = Vec::with_capacity(num_merges);
    for _ in 0..num_merges {
        let counts = count_pairs(&words);
        // BTreeMap iterates keys ascending, so on frequency ties the first
        // maximum seen is the lexicographically smallest pair.
        let best = counts
            .iter()
            .fold(None::<(&(String, String), u64)>, |acc, (pair, &n)| match acc {
                Some((_, best_n)) if best_n >= n => acc,
                _ => Some((pair, n)),
            });
        let Some((pair, n)) = best else { break };
        if n < 2 {
            break;
        }
        let pair = pair.clone();
        let affected: Vec<Vec<String>> = words
            .keys()
            .filter(|units| units.windows(2).any(|w| w[0] == pair.0 && w[1] == pair.1))
            .cloned()
            .collect();
        for key in affected {
            let freq = words.remove(&key).expect("key taken from the same map");
            let mut merged = key;
            merge_pair_in(&mut merged, &pair);
            *words.entry(merged).or_insert(0) += freq;
        }
        merges.push(pair);
    }
    Ok(BpeModel::from_merges(merges))
}

/// Segments one token by replaying merges greedily: the lowest-ranked pair
/// present anywhere in the unit sequence is merged (all occurrences, left to
/// right) until no learned pair remains.
pub fn bpe_apply_token(model: &BpeModel, token: &str) -> Vec<String> {
    let mut units = initial_units(token);
    loop {
        let mut best: Option<(usize, (String, String))> = None;
        for w in units.windows(2) {
            let key = (w[0].clone(), w[1].clone());
            if let Some(&rank) = model.ranks.get(&key) {
                if best.as_ref().is_none_or(|(r, _)| rank < *r) {
                    best = Some((rank, key));
                }
            }
        }
        let Some((_, pair)) = best else { break };
        merge_pair_in(&mut units, &pair);
    }
    units
}

/// Segments a token line; unit sequences of consecutive tokens are
/// concatenated (the markers delimit tokens for `bpe_undo`).
pub fn bpe_apply(model: &BpeModel, tokens: &[String]) -> Vec<String> {
    let mut out = Vec::new();
    for t in tokens {
        out.extend(bpe_apply_token(model, t));
    }
    out
}

/// Exact inverse of `bpe_apply`: concatenates units and closes a token at
/// every end-of-word marker.
pub fn bpe_undo(units: &[String]) -> Result<Vec<String>, SubwordError> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut token_start = 0usize;
    for (i, unit) in units.iter().enumerate() {
        let (body, terminal) = match unit.strip_suffix(EOW_MARKER) {
            Some(body) => (body, true),
            None => (unit.as_str(), false),
        };
        if body.contains(EOW_MARKER) {
            return Err(SubwordError::InteriorMarker { unit_index: i });
        }
        if body.is_empty() && terminal && current.is_empty() {
            return Err(SubwordError::EmptyUnit { unit_index: i });
        }
        if unit.is_empty() {
            return Err(SubwordError::EmptyUnit { unit_index: i });
        }
        if current.is_empty() {
            token_start = i;
        }
        current.push_str(body);
        if terminal {
            tokens.push(core::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        return Err(SubwordError::UnterminatedToken { start: token_start });
    }
    Ok(tokens)
}
