//! Subword vocabularies with reserved control ids.
//!
//! Ids 0..3 are always `<pad>`, `<unk>`, `<bos>`, `<eos>` in that order.
//! The remaining ids rank units by corpus frequency (ties broken
//! lexicographically) and are capped at `max_size`. Encoding maps unknown
//! units to `<unk>`; source sequences end with `<eos>` and target sequences
//! are wrapped in `<bos>`…`<eos>`.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write as _;

pub const PAD_ID: usize = 0;
pub const UNK_ID: usize = 1;
pub const BOS_ID: usize = 2;
pub const EOS_ID: usize = 3;

pub const RESERVED_UNITS: [&str; 4] = ["<pad>", "<unk>", "<bos>", "<eos>"];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VocabError {
    #[error("max_size {max_size} cannot hold the {} reserved units", RESERVED_UNITS.len())]
    TooSmall { max_size: usize },
    #[error("vocabulary file line {line} duplicates an earlier unit")]
    DuplicateUnit { line: usize },
    #[error("vocabulary file must start with the reserved units {:?}", RESERVED_UNITS)]
    MissingReserved,
    #[error("vocabulary file line {line} is empty")]
    EmptyUnit { line: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    unit_to_id: BTreeMap<String, usize>,
    id_to_unit: Vec<String>,
    max_size: usize,
}

impl Vocabulary {
    /// Builds a vocabulary from unit lines: reserved units first, then units
    /// by descending frequency (lexicographic on ties) up to `max_size`.
    pub fn build<'a, I>(lines: I, max_size: usize) -> Result<Self, VocabError>
    where
        I: IntoIterator<Item = &'a [String]>,
    {
        if max_size < RESERVED_UNITS.len() {
            return Err(VocabError::TooSmall { max_size });
        }
        let mut freq: BTreeMap<&str, u64> = BTreeMap::new();
        for line in lines {
            for unit in line {
                if RESERVED_UNITS.contains(&unit.as_str()) {
                    continue;
                }
                *freq.entry(unit.as_str()).or_insert(0) += 1;
            }
        }
        let mut ranked: Vec<(&str, u64)> = freq.into_iter().collect();
        ranked.sort_by(|(ua, na), (ub, nb)| nb.cmp(na).then_with(|| ua.cmp(ub)));

        let mut vocab = Vocabulary {
            unit_to_id: BTreeMap::new(),
            id_to_unit: Vec::new(),
            max_size,
        };
        for unit in RESERVED_UNITS {
            vocab.push_unit(unit.to_string());
        }
        for (unit, _) in ranked.into_iter().take(max_size - RESERVED_UNITS.len()) {
            vocab.push_unit(unit.to_string());
        }
        Ok(vocab)
    }

    fn push_unit(&mut self, unit: String) {
        let id = self.id_to_unit.len();
        self.unit_to_id.insert(unit.clone(), id);
        self.id_to_unit.push(unit);
    }

    pub fn size(&self) -> usize {
        self.id_to_unit.len()
    }

    pub fn max_size(&self) -> usize {
        self.max_size
    }

    pub fn id(&self, unit: &str) -> Option<usize> {
        self.unit_to_id.get(unit).copied()
    }

    pub fn id_or_unk(&self, unit: &str) -> usize {
        self.id(unit).unwrap_or(UNK_ID)
    }

    pub fn unit(&self, id: usize) -> Option<&str> {
        self.id_to_unit.get(id).map(|s| s.as_str())
    }

    /// Plain unit-to-id mapping with `<unk>` substitution; no control ids.
    pub fn encode_units(&self, units: &[String]) -> Vec<usize> {
        units.iter().map(|u| self.id_or_unk(u)).collect()
    }

    /// Model input convention for source sentences: ids then `<eos>`.
    pub fn encode_source(&self, units: &[String]) -> Vec<usize> {
        let mut ids = self.encode_units(units);
        ids.push(EOS_ID);
        ids
    }

    /// Model input convention for target sentences: `<bos>`, ids, `<eos>`.
    pub fn encode_target(&self, units: &[String]) -> Vec<usize> {
        let mut ids = Vec::with_capacity(units.len() + 2);
        ids.push(BOS_ID);
        ids.extend(self.encode_units(units));
        ids.push(EOS_ID);
        ids
    }

    /// Maps ids back to unit strings; out-of-range ids become `<unk>`.
    pub fn decode_units(&self, ids: &[usize]) -> Vec<String> {
        ids.iter()
            .map(|&id| {
                self.unit(id)
                    .unwrap_or(RESERVED_UNITS[UNK_ID])
                    .to_string()
            })
            .collect()
    }

    /// One unit per line, in id order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for unit in &self.id_to_unit {
            let _ = writeln!(out, "{unit}");
        }
        out
    }

    /// Parses the one-unit-per-line format; the reserved units must open the
    /// file in id order.
    pub fn from_text(text: &str) -> Result<Self, VocabError> {
        let mut vocab = Vocabulary {
            unit_to_id: BTreeMap::new(),
            id_to_unit: Vec::new(),
            max_size: usize::MAX,
        };
        for (i, lin) in text.lines().enumerate() {
            if lin.is_empty() {
                return Err(VocabError::EmptyUnit { line: i + 1 });
            }
            if vocab.unit_to_id.contains_key(lin) {
                return Err(VocabError::DuplicateUnit { line: i + 1 });
            }
            vocab.push_unit(lin.to_string());
        }
        for (id, unit) in RESERVED_UNITS.iter().enumerate() {
            if vocab.unit(id) != Some(unit) {
                return Err(VocabError::MissingReserved);
            }
        }
        let size = vocab.id_to_unit.len();
        vocab.max_size = size;
        Ok(vocab)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn units(s: &str) -> Vec<String> {
        s.split_whitespace().map(|t| t.to_string()).collect()
    }

    #[test]
    fn reserved_ids_are_fixed() {
        let v = Vocabulary::build([units("a b").as_slice()], 10).unwrap();
        assert_eq!(v.id("<pad>"), Some(PAD_ID));
        assert_eq!(v.id("<unk>"), Some(UNK_ID));
        assert_eq!(v.id("<bos>"), Some(BOS_ID));
        assert_eq!(v.id("<eos>"), Some(EOS_ID));
    }

    #[test]
    fn ranks_by_frequency_then_unit() {
        let lines = [units("b b b a a c"), units("d d d")];
        let v = Vocabulary::build(lines.iter().map(|l| l.as_slice()), 100).unwrap();
        // b and d tie at 3, lexicographic puts b first; then d, a, c.
        assert_eq!(v.unit(4), Some("b"));
        assert_eq!(v.unit(5), Some("d"));
        assert_eq!(v.unit(6), Some("a"));
        assert_eq!(v.unit(7), Some("c"));
    }

    #[test]
    fn cap_truncates_after_reserved() {
        let lines = [units("a a a b b c")];
        let v = Vocabulary::build(lines.iter().map(|l| l.as_slice()), 6).unwrap();
        assert_eq!(v.size(), 6);
        assert_eq!(v.id("a"), Some(4));
        assert_eq!(v.id("b"), Some(5));
        assert_eq!(v.id("c"), None);
        assert!(Vocabulary::build(lines.iter().map(|l| l.as_slice()), 3).is_err());
    }

    #[test]
    fn encoding_conventions() {
        let lines = [units("a b")];
        let v = Vocabulary::build(lines.iter().map(|l| l.as_slice()), 10).unwrap();
        assert_eq!(v.encode_units(&units("a zz b")), vec![4, UNK_ID, 5]);
        assert_eq!(v.encode_source(&units("a")), vec![4, EOS_ID]);
        assert_eq!(v.encode_target(&units("a")), vec![BOS_ID, 4, EOS_ID]);
        assert_eq!(v.decode_units(&[4, 5, 99]), units("a b <unk>"));
    }

    #[test]
    fn text_round_trip() {
        let lines = [units("z y x")];
        let v = Vocabulary::build(lines.iter().map(|l| l.as_slice()), 10).unwrap();
        let back = Vocabulary::from_text(&v.to_text()).unwrap();
        assert_eq!(v.id_to_unit, back.id_to_unit);
        assert_eq!(
            Vocabulary::from_text("<pad>\n<unk>\n"),
            Err(VocabError::MissingReserved)
        );
    }
}
