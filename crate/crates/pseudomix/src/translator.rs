//! Batch translation drivers for corpus synthesis and decoding: an
//! in-process driver around a model checkpoint, and an external executable
//! honoring the file-based contract (invoked with an input path and an
//! output path, one output line per input line).

use std::path::PathBuf;
use std::process::Command;

use anyhow::{bail, Context, Result};
use pseudomix_core::corpus::{MultiParallelCorpus, ParallelCorpus, ProjectSide};
use pseudomix_core::decode::{beam_search, DecodeConfig};
use pseudomix_core::nmt::ModelParameters;
use pseudomix_core::subword::{bpe_apply, BpeModel, EOW_MARKER};
use pseudomix_core::vocab::{Vocabulary, RESERVED_UNITS};

use crate::textio::{read_token_lines, write_token_lines};

pub trait Translator {
    /// Translates token lines to token lines, exactly one output line per
    /// input line, preserving order.
    fn translate_lines(&mut self, lines: &[Vec<String>]) -> Result<Vec<Vec<String>>>;
}

/// Joins subword units back into words, tolerating model output quirks:
/// reserved control units become standalone words, and a trailing unit cut
/// off mid-word by the length limit is closed.
pub fn units_to_words(units: &[String]) -> Result<Vec<String>> {
    let mut fixed: Vec<String> = units
        .iter()
        .map(|u| {
            if RESERVED_UNITS.contains(&u.as_str()) {
                format!("{u}{EOW_MARKER}")
            } else {
                u.clone()
            }
        })
        .collect();
    if let Some(last) = fixed.last_mut() {
        if !last.ends_with(EOW_MARKER) {
            last.push_str(EOW_MARKER);
        }
    }
    pseudomix_core::subword::bpe_undo(&fixed).context("undoing subword segmentation")
}

/// Translates with an in-memory checkpoint: optional subword segmentation of
/// the input, source encoding, beam search, and either raw output units or
/// words (segmentation undone). Empty input lines pass through empty.
pub struct ModelTranslator<'a> {
    pub params: &'a ModelParameters<f32>,
    pub input_vocab: &'a Vocabulary,
    pub output_vocab: &'a Vocabulary,
    /// Applied to input tokens; `None` when they already are subword units.
    pub input_bpe: Option<&'a BpeModel>,
    /// Join output units back into words instead of returning units.
    pub undo_output: bool,
    pub decode: DecodeConfig,
}

impl ModelTranslator<'_> {
    fn translate_one(&self, tokens: &[String]) -> Result<Vec<String>> {
        if tokens.is_empty() {
            return Ok(Vec::new());
        }
        let units = match self.input_bpe {
            Some(model) => bpe_apply(model, tokens),
            None => tokens.to_vec(),
        };
        let ids = self.input_vocab.encode_source(&units);
        let hyp = beam_search(self.params, &ids, &self.decode).context("beam search")?;
        let out_units = self.output_vocab.decode_units(&hyp.ids);
        if self.undo_output {
            units_to_words(&out_units)
        } else {
            Ok(out_units)
        }
    }
}

impl Translator for ModelTranslator<'_> {
    fn translate_lines(&mut self, lines: &[Vec<String>]) -> Result<Vec<Vec<String>>> {
        lines
            .iter()
            .enumerate()
            .map(|(i, line)| {
                self.translate_one(line).with_context(|| format!("translating line {}", i + 1))
            })
            .collect()
    }
}

/// Runs `command [args...] <input_path> <output_path>` over a temporary
/// directory and enforces the one-line-per-line contract.
pub struct ExternalTranslator {
    pub command: PathBuf,
    pub args: Vec<String>,
}

impl Translator for ExternalTranslator {
    fn translate_lines(&mut self, lines: &[Vec<String>]) -> Result<Vec<Vec<String>>> {
        let dir = tempfile::tempdir().context("creating a temporary directory")?;
        let input = dir.path().join("input.txt");
        let output = dir.path().join("output.txt");
        write_token_lines(&input, lines)?;

        let result = Command::new(&self.command)
            .args(&self.args)
            .arg(&input)
            .arg(&output)
            .output()
            .with_context(|| format!("running translator {}", self.command.display()))?;
        if !result.status.success() {
            bail!(
                "translator {} exited with {}: {}",
                self.command.display(),
                result.status,
                String::from_utf8_lossy(&result.stderr).trim()
            );
        }

        let out = read_token_lines(&output)
            .with_context(|| format!("translator {} wrote no readable output", self.command.display()))?;
        if out.len() != lines.len() {
            bail!(
                "translator {} broke the line contract: {} input lines, {} output lines",
                self.command.display(),
                lines.len(),
                out.len()
            );
        }
        Ok(out)
    }
}

/// Builds a synthetic corpus by translating every pivot line of `multi` with
/// `translator` and substituting the chosen side.
pub fn synthesize_with<T: Translator>(
    multi: &MultiParallelCorpus,
    side: ProjectSide,
    translator: &mut T,
) -> Result<ParallelCorpus> {
    let pivots: Vec<Vec<String>> =
        multi.triples().iter().map(|t| t.pivot.tokens().to_vec()).collect();
    let translated = translator.translate_lines(&pivots)?;
    if translated.len() != pivots.len() {
        bail!(
            "translator returned {} lines for {} pivot sentences",
            translated.len(),
            pivots.len()
        );
    }
    let mut outputs = translated.into_iter();
    pseudomix_core::corpus::project_synthetic(multi, side, |_| outputs.next())
        .context("substituting translated sentences")
}
