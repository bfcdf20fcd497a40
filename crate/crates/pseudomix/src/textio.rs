//! Corpus file formats: paired one-sentence-per-line UTF-8 text files, the
//! JSON metadata sidecar, token-line readers and writers, and checksums.
//!
//! A corpus on disk is `<base>.<source_lang>`, `<base>.<target_lang>`, and
//! `<base>.meta.json`. Text files use LF line endings and single spaces
//! between tokens. The sidecar records languages, kind, size, seed, parent
//! paths, and (for mixed corpora) the per-pair provenance pattern needed to
//! reconstruct the corpus exactly.

use std::fs;
use std::path::{Path, PathBuf};

use pseudomix_core::corpus::{
    CorpusKind, ParallelCorpus, Provenance, Sentence, SentencePair,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const META_SCHEMA_VERSION: u32 = 1;

/// Identifier of the edge-punctuation tokenizer rule set, recorded in the
/// sidecar of corpora that went through tokenization.
pub const TOKENIZER_RULES: &str = "edge-punct-v1";

#[derive(Debug, thiserror::Error)]
pub enum TextIoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: line {line} is not valid UTF-8")]
    BadUtf8 { path: PathBuf, line: usize },
    #[error("line counts differ: {left_path} has {left}, {right_path} has {right}")]
    LineCountMismatch {
        left_path: PathBuf,
        left: usize,
        right_path: PathBuf,
        right: usize,
    },
    #[error("{path}: {source}")]
    BadJson {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {reason}")]
    BadMeta { path: PathBuf, reason: String },
    #[error("{path}: {source}")]
    BadCorpus {
        path: PathBuf,
        #[source]
        source: pseudomix_core::corpus::CorpusError,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> TextIoError + '_ {
    move |source| TextIoError::Io { path: path.to_path_buf(), source }
}

/// Reads a one-sentence-per-line file into whitespace-separated token lines.
/// A trailing newline does not produce an extra line; blank lines become
/// empty token lists. Invalid UTF-8 reports the 1-based line number.
pub fn read_token_lines(path: &Path) -> Result<Vec<Vec<String>>, TextIoError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    if bytes.is_empty() {
        return Ok(Vec::new());
    }
    let mut lines = Vec::new();
    for (i, raw) in bytes.split(|&b| b == b'\n').enumerate() {
        let text = std::str::from_utf8(raw)
            .map_err(|_| TextIoError::BadUtf8 { path: path.to_path_buf(), line: i + 1 })?;
        lines.push(text.split_whitespace().map(str::to_string).collect());
    }
    // Splitting "a\n" yields ["a", ""]; the empty tail is the terminator,
    // not a blank line.
    if bytes.last() == Some(&b'\n') {
        lines.pop();
    }
    Ok(lines)
}

/// Writes token lines space-joined, one per line, LF endings, trailing
/// newline on the last line.
pub fn write_token_lines(path: &Path, lines: &[Vec<String>]) -> Result<(), TextIoError> {
    let mut out = String::new();
    for line in lines {
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    fs::write(path, out).map_err(io_err(path))
}

pub fn read_text(path: &Path) -> Result<String, TextIoError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    String::from_utf8(bytes).map_err(|e| {
        let line = e.as_bytes()[..e.utf8_error().valid_up_to()]
            .iter()
            .filter(|&&b| b == b'\n')
            .count()
            + 1;
        TextIoError::BadUtf8 { path: path.to_path_buf(), line }
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), TextIoError> {
    fs::write(path, text).map_err(io_err(path))
}

pub fn ensure_dir(path: &Path) -> Result<(), TextIoError> {
    fs::create_dir_all(path).map_err(io_err(path))
}

/// Sidecar metadata for a corpus base path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusMeta {
    pub schema_version: u32,
    pub source_lang: String,
    pub target_lang: String,
    pub kind: String,
    pub size: usize,
    pub seed: u64,
    pub parents: Vec<String>,
    /// One character per pair for mixed corpora: 'S' when the source side
    /// is real (source-originated pattern), 'T' when the target side is.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_provenance: Option<String>,
    /// Tokenizer rule-set identifier when the text was tokenized.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokenizer_rules: Option<String>,
}

fn source_path(base: &Path, lang: &str) -> PathBuf {
    let mut s = base.as_os_str().to_os_string();
    s.push(".");
    s.push(lang);
    PathBuf::from(s)
}

fn meta_path(base: &Path) -> PathBuf {
    let mut s = base.as_os_str().to_os_string();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// Writes `<base>.<src_lang>`, `<base>.<tgt_lang>`, and `<base>.meta.json`.
/// `seed` and `parents` record how the corpus was derived; `tokenized` marks
/// text that went through the tokenizer rule set.
pub fn save_corpus(
    base: &Path,
    corpus: &ParallelCorpus,
    seed: u64,
    parents: &[String],
    tokenized: bool,
) -> Result<CorpusMeta, TextIoError> {
    let src_file = source_path(base, corpus.source_language());
    let tgt_file = source_path(base, corpus.target_language());
    let src_lines: Vec<Vec<String>> =
        corpus.source_token_lines().map(<[String]>::to_vec).collect();
    let tgt_lines: Vec<Vec<String>> =
        corpus.target_token_lines().map(<[String]>::to_vec).collect();
    write_token_lines(&src_file, &src_lines)?;
    write_token_lines(&tgt_file, &tgt_lines)?;

    let pair_provenance = match corpus.kind() {
        CorpusKind::Mixed => Some(
            corpus
                .pairs()
                .iter()
                .map(|p| if p.source.provenance() == Provenance::Real { 'S' } else { 'T' })
                .collect(),
        ),
        _ => None,
    };
    let meta = CorpusMeta {
        schema_version: META_SCHEMA_VERSION,
        source_lang: corpus.source_language().to_string(),
        target_lang: corpus.target_language().to_string(),
        kind: corpus.kind().as_str().to_string(),
        size: corpus.len(),
        seed,
        parents: parents.to_vec(),
        pair_provenance,
        tokenizer_rules: tokenized.then(|| TOKENIZER_RULES.to_string()),
    };
    let meta_file = meta_path(base);
    let json = serde_json::to_string_pretty(&meta)
        .map_err(|source| TextIoError::BadJson { path: meta_file.clone(), source })?;
    write_text(&meta_file, &format!("{json}\n"))?;
    Ok(meta)
}

/// Loads a corpus saved by `save_corpus`, restoring kind and per-pair
/// provenance from the sidecar.
pub fn load_corpus(base: &Path) -> Result<(ParallelCorpus, CorpusMeta), TextIoError> {
    let meta_file = meta_path(base);
    let meta: CorpusMeta = serde_json::from_str(&read_text(&meta_file)?)
        .map_err(|source| TextIoError::BadJson { path: meta_file.clone(), source })?;
    if meta.schema_version != META_SCHEMA_VERSION {
        return Err(TextIoError::BadMeta {
            path: meta_file,
            reason: format!("unsupported schema_version {}", meta.schema_version),
        });
    }
    let kind = CorpusKind::parse(&meta.kind).ok_or_else(|| TextIoError::BadMeta {
        path: meta_file.clone(),
        reason: format!("unknown kind '{}'", meta.kind),
    })?;

    let src_file = source_path(base, &meta.source_lang);
    let tgt_file = source_path(base, &meta.target_lang);
    let src_lines = read_token_lines(&src_file)?;
    let tgt_lines = read_token_lines(&tgt_file)?;
    if src_lines.len() != tgt_lines.len() {
        return Err(TextIoError::LineCountMismatch {
            left_path: src_file,
            left: src_lines.len(),
            right_path: tgt_file,
            right: tgt_lines.len(),
        });
    }
    if src_lines.len() != meta.size {
        return Err(TextIoError::BadMeta {
            path: meta_file,
            reason: format!("size {} does not match {} text lines", meta.size, src_lines.len()),
        });
    }

    let corpus = match kind {
        CorpusKind::Mixed => {
            let Some(pattern) = meta.pair_provenance.as_deref() else {
                return Err(TextIoError::BadMeta {
                    path: meta_file,
                    reason: "mixed corpus sidecar lacks pair_provenance".to_string(),
                });
            };
            if pattern.chars().count() != src_lines.len()
                || pattern.chars().any(|c| c != 'S' && c != 'T')
            {
                return Err(TextIoError::BadMeta {
                    path: meta_file,
                    reason: "pair_provenance must be one 'S' or 'T' per pair".to_string(),
                });
            }
            let pairs = src_lines
                .into_iter()
                .zip(tgt_lines)
                .zip(pattern.chars())
                .map(|((s, t), c)| {
                    let (sp, tp) = if c == 'S' {
                        (Provenance::Real, Provenance::Synthetic)
                    } else {
                        (Provenance::Synthetic, Provenance::Real)
                    };
                    SentencePair {
                        source: Sentence::new(s, sp, meta.source_lang.clone()),
                        target: Sentence::new(t, tp, meta.target_lang.clone()),
                    }
                })
                .collect();
            ParallelCorpus::from_pairs(pairs, &meta.source_lang, &meta.target_lang, kind)
        }
        _ => ParallelCorpus::from_token_lines(
            src_lines,
            tgt_lines,
            &meta.source_lang,
            &meta.target_lang,
            kind,
        ),
    }
    .map_err(|source| TextIoError::BadCorpus { path: base.to_path_buf(), source })?;
    Ok((corpus, meta))
}

/// Loads a corpus from two bare text files without a sidecar. Lines are
/// whitespace-split; no tokenization is applied.
pub fn load_parallel(
    source_file: &Path,
    target_file: &Path,
    source_lang: &str,
    target_lang: &str,
    kind: CorpusKind,
) -> Result<ParallelCorpus, TextIoError> {
    let src_lines = read_token_lines(source_file)?;
    let tgt_lines = read_token_lines(target_file)?;
    if src_lines.len() != tgt_lines.len() {
        return Err(TextIoError::LineCountMismatch {
            left_path: source_file.to_path_buf(),
            left: src_lines.len(),
            right_path: target_file.to_path_buf(),
            right: tgt_lines.len(),
        });
    }
    ParallelCorpus::from_token_lines(src_lines, tgt_lines, source_lang, target_lang, kind)
        .map_err(|source| TextIoError::BadCorpus { path: source_file.to_path_buf(), source })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String, TextIoError> {
    Ok(sha256_hex(&fs::read(path).map_err(io_err(path))?))
}
