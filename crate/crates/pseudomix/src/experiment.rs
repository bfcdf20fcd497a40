//! Seeded experiment orchestration: builds toy-language data, preprocesses
//! it (tokenization, subword segmentation, vocabularies), trains mother
//! models, synthesizes the three corpus variants, trains and evaluates the
//! scenario models, and emits reports.
//!
//! Every run is a sequence of named stages; a failure aborts with the stage
//! name while everything written so far stays on disk. Two runs with the
//! same configuration produce byte-identical corpora, checkpoints, and
//! reports (wallclock timings go only to `logs/`, which is excluded from
//! that guarantee).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use pseudomix_core::corpus::{
    corpus_stats, drop_empty, filter_length, mix_pseudo, mix_same_kind, CorpusStats,
    MultiParallelCorpus, ParallelCorpus, ProjectSide, Provenance, Sentence, SentencePair, Triple,
};
use pseudomix_core::decode::DecodeConfig;
use pseudomix_core::metrics::corpus_bleu;
use pseudomix_core::nmt::{
    checkpoint_decode, checkpoint_encode, fine_tune, train, EpochStats, ModelParameters,
    TrainConfig, TrainOutcome,
};
use pseudomix_core::subword::{bpe_apply, bpe_learn, BpeModel};
use pseudomix_core::tokenizer::tokenize;
use pseudomix_core::vocab::Vocabulary;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::textio::{
    ensure_dir, read_token_lines, save_corpus, sha256_hex, write_text, write_token_lines,
};
use crate::toylang::{
    self, generate, side_pairs, SplitSizes, ToyData, ToyLanguageSpec, TripleSide, PIVOT_LANG,
    SOURCE_LANG, TARGET_LANG,
};
use crate::translator::{synthesize_with, ModelTranslator, Translator};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Train on each synthetic corpus alone and compare BLEU.
    PseudoOnly,
    /// Pseudo-only training followed by fine-tuning on ground-truth pairs.
    RealFineTuning,
    /// Train from scratch on real data, alone and merged with the
    /// back-translation-style synthetic corpus.
    MergedBaseline,
    /// Vary the beam size used to generate the synthetic corpora and
    /// contrast cross-origin mixing with same-origin mixing.
    BeamAblation,
    /// Sweep mother-model quality (per-epoch checkpoints) against the BLEU
    /// of the downstream model trained on its synthetic corpus.
    MotherModelSweep,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::PseudoOnly => "pseudo_only",
            Scenario::RealFineTuning => "real_fine_tuning",
            Scenario::MergedBaseline => "merged_baseline",
            Scenario::BeamAblation => "beam_ablation",
            Scenario::MotherModelSweep => "mother_model_sweep",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "pseudo_only" => Scenario::PseudoOnly,
            "real_fine_tuning" => Scenario::RealFineTuning,
            "merged_baseline" => Scenario::MergedBaseline,
            "beam_ablation" => Scenario::BeamAblation,
            "mother_model_sweep" => Scenario::MotherModelSweep,
            _ => return None,
        })
    }
}

/// Flat, schema-versioned experiment configuration. Serializing and parsing
/// it round-trips exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub scenario: Scenario,

    // Toy world.
    pub toy_pivot_vocab: usize,
    pub toy_source_vocab: usize,
    pub toy_target_vocab: usize,
    pub toy_noise_rate: f64,
    pub toy_min_len: usize,
    pub toy_max_len: usize,
    pub toy_train_size: usize,
    pub toy_mother_size: usize,
    pub toy_mother_dev_size: usize,
    pub toy_real_size: usize,
    pub toy_dev_size: usize,
    pub toy_test_size: usize,

    // Preprocessing.
    pub bpe_merges: usize,
    pub max_units: usize,
    pub vocab_cap: usize,

    // Model and optimization.
    pub emb_dim: usize,
    pub hidden_dim: usize,
    pub epochs: usize,
    pub mother_epochs: usize,
    pub minibatch_size: usize,
    pub learning_rate: f64,
    pub clip_norm: f64,
    pub fine_tune_learning_rate: f64,
    pub fine_tune_epochs: usize,

    // Decoding.
    pub beam_size: usize,
    pub max_len: usize,
    pub length_normalize: bool,
    /// Beam used when the mother models generate synthetic sentences.
    pub synthesis_beam: usize,
    /// The two beams contrasted by the beam-ablation scenario.
    pub synthesis_beam_sizes: Vec<usize>,

    // Replication and seeds.
    pub replications: usize,
    pub data_seed: u64,
    pub init_seed: u64,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            schema_version: CONFIG_SCHEMA_VERSION,
            scenario: Scenario::PseudoOnly,
            toy_pivot_vocab: 60,
            toy_source_vocab: 60,
            toy_target_vocab: 60,
            toy_noise_rate: 0.1,
            toy_min_len: 3,
            toy_max_len: 8,
            toy_train_size: 5000,
            toy_mother_size: 3000,
            toy_mother_dev_size: 300,
            toy_real_size: 500,
            toy_dev_size: 300,
            toy_test_size: 300,
            bpe_merges: 150,
            max_units: 20,
            vocab_cap: 200,
            emb_dim: 32,
            hidden_dim: 64,
            epochs: 10,
            mother_epochs: 12,
            minibatch_size: 8,
            learning_rate: 1e-2,
            clip_norm: 1.0,
            fine_tune_learning_rate: 2e-5,
            fine_tune_epochs: 2,
            beam_size: 5,
            max_len: 25,
            length_normalize: true,
            synthesis_beam: 1,
            synthesis_beam_sizes: vec![1, 5],
            replications: 3,
            data_seed: 1,
            init_seed: 2,
            output_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            bail!(
                "unsupported schema_version {} (this build reads {})",
                self.schema_version,
                CONFIG_SCHEMA_VERSION
            );
        }
        if !(0.0..1.0).contains(&self.toy_noise_rate) {
            bail!("toy_noise_rate must be in [0, 1)");
        }
        if self.toy_min_len == 0 || self.toy_min_len > self.toy_max_len {
            bail!("toy sentence lengths must satisfy 1 <= min <= max");
        }
        for (name, v) in [
            ("toy_pivot_vocab", self.toy_pivot_vocab),
            ("toy_source_vocab", self.toy_source_vocab),
            ("toy_target_vocab", self.toy_target_vocab),
            ("toy_train_size", self.toy_train_size),
            ("toy_mother_size", self.toy_mother_size),
            ("toy_mother_dev_size", self.toy_mother_dev_size),
            ("toy_dev_size", self.toy_dev_size),
            ("toy_test_size", self.toy_test_size),
            ("max_units", self.max_units),
            ("emb_dim", self.emb_dim),
            ("hidden_dim", self.hidden_dim),
            ("epochs", self.epochs),
            ("mother_epochs", self.mother_epochs),
            ("minibatch_size", self.minibatch_size),
            ("beam_size", self.beam_size),
            ("max_len", self.max_len),
            ("synthesis_beam", self.synthesis_beam),
            ("replications", self.replications),
        ] {
            if v == 0 {
                bail!("{name} must be at least 1");
            }
        }
        if self.vocab_cap < 5 {
            bail!("vocab_cap must leave room beyond the reserved units");
        }
        match self.scenario {
            Scenario::RealFineTuning => {
                if self.toy_real_size == 0 {
                    bail!("real_fine_tuning needs a ground-truth corpus: set toy_real_size > 0");
                }
                if self.fine_tune_epochs == 0 {
                    bail!("real_fine_tuning needs fine_tune_epochs > 0");
                }
            }
            Scenario::MergedBaseline => {
                if self.toy_real_size == 0 {
                    bail!("merged_baseline needs a ground-truth corpus: set toy_real_size > 0");
                }
            }
            Scenario::BeamAblation => {
                let b = &self.synthesis_beam_sizes;
                if b.len() != 2 || b[0] == 0 || b[1] == 0 || b[0] == b[1] {
                    bail!("beam_ablation needs synthesis_beam_sizes to hold two distinct beams");
                }
            }
            Scenario::PseudoOnly | Scenario::MotherModelSweep => {}
        }
        Ok(())
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            emb_dim: self.emb_dim,
            hidden_dim: self.hidden_dim,
            epochs: self.epochs,
            minibatch_size: self.minibatch_size,
            learning_rate: self.learning_rate,
            clip_norm: self.clip_norm,
            seed: 0,
            desk_scale_preset: self.hidden_dim <= 64,
        }
    }

    pub fn decode_config(&self) -> DecodeConfig {
        DecodeConfig {
            beam_size: self.beam_size,
            max_len: self.max_len,
            length_normalize: self.length_normalize,
        }
    }

    pub fn toy_spec(&self) -> ToyLanguageSpec {
        ToyLanguageSpec {
            pivot_vocab: self.toy_pivot_vocab,
            source_vocab: self.toy_source_vocab,
            target_vocab: self.toy_target_vocab,
            noise_rate: self.toy_noise_rate,
            min_len: self.toy_min_len,
            max_len: self.toy_max_len,
            sizes: SplitSizes {
                train: self.toy_train_size,
                mother: self.toy_mother_size,
                mother_dev: self.toy_mother_dev_size,
                real: self.toy_real_size,
                dev: self.toy_dev_size,
                test: self.toy_test_size,
            },
            seed: derive_seed(self.data_seed, "toy"),
        }
    }
}

/// Derives an independent stream seed from a base seed and a role tag, so
/// every randomized step of a run gets its own reproducible stream.
pub fn derive_seed(base: u64, tag: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(base.to_le_bytes());
    h.update(tag.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest holds 8 bytes"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub corpus: String,
    pub direction: String,
    /// Mean test BLEU (percent) over the replications.
    pub bleu: f64,
    /// Mean fine-tuned BLEU when the scenario fine-tunes.
    pub fine_tuned: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub epoch: usize,
    pub mother_dev_loss: f64,
    pub mother_dev_bleu: f64,
    pub downstream_bleu: f64,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub rows: Vec<ResultRow>,
    pub stats: Vec<(String, CorpusStats)>,
    pub sweep: Vec<SweepPoint>,
}

fn stage<T>(name: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    f().with_context(|| format!("stage {name} failed"))
}

struct RunPaths {
    config: PathBuf,
    corpora: PathBuf,
    raw: PathBuf,
    vocab: PathBuf,
    models: PathBuf,
    logs: PathBuf,
    decodes: PathBuf,
    report: PathBuf,
}

impl RunPaths {
    fn create(root: &Path) -> Result<Self> {
        let paths = RunPaths {
            config: root.join("config.json"),
            corpora: root.join("corpora"),
            raw: root.join("corpora/raw"),
            vocab: root.join("vocab"),
            models: root.join("models"),
            logs: root.join("logs"),
            decodes: root.join("decodes"),
            report: root.join("report"),
        };
        for dir in [
            &paths.corpora,
            &paths.raw,
            &paths.vocab,
            &paths.models,
            &paths.logs,
            &paths.decodes,
            &paths.report,
        ] {
            ensure_dir(dir)?;
        }
        Ok(paths)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Direction {
    Forward,
    Reverse,
}

impl Direction {
    const BOTH: [Direction; 2] = [Direction::Forward, Direction::Reverse];

    fn token(self) -> &'static str {
        match self {
            Direction::Forward => "fwd",
            Direction::Reverse => "rev",
        }
    }

    fn label(self) -> String {
        match self {
            Direction::Forward => format!("{SOURCE_LANG}->{TARGET_LANG}"),
            Direction::Reverse => format!("{TARGET_LANG}->{SOURCE_LANG}"),
        }
    }
}

fn multi_side_lines(m: &MultiParallelCorpus, side: TripleSide) -> Vec<Vec<String>> {
    m.triples()
        .iter()
        .map(|t| {
            match side {
                TripleSide::Source => &t.source,
                TripleSide::Pivot => &t.pivot,
                TripleSide::Target => &t.target,
            }
            .tokens()
            .to_vec()
        })
        .collect()
}

/// Reapplies the rule-based tokenizer to every side. Identity on text that
/// is already tokenized, which keeps the preprocessing chain uniform.
fn tokenize_multi(m: &MultiParallelCorpus) -> MultiParallelCorpus {
    let retok = |s: &Sentence| {
        Sentence::new(tokenize(&s.text()), Provenance::Real, s.language().to_string())
    };
    let triples = m
        .triples()
        .iter()
        .map(|t| Triple { source: retok(&t.source), pivot: retok(&t.pivot), target: retok(&t.target) })
        .collect();
    MultiParallelCorpus::new(
        triples,
        m.source_language().to_string(),
        m.pivot_language().to_string(),
        m.target_language().to_string(),
    )
}

struct BpeSet {
    source: BpeModel,
    pivot: BpeModel,
    target: BpeModel,
}

impl BpeSet {
    fn for_lang(&self, lang: &str) -> &BpeModel {
        match lang {
            l if l == SOURCE_LANG => &self.source,
            l if l == PIVOT_LANG => &self.pivot,
            l if l == TARGET_LANG => &self.target,
            other => panic!("no segmentation model for language {other}"),
        }
    }
}

fn segment_multi(m: &MultiParallelCorpus, bpe: &BpeSet) -> MultiParallelCorpus {
    let seg = |s: &Sentence| {
        Sentence::new(
            bpe_apply(bpe.for_lang(s.language()), s.tokens()),
            Provenance::Real,
            s.language().to_string(),
        )
    };
    let triples = m
        .triples()
        .iter()
        .map(|t| Triple { source: seg(&t.source), pivot: seg(&t.pivot), target: seg(&t.target) })
        .collect();
    MultiParallelCorpus::new(
        triples,
        m.source_language().to_string(),
        m.pivot_language().to_string(),
        m.target_language().to_string(),
    )
}

struct UnitSplits {
    train: MultiParallelCorpus,
    mother: MultiParallelCorpus,
    mother_dev: MultiParallelCorpus,
    real: MultiParallelCorpus,
    dev: MultiParallelCorpus,
    test: MultiParallelCorpus,
}

struct Vocabs {
    source: Vocabulary,
    pivot: Vocabulary,
    target: Vocabulary,
}

fn encode_pairs(
    pairs: &[SentencePair],
    src_vocab: &Vocabulary,
    tgt_vocab: &Vocabulary,
    swap: bool,
) -> Vec<(Vec<usize>, Vec<usize>)> {
    pairs
        .iter()
        .map(|p| {
            let (s, t) = if swap {
                (p.target.tokens(), p.source.tokens())
            } else {
                (p.source.tokens(), p.target.tokens())
            };
            (src_vocab.encode_source(s), tgt_vocab.encode_target(t))
        })
        .collect()
}

/// Per-direction views: which vocabularies and which corpus sides act as
/// source and target.
fn direction_vocabs(vocabs: &Vocabs, dir: Direction) -> (&Vocabulary, &Vocabulary, bool) {
    match dir {
        Direction::Forward => (&vocabs.source, &vocabs.target, false),
        Direction::Reverse => (&vocabs.target, &vocabs.source, true),
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Integer hundredths of a percent-scale score; all report numbers render
/// from these so printed columns and printed deltas always agree.
pub fn to_hundredths(x: f64) -> i64 {
    (x * 100.0).round() as i64
}

pub fn fmt_hundredths(h: i64) -> String {
    let sign = if h < 0 { "-" } else { "" };
    let a = h.abs();
    format!("{sign}{}.{:02}", a / 100, a % 100)
}

pub fn fmt_delta(h: i64) -> String {
    if h < 0 {
        fmt_hundredths(h)
    } else {
        format!("+{}", fmt_hundredths(h))
    }
}

/// Runs training (or fine-tuning) while writing the per-epoch log:
/// epoch, train loss, dev loss, wallclock seconds, tab-separated.
#[allow(clippy::too_many_arguments)]
fn train_logged(
    params: ModelParameters<f32>,
    pairs: &[(Vec<usize>, Vec<usize>)],
    dev: &[(Vec<usize>, Vec<usize>)],
    cfg: &TrainConfig,
    log_path: &Path,
    freeze_embeddings: bool,
    mut each_epoch: impl FnMut(&EpochStats, &ModelParameters<f32>),
) -> Result<TrainOutcome<f32>> {
    let mut log = String::new();
    let mut last = Instant::now();
    let observer = |stats: &EpochStats, p: &ModelParameters<f32>| {
        let wall = last.elapsed().as_secs_f64();
        last = Instant::now();
        let _ = writeln!(
            log,
            "{}\t{:.6}\t{:.6}\t{:.3}",
            stats.epoch, stats.train_loss, stats.dev_loss, wall
        );
        each_epoch(stats, p);
    };
    let out = if freeze_embeddings {
        fine_tune(params, pairs, dev, cfg, observer)
    } else {
        train(params, pairs, dev, cfg, observer)
    }?;
    write_text(log_path, &log)?;
    Ok(out)
}

fn save_checkpoint(path: &Path, params: &ModelParameters<f32>) -> Result<()> {
    std::fs::write(path, checkpoint_encode(params))
        .with_context(|| format!("writing {}", path.display()))
}

fn load_checkpoint(path: &Path) -> Result<ModelParameters<f32>> {
    let bytes =
        std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    checkpoint_decode::<f32>(&bytes).with_context(|| format!("decoding {}", path.display()))
}

/// One training row: a label plus the unit corpora concatenated as training
/// data, possibly different per direction (the merged baseline pairs real
/// data with the corpus whose synthetic side is the direction's source).
struct Row {
    label: String,
    parts_fwd: Vec<ParallelCorpus>,
    parts_rev: Vec<ParallelCorpus>,
}

impl Row {
    fn same(label: impl Into<String>, parts: Vec<ParallelCorpus>) -> Row {
        let label = label.into();
        Row { label, parts_fwd: parts.clone(), parts_rev: parts }
    }

    fn parts(&self, dir: Direction) -> &[ParallelCorpus] {
        match dir {
            Direction::Forward => &self.parts_fwd,
            Direction::Reverse => &self.parts_rev,
        }
    }
}

fn model_file(label: &str, dir: Direction, r: usize, fine_tuned: bool) -> String {
    let suffix = if fine_tuned { ".ft" } else { "" };
    format!("{label}.{}.r{r}{suffix}.pmx", dir.token())
}

fn decode_file(label: &str, dir: Direction, r: usize, fine_tuned: bool) -> String {
    let suffix = if fine_tuned { ".ft" } else { "" };
    format!("{label}.{}.r{r}{suffix}.txt", dir.token())
}

/// Cleans a synthetic corpus: drops empty sides, applies the unit-length
/// cap.
fn clean(corpus: &ParallelCorpus, max_units: usize) -> ParallelCorpus {
    let (kept, _) = drop_empty(corpus);
    let (kept, _) = filter_length(&kept, max_units);
    kept
}

pub fn run_scenario(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunOutcome> {
    stage("config", || cfg.validate())?;
    ensure_dir(out_dir)?;
    let paths = RunPaths::create(out_dir)?;
    let cfg_json = cfg.to_json();
    write_text(&paths.config, &cfg_json)?;
    let config_hash = sha256_hex(cfg_json.as_bytes());

    // Ground-truth toy data, saved raw for inspection.
    let data = stage("generate", || {
        let data = generate(&cfg.toy_spec())?;
        for (name, split) in [
            ("train", &data.train),
            ("mother", &data.mother),
            ("mother_dev", &data.mother_dev),
            ("real", &data.real),
            ("dev", &data.dev),
            ("test", &data.test),
        ] {
            for (lang, side) in [
                (SOURCE_LANG, TripleSide::Source),
                (PIVOT_LANG, TripleSide::Pivot),
                (TARGET_LANG, TripleSide::Target),
            ] {
                write_token_lines(
                    &paths.raw.join(format!("{name}.{lang}")),
                    &multi_side_lines(split, side),
                )?;
            }
        }
        Ok(data)
    })?;

    // Tokenize and learn subword segmentation per language on the text
    // available before synthesis (training and mother splits).
    let (bpe, units) = stage("segment", || {
        let train_tok = tokenize_multi(&data.train);
        let mother_tok = tokenize_multi(&data.mother);
        let learn = |side: TripleSide| -> Result<BpeModel> {
            let mut pool = multi_side_lines(&train_tok, side);
            pool.extend(multi_side_lines(&mother_tok, side));
            Ok(bpe_learn(pool.iter().map(|l| l.as_slice()), cfg.bpe_merges)?)
        };
        let bpe = BpeSet {
            source: learn(TripleSide::Source)?,
            pivot: learn(TripleSide::Pivot)?,
            target: learn(TripleSide::Target)?,
        };
        for (lang, model) in [
            (SOURCE_LANG, &bpe.source),
            (PIVOT_LANG, &bpe.pivot),
            (TARGET_LANG, &bpe.target),
        ] {
            write_text(&paths.corpora.join(format!("bpe.{lang}.merges")), &model.to_text())?;
        }
        let units = UnitSplits {
            train: segment_multi(&train_tok, &bpe),
            mother: segment_multi(&mother_tok, &bpe),
            mother_dev: segment_multi(&tokenize_multi(&data.mother_dev), &bpe),
            real: segment_multi(&tokenize_multi(&data.real), &bpe),
            dev: segment_multi(&tokenize_multi(&data.dev), &bpe),
            test: segment_multi(&tokenize_multi(&data.test), &bpe),
        };
        Ok((bpe, units))
    })?;
    let _ = &bpe;

    // Shared per-language vocabularies over the same pre-synthesis pool, so
    // a fine-tuned model and its parent index embeddings identically.
    let vocabs = stage("vocab", || {
        let build = |side: TripleSide| -> Result<Vocabulary> {
            let mut pool = multi_side_lines(&units.train, side);
            pool.extend(multi_side_lines(&units.mother, side));
            Ok(Vocabulary::build(pool.iter().map(|l| l.as_slice()), cfg.vocab_cap)?)
        };
        let vocabs = Vocabs {
            source: build(TripleSide::Source)?,
            pivot: build(TripleSide::Pivot)?,
            target: build(TripleSide::Target)?,
        };
        for (lang, v) in [
            (SOURCE_LANG, &vocabs.source),
            (PIVOT_LANG, &vocabs.pivot),
            (TARGET_LANG, &vocabs.target),
        ] {
            write_text(&paths.vocab.join(format!("{lang}.vocab")), &v.to_text())?;
        }
        Ok(vocabs)
    })?;

    let mut stats: Vec<(String, CorpusStats)> = Vec::new();
    let train_pairs_view = side_pairs(&units.train, TripleSide::Source, TripleSide::Target);
    stats.push(("train_triples".to_string(), corpus_stats(&train_pairs_view)));
    let real_units = side_pairs(&units.real, TripleSide::Source, TripleSide::Target);
    if cfg.toy_real_size > 0 {
        save_corpus(
            &paths.corpora.join("real"),
            &real_units,
            cfg.data_seed,
            &["corpora/raw/real".to_string()],
            true,
        )?;
        stats.push(("real".to_string(), corpus_stats(&real_units)));
    }

    let outcome = match cfg.scenario {
        Scenario::MotherModelSweep => run_sweep(cfg, &paths, &units, &data, &vocabs, &mut stats)?,
        _ => run_tabular(cfg, &paths, &units, &data, &vocabs, real_units.clone(), &mut stats)?,
    };

    // Reports: results table (TSV and rendered text), corpus statistics,
    // checksums of every artifact the results depend on.
    let (rows, sweep) = outcome;
    stage("report", || {
        write_results(cfg, &paths, &config_hash, &rows, &sweep)?;
        write_stats(&paths, &stats)?;
        write_checksums(out_dir, &paths)?;
        Ok(())
    })?;

    Ok(RunOutcome { out_dir: out_dir.to_path_buf(), rows, stats, sweep })
}

/// Trains the two mother models (pivot to source, pivot to target),
/// optionally collecting per-epoch snapshots of the pivot-to-target one.
struct Mothers {
    to_source: ModelParameters<f32>,
    to_target: ModelParameters<f32>,
}

fn train_mother(
    cfg: &ExperimentConfig,
    paths: &RunPaths,
    units: &UnitSplits,
    vocabs: &Vocabs,
    to_side: TripleSide,
    snapshots: Option<&mut Vec<(EpochStats, ModelParameters<f32>)>>,
) -> Result<ModelParameters<f32>> {
    let (name, out_vocab) = match to_side {
        TripleSide::Source => (format!("mother_{PIVOT_LANG}-{SOURCE_LANG}"), &vocabs.source),
        TripleSide::Target => (format!("mother_{PIVOT_LANG}-{TARGET_LANG}"), &vocabs.target),
        TripleSide::Pivot => unreachable!("a mother model translates away from the pivot"),
    };
    let pairs = side_pairs(&units.mother, TripleSide::Pivot, to_side);
    let dev = side_pairs(&units.mother_dev, TripleSide::Pivot, to_side);
    let enc = encode_pairs(pairs.pairs(), &vocabs.pivot, out_vocab, false);
    let enc_dev = encode_pairs(dev.pairs(), &vocabs.pivot, out_vocab, false);

    let mut tcfg = cfg.train_config();
    tcfg.epochs = cfg.mother_epochs;
    tcfg.seed = derive_seed(cfg.init_seed, &format!("{name}:shuffle"));
    let params = ModelParameters::<f32>::init(
        tcfg.model_config(vocabs.pivot.size(), out_vocab.size()),
        derive_seed(cfg.init_seed, &format!("{name}:init")),
    )?;

    let mut snaps_local = Vec::new();
    let want_snaps = snapshots.is_some();
    let out = train_logged(
        params,
        &enc,
        &enc_dev,
        &tcfg,
        &paths.logs.join(format!("{name}.log")),
        false,
        |st, p| {
            if want_snaps {
                snaps_local.push((st.clone(), p.clone()));
            }
        },
    )?;
    if let Some(store) = snapshots {
        for (st, p) in &snaps_local {
            save_checkpoint(
                &paths.models.join(format!("{name}.epoch{}.pmx", st.epoch)),
                p,
            )?;
        }
        *store = snaps_local;
    }
    save_checkpoint(&paths.models.join(format!("{name}.pmx")), &out.params)?;
    Ok(out.params)
}

fn synthesize_corpus(
    cfg: &ExperimentConfig,
    units: &UnitSplits,
    vocabs: &Vocabs,
    mothers: &Mothers,
    side: ProjectSide,
    beam: usize,
) -> Result<ParallelCorpus> {
    let (params, out_vocab) = match side {
        // Replacing the target side needs the pivot-to-target mother.
        ProjectSide::Target => (&mothers.to_target, &vocabs.target),
        ProjectSide::Source => (&mothers.to_source, &vocabs.source),
    };
    let mut tr = ModelTranslator {
        params,
        input_vocab: &vocabs.pivot,
        output_vocab: out_vocab,
        input_bpe: None,
        undo_output: false,
        decode: DecodeConfig {
            beam_size: beam,
            max_len: cfg.max_len,
            length_normalize: cfg.length_normalize,
        },
    };
    synthesize_with(&units.train, side, &mut tr)
}

/// The tabular scenarios: build the corpora, train each row in both
/// directions with replications, decode the test set, score BLEU.
#[allow(clippy::too_many_arguments)]
fn run_tabular(
    cfg: &ExperimentConfig,
    paths: &RunPaths,
    units: &UnitSplits,
    data: &ToyData,
    vocabs: &Vocabs,
    real_units: ParallelCorpus,
    stats: &mut Vec<(String, CorpusStats)>,
) -> Result<(Vec<ResultRow>, Vec<SweepPoint>)> {
    let mothers = stage("mothers", || {
        Ok(Mothers {
            to_source: train_mother(cfg, paths, units, vocabs, TripleSide::Source, None)?,
            to_target: train_mother(cfg, paths, units, vocabs, TripleSide::Target, None)?,
        })
    })?;

    // Synthetic corpora; the beam ablation needs extra variants.
    let rows = match cfg.scenario {
        Scenario::BeamAblation => {
            let (alt, main) = (cfg.synthesis_beam_sizes[0], cfg.synthesis_beam_sizes[1]);
            let (so_main, to_alt, to_main) = stage("synthesize", || {
                Ok((
                    synthesize_corpus(cfg, units, vocabs, &mothers, ProjectSide::Target, main)?,
                    synthesize_corpus(cfg, units, vocabs, &mothers, ProjectSide::Source, alt)?,
                    synthesize_corpus(cfg, units, vocabs, &mothers, ProjectSide::Source, main)?,
                ))
            })?;
            let (so_main, to_alt, to_main) = stage("clean", || {
                let cleaned = [
                    clean(&so_main, cfg.max_units),
                    clean(&to_alt, cfg.max_units),
                    clean(&to_main, cfg.max_units),
                ];
                let n = cleaned.iter().map(|c| c.len()).min().expect("three corpora");
                let seeds = ["so_main", "to_alt", "to_main"]
                    .map(|t| derive_seed(cfg.data_seed, &format!("equalize:{t}")));
                let [a, b, c] = cleaned;
                Ok((
                    a.subsample(n, seeds[0])?,
                    b.subsample(n, seeds[1])?,
                    c.subsample(n, seeds[2])?,
                ))
            })?;
            let (mixed, same_kind) = stage("mix", || {
                Ok((
                    mix_pseudo(&so_main, &to_main, derive_seed(cfg.data_seed, "mix"))?,
                    mix_same_kind(&to_alt, &to_main, derive_seed(cfg.data_seed, "mix:same"))?,
                ))
            })?;
            let labeled = [
                (format!("source_originated_beam{main}"), &so_main),
                (format!("target_originated_beam{alt}"), &to_alt),
                (format!("target_originated_beam{main}"), &to_main),
                (format!("pseudo_mix_beam{main}"), &mixed),
                (format!("target_only_mix_beam{alt}_{main}"), &same_kind),
            ];
            for (label, corpus) in &labeled {
                save_corpus(
                    &paths.corpora.join(label),
                    corpus,
                    cfg.data_seed,
                    &["corpora/raw/train".to_string()],
                    true,
                )?;
                stats.push((label.clone(), corpus_stats(corpus)));
            }
            labeled
                .into_iter()
                .map(|(label, corpus)| Row::same(label, vec![corpus.clone()]))
                .collect::<Vec<Row>>()
        }
        Scenario::MergedBaseline => {
            let (so, to, mixed) = build_standard_corpora(cfg, paths, units, vocabs, &mothers, stats)?;
            // Back-translation style: the merged partner is the corpus whose
            // synthetic side is the direction's source.
            vec![
                Row::same("real", vec![real_units.clone()]),
                Row {
                    label: "real_plus_back_translation".to_string(),
                    parts_fwd: vec![real_units.clone(), to.clone()],
                    parts_rev: vec![real_units.clone(), so.clone()],
                },
                Row::same("pseudo_mix", vec![mixed]),
            ]
        }
        _ => {
            let (so, to, mixed) = build_standard_corpora(cfg, paths, units, vocabs, &mothers, stats)?;
            vec![
                Row::same("source_originated", vec![so]),
                Row::same("target_originated", vec![to]),
                Row::same("pseudo_mix", vec![mixed]),
            ]
        }
    };

    let fine_tuning = cfg.scenario == Scenario::RealFineTuning;
    let dec_cfg = cfg.decode_config();

    stage("train", || {
        for row in &rows {
            for dir in Direction::BOTH {
                let (src_vocab, tgt_vocab, swap) = direction_vocabs(vocabs, dir);
                let mut train_ids = Vec::new();
                for part in row.parts(dir) {
                    train_ids.extend(encode_pairs(part.pairs(), src_vocab, tgt_vocab, swap));
                }
                let dev_pairs = side_pairs(&units.dev, TripleSide::Source, TripleSide::Target);
                let dev_ids = encode_pairs(dev_pairs.pairs(), src_vocab, tgt_vocab, swap);
                for r in 0..cfg.replications {
                    let tag = format!("model:{}:{}:r{r}", row.label, dir.token());
                    let mut tcfg = cfg.train_config();
                    tcfg.seed = derive_seed(cfg.init_seed, &format!("{tag}:shuffle"));
                    let params = ModelParameters::<f32>::init(
                        tcfg.model_config(src_vocab.size(), tgt_vocab.size()),
                        derive_seed(cfg.init_seed, &format!("{tag}:init")),
                    )?;
                    let out = train_logged(
                        params,
                        &train_ids,
                        &dev_ids,
                        &tcfg,
                        &paths.logs.join(format!("{}.{}.r{r}.log", row.label, dir.token())),
                        false,
                        |_, _| {},
                    )?;
                    save_checkpoint(
                        &paths.models.join(model_file(&row.label, dir, r, false)),
                        &out.params,
                    )?;
                }
            }
        }
        Ok(())
    })?;

    if fine_tuning {
        stage("fine-tune", || {
            for row in &rows {
                for dir in Direction::BOTH {
                    let (src_vocab, tgt_vocab, swap) = direction_vocabs(vocabs, dir);
                    let real_ids = encode_pairs(real_units.pairs(), src_vocab, tgt_vocab, swap);
                    let dev_pairs =
                        side_pairs(&units.dev, TripleSide::Source, TripleSide::Target);
                    let dev_ids = encode_pairs(dev_pairs.pairs(), src_vocab, tgt_vocab, swap);
                    for r in 0..cfg.replications {
                        let tag = format!("model:{}:{}:r{r}", row.label, dir.token());
                        let base = load_checkpoint(
                            &paths.models.join(model_file(&row.label, dir, r, false)),
                        )?;
                        let mut ftcfg = cfg.train_config();
                        ftcfg.epochs = cfg.fine_tune_epochs;
                        ftcfg.learning_rate = cfg.fine_tune_learning_rate;
                        ftcfg.seed = derive_seed(cfg.init_seed, &format!("{tag}:ft-shuffle"));
                        let out = train_logged(
                            base,
                            &real_ids,
                            &dev_ids,
                            &ftcfg,
                            &paths
                                .logs
                                .join(format!("{}.{}.r{r}.ft.log", row.label, dir.token())),
                            true,
                            |_, _| {},
                        )?;
                        save_checkpoint(
                            &paths.models.join(model_file(&row.label, dir, r, true)),
                            &out.params,
                        )?;
                    }
                }
            }
            Ok(())
        })?;
    }

    stage("decode", || {
        for row in &rows {
            for dir in Direction::BOTH {
                let (src_vocab, tgt_vocab, _) = direction_vocabs(vocabs, dir);
                let side = match dir {
                    Direction::Forward => TripleSide::Source,
                    Direction::Reverse => TripleSide::Target,
                };
                let inputs = multi_side_lines(&units.test, side);
                for r in 0..cfg.replications {
                    for ft in [false, true] {
                        if ft && !fine_tuning {
                            continue;
                        }
                        let params = load_checkpoint(
                            &paths.models.join(model_file(&row.label, dir, r, ft)),
                        )?;
                        let mut tr = ModelTranslator {
                            params: &params,
                            input_vocab: src_vocab,
                            output_vocab: tgt_vocab,
                            input_bpe: None,
                            undo_output: true,
                            decode: dec_cfg,
                        };
                        let words = tr.translate_lines(&inputs)?;
                        write_token_lines(
                            &paths.decodes.join(decode_file(&row.label, dir, r, ft)),
                            &words,
                        )?;
                    }
                }
            }
        }
        Ok(())
    })?;

    let rows_out = stage("bleu", || {
        let mut out = Vec::new();
        for row in &rows {
            for dir in Direction::BOTH {
                let ref_side = match dir {
                    Direction::Forward => TripleSide::Target,
                    Direction::Reverse => TripleSide::Source,
                };
                let refs = multi_side_lines(&data.test, ref_side);
                let score = |ft: bool| -> Result<f64> {
                    let mut scores = Vec::new();
                    for r in 0..cfg.replications {
                        let hyp = read_token_lines(
                            &paths.decodes.join(decode_file(&row.label, dir, r, ft)),
                        )?;
                        scores.push(corpus_bleu(&hyp, &refs)?.percent());
                    }
                    Ok(mean(&scores))
                };
                out.push(ResultRow {
                    corpus: row.label.clone(),
                    direction: dir.label(),
                    bleu: score(false)?,
                    fine_tuned: if fine_tuning { Some(score(true)?) } else { None },
                });
            }
        }
        Ok(out)
    })?;

    Ok((rows_out, Vec::new()))
}

/// Source-originated, target-originated, and mixed corpora at matched
/// sizes, saved with their statistics.
fn build_standard_corpora(
    cfg: &ExperimentConfig,
    paths: &RunPaths,
    units: &UnitSplits,
    vocabs: &Vocabs,
    mothers: &Mothers,
    stats: &mut Vec<(String, CorpusStats)>,
) -> Result<(ParallelCorpus, ParallelCorpus, ParallelCorpus)> {
    let (so, to) = stage("synthesize", || {
        Ok((
            synthesize_corpus(cfg, units, vocabs, mothers, ProjectSide::Target, cfg.synthesis_beam)?,
            synthesize_corpus(cfg, units, vocabs, mothers, ProjectSide::Source, cfg.synthesis_beam)?,
        ))
    })?;
    let (so, to) = stage("clean", || {
        let so = clean(&so, cfg.max_units);
        let to = clean(&to, cfg.max_units);
        let n = so.len().min(to.len());
        Ok((
            so.subsample(n, derive_seed(cfg.data_seed, "equalize:so"))?,
            to.subsample(n, derive_seed(cfg.data_seed, "equalize:to"))?,
        ))
    })?;
    let mixed = stage("mix", || {
        Ok(mix_pseudo(&so, &to, derive_seed(cfg.data_seed, "mix"))?)
    })?;
    debug_assert_eq!(so.len(), to.len());
    debug_assert_eq!(so.len(), mixed.len());

    for (label, corpus) in [
        ("source_originated", &so),
        ("target_originated", &to),
        ("pseudo_mix", &mixed),
    ] {
        save_corpus(
            &paths.corpora.join(label),
            corpus,
            cfg.data_seed,
            &["corpora/raw/train".to_string()],
            true,
        )?;
        stats.push((label.to_string(), corpus_stats(corpus)));
    }
    Ok((so, to, mixed))
}

/// Mother-quality sweep: per-epoch checkpoints of the pivot-to-target
/// mother each synthesize a source-originated corpus, and a downstream
/// forward model is trained on each.
fn run_sweep(
    cfg: &ExperimentConfig,
    paths: &RunPaths,
    units: &UnitSplits,
    data: &ToyData,
    vocabs: &Vocabs,
    stats: &mut Vec<(String, CorpusStats)>,
) -> Result<(Vec<ResultRow>, Vec<SweepPoint>)> {
    let mut snapshots: Vec<(EpochStats, ModelParameters<f32>)> = Vec::new();
    stage("mothers", || {
        train_mother(cfg, paths, units, vocabs, TripleSide::Target, Some(&mut snapshots))?;
        Ok(())
    })?;

    let dec_cfg = cfg.decode_config();
    let mother_dev_inputs = multi_side_lines(&units.mother_dev, TripleSide::Pivot);
    let mother_dev_refs = multi_side_lines(&data.mother_dev, TripleSide::Target);
    let test_inputs = multi_side_lines(&units.test, TripleSide::Source);
    let test_refs = multi_side_lines(&data.test, TripleSide::Target);

    let mut rows = Vec::new();
    let mut sweep = Vec::new();
    stage("sweep", || {
        for (st, mother_params) in &snapshots {
            let e = st.epoch;
            // Mother quality on the pivot task.
            let mut dev_tr = ModelTranslator {
                params: mother_params,
                input_vocab: &vocabs.pivot,
                output_vocab: &vocabs.target,
                input_bpe: None,
                undo_output: true,
                decode: dec_cfg,
            };
            let dev_words = dev_tr.translate_lines(&mother_dev_inputs)?;
            let mother_dev_bleu = corpus_bleu(&dev_words, &mother_dev_refs)?.percent();

            // Downstream corpus and models.
            let mut tr = ModelTranslator {
                params: mother_params,
                input_vocab: &vocabs.pivot,
                output_vocab: &vocabs.target,
                input_bpe: None,
                undo_output: false,
                decode: DecodeConfig {
                    beam_size: cfg.synthesis_beam,
                    max_len: cfg.max_len,
                    length_normalize: cfg.length_normalize,
                },
            };
            let so = synthesize_with(&units.train, ProjectSide::Target, &mut tr)?;
            let so = clean(&so, cfg.max_units);
            let label = format!("so_mother_epoch{e}");
            save_corpus(
                &paths.corpora.join(&label),
                &so,
                cfg.data_seed,
                &["corpora/raw/train".to_string()],
                true,
            )?;
            stats.push((label.clone(), corpus_stats(&so)));

            let train_ids =
                encode_pairs(so.pairs(), &vocabs.source, &vocabs.target, false);
            let dev_pairs = side_pairs(&units.dev, TripleSide::Source, TripleSide::Target);
            let dev_ids =
                encode_pairs(dev_pairs.pairs(), &vocabs.source, &vocabs.target, false);
            let mut scores = Vec::new();
            for r in 0..cfg.replications {
                let tag = format!("model:{label}:fwd:r{r}");
                let mut tcfg = cfg.train_config();
                tcfg.seed = derive_seed(cfg.init_seed, &format!("{tag}:shuffle"));
                let params = ModelParameters::<f32>::init(
                    tcfg.model_config(vocabs.source.size(), vocabs.target.size()),
                    derive_seed(cfg.init_seed, &format!("{tag}:init")),
                )?;
                let out = train_logged(
                    params,
                    &train_ids,
                    &dev_ids,
                    &tcfg,
                    &paths.logs.join(format!("{label}.fwd.r{r}.log")),
                    false,
                    |_, _| {},
                )?;
                save_checkpoint(
                    &paths.models.join(model_file(&label, Direction::Forward, r, false)),
                    &out.params,
                )?;
                let mut test_tr = ModelTranslator {
                    params: &out.params,
                    input_vocab: &vocabs.source,
                    output_vocab: &vocabs.target,
                    input_bpe: None,
                    undo_output: true,
                    decode: dec_cfg,
                };
                let words = test_tr.translate_lines(&test_inputs)?;
                write_token_lines(
                    &paths.decodes.join(decode_file(&label, Direction::Forward, r, false)),
                    &words,
                )?;
                scores.push(corpus_bleu(&words, &test_refs)?.percent());
            }
            let downstream = mean(&scores);
            rows.push(ResultRow {
                corpus: label,
                direction: Direction::Forward.label(),
                bleu: downstream,
                fine_tuned: None,
            });
            sweep.push(SweepPoint {
                epoch: e,
                mother_dev_loss: st.dev_loss,
                mother_dev_bleu,
                downstream_bleu: downstream,
            });
        }
        Ok(())
    })?;

    Ok((rows, sweep))
}

fn write_results(
    cfg: &ExperimentConfig,
    paths: &RunPaths,
    config_hash: &str,
    rows: &[ResultRow],
    sweep: &[SweepPoint],
) -> Result<()> {
    let fine_tuning = cfg.scenario == Scenario::RealFineTuning;

    let mut tsv = String::new();
    let _ = writeln!(tsv, "# schema_version\t{CONFIG_SCHEMA_VERSION}");
    let _ = writeln!(tsv, "# scenario\t{}", cfg.scenario.as_str());
    let _ = writeln!(tsv, "# config_sha256\t{config_hash}");
    let _ = writeln!(tsv, "# data_seed\t{}", cfg.data_seed);
    let _ = writeln!(tsv, "# init_seed\t{}", cfg.init_seed);
    let _ = writeln!(tsv, "# replications\t{}", cfg.replications);
    if fine_tuning {
        let _ = writeln!(tsv, "corpus\tdirection\tpseudo_only\treal_fine_tuning\tdelta");
    } else {
        let _ = writeln!(tsv, "corpus\tdirection\tbleu");
    }
    for row in rows {
        let base = to_hundredths(row.bleu);
        if let Some(ft) = row.fine_tuned {
            let ft = to_hundredths(ft);
            let _ = writeln!(
                tsv,
                "{}\t{}\t{}\t{}\t{}",
                row.corpus,
                row.direction,
                fmt_hundredths(base),
                fmt_hundredths(ft),
                fmt_delta(ft - base)
            );
        } else {
            let _ = writeln!(tsv, "{}\t{}\t{}", row.corpus, row.direction, fmt_hundredths(base));
        }
    }
    write_text(&paths.report.join("results.tsv"), &tsv)?;

    write_text(&paths.report.join("results.txt"), &render_results(cfg, config_hash, rows))?;

    if !sweep.is_empty() {
        let mut plot = String::new();
        let _ = writeln!(plot, "epoch\tmother_dev_loss\tmother_dev_bleu\tdownstream_bleu");
        for p in sweep {
            let _ = writeln!(
                plot,
                "{}\t{:.6}\t{}\t{}",
                p.epoch,
                p.mother_dev_loss,
                fmt_hundredths(to_hundredths(p.mother_dev_bleu)),
                fmt_hundredths(to_hundredths(p.downstream_bleu))
            );
        }
        write_text(&paths.report.join("sweep.tsv"), &plot)?;
    }
    Ok(())
}

/// Plain-text table with one block of columns per direction, fine-tuned
/// scores annotated with their parenthesized delta.
fn render_results(cfg: &ExperimentConfig, config_hash: &str, rows: &[ResultRow]) -> String {
    let mut corpora: Vec<&str> = Vec::new();
    let mut directions: Vec<&str> = Vec::new();
    for r in rows {
        if !corpora.contains(&r.corpus.as_str()) {
            corpora.push(&r.corpus);
        }
        if !directions.contains(&r.direction.as_str()) {
            directions.push(&r.direction);
        }
    }
    let cell = |c: &str, d: &str| -> String {
        let Some(row) = rows.iter().find(|r| r.corpus == c && r.direction == d) else {
            return "-".to_string();
        };
        let base = to_hundredths(row.bleu);
        match row.fine_tuned {
            Some(ft) => {
                let ft = to_hundredths(ft);
                format!(
                    "{}  ({}) {}",
                    fmt_hundredths(base),
                    fmt_delta(ft - base),
                    fmt_hundredths(ft)
                )
            }
            None => fmt_hundredths(base),
        }
    };

    let mut header: Vec<String> = vec!["corpus".to_string()];
    header.extend(directions.iter().map(|d| d.to_string()));
    let mut table: Vec<Vec<String>> = vec![header];
    for c in &corpora {
        let mut line = vec![c.to_string()];
        line.extend(directions.iter().map(|d| cell(c, d)));
        table.push(line);
    }
    let cols = table[0].len();
    let widths: Vec<usize> = (0..cols)
        .map(|i| table.iter().map(|r| r[i].len()).max().unwrap_or(0))
        .collect();

    let mut out = String::new();
    let _ = writeln!(out, "scenario: {}", cfg.scenario.as_str());
    let _ = writeln!(out, "config sha256: {config_hash}");
    let _ = writeln!(
        out,
        "data seed: {}  init seed: {}  replications: {}",
        cfg.data_seed, cfg.init_seed, cfg.replications
    );
    if cfg.scenario == Scenario::RealFineTuning {
        let _ = writeln!(out, "cells: pseudo-only  (delta) fine-tuned");
    }
    let _ = writeln!(out);
    for row in &table {
        let mut line = String::new();
        for (i, c) in row.iter().enumerate() {
            if i == 0 {
                line.push_str(&format!("{:<w$}", c, w = widths[0] + 2));
            } else {
                line.push_str(&format!("{:>w$}  ", c, w = widths[i]));
            }
        }
        let _ = writeln!(out, "{}", line.trim_end());
    }
    out
}

fn write_stats(paths: &RunPaths, stats: &[(String, CorpusStats)]) -> Result<()> {
    let mut tsv = String::new();
    let _ = writeln!(tsv, "corpus\tsize\tavg_len_{SOURCE_LANG}\tavg_len_{TARGET_LANG}");
    for (name, s) in stats {
        let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.2}"));
        let _ = writeln!(
            tsv,
            "{name}\t{}\t{}\t{}",
            s.size,
            fmt(s.avg_source_len),
            fmt(s.avg_target_len)
        );
    }
    write_text(&paths.report.join("stats.tsv"), &tsv)?;
    Ok(())
}

fn collect_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()
        .with_context(|| format!("listing {}", dir.display()))?;
    entries.sort();
    for path in entries {
        if path.is_dir() {
            collect_files(&path, out)?;
        } else {
            out.push(path);
        }
    }
    Ok(())
}

/// Checksums of every artifact the results derive from, keyed by path
/// relative to the run directory.
fn write_checksums(out_dir: &Path, paths: &RunPaths) -> Result<()> {
    let mut files = vec![paths.config.clone()];
    for dir in [&paths.corpora, &paths.vocab, &paths.models, &paths.decodes] {
        collect_files(dir, &mut files)?;
    }
    let mut lines: Vec<(String, String)> = Vec::new();
    for f in files {
        let rel = f
            .strip_prefix(out_dir)
            .unwrap_or(&f)
            .to_string_lossy()
            .replace('\\', "/");
        lines.push((rel, crate::textio::sha256_file(&f)?));
    }
    lines.sort();
    let mut tsv = String::from("path\tsha256\n");
    for (path, digest) in lines {
        let _ = writeln!(tsv, "{path}\t{digest}");
    }
    write_text(&paths.report.join("checksums.tsv"), &tsv)?;
    Ok(())
}

/// Convenience wrapper: tokenized view of raw toy text is exercised by unit
/// tests and the CLI stats path.
pub fn toy_language_constants() -> (&'static str, &'static str, &'static str) {
    (toylang::SOURCE_LANG, toylang::PIVOT_LANG, toylang::TARGET_LANG)
}
