//! Command-line surface. Each subcommand wraps one pipeline step (corpus
//! alignment and mixing, subword segmentation, training, fine-tuning,
//! translation, scoring) and `experiment` runs a whole seeded scenario.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use pseudomix_core::corpus::{
    corpus_stats, drop_empty, filter_length, mix_pseudo, mix_same_kind, pivot_align, CorpusKind,
    MultiParallelCorpus, ParallelCorpus, ProjectSide, Provenance, Sentence, Triple,
};
use pseudomix_core::decode::DecodeConfig;
use pseudomix_core::metrics::corpus_bleu;
use pseudomix_core::nmt::{
    checkpoint_decode, checkpoint_encode, ModelParameters, TrainConfig,
};
use pseudomix_core::subword::{bpe_apply, bpe_learn, bpe_undo, BpeModel};
use pseudomix_core::vocab::Vocabulary;

use crate::experiment::{derive_seed, run_scenario, ExperimentConfig, Scenario};
use crate::textio::{
    ensure_dir, load_corpus, load_parallel, read_text, read_token_lines, save_corpus, write_text,
    write_token_lines,
};
use crate::translator::{ExternalTranslator, ModelTranslator, Translator};

#[derive(Debug, Parser)]
#[command(
    name = "pseudomix",
    version,
    about = "Synthetic parallel corpora through a pivot language, and the models trained on them"
)]
pub struct Cli {
    /// Base seed for every randomized step of the subcommand.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Experiment configuration file (JSON).
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Join a source-pivot corpus with a pivot-target corpus on exact pivot
    /// matches, producing sentence triples.
    AlignPivot(AlignPivotArgs),
    /// Replace one side of a triple corpus with machine translations of the
    /// pivot side.
    Synthesize(SynthesizeArgs),
    /// Mix two corpora into one of the same size by half-sampling each.
    Mix(MixArgs),
    /// Drop empty-sided pairs and optionally enforce a length cap.
    Filter(FilterArgs),
    /// Print size and mean side lengths of saved corpora.
    Stats(StatsArgs),
    /// Learn a byte-pair merge table from token files.
    BpeLearn(BpeLearnArgs),
    /// Segment a token file into subword units.
    BpeApply(BpeCodecArgs),
    /// Reverse subword segmentation exactly.
    BpeUndo(BpeUndoArgs),
    /// Train a translation model on parallel token files.
    Train(TrainArgs),
    /// Continue training a checkpoint on new data with frozen embeddings.
    Finetune(FinetuneArgs),
    /// Translate a token file with a trained model.
    Translate(TranslateArgs),
    /// Score a hypothesis file against a reference file.
    Bleu(BleuArgs),
    /// Run a full seeded scenario and write its reports.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args)]
pub struct AlignPivotArgs {
    /// Source side of the source-pivot corpus.
    #[arg(long, value_name = "FILE")]
    pub left_source: PathBuf,
    /// Pivot side of the source-pivot corpus.
    #[arg(long, value_name = "FILE")]
    pub left_pivot: PathBuf,
    /// Pivot side of the pivot-target corpus.
    #[arg(long, value_name = "FILE")]
    pub right_pivot: PathBuf,
    /// Target side of the pivot-target corpus.
    #[arg(long, value_name = "FILE")]
    pub right_target: PathBuf,
    #[arg(long, value_name = "LANG")]
    pub source_lang: String,
    #[arg(long, value_name = "LANG")]
    pub pivot_lang: String,
    #[arg(long, value_name = "LANG")]
    pub target_lang: String,
    /// Output path base; sides are written as <base>.<lang>.
    #[arg(long, value_name = "BASE")]
    pub out_base: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthesizeArgs {
    /// Source side of the triple corpus.
    #[arg(long, value_name = "FILE")]
    pub source: PathBuf,
    /// Pivot side of the triple corpus.
    #[arg(long, value_name = "FILE")]
    pub pivot: PathBuf,
    /// Target side of the triple corpus.
    #[arg(long, value_name = "FILE")]
    pub target: PathBuf,
    #[arg(long, value_name = "LANG")]
    pub source_lang: String,
    #[arg(long, value_name = "LANG")]
    pub pivot_lang: String,
    #[arg(long, value_name = "LANG")]
    pub target_lang: String,
    /// Which side to replace with translations of the pivot.
    #[arg(long, value_parser = parse_side)]
    pub side: ProjectSide,
    /// External translator executable, called as CMD [ARGS] INPUT OUTPUT.
    #[arg(long, value_name = "CMD", conflicts_with = "model")]
    pub translator_cmd: Option<PathBuf>,
    /// Extra argument for the external translator (repeatable).
    #[arg(long, value_name = "ARG", requires = "translator_cmd")]
    pub translator_arg: Vec<String>,
    /// Model checkpoint used to translate the pivot side.
    #[arg(long, value_name = "CKPT", required_unless_present = "translator_cmd")]
    pub model: Option<PathBuf>,
    /// Vocabulary of the model's input (pivot) side.
    #[arg(long, value_name = "FILE", requires = "model")]
    pub model_source_vocab: Option<PathBuf>,
    /// Vocabulary of the model's output side.
    #[arg(long, value_name = "FILE", requires = "model")]
    pub model_target_vocab: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub beam: usize,
    #[arg(long, default_value_t = 80)]
    pub max_len: usize,
    #[arg(long, value_name = "on|off", default_value = "on", value_parser = parse_on_off)]
    pub normalize_length: bool,
    /// Output corpus base; writes <base>.<lang> sides and <base>.meta.json.
    #[arg(long, value_name = "BASE")]
    pub out_base: PathBuf,
}

#[derive(Debug, Args)]
pub struct MixArgs {
    /// First corpus base (as written by synthesize/filter/mix).
    #[arg(long, value_name = "BASE")]
    pub first: PathBuf,
    /// Second corpus base.
    #[arg(long, value_name = "BASE")]
    pub second: PathBuf,
    /// Mix two corpora of the same kind instead of the two origins.
    #[arg(long)]
    pub same_kind: bool,
    #[arg(long, value_name = "BASE")]
    pub out_base: PathBuf,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    #[arg(long, value_name = "BASE")]
    pub in_base: PathBuf,
    /// Maximum units per side; pairs with a longer side are dropped.
    #[arg(long, value_name = "N")]
    pub max_units: Option<usize>,
    #[arg(long, value_name = "BASE")]
    pub out_base: PathBuf,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Corpus base (repeatable).
    #[arg(long = "corpus", value_name = "BASE", required = true)]
    pub corpora: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BpeLearnArgs {
    /// Number of merge operations to learn.
    #[arg(long, value_name = "N")]
    pub merges: usize,
    /// Token file to learn from (repeatable).
    #[arg(long = "in", value_name = "FILE", required = true)]
    pub inputs: Vec<PathBuf>,
    /// Where to write the merge table.
    #[arg(long = "out", value_name = "FILE")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct BpeCodecArgs {
    /// Merge table written by bpe-learn.
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    #[arg(long = "out", value_name = "FILE")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct BpeUndoArgs {
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    #[arg(long = "out", value_name = "FILE")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_name = "FILE")]
    pub train_source: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub train_target: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub dev_source: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub dev_target: PathBuf,
    /// Existing source vocabulary; built from the training data when absent.
    #[arg(long, value_name = "FILE")]
    pub source_vocab: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub target_vocab: Option<PathBuf>,
    /// Vocabulary size cap when building vocabularies here.
    #[arg(long, value_name = "N")]
    pub vocab_cap: Option<usize>,
    #[arg(long, default_value_t = 32)]
    pub emb_dim: usize,
    #[arg(long, default_value_t = 64)]
    pub hidden_dim: usize,
    #[arg(long, default_value_t = 10)]
    pub epochs: usize,
    #[arg(long, default_value_t = 16)]
    pub minibatch_size: usize,
    #[arg(long, default_value_t = 2e-4)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 1.0)]
    pub clip_norm: f64,
    /// Directory for the checkpoint, vocabularies, and training log.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FinetuneArgs {
    /// Checkpoint to continue from.
    #[arg(long, value_name = "CKPT")]
    pub model: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub source_vocab: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub target_vocab: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub train_source: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub train_target: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub dev_source: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub dev_target: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub epochs: usize,
    #[arg(long, default_value_t = 16)]
    pub minibatch_size: usize,
    #[arg(long, default_value_t = 2e-5)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 1.0)]
    pub clip_norm: f64,
    /// Directory for the checkpoint and training log.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TranslateArgs {
    #[arg(long, value_name = "CKPT")]
    pub model: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub source_vocab: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub target_vocab: PathBuf,
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    #[arg(long = "out", value_name = "FILE")]
    pub output: PathBuf,
    #[arg(long, default_value_t = 12)]
    pub beam: usize,
    #[arg(long, default_value_t = 80)]
    pub max_len: usize,
    #[arg(long, value_name = "on|off", default_value = "on", value_parser = parse_on_off)]
    pub normalize_length: bool,
    /// Segment the input with this merge table before translating.
    #[arg(long, value_name = "FILE")]
    pub bpe: Option<PathBuf>,
    /// Emit subword units instead of undoing the segmentation.
    #[arg(long)]
    pub keep_units: bool,
}

#[derive(Debug, Args)]
pub struct BleuArgs {
    #[arg(long, value_name = "FILE")]
    pub hyp: PathBuf,
    #[arg(long = "ref", value_name = "FILE")]
    pub reference: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Scenario name, overriding the configuration file.
    #[arg(long, value_name = "NAME")]
    pub scenario: Option<String>,
    /// Run directory, overriding output_dir from the configuration file.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Print the effective configuration and exit.
    #[arg(long)]
    pub print_config: bool,
}

fn parse_side(s: &str) -> Result<ProjectSide, String> {
    match s {
        "source" => Ok(ProjectSide::Source),
        "target" => Ok(ProjectSide::Target),
        _ => Err("expected 'source' or 'target'".to_string()),
    }
}

fn parse_on_off(s: &str) -> Result<bool, String> {
    match s {
        "on" => Ok(true),
        "off" => Ok(false),
        _ => Err("expected 'on' or 'off'".to_string()),
    }
}

fn load_vocab(path: &Path) -> Result<Vocabulary> {
    Ok(Vocabulary::from_text(&read_text(path)?)
        .with_context(|| format!("parsing vocabulary {}", path.display()))?)
}

fn load_bpe(path: &Path) -> Result<BpeModel> {
    Ok(BpeModel::from_text(&read_text(path)?)
        .with_context(|| format!("parsing merge table {}", path.display()))?)
}

fn load_model(path: &Path) -> Result<ModelParameters<f32>> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(checkpoint_decode::<f32>(&bytes)
        .with_context(|| format!("decoding checkpoint {}", path.display()))?)
}

fn print_corpus_stats(rows: &[(String, &ParallelCorpus)]) {
    println!("corpus\tsize\tavg_source_len\tavg_target_len");
    for (name, corpus) in rows {
        let s = corpus_stats(corpus);
        let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.2}"));
        println!("{name}\t{}\t{}\t{}", s.size, fmt(s.avg_source_len), fmt(s.avg_target_len));
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::AlignPivot(args) => cmd_align_pivot(args),
        Command::Synthesize(args) => cmd_synthesize(args, cli.seed),
        Command::Mix(args) => cmd_mix(args, cli.seed),
        Command::Filter(args) => cmd_filter(args, cli.seed),
        Command::Stats(args) => cmd_stats(args),
        Command::BpeLearn(args) => cmd_bpe_learn(args),
        Command::BpeApply(args) => cmd_bpe_apply(args),
        Command::BpeUndo(args) => cmd_bpe_undo(args),
        Command::Train(args) => cmd_train(args, cli.seed),
        Command::Finetune(args) => cmd_finetune(args, cli.seed),
        Command::Translate(args) => cmd_translate(args),
        Command::Bleu(args) => cmd_bleu(args),
        Command::Experiment(args) => cmd_experiment(args, cli.seed, &cli.config),
    }
}

fn cmd_align_pivot(args: AlignPivotArgs) -> Result<()> {
    let left = load_parallel(
        &args.left_source,
        &args.left_pivot,
        &args.source_lang,
        &args.pivot_lang,
        CorpusKind::Real,
    )?;
    let right = load_parallel(
        &args.right_pivot,
        &args.right_target,
        &args.pivot_lang,
        &args.target_lang,
        CorpusKind::Real,
    )?;
    let (aligned, stats) = pivot_align(&left, &right)?;
    for (lang, side) in [
        (&args.source_lang, 0usize),
        (&args.pivot_lang, 1),
        (&args.target_lang, 2),
    ] {
        let lines: Vec<Vec<String>> = aligned
            .triples()
            .iter()
            .map(|t| {
                match side {
                    0 => &t.source,
                    1 => &t.pivot,
                    _ => &t.target,
                }
                .tokens()
                .to_vec()
            })
            .collect();
        write_token_lines(&args.out_base.with_extension(lang.as_str()), &lines)?;
    }
    println!(
        "aligned {} triples ({} duplicate pivot matches removed)",
        stats.triples, stats.duplicates_removed
    );
    if stats.zero_matches {
        eprintln!("warning: the corpora share no pivot sentence");
    }
    Ok(())
}

fn load_triples(args: &SynthesizeArgs) -> Result<MultiParallelCorpus> {
    let src = read_token_lines(&args.source)?;
    let piv = read_token_lines(&args.pivot)?;
    let tgt = read_token_lines(&args.target)?;
    if src.len() != piv.len() || src.len() != tgt.len() {
        bail!(
            "triple sides disagree: {} has {} lines, {} has {}, {} has {}",
            args.source.display(),
            src.len(),
            args.pivot.display(),
            piv.len(),
            args.target.display(),
            tgt.len()
        );
    }
    let triples = src
        .into_iter()
        .zip(piv)
        .zip(tgt)
        .map(|((s, p), t)| Triple {
            source: Sentence::new(s, Provenance::Real, args.source_lang.clone()),
            pivot: Sentence::new(p, Provenance::Real, args.pivot_lang.clone()),
            target: Sentence::new(t, Provenance::Real, args.target_lang.clone()),
        })
        .collect();
    Ok(MultiParallelCorpus::new(
        triples,
        args.source_lang.clone(),
        args.pivot_lang.clone(),
        args.target_lang.clone(),
    ))
}

fn cmd_synthesize(args: SynthesizeArgs, seed: u64) -> Result<()> {
    let multi = load_triples(&args)?;
    let corpus = if let Some(cmd) = &args.translator_cmd {
        let mut tr = ExternalTranslator {
            command: cmd.clone(),
            args: args.translator_arg.clone(),
        };
        crate::translator::synthesize_with(&multi, args.side, &mut tr)?
    } else {
        let model = load_model(args.model.as_ref().expect("clap enforces --model"))?;
        let input_vocab = load_vocab(
            args.model_source_vocab
                .as_ref()
                .context("--model needs --model-source-vocab")?,
        )?;
        let output_vocab = load_vocab(
            args.model_target_vocab
                .as_ref()
                .context("--model needs --model-target-vocab")?,
        )?;
        let mut tr = ModelTranslator {
            params: &model,
            input_vocab: &input_vocab,
            output_vocab: &output_vocab,
            input_bpe: None,
            undo_output: false,
            decode: DecodeConfig {
                beam_size: args.beam,
                max_len: args.max_len,
                length_normalize: args.normalize_length,
            },
        };
        crate::translator::synthesize_with(&multi, args.side, &mut tr)?
    };
    let parents = vec![
        args.source.display().to_string(),
        args.pivot.display().to_string(),
        args.target.display().to_string(),
    ];
    save_corpus(&args.out_base, &corpus, seed, &parents, false)?;
    print_corpus_stats(&[(args.out_base.display().to_string(), &corpus)]);
    Ok(())
}

fn cmd_mix(args: MixArgs, seed: u64) -> Result<()> {
    let (first, _) = load_corpus(&args.first)?;
    let (second, _) = load_corpus(&args.second)?;
    let mixed = if args.same_kind {
        mix_same_kind(&first, &second, seed)?
    } else {
        mix_pseudo(&first, &second, seed)?
    };
    let parents = vec![args.first.display().to_string(), args.second.display().to_string()];
    save_corpus(&args.out_base, &mixed, seed, &parents, false)?;
    print_corpus_stats(&[(args.out_base.display().to_string(), &mixed)]);
    Ok(())
}

fn cmd_filter(args: FilterArgs, seed: u64) -> Result<()> {
    let (corpus, _) = load_corpus(&args.in_base)?;
    let (kept, empty_stats) = drop_empty(&corpus);
    let (kept, len_stats) = match args.max_units {
        Some(cap) => filter_length(&kept, cap),
        None => {
            let n = kept.len();
            (kept, pseudomix_core::corpus::FilterStats { kept: n, removed: 0 })
        }
    };
    let parents = vec![args.in_base.display().to_string()];
    save_corpus(&args.out_base, &kept, seed, &parents, false)?;
    println!(
        "kept {} pairs ({} empty-sided, {} over the length cap)",
        kept.len(),
        empty_stats.removed,
        len_stats.removed
    );
    Ok(())
}

fn cmd_stats(args: StatsArgs) -> Result<()> {
    let mut loaded = Vec::new();
    for base in &args.corpora {
        let (corpus, _) = load_corpus(base)?;
        loaded.push((base.display().to_string(), corpus));
    }
    let rows: Vec<(String, &ParallelCorpus)> =
        loaded.iter().map(|(n, c)| (n.clone(), c)).collect();
    print_corpus_stats(&rows);
    Ok(())
}

fn cmd_bpe_learn(args: BpeLearnArgs) -> Result<()> {
    let mut pool: Vec<Vec<String>> = Vec::new();
    for path in &args.inputs {
        pool.extend(read_token_lines(path)?);
    }
    let model = bpe_learn(pool.iter().map(|l| l.as_slice()), args.merges)?;
    write_text(&args.output, &model.to_text())?;
    println!("learned {} merges from {} lines", model.num_merges(), pool.len());
    Ok(())
}

fn cmd_bpe_apply(args: BpeCodecArgs) -> Result<()> {
    let model = load_bpe(&args.model)?;
    let lines = read_token_lines(&args.input)?;
    let out: Vec<Vec<String>> = lines.iter().map(|l| bpe_apply(&model, l)).collect();
    write_token_lines(&args.output, &out)?;
    Ok(())
}

fn cmd_bpe_undo(args: BpeUndoArgs) -> Result<()> {
    let lines = read_token_lines(&args.input)?;
    let mut out = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        out.push(
            bpe_undo(line).with_context(|| format!("line {} is not a unit sequence", i + 1))?,
        );
    }
    write_token_lines(&args.output, &out)?;
    Ok(())
}

/// Shared by train and finetune: encode files against vocabularies.
fn encode_files(
    source: &Path,
    target: &Path,
    src_vocab: &Vocabulary,
    tgt_vocab: &Vocabulary,
) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    let src = read_token_lines(source)?;
    let tgt = read_token_lines(target)?;
    if src.len() != tgt.len() {
        bail!(
            "{} has {} lines but {} has {}",
            source.display(),
            src.len(),
            target.display(),
            tgt.len()
        );
    }
    Ok(src
        .iter()
        .zip(&tgt)
        .map(|(s, t)| (src_vocab.encode_source(s), tgt_vocab.encode_target(t)))
        .collect())
}

fn run_training(
    params: ModelParameters<f32>,
    train_ids: &[(Vec<usize>, Vec<usize>)],
    dev_ids: &[(Vec<usize>, Vec<usize>)],
    tcfg: &TrainConfig,
    out_dir: &Path,
    freeze_embeddings: bool,
) -> Result<()> {
    use std::fmt::Write as _;
    let mut log = String::new();
    let mut last = std::time::Instant::now();
    let observer = |stats: &pseudomix_core::nmt::EpochStats, _: &ModelParameters<f32>| {
        let wall = last.elapsed().as_secs_f64();
        last = std::time::Instant::now();
        let _ = writeln!(
            log,
            "{}\t{:.6}\t{:.6}\t{:.3}",
            stats.epoch, stats.train_loss, stats.dev_loss, wall
        );
    };
    let out = if freeze_embeddings {
        pseudomix_core::nmt::fine_tune(params, train_ids, dev_ids, tcfg, observer)?
    } else {
        pseudomix_core::nmt::train(params, train_ids, dev_ids, tcfg, observer)?
    };
    std::fs::write(out_dir.join("model.pmx"), checkpoint_encode(&out.params))
        .with_context(|| format!("writing {}", out_dir.join("model.pmx").display()))?;
    write_text(&out_dir.join("train.log"), &log)?;
    println!(
        "best epoch {} (dev loss {:.6}); checkpoint at {}",
        out.best_epoch,
        out.best_dev_loss,
        out_dir.join("model.pmx").display()
    );
    Ok(())
}

fn cmd_train(args: TrainArgs, seed: u64) -> Result<()> {
    let out_dir = args.out.as_path();
    ensure_dir(out_dir)?;
    let tcfg = TrainConfig {
        emb_dim: args.emb_dim,
        hidden_dim: args.hidden_dim,
        epochs: args.epochs,
        minibatch_size: args.minibatch_size,
        learning_rate: args.learning_rate,
        clip_norm: args.clip_norm,
        seed: derive_seed(seed, "shuffle"),
        desk_scale_preset: args.hidden_dim <= 64,
    };
    let train_src_lines = read_token_lines(&args.train_source)?;
    let train_tgt_lines = read_token_lines(&args.train_target)?;
    let src_vocab = match &args.source_vocab {
        Some(p) => load_vocab(p)?,
        None => Vocabulary::build(
            train_src_lines.iter().map(|l| l.as_slice()),
            args.vocab_cap.unwrap_or_else(|| tcfg.vocab_cap()),
        )?,
    };
    let tgt_vocab = match &args.target_vocab {
        Some(p) => load_vocab(p)?,
        None => Vocabulary::build(
            train_tgt_lines.iter().map(|l| l.as_slice()),
            args.vocab_cap.unwrap_or_else(|| tcfg.vocab_cap()),
        )?,
    };
    drop(train_src_lines);
    drop(train_tgt_lines);
    let train_ids = encode_files(&args.train_source, &args.train_target, &src_vocab, &tgt_vocab)?;
    let dev_ids = encode_files(&args.dev_source, &args.dev_target, &src_vocab, &tgt_vocab)?;
    let params = ModelParameters::<f32>::init(
        tcfg.model_config(src_vocab.size(), tgt_vocab.size()),
        derive_seed(seed, "init"),
    )?;
    write_text(&out_dir.join("source.vocab"), &src_vocab.to_text())?;
    write_text(&out_dir.join("target.vocab"), &tgt_vocab.to_text())?;
    run_training(params, &train_ids, &dev_ids, &tcfg, out_dir, false)
}

fn cmd_finetune(args: FinetuneArgs, seed: u64) -> Result<()> {
    let out_dir = args.out.as_path();
    ensure_dir(out_dir)?;
    let params = load_model(&args.model)?;
    let src_vocab = load_vocab(&args.source_vocab)?;
    let tgt_vocab = load_vocab(&args.target_vocab)?;
    let cfg = params.config();
    if cfg.src_vocab != src_vocab.size() || cfg.tgt_vocab != tgt_vocab.size() {
        bail!(
            "checkpoint expects vocabularies of {} and {} entries, got {} and {}",
            cfg.src_vocab,
            cfg.tgt_vocab,
            src_vocab.size(),
            tgt_vocab.size()
        );
    }
    let tcfg = TrainConfig {
        emb_dim: cfg.emb_dim,
        hidden_dim: cfg.hidden_dim,
        epochs: args.epochs,
        minibatch_size: args.minibatch_size,
        learning_rate: args.learning_rate,
        clip_norm: args.clip_norm,
        seed: derive_seed(seed, "ft-shuffle"),
        desk_scale_preset: cfg.hidden_dim <= 64,
    };
    let train_ids = encode_files(&args.train_source, &args.train_target, &src_vocab, &tgt_vocab)?;
    let dev_ids = encode_files(&args.dev_source, &args.dev_target, &src_vocab, &tgt_vocab)?;
    run_training(params, &train_ids, &dev_ids, &tcfg, out_dir, true)
}

fn cmd_translate(args: TranslateArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let src_vocab = load_vocab(&args.source_vocab)?;
    let tgt_vocab = load_vocab(&args.target_vocab)?;
    let bpe = args.bpe.as_ref().map(|p| load_bpe(p)).transpose()?;
    let mut tr = ModelTranslator {
        params: &model,
        input_vocab: &src_vocab,
        output_vocab: &tgt_vocab,
        input_bpe: bpe.as_ref(),
        undo_output: !args.keep_units,
        decode: DecodeConfig {
            beam_size: args.beam,
            max_len: args.max_len,
            length_normalize: args.normalize_length,
        },
    };
    let lines = read_token_lines(&args.input)?;
    let out = tr.translate_lines(&lines)?;
    write_token_lines(&args.output, &out)?;
    println!("translated {} lines", lines.len());
    Ok(())
}

fn cmd_bleu(args: BleuArgs) -> Result<()> {
    let hyp = read_token_lines(&args.hyp)?;
    let refs = read_token_lines(&args.reference)?;
    let report = corpus_bleu(&hyp, &refs)?;
    println!("BLEU = {:.2}", report.percent());
    println!(
        "precisions = {:.1}/{:.1}/{:.1}/{:.1}",
        report.precisions[0] * 100.0,
        report.precisions[1] * 100.0,
        report.precisions[2] * 100.0,
        report.precisions[3] * 100.0
    );
    println!("brevity_penalty = {:.3}", report.brevity_penalty);
    println!("hyp_len = {}  ref_len = {}", report.hyp_len, report.ref_len);
    Ok(())
}

fn cmd_experiment(args: ExperimentArgs, seed: u64, config: &Option<PathBuf>) -> Result<()> {
    let mut cfg = match config {
        Some(path) => ExperimentConfig::from_json(&read_text(path)?)
            .with_context(|| format!("parsing {}", path.display()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(name) = &args.scenario {
        cfg.scenario = Scenario::parse(name).with_context(|| {
            format!(
                "unknown scenario {name}; expected one of pseudo_only, real_fine_tuning, \
                 merged_baseline, beam_ablation, mother_model_sweep"
            )
        })?;
    }
    if seed != 0 {
        cfg.data_seed = seed;
        cfg.init_seed = derive_seed(seed, "init");
    }
    if args.print_config {
        print!("{}", cfg.to_json());
        return Ok(());
    }
    let out_dir = match (&args.out, &cfg.output_dir) {
        (Some(dir), _) => dir.clone(),
        (None, Some(dir)) => PathBuf::from(dir),
        (None, None) => bail!("no output directory: pass --out or set output_dir in the config"),
    };
    let outcome = run_scenario(&cfg, &out_dir)?;
    let rendered = read_text(&out_dir.join("report/results.txt"))?;
    print!("{rendered}");
    println!("reports written to {}", out_dir.join("report").display());
    let _ = outcome;
    Ok(())
}
