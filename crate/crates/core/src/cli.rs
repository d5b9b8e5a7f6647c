//! Command-line front end. Every command writes into one output directory
//! with fixed file names; identical arguments and inputs give identical
//! files.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::corpus::{
    dataset_stats, load_jsonl, split_dataset, synth_bilingual, write_jsonl as write_threads, DatasetSplit, SynthConfig,
    Thread,
};
use crate::eval::{
    evaluate, render_ablation, render_matrix, render_sweep, run_ablation, run_matrix, run_semi_supervised_sweep,
    trajectory_csv, write_jsonl, ExperimentSettings, PreparedDirection, RunRecord, TrajectoryPoint, Variant,
};
use crate::model::{init_params, load_checkpoint, save_checkpoint, FreezePolicy};
use crate::seeds::derive;
use crate::selftrain::{encode_labeled, run_transfer, IterationRecord};
use crate::tokenizer::{SepStyle, Vocabulary};

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_TRAINING: u8 = 3;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Training { stage: &'static str, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Training { .. } => EXIT_TRAINING,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Training { stage, message } => write!(f, "{stage} failed: {message}"),
        }
    }
}

fn data_err(e: impl std::fmt::Display) -> CliError {
    CliError::Data(e.to_string())
}

fn stage(stage: &'static str) -> impl Fn(crate::eval::EvalError) -> CliError {
    move |e| CliError::Training {
        stage,
        message: e.to_string(),
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "crossrumour",
    version,
    about = "Cross-lingual rumour detection by self-training"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic bilingual pair of thread datasets.
    Synth(SynthArgs),
    /// Print dataset statistics.
    Stats {
        #[arg(long)]
        data: PathBuf,
    },
    /// Teacher, self-training loop and best checkpoint for one direction.
    Transfer(TransferArgs),
    /// Metrics of a checkpoint on a dataset.
    Eval(EvalArgs),
    /// Variants × seeds for one direction, aggregated.
    Matrix(MatrixArgs),
    /// Zero-shot accuracy for 3 freezing options × pretraining off/on.
    Ablate(BenchArgs),
    /// Self-training vs supervised as target gold labels are revealed.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    /// Surface words per language.
    #[arg(long, default_value_t = 200)]
    pub vocab_size: usize,
    #[arg(long, default_value_t = 0.3)]
    pub overlap: f64,
    #[arg(long, default_value_t = 0.85)]
    pub signal: f64,
    #[arg(long, default_value_t = 2)]
    pub min_reactions: usize,
    #[arg(long, default_value_t = 6)]
    pub max_reactions: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long)]
    pub cue_rate: Option<f64>,
    #[arg(long)]
    pub cue_fraction: Option<f64>,
    #[arg(long, default_value = "synthA")]
    pub source_language: String,
    #[arg(long, default_value = "synthB")]
    pub target_language: String,
}

/// Tokenizer, model, training and loop settings. Unset values take the
/// library defaults; the resolved values are written to `config.json`.
#[derive(Debug, Args, Clone)]
pub struct SettingsArgs {
    #[arg(long)]
    pub vocab_size: Option<usize>,
    #[arg(long)]
    pub max_seq_len: Option<usize>,
    #[arg(long)]
    pub sep_style: Option<SepStyle>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub layers: Option<usize>,
    /// Confidence threshold for silver labels.
    #[arg(long)]
    pub p: Option<f64>,
    /// Self-training iterations.
    #[arg(long)]
    pub iters: Option<usize>,
    /// Mix source gold labels into every student round.
    #[arg(long)]
    pub gl: bool,
    /// Freezing of the first teacher fine-tune: none, embeddings, first<k>.
    #[arg(long)]
    pub freeze: Option<FreezePolicy>,
    #[arg(long)]
    pub adaptive_pretrain: Option<bool>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub pretrain_lr: Option<f64>,
    #[arg(long)]
    pub pretrain_epochs: Option<usize>,
    #[arg(long)]
    pub pretrain_batch_size: Option<usize>,
    #[arg(long)]
    pub mask_prob: Option<f64>,
    #[arg(long)]
    pub gold_weight: Option<f64>,
    /// Lower p by 0.01 after an iteration with no silver labels.
    #[arg(long)]
    pub p_decay: bool,
}

impl SettingsArgs {
    pub fn resolve(&self) -> ExperimentSettings {
        let mut s = ExperimentSettings::default();
        macro_rules! set {
            ($($field:ident => $target:expr),* $(,)?) => {
                $(if let Some(v) = self.$field { $target = v; })*
            };
        }
        set! {
            vocab_size => s.vocab_size,
            max_seq_len => s.max_seq_len,
            sep_style => s.sep_style,
            hidden => s.hidden,
            layers => s.layers,
            p => s.transfer.p,
            iters => s.transfer.max_iterations,
            freeze => s.transfer.teacher_freeze,
            adaptive_pretrain => s.transfer.adaptive_pretrain,
            lr => s.transfer.train.learning_rate,
            epochs => s.transfer.train.epochs,
            batch_size => s.transfer.train.batch_size,
            dropout => s.transfer.train.dropout,
            pretrain_lr => s.transfer.pretrain.learning_rate,
            pretrain_epochs => s.transfer.pretrain.epochs,
            pretrain_batch_size => s.transfer.pretrain.batch_size,
            mask_prob => s.transfer.mask_prob,
            gold_weight => s.transfer.gold_weight,
        }
        s.transfer.use_gold_labels = self.gl;
        s.transfer.p_decay = self.p_decay;
        s
    }
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub source: PathBuf,
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    pub seeds: Vec<u64>,
    /// Seed of the train/validation/test split of the source dataset.
    #[arg(long, default_value_t = 1)]
    pub split_seed: u64,
    /// Split seed of the target dataset; defaults to `--split-seed`.
    #[arg(long)]
    pub target_split_seed: Option<u64>,
    /// Worker threads for independent runs.
    #[arg(long, default_value_t = 1)]
    pub parallel: usize,
    #[command(flatten)]
    pub settings: SettingsArgs,
}

#[derive(Debug, Args)]
pub struct TransferArgs {
    #[arg(long)]
    pub source: PathBuf,
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub split_seed: u64,
    #[arg(long)]
    pub target_split_seed: Option<u64>,
    #[command(flatten)]
    pub settings: SettingsArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub vocab: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Which part of the split to score: train, validation, test or all.
    #[arg(long, default_value = "test")]
    pub part: String,
    #[arg(long, default_value_t = 1)]
    pub split_seed: u64,
    #[arg(long)]
    pub max_seq_len: Option<usize>,
    #[arg(long)]
    pub sep_style: Option<SepStyle>,
    /// Metrics file; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MatrixArgs {
    #[command(flatten)]
    pub bench: BenchArgs,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "ZeroShot,ST,ST_GL,SupervisedSource,SupervisedTarget,SupervisedBoth"
    )]
    pub variants: Vec<Variant>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub bench: BenchArgs,
    #[arg(long, value_delimiter = ',', default_value = "0,0.2,0.4,0.6,0.8")]
    pub fractions: Vec<f64>,
}

fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(hex::encode(Sha256::digest(bytes)))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("cannot create {}: {e}", dir.display())))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(data_err)?;
    text.push('\n');
    write_file(path, text)
}

fn load_split(path: &Path, seed: u64) -> Result<(Vec<Thread>, DatasetSplit), CliError> {
    let threads = load_jsonl(path).map_err(data_err)?;
    let split = split_dataset(&threads, seed).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok((threads, split))
}

fn validate_settings(s: &ExperimentSettings) -> Result<(), CliError> {
    s.transfer.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    s.encode_config().map_err(|e| CliError::Usage(e.to_string()))?;
    let t = &s.transfer.train;
    if t.batch_size == 0
        || s.transfer.pretrain.batch_size == 0
        || !(0.0..1.0).contains(&t.dropout)
        || s.hidden == 0
        || s.layers == 0
    {
        return Err(CliError::Usage(
            "batch sizes, hidden and layers must be positive and dropout in [0, 1)".into(),
        ));
    }
    if let FreezePolicy::FirstKLayers(k) = s.transfer.teacher_freeze {
        if k == 0 || k > s.layers {
            return Err(CliError::Usage(format!(
                "--freeze first{k} needs 0 < k <= layers ({})",
                s.layers
            )));
        }
    }
    Ok(())
}

/// Loads both datasets, splits them and trains the shared vocabulary.
fn prepare(
    source: &Path,
    target: &Path,
    split_seeds: (u64, Option<u64>),
    settings: &ExperimentSettings,
) -> Result<(PreparedDirection, serde_json::Value), CliError> {
    validate_settings(settings)?;
    let (split_seed, target_split_seed) = (split_seeds.0, split_seeds.1.unwrap_or(split_seeds.0));
    let (src, src_split) = load_split(source, split_seed)?;
    let (tgt, tgt_split) = load_split(target, target_split_seed)?;
    let name = |t: &[Thread], p: &Path| {
        t.first()
            .map(|x| x.language.clone())
            .unwrap_or_else(|| p.display().to_string())
    };
    let dir = PreparedDirection::new(
        &name(&src, source),
        &name(&tgt, target),
        &src_split,
        &tgt_split,
        settings,
    )
    .map_err(stage("data preparation"))?;
    let inputs = json!({
        "source": {"path": source, "sha256": sha256_file(source)?, "threads": src.len()},
        "target": {"path": target, "sha256": sha256_file(target)?, "threads": tgt.len()},
        "split_seed": split_seed,
        "target_split_seed": target_split_seed,
        "vocabulary_size": dir.vocab.len(),
    });
    Ok((dir, inputs))
}

fn with_workers<T: Send>(n: usize, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    if n == 0 {
        return Err(CliError::Usage("--parallel must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(pool.install(f))
}

fn cmd_synth(a: &SynthArgs) -> Result<(), CliError> {
    let mut cfg = SynthConfig {
        n_per_language: a.n,
        vocab_size_per_language: a.vocab_size,
        lexical_overlap: a.overlap,
        label_signal_strength: a.signal,
        reaction_count_range: (a.min_reactions, a.max_reactions),
        seed: a.seed,
        source_language: a.source_language.clone(),
        target_language: a.target_language.clone(),
        ..SynthConfig::default()
    };
    if let Some(v) = a.cue_rate {
        cfg.cue_rate = v;
    }
    if let Some(v) = a.cue_fraction {
        cfg.cue_fraction = v;
    }
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let corpus = synth_bilingual(&cfg).map_err(data_err)?;
    create_dir(&a.out)?;
    let src = a.out.join("source.jsonl");
    let tgt = a.out.join("target.jsonl");
    write_threads(&src, &corpus.source).map_err(data_err)?;
    write_threads(&tgt, &corpus.target).map_err(data_err)?;
    write_json(
        &a.out.join("manifest.json"),
        &json!({
            "generator": cfg,
            "shared_words": corpus.shared_words(),
            "files": {
                "source.jsonl": {"threads": corpus.source.len(), "sha256": sha256_file(&src)?},
                "target.jsonl": {"threads": corpus.target.len(), "sha256": sha256_file(&tgt)?},
            },
        }),
    )?;
    println!(
        "wrote {} and {} ({} threads each)",
        src.display(),
        tgt.display(),
        cfg.n_per_language
    );
    Ok(())
}

fn cmd_stats(data: &Path) -> Result<(), CliError> {
    let threads = load_jsonl(data).map_err(data_err)?;
    print!("{}", dataset_stats(&threads).map_err(data_err)?);
    Ok(())
}

fn cmd_transfer(a: &TransferArgs) -> Result<(), CliError> {
    let settings = a.settings.resolve();
    let (dir, inputs) = prepare(&a.source, &a.target, (a.split_seed, a.target_split_seed), &settings)?;
    create_dir(&a.out)?;
    write_json(
        &a.out.join("config.json"),
        &json!({"command": "transfer", "inputs": inputs, "seed": a.seed, "settings": settings}),
    )?;
    dir.vocab.save(a.out.join("vocab.txt")).map_err(data_err)?;

    let cfg = crate::selftrain::TransferConfig {
        seed: derive(a.seed, "transfer", 0),
        ..settings.transfer
    };
    let init = init_params(dir.dims(&settings), derive(a.seed, "init", 0)).map_err(|e| CliError::Training {
        stage: "initialisation",
        message: e.to_string(),
    })?;
    let target = dir.zero_shot_target();
    let mut log = Vec::new();
    let mut points = Vec::new();
    let mut observer = |r: &IterationRecord, m: &crate::model::ClassifierParams| {
        let mut line = serde_json::to_string(r).expect("record serialises");
        line.push('\n');
        log.extend_from_slice(line.as_bytes());
        let acc = |d| evaluate(m, d, a.seed).map(|x| x.accuracy).unwrap_or(f64::NAN);
        points.push(TrajectoryPoint {
            record: r.clone(),
            target_test_accuracy: acc(&dir.target_test),
            source_test_accuracy: acc(&dir.source_test),
        });
    };
    let outcome = run_transfer(&init, &dir.source, &target, &cfg, &mut observer).map_err(|e| CliError::Training {
        stage: "transfer",
        message: e.to_string(),
    })?;
    write_file(&a.out.join("trajectory.jsonl"), &log)?;
    let run = RunRecord {
        direction: dir.direction(),
        variant: if cfg.use_gold_labels {
            Variant::StGl
        } else {
            Variant::St
        },
        seed: a.seed,
        source_metrics: None,
        target_metrics: None,
        best_iteration: Some(outcome.best_iteration),
        trajectory: points,
        error: None,
    };
    write_file(
        &a.out.join("trajectory.csv"),
        trajectory_csv(std::slice::from_ref(&run)),
    )?;
    save_checkpoint(&outcome.best, a.out.join("checkpoint.bin")).map_err(data_err)?;
    let metrics = |d| evaluate(&outcome.best, d, a.seed).map_err(stage("evaluation"));
    write_json(
        &a.out.join("metrics.json"),
        &json!({
            "best_iteration": outcome.best_iteration,
            "iterations": cfg.max_iterations,
            "checkpoint_sha256": outcome.best.fingerprint(),
            "source_test": metrics(&dir.source_test)?,
            "target_test": metrics(&dir.target_test)?,
            "target_validation": metrics(&dir.target_validation)?,
        }),
    )?;
    println!(
        "best iteration {} of {}; results in {}",
        outcome.best_iteration,
        cfg.max_iterations,
        a.out.display()
    );
    Ok(())
}

fn cmd_eval(a: &EvalArgs) -> Result<(), CliError> {
    let model = load_checkpoint(&a.checkpoint).map_err(data_err)?;
    let vocab = Vocabulary::load(&a.vocab).map_err(|e| CliError::Data(format!("{}: {e}", a.vocab.display())))?;
    let defaults = ExperimentSettings::default();
    let settings = ExperimentSettings {
        max_seq_len: a.max_seq_len.unwrap_or(defaults.max_seq_len),
        sep_style: a.sep_style.unwrap_or(defaults.sep_style),
        ..defaults
    };
    let enc = settings.encode_config().map_err(|e| CliError::Usage(e.to_string()))?;
    if model.dims().vocab != vocab.len() {
        return Err(CliError::Data(format!(
            "checkpoint expects {} tokens, vocabulary {} has {}",
            model.dims().vocab,
            a.vocab.display(),
            vocab.len()
        )));
    }
    let (threads, split) = load_split(&a.data, a.split_seed)?;
    let part: &[Thread] = match a.part.as_str() {
        "train" => &split.train,
        "validation" => &split.validation,
        "test" => &split.test,
        "all" => &threads,
        other => return Err(CliError::Usage(format!("unknown --part {other:?}"))),
    };
    let data = encode_labeled(part, &vocab, enc).map_err(data_err)?;
    let metrics = evaluate(&model, &data, 0).map_err(stage("evaluation"))?;
    let mut text = serde_json::to_string_pretty(&metrics).map_err(data_err)?;
    text.push('\n');
    match &a.out {
        Some(path) => write_file(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn bench_config(
    b: &BenchArgs,
    command: &str,
    settings: &ExperimentSettings,
    inputs: serde_json::Value,
    extra: serde_json::Value,
) -> serde_json::Value {
    json!({"command": command, "inputs": inputs, "seeds": b.seeds, "settings": settings, "options": extra})
}

fn cmd_matrix(a: &MatrixArgs) -> Result<(), CliError> {
    let b = &a.bench;
    let settings = b.settings.resolve();
    let (dir, inputs) = prepare(&b.source, &b.target, (b.split_seed, b.target_split_seed), &settings)?;
    create_dir(&b.out)?;
    write_json(
        &b.out.join("config.json"),
        &bench_config(b, "matrix", &settings, inputs, json!({"variants": a.variants})),
    )?;
    let results = with_workers(b.parallel, || {
        run_matrix(std::slice::from_ref(&dir), &a.variants, &b.seeds, &settings)
    })?
    .map_err(stage("matrix"))?;
    let runs: Vec<RunRecord> = results.iter().flat_map(|r| r.runs.clone()).collect();
    let rows: Vec<serde_json::Value> = results
        .iter()
        .map(|r| {
            json!({
                "direction": r.direction, "variant": r.variant, "seeds": r.seeds,
                "source_accuracy": r.source_accuracy, "target_accuracy": r.target_accuracy,
                "source_f1": r.source_f1, "target_f1": r.target_f1, "failed_seeds": r.failed_seeds,
            })
        })
        .collect();
    write_jsonl(b.out.join("runs.jsonl"), &runs).map_err(data_err)?;
    write_jsonl(b.out.join("results.jsonl"), &rows).map_err(data_err)?;
    write_file(&b.out.join("trajectory.csv"), trajectory_csv(&runs))?;
    let table = render_matrix(&results);
    write_file(&b.out.join("table.txt"), &table)?;
    print!("{table}");
    Ok(())
}

fn cmd_ablate(b: &BenchArgs) -> Result<(), CliError> {
    let settings = b.settings.resolve();
    let (dir, inputs) = prepare(&b.source, &b.target, (b.split_seed, b.target_split_seed), &settings)?;
    create_dir(&b.out)?;
    write_json(
        &b.out.join("config.json"),
        &bench_config(b, "ablate", &settings, inputs, json!({})),
    )?;
    let cells = with_workers(b.parallel, || {
        run_ablation(std::slice::from_ref(&dir), &b.seeds, &settings)
    })?
    .map_err(stage("ablation"))?;
    write_jsonl(b.out.join("ablation.jsonl"), &cells).map_err(data_err)?;
    let table = render_ablation(&cells);
    write_file(&b.out.join("table.txt"), &table)?;
    print!("{table}");
    Ok(())
}

fn cmd_sweep(a: &SweepArgs) -> Result<(), CliError> {
    let b = &a.bench;
    let settings = b.settings.resolve();
    if a.fractions.is_empty()
        || a.fractions.iter().any(|f| !(0.0..=1.0).contains(f))
        || a.fractions.windows(2).any(|w| w[0] > w[1])
    {
        return Err(CliError::Usage(format!(
            "--fractions must be sorted values in [0, 1], got {:?}",
            a.fractions
        )));
    }
    let (dir, inputs) = prepare(&b.source, &b.target, (b.split_seed, b.target_split_seed), &settings)?;
    create_dir(&b.out)?;
    write_json(
        &b.out.join("config.json"),
        &bench_config(b, "sweep", &settings, inputs, json!({"fractions": a.fractions})),
    )?;
    let rows = with_workers(b.parallel, || {
        run_semi_supervised_sweep(&a.fractions, std::slice::from_ref(&dir), &b.seeds, &settings)
    })?
    .map_err(stage("sweep"))?;
    write_jsonl(b.out.join("sweep.jsonl"), &rows).map_err(data_err)?;
    let table = render_sweep(&rows);
    write_file(&b.out.join("table.txt"), &table)?;
    print!("{table}");
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Stats { data } => cmd_stats(data),
        Command::Transfer(a) => cmd_transfer(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Matrix(a) => cmd_matrix(a),
        Command::Ablate(a) => cmd_ablate(a),
        Command::Sweep(a) => cmd_sweep(a),
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
