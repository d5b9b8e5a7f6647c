//! Metrics, the experiment matrix, the freezing × pretraining ablation and
//! the gold-fraction sweep.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{DatasetSplit, Label};
use crate::model::{
    init_params, predict, Classifier, ClassifierParams, Dims, FreezePolicy, ModelError, Prediction, TrainExample,
};
use crate::seeds::derive;
use crate::selftrain::{
    encode_labeled, fit_teacher, pretrain_pool, run_transfer, semi_supervised_mix, IterationRecord, LabeledSeq,
    SelfTrainError, SourceData, TargetData, TransferConfig,
};
use crate::tokenizer::{train_subwords, EncodeConfig, SepStyle, TokenSequence, TokenizerError, Vocabulary};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{preds} predictions for {gold} gold labels")]
    LengthMismatch { preds: usize, gold: usize },
    #[error("nothing to evaluate")]
    Empty,
    #[error("need at least {need} seeds, got {got}")]
    TooFewSeeds { need: usize, got: usize },
    #[error("no directions given")]
    NoDirections,
    #[error("fractions must be sorted and inside [0, 1]: {0:?}")]
    BadFractions(Vec<f64>),
    #[error(transparent)]
    SelfTrain(#[from] SelfTrainError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Tokenizer(#[from] TokenizerError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub const MIN_SEEDS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub per_class: BTreeMap<Label, ClassScores>,
    pub n: usize,
    pub seed: u64,
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

pub fn compute_metrics(preds: &[Prediction], gold: &[Label], seed: u64) -> Result<Metrics, EvalError> {
    if preds.len() != gold.len() {
        return Err(EvalError::LengthMismatch {
            preds: preds.len(),
            gold: gold.len(),
        });
    }
    if gold.is_empty() {
        return Err(EvalError::Empty);
    }
    // confusion[gold][pred]
    let mut confusion = [[0usize; 2]; 2];
    for (p, g) in preds.iter().zip(gold) {
        confusion[g.index()][p.label.index()] += 1;
    }
    let correct = confusion[0][0] + confusion[1][1];
    let per_class = Label::ALL
        .iter()
        .map(|&c| {
            let i = c.index();
            let tp = confusion[i][i];
            let predicted = confusion[0][i] + confusion[1][i];
            let actual = confusion[i][0] + confusion[i][1];
            let precision = ratio(tp, predicted);
            let recall = ratio(tp, actual);
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            (
                c,
                ClassScores {
                    precision,
                    recall,
                    f1,
                    support: actual,
                },
            )
        })
        .collect();
    Ok(Metrics {
        accuracy: ratio(correct, gold.len()),
        per_class,
        n: gold.len(),
        seed,
    })
}

pub fn evaluate<M: Classifier>(model: &M, data: &[LabeledSeq], seed: u64) -> Result<Metrics, EvalError> {
    let seqs: Vec<&TokenSequence> = data.iter().map(|x| &x.seq).collect();
    let gold: Vec<Label> = data.iter().map(|x| x.label).collect();
    compute_metrics(&model.predict(&seqs)?, &gold, seed)
}

/// Everything but the data needed to run one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSettings {
    pub vocab_size: usize,
    pub max_seq_len: usize,
    pub sep_style: SepStyle,
    pub hidden: usize,
    pub layers: usize,
    pub transfer: TransferConfig,
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        ExperimentSettings {
            vocab_size: 2000,
            max_seq_len: 384,
            sep_style: SepStyle::Single,
            hidden: 32,
            layers: 4,
            transfer: TransferConfig::default(),
        }
    }
}

impl ExperimentSettings {
    pub fn encode_config(&self) -> Result<EncodeConfig, EvalError> {
        Ok(EncodeConfig::new(self.max_seq_len, self.sep_style)?)
    }
}

/// A transfer direction with its subword vocabulary trained on both
/// training splits, and every split encoded.
#[derive(Debug, Clone)]
pub struct PreparedDirection {
    pub source_name: String,
    pub target_name: String,
    pub vocab: Vocabulary,
    pub source: SourceData,
    pub source_test: Vec<LabeledSeq>,
    /// Target training threads with their labels; only the sweep and the
    /// target-supervised baselines read the labels.
    pub target_train: Vec<LabeledSeq>,
    pub target_validation: Vec<LabeledSeq>,
    pub target_test: Vec<LabeledSeq>,
}

impl PreparedDirection {
    pub fn new(
        source_name: &str,
        target_name: &str,
        source: &DatasetSplit,
        target: &DatasetSplit,
        settings: &ExperimentSettings,
    ) -> Result<Self, EvalError> {
        let vocab = train_subwords(&[&source.train, &target.train], settings.vocab_size)?;
        Self::with_vocab(source_name, target_name, source, target, vocab, settings)
    }

    pub fn with_vocab(
        source_name: &str,
        target_name: &str,
        source: &DatasetSplit,
        target: &DatasetSplit,
        vocab: Vocabulary,
        settings: &ExperimentSettings,
    ) -> Result<Self, EvalError> {
        let enc = settings.encode_config()?;
        Ok(PreparedDirection {
            source_name: source_name.into(),
            target_name: target_name.into(),
            source: SourceData {
                train: encode_labeled(&source.train, &vocab, enc)?,
                validation: encode_labeled(&source.validation, &vocab, enc)?,
            },
            source_test: encode_labeled(&source.test, &vocab, enc)?,
            target_train: encode_labeled(&target.train, &vocab, enc)?,
            target_validation: encode_labeled(&target.validation, &vocab, enc)?,
            target_test: encode_labeled(&target.test, &vocab, enc)?,
            vocab,
        })
    }

    /// The zero-shot view of the target: training labels dropped.
    pub fn zero_shot_target(&self) -> TargetData {
        semi_supervised_mix(0.0, &self.target_train, &self.target_validation, 0).expect("fraction 0 is valid")
    }

    pub fn dims(&self, settings: &ExperimentSettings) -> Dims {
        Dims {
            vocab: self.vocab.len(),
            hidden: settings.hidden,
            layers: settings.layers,
        }
    }

    pub fn direction(&self) -> (String, String) {
        (self.source_name.clone(), self.target_name.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    ZeroShot,
    #[serde(rename = "ST")]
    St,
    #[serde(rename = "ST_GL")]
    StGl,
    SupervisedSource,
    SupervisedTarget,
    SupervisedBoth,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::ZeroShot,
        Variant::St,
        Variant::StGl,
        Variant::SupervisedSource,
        Variant::SupervisedTarget,
        Variant::SupervisedBoth,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::ZeroShot => "ZeroShot",
            Variant::St => "ST",
            Variant::StGl => "ST_GL",
            Variant::SupervisedSource => "SupervisedSource",
            Variant::SupervisedTarget => "SupervisedTarget",
            Variant::SupervisedBoth => "SupervisedBoth",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown variant {s:?}"))
    }
}

/// One row of an iteration trajectory with test accuracies added by the
/// harness (never seen by training or model selection).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    #[serde(flatten)]
    pub record: IterationRecord,
    pub target_test_accuracy: f64,
    pub source_test_accuracy: f64,
}

/// The outcome of one (direction, variant, seed) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub direction: (String, String),
    pub variant: Variant,
    pub seed: u64,
    pub source_metrics: Option<Metrics>,
    pub target_metrics: Option<Metrics>,
    pub best_iteration: Option<usize>,
    pub trajectory: Vec<TrajectoryPoint>,
    pub error: Option<String>,
}

fn transfer_config(settings: &ExperimentSettings, seed: u64) -> TransferConfig {
    TransferConfig {
        seed: derive(seed, "transfer", 0),
        ..settings.transfer
    }
}

fn initial_model(
    dir: &PreparedDirection,
    settings: &ExperimentSettings,
    seed: u64,
) -> Result<ClassifierParams, EvalError> {
    Ok(init_params(dir.dims(settings), derive(seed, "init", 0))?)
}

/// Pretraining (when configured) then fine-tuning of all parameters on
/// `data`.
fn supervised(
    init: &ClassifierParams,
    data: &[&LabeledSeq],
    pretrain_text: &[&TokenSequence],
    cfg: &TransferConfig,
) -> Result<ClassifierParams, EvalError> {
    let base = if cfg.adaptive_pretrain {
        let pcfg = crate::model::TrainConfig {
            seed: derive(cfg.seed, "pretrain", 0),
            freeze: FreezePolicy::None,
            ..cfg.pretrain
        };
        init.pretrain(pretrain_text, &pcfg, cfg.mask_prob)?
    } else {
        init.clone()
    };
    let examples: Vec<TrainExample> = data
        .iter()
        .map(|x| TrainExample {
            seq: &x.seq,
            label: x.label,
            weight: 1.0,
        })
        .collect();
    let tcfg = crate::model::TrainConfig {
        seed: derive(cfg.seed, "supervised", 0),
        freeze: FreezePolicy::None,
        ..cfg.train
    };
    Ok(base.fine_tune(&examples, &tcfg)?)
}

fn accuracy_on(model: &ClassifierParams, data: &[LabeledSeq]) -> Result<f64, EvalError> {
    Ok(evaluate(model, data, 0)?.accuracy)
}

/// Transfer with test accuracies attached to every trajectory row.
fn traced_transfer(
    dir: &PreparedDirection,
    init: &ClassifierParams,
    target: &TargetData,
    cfg: &TransferConfig,
) -> Result<(ClassifierParams, usize, Vec<TrajectoryPoint>), EvalError> {
    let mut points = Vec::new();
    let mut failure = None;
    let mut observer = |r: &IterationRecord, m: &ClassifierParams| {
        if failure.is_some() {
            return;
        }
        match (accuracy_on(m, &dir.target_test), accuracy_on(m, &dir.source_test)) {
            (Ok(t), Ok(s)) => points.push(TrajectoryPoint {
                record: r.clone(),
                target_test_accuracy: t,
                source_test_accuracy: s,
            }),
            (Err(e), _) | (_, Err(e)) => failure = Some(e),
        }
    };
    let out = run_transfer(init, &dir.source, target, cfg, &mut observer)?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok((out.best, out.best_iteration, points))
}

fn try_run(
    dir: &PreparedDirection,
    variant: Variant,
    seed: u64,
    settings: &ExperimentSettings,
) -> Result<RunRecord, EvalError> {
    let mut cfg = transfer_config(settings, seed);
    let init = initial_model(dir, settings, seed)?;
    let target = dir.zero_shot_target();
    let mut best_iteration = None;
    let mut trajectory = Vec::new();
    let model = match variant {
        Variant::ZeroShot => {
            let pool = pretrain_pool(&dir.source, &target);
            fit_teacher(&init, &dir.source.train, &pool, &cfg)?
        }
        Variant::St | Variant::StGl => {
            cfg.use_gold_labels = variant == Variant::StGl;
            let (m, best, points) = traced_transfer(dir, &init, &target, &cfg)?;
            best_iteration = Some(best);
            trajectory = points;
            m
        }
        Variant::SupervisedSource | Variant::SupervisedTarget | Variant::SupervisedBoth => {
            let pool = pretrain_pool(&dir.source, &target);
            let mut data: Vec<&LabeledSeq> = Vec::new();
            if variant != Variant::SupervisedTarget {
                data.extend(&dir.source.train);
            }
            if variant != Variant::SupervisedSource {
                data.extend(&dir.target_train);
            }
            supervised(&init, &data, &pool, &cfg)?
        }
    };
    Ok(RunRecord {
        direction: dir.direction(),
        variant,
        seed,
        source_metrics: Some(evaluate(&model, &dir.source_test, seed)?),
        target_metrics: Some(evaluate(&model, &dir.target_test, seed)?),
        best_iteration,
        trajectory,
        error: None,
    })
}

fn failed(dir: &PreparedDirection, variant: Variant, seed: u64, e: EvalError) -> RunRecord {
    RunRecord {
        direction: dir.direction(),
        variant,
        seed,
        source_metrics: None,
        target_metrics: None,
        best_iteration: None,
        trajectory: Vec::new(),
        error: Some(e.to_string()),
    }
}

/// Runs one variant; failures come back as a record carrying the error.
pub fn run_variant(dir: &PreparedDirection, variant: Variant, seed: u64, settings: &ExperimentSettings) -> RunRecord {
    try_run(dir, variant, seed, settings).unwrap_or_else(|e| failed(dir, variant, seed, e))
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Option<Summary> {
        if xs.is_empty() {
            return None;
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        // shifted by the first value so identical inputs give exactly 0
        let d: Vec<f64> = xs.iter().map(|x| x - xs[0]).collect();
        let dm = d.iter().sum::<f64>() / n;
        let var = (d.iter().map(|x| (x - dm) * (x - dm)).sum::<f64>() / n).max(0.0);
        Some(Summary {
            mean,
            std: var.sqrt(),
            n: xs.len(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub direction: (String, String),
    pub variant: Variant,
    pub seeds: Vec<u64>,
    pub source_accuracy: Option<Summary>,
    pub target_accuracy: Option<Summary>,
    pub source_f1: BTreeMap<Label, Summary>,
    pub target_f1: BTreeMap<Label, Summary>,
    /// Seeds whose run failed; their rows carry the error.
    pub failed_seeds: Vec<u64>,
    pub runs: Vec<RunRecord>,
}

fn aggregate(runs: Vec<RunRecord>) -> ExperimentResult {
    let pick = |f: &dyn Fn(&RunRecord) -> Option<f64>| -> Vec<f64> { runs.iter().filter_map(f).collect() };
    let f1 = |side: fn(&RunRecord) -> Option<&Metrics>| -> BTreeMap<Label, Summary> {
        Label::ALL
            .iter()
            .filter_map(|&c| {
                let xs: Vec<f64> = runs
                    .iter()
                    .filter_map(|r| side(r).map(|m| m.per_class[&c].f1))
                    .collect();
                Summary::of(&xs).map(|s| (c, s))
            })
            .collect()
    };
    ExperimentResult {
        direction: runs[0].direction.clone(),
        variant: runs[0].variant,
        seeds: runs.iter().map(|r| r.seed).collect(),
        source_accuracy: Summary::of(&pick(&|r| r.source_metrics.as_ref().map(|m| m.accuracy))),
        target_accuracy: Summary::of(&pick(&|r| r.target_metrics.as_ref().map(|m| m.accuracy))),
        source_f1: f1(|r| r.source_metrics.as_ref()),
        target_f1: f1(|r| r.target_metrics.as_ref()),
        failed_seeds: runs.iter().filter(|r| r.error.is_some()).map(|r| r.seed).collect(),
        runs,
    }
}

fn check_inputs(dirs: &[PreparedDirection], seeds: &[u64]) -> Result<(), EvalError> {
    if dirs.is_empty() {
        return Err(EvalError::NoDirections);
    }
    if seeds.len() < MIN_SEEDS {
        return Err(EvalError::TooFewSeeds {
            need: MIN_SEEDS,
            got: seeds.len(),
        });
    }
    Ok(())
}

/// Runs every (direction, variant, seed) concurrently and aggregates one row
/// per (direction, variant), in input order.
pub fn run_matrix(
    dirs: &[PreparedDirection],
    variants: &[Variant],
    seeds: &[u64],
    settings: &ExperimentSettings,
) -> Result<Vec<ExperimentResult>, EvalError> {
    check_inputs(dirs, seeds)?;
    let jobs: Vec<(usize, Variant, u64)> = (0..dirs.len())
        .flat_map(|d| {
            variants
                .iter()
                .flat_map(move |&v| seeds.iter().map(move |&s| (d, v, s)))
        })
        .collect();
    let runs: Vec<RunRecord> = jobs
        .par_iter()
        .map(|&(d, v, s)| run_variant(&dirs[d], v, s, settings))
        .collect();
    Ok(runs.chunks(seeds.len()).map(|c| aggregate(c.to_vec())).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationCell {
    pub direction: (String, String),
    pub freeze: FreezePolicy,
    pub adaptive_pretrain: bool,
    pub seeds: Vec<u64>,
    /// Zero-shot target test accuracy per seed; `None` for a failed run.
    pub accuracies: Vec<Option<f64>>,
    pub errors: Vec<String>,
    pub summary: Option<Summary>,
}

/// The three freezing options of the ablation for a model of `layers` layers.
pub fn ablation_freezes(layers: usize) -> [FreezePolicy; 3] {
    [
        FreezePolicy::None,
        FreezePolicy::EmbeddingsOnly,
        FreezePolicy::first_layers_default(layers),
    ]
}

fn zero_shot_accuracy(
    dir: &PreparedDirection,
    freeze: FreezePolicy,
    pretrain: bool,
    seed: u64,
    settings: &ExperimentSettings,
) -> Result<f64, EvalError> {
    let cfg = TransferConfig {
        adaptive_pretrain: pretrain,
        teacher_freeze: freeze,
        ..transfer_config(settings, seed)
    };
    let init = initial_model(dir, settings, seed)?;
    let target = dir.zero_shot_target();
    let pool = pretrain_pool(&dir.source, &target);
    let teacher = fit_teacher(&init, &dir.source.train, &pool, &cfg)?;
    accuracy_on(&teacher, &dir.target_test)
}

/// Zero-shot target accuracy of the teacher for 3 freezing options × pretraining
/// off/on: six cells per direction, pretraining-off cells first.
pub fn run_ablation(
    dirs: &[PreparedDirection],
    seeds: &[u64],
    settings: &ExperimentSettings,
) -> Result<Vec<AblationCell>, EvalError> {
    check_inputs(dirs, seeds)?;
    let mut cells = Vec::new();
    for d in 0..dirs.len() {
        for pretrain in [false, true] {
            for freeze in ablation_freezes(settings.layers) {
                cells.push((d, freeze, pretrain));
            }
        }
    }
    let jobs: Vec<(usize, u64)> = (0..cells.len())
        .flat_map(|c| seeds.iter().map(move |&s| (c, s)))
        .collect();
    let results: Vec<Result<f64, EvalError>> = jobs
        .par_iter()
        .map(|&(c, s)| {
            let (d, freeze, pretrain) = cells[c];
            zero_shot_accuracy(&dirs[d], freeze, pretrain, s, settings)
        })
        .collect();
    Ok(cells
        .iter()
        .zip(results.chunks(seeds.len()))
        .map(|(&(d, freeze, pretrain), rs)| {
            let accuracies: Vec<Option<f64>> = rs.iter().map(|r| r.as_ref().ok().copied()).collect();
            let ok: Vec<f64> = accuracies.iter().flatten().copied().collect();
            AblationCell {
                direction: dirs[d].direction(),
                freeze,
                adaptive_pretrain: pretrain,
                seeds: seeds.to_vec(),
                errors: rs
                    .iter()
                    .filter_map(|r| r.as_ref().err().map(|e| e.to_string()))
                    .collect(),
                summary: if ok.len() == accuracies.len() {
                    Summary::of(&ok)
                } else {
                    None
                },
                accuracies,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub direction: (String, String),
    pub fraction: f64,
    pub seeds: Vec<u64>,
    /// Self-training with the revealed target labels as gold.
    pub zero_shot: Vec<Option<f64>>,
    /// Supervised on source gold plus the same revealed target labels.
    pub supervised: Vec<Option<f64>>,
    pub zero_shot_summary: Option<Summary>,
    pub supervised_summary: Option<Summary>,
    pub errors: Vec<String>,
}

fn sweep_pair(
    dir: &PreparedDirection,
    fraction: f64,
    seed: u64,
    settings: &ExperimentSettings,
) -> Result<(f64, f64), EvalError> {
    let cfg = transfer_config(settings, seed);
    let init = initial_model(dir, settings, seed)?;
    let target = semi_supervised_mix(
        fraction,
        &dir.target_train,
        &dir.target_validation,
        derive(seed, "sweep", 0),
    )?;
    let (framework, _, _) = traced_transfer(dir, &init, &target, &cfg)?;
    let pool = pretrain_pool(&dir.source, &target);
    let data: Vec<&LabeledSeq> = dir.source.train.iter().chain(&target.gold).collect();
    let baseline = supervised(&init, &data, &pool, &cfg)?;
    Ok((
        accuracy_on(&framework, &dir.target_test)?,
        accuracy_on(&baseline, &dir.target_test)?,
    ))
}

/// For each gold fraction: the self-training framework and the supervised
/// baseline given the same revealed target labels, on target test.
pub fn run_semi_supervised_sweep(
    fractions: &[f64],
    dirs: &[PreparedDirection],
    seeds: &[u64],
    settings: &ExperimentSettings,
) -> Result<Vec<SweepRow>, EvalError> {
    check_inputs(dirs, seeds)?;
    if fractions.is_empty()
        || fractions.iter().any(|f| !(0.0..=1.0).contains(f))
        || fractions.windows(2).any(|w| w[0] > w[1])
    {
        return Err(EvalError::BadFractions(fractions.to_vec()));
    }
    let rows: Vec<(usize, f64)> = (0..dirs.len())
        .flat_map(|d| fractions.iter().map(move |&f| (d, f)))
        .collect();
    let jobs: Vec<(usize, u64)> = (0..rows.len())
        .flat_map(|r| seeds.iter().map(move |&s| (r, s)))
        .collect();
    let results: Vec<Result<(f64, f64), EvalError>> = jobs
        .par_iter()
        .map(|&(r, s)| {
            let (d, f) = rows[r];
            sweep_pair(&dirs[d], f, s, settings)
        })
        .collect();
    Ok(rows
        .iter()
        .zip(results.chunks(seeds.len()))
        .map(|(&(d, fraction), rs)| {
            let zero_shot: Vec<Option<f64>> = rs.iter().map(|r| r.as_ref().ok().map(|x| x.0)).collect();
            let supervised: Vec<Option<f64>> = rs.iter().map(|r| r.as_ref().ok().map(|x| x.1)).collect();
            let all = |xs: &[Option<f64>]| -> Option<Summary> {
                xs.iter()
                    .copied()
                    .collect::<Option<Vec<f64>>>()
                    .and_then(|v| Summary::of(&v))
            };
            SweepRow {
                direction: dirs[d].direction(),
                fraction,
                seeds: seeds.to_vec(),
                zero_shot_summary: all(&zero_shot),
                supervised_summary: all(&supervised),
                zero_shot,
                supervised,
                errors: rs
                    .iter()
                    .filter_map(|r| r.as_ref().err().map(|e| e.to_string()))
                    .collect(),
            }
        })
        .collect())
}

/// Predictions of a model on encoded data; kept here so callers need not
/// import the model module.
pub fn predictions(model: &ClassifierParams, data: &[LabeledSeq]) -> Result<Vec<Prediction>, EvalError> {
    let seqs: Vec<&TokenSequence> = data.iter().map(|x| &x.seq).collect();
    Ok(predict(model, &seqs)?)
}

/// One JSON object per line.
pub fn write_jsonl<T: Serialize>(path: impl AsRef<Path>, rows: &[T]) -> Result<(), EvalError> {
    let mut out = Vec::new();
    for r in rows {
        serde_json::to_writer(&mut out, r).map_err(std::io::Error::other)?;
        out.push(b'\n');
    }
    fs::File::create(path)?.write_all(&out)?;
    Ok(())
}

fn pct(s: &Option<Summary>) -> String {
    match s {
        Some(s) => format!("{:.1} ± {:.1}", 100.0 * s.mean, 100.0 * s.std),
        None => "failed".into(),
    }
}

/// Matrix rows as a plain-text table (accuracy in %, mean ± std).
pub fn render_matrix(results: &[ExperimentResult]) -> String {
    let mut s = format!(
        "{:<22} {:<18} {:>14} {:>14}  seeds\n",
        "direction", "variant", "source", "target"
    );
    for r in results {
        let seeds: Vec<String> = r.seeds.iter().map(u64::to_string).collect();
        let _ = writeln!(
            s,
            "{:<22} {:<18} {:>14} {:>14}  {}{}",
            format!("{}->{}", r.direction.0, r.direction.1),
            r.variant.name(),
            pct(&r.source_accuracy),
            pct(&r.target_accuracy),
            seeds.join(","),
            if r.failed_seeds.is_empty() {
                String::new()
            } else {
                format!("  FAILED {:?}", r.failed_seeds)
            }
        );
    }
    s
}

pub fn render_ablation(cells: &[AblationCell]) -> String {
    let mut s = format!(
        "{:<22} {:<8} {:<12} {:>14}\n",
        "direction", "pretrain", "freeze", "target"
    );
    for c in cells {
        let _ = writeln!(
            s,
            "{:<22} {:<8} {:<12} {:>14}",
            format!("{}->{}", c.direction.0, c.direction.1),
            if c.adaptive_pretrain { "Y" } else { "N" },
            c.freeze.label(),
            pct(&c.summary)
        );
    }
    s
}

pub fn render_sweep(rows: &[SweepRow]) -> String {
    let mut s = format!(
        "{:<22} {:>8} {:>14} {:>14}\n",
        "direction", "% gold", "supervised", "zero-shot"
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{:<22} {:>8.0} {:>14} {:>14}",
            format!("{}->{}", r.direction.0, r.direction.1),
            100.0 * r.fraction,
            pct(&r.supervised_summary),
            pct(&r.zero_shot_summary)
        );
    }
    s
}

/// Per-iteration trajectories of all runs as CSV.
pub fn trajectory_csv(runs: &[RunRecord]) -> String {
    let mut s = String::from(
        "source,target,variant,seed,iteration,threshold,before_filter,after_filter,after_balance,degenerate,target_val_accuracy,source_val_accuracy,target_test_accuracy,source_test_accuracy\n",
    );
    for run in runs {
        for p in &run.trajectory {
            let r = &p.record;
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                run.direction.0,
                run.direction.1,
                run.variant.name(),
                run.seed,
                r.iteration,
                r.threshold,
                r.silver_count_before_filter,
                r.after_filter,
                r.after_balance,
                r.degenerate,
                r.target_val_accuracy,
                r.source_val_accuracy.map(|x| x.to_string()).unwrap_or_default(),
                p.target_test_accuracy,
                p.source_test_accuracy
            );
        }
    }
    s
}
