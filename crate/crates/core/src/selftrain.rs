//! Teacher fitting, silver labelling, confidence filtering, class balancing
//! and the iterative teacher → student loop.

use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Label, Thread};
use crate::model::{accuracy, Classifier, FreezePolicy, ModelError, Prediction, TrainConfig, TrainExample};
use crate::seeds::derive;
use crate::tokenizer::{encode_thread, EncodeConfig, TokenSequence, Vocabulary};

#[derive(Debug, Error)]
pub enum SelfTrainError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("thread {0} has no gold label")]
    MissingLabel(String),
    #[error("invalid transfer config: {0}")]
    InvalidConfig(String),
    #[error("no unlabelled target threads")]
    NoTargetData,
    #[error("no labelled source threads")]
    NoSourceData,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferConfig {
    /// Minimum max-class probability for a silver label.
    pub p: f64,
    pub max_iterations: usize,
    /// Mix source gold into every student round.
    pub use_gold_labels: bool,
    /// Freezing during the first teacher fine-tune; embeddings only by
    /// default, `None` turns freezing off.
    pub teacher_freeze: FreezePolicy,
    /// Masked-token pretraining on source and target text before the teacher.
    pub adaptive_pretrain: bool,
    pub mask_prob: f64,
    pub pretrain: TrainConfig,
    pub train: TrainConfig,
    /// Loss weight of source gold examples relative to silver ones.
    pub gold_weight: f64,
    /// Lower `p` by 0.01 after each degenerate iteration.
    pub p_decay: bool,
    pub seed: u64,
}

impl Default for TransferConfig {
    fn default() -> Self {
        TransferConfig {
            p: 0.95,
            max_iterations: 10,
            use_gold_labels: false,
            teacher_freeze: FreezePolicy::EmbeddingsOnly,
            adaptive_pretrain: true,
            mask_prob: 0.15,
            pretrain: TrainConfig::pretraining(),
            train: TrainConfig::default(),
            gold_weight: 1.0,
            p_decay: false,
            seed: 0,
        }
    }
}

impl TransferConfig {
    pub fn validate(&self) -> Result<(), SelfTrainError> {
        let bad = |m: String| Err(SelfTrainError::InvalidConfig(m));
        if !(self.p > 0.5 && self.p < 1.0) {
            return bad(format!("p = {} must lie in (0.5, 1)", self.p));
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be at least 1".into());
        }
        if !(self.mask_prob > 0.0 && self.mask_prob < 1.0) {
            return bad(format!("mask_prob = {} must lie in (0, 1)", self.mask_prob));
        }
        if !(self.gold_weight > 0.0 && self.gold_weight.is_finite()) {
            return bad(format!("gold_weight = {} must be positive", self.gold_weight));
        }
        Ok(())
    }

    pub fn freeze_initial_teacher(&self) -> bool {
        self.teacher_freeze != FreezePolicy::None
    }
}

/// An encoded thread with its gold label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSeq {
    pub id: String,
    pub seq: TokenSequence,
    pub label: Label,
}

/// An encoded thread with no label attached. Built from threads by dropping
/// whatever label they carry.
#[derive(Debug, Clone, PartialEq)]
pub struct UnlabeledSeq {
    pub id: String,
    pub seq: TokenSequence,
}

pub fn encode_labeled(
    threads: &[Thread],
    vocab: &Vocabulary,
    enc: EncodeConfig,
) -> Result<Vec<LabeledSeq>, SelfTrainError> {
    threads
        .iter()
        .map(|t| {
            let label = t.label.ok_or_else(|| SelfTrainError::MissingLabel(t.id.clone()))?;
            Ok(LabeledSeq {
                id: t.id.clone(),
                seq: encode_thread(t, vocab, enc),
                label,
            })
        })
        .collect()
}

pub fn encode_unlabeled(threads: &[Thread], vocab: &Vocabulary, enc: EncodeConfig) -> Vec<UnlabeledSeq> {
    threads
        .iter()
        .map(|t| UnlabeledSeq {
            id: t.id.clone(),
            seq: encode_thread(t, vocab, enc),
        })
        .collect()
}

#[derive(Debug, Clone, Default)]
pub struct SourceData {
    pub train: Vec<LabeledSeq>,
    pub validation: Vec<LabeledSeq>,
}

/// What the loop may see of the target language: unlabelled training
/// threads, optionally some revealed gold ones, and the validation set used
/// only for model selection.
#[derive(Debug, Clone, Default)]
pub struct TargetData {
    pub unlabeled: Vec<UnlabeledSeq>,
    pub gold: Vec<LabeledSeq>,
    pub validation: Vec<LabeledSeq>,
}

impl TargetData {
    /// Zero-shot view: every training label is dropped.
    pub fn zero_shot(
        train: &[Thread],
        validation: &[Thread],
        vocab: &Vocabulary,
        enc: EncodeConfig,
    ) -> Result<Self, SelfTrainError> {
        Ok(TargetData {
            unlabeled: encode_unlabeled(train, vocab, enc),
            gold: Vec::new(),
            validation: encode_labeled(validation, vocab, enc)?,
        })
    }
}

/// Reveals the gold labels of a seeded `fraction` of `train`; the rest stay
/// unlabelled. Revealed sets are nested: for one seed, a larger fraction
/// reveals a superset.
pub fn semi_supervised_mix(
    fraction: f64,
    train: &[LabeledSeq],
    validation: &[LabeledSeq],
    seed: u64,
) -> Result<TargetData, SelfTrainError> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(SelfTrainError::InvalidConfig(format!(
            "gold fraction {fraction} outside [0, 1]"
        )));
    }
    let mut order: Vec<usize> = (0..train.len()).collect();
    order.sort_by(|&a, &b| train[a].id.cmp(&train[b].id));
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive(seed, "reveal", 0)));
    let k = (fraction * train.len() as f64).round() as usize;
    let mut revealed = vec![false; train.len()];
    for &i in &order[..k] {
        revealed[i] = true;
    }
    let mut data = TargetData {
        validation: validation.to_vec(),
        ..TargetData::default()
    };
    for (ex, r) in train.iter().zip(revealed) {
        if r {
            data.gold.push(ex.clone());
        } else {
            data.unlabeled.push(UnlabeledSeq {
                id: ex.id.clone(),
                seq: ex.seq.clone(),
            });
        }
    }
    Ok(data)
}

/// A teacher prediction admitted as a training label.
#[derive(Debug, Clone, PartialEq)]
pub struct SilverExample {
    pub thread_id: String,
    pub seq: TokenSequence,
    pub label: Label,
    pub confidence: f64,
    pub iteration: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub threshold: f64,
    pub silver_count_before_filter: usize,
    pub after_filter: usize,
    pub after_balance: usize,
    pub target_gold_count: usize,
    pub source_gold_count: usize,
    /// No silver and no target gold: the student is the teacher unchanged.
    pub degenerate: bool,
    pub target_val_accuracy: f64,
    pub source_val_accuracy: Option<f64>,
    pub teacher_fingerprint: String,
    pub student_fingerprint: String,
}

/// Keeps predictions with confidence ≥ `p`, in input order.
pub fn filter_by_confidence(preds: &[(String, Prediction)], p: f64) -> Vec<(String, Prediction)> {
    preds.iter().filter(|(_, pr)| pr.confidence >= p).cloned().collect()
}

fn by_confidence_then_id(a: &(String, Prediction), b: &(String, Prediction)) -> Ordering {
    b.1.confidence
        .partial_cmp(&a.1.confidence)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.0.cmp(&b.0))
}

/// Keeps the `m = min(#rumour, #non-rumour)` most confident predictions of
/// each class, ties going to the smaller thread id. Output is in input order.
pub fn balance_classes(filtered: &[(String, Prediction)]) -> Vec<(String, Prediction)> {
    let mut per_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, (_, pr)) in filtered.iter().enumerate() {
        per_class[pr.label.index()].push(i);
    }
    let m = per_class[0].len().min(per_class[1].len());
    let mut keep = vec![false; filtered.len()];
    for idx in per_class.iter_mut() {
        idx.sort_by(|&a, &b| by_confidence_then_id(&filtered[a], &filtered[b]));
        for &i in &idx[..m] {
            keep[i] = true;
        }
    }
    filtered
        .iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .map(|(x, _)| x.clone())
        .collect()
}

fn with_seed(cfg: &TrainConfig, seed: u64, freeze: FreezePolicy) -> TrainConfig {
    TrainConfig { seed, freeze, ..*cfg }
}

/// Every piece of text the loop may pretrain on: source training threads and
/// all target training threads, labels ignored.
pub fn pretrain_pool<'a>(source: &'a SourceData, target: &'a TargetData) -> Vec<&'a TokenSequence> {
    let mut pool: Vec<&TokenSequence> = source.train.iter().map(|x| &x.seq).collect();
    pool.extend(target.unlabeled.iter().map(|x| &x.seq));
    pool.extend(target.gold.iter().map(|x| &x.seq));
    pool
}

/// Optional masked-token pretraining on `pretrain_text`, then supervised
/// fine-tuning on source gold under `cfg.teacher_freeze`.
pub fn fit_teacher<M: Classifier>(
    init: &M,
    source_train: &[LabeledSeq],
    pretrain_text: &[&TokenSequence],
    cfg: &TransferConfig,
) -> Result<M, SelfTrainError> {
    cfg.validate()?;
    if source_train.is_empty() {
        return Err(SelfTrainError::NoSourceData);
    }
    let base = if cfg.adaptive_pretrain && !pretrain_text.is_empty() {
        let pcfg = with_seed(&cfg.pretrain, derive(cfg.seed, "pretrain", 0), FreezePolicy::None);
        init.pretrain(pretrain_text, &pcfg, cfg.mask_prob)?
    } else {
        init.clone()
    };
    let data: Vec<TrainExample> = source_train
        .iter()
        .map(|x| TrainExample {
            seq: &x.seq,
            label: x.label,
            weight: 1.0,
        })
        .collect();
    let tcfg = with_seed(&cfg.train, derive(cfg.seed, "teacher", 0), cfg.teacher_freeze);
    Ok(base.fine_tune(&data, &tcfg)?)
}

fn val_accuracy<M: Classifier>(model: &M, data: &[LabeledSeq]) -> Result<Option<f64>, SelfTrainError> {
    if data.is_empty() {
        return Ok(None);
    }
    let pairs: Vec<(&TokenSequence, Label)> = data.iter().map(|x| (&x.seq, x.label)).collect();
    Ok(Some(accuracy(model, &pairs)?))
}

/// Silver labels the teacher would admit this round.
pub fn silver_labels<M: Classifier>(
    teacher: &M,
    unlabeled: &[UnlabeledSeq],
    p: f64,
    iteration: usize,
) -> Result<(usize, usize, Vec<SilverExample>), SelfTrainError> {
    let seqs: Vec<&TokenSequence> = unlabeled.iter().map(|x| &x.seq).collect();
    let preds = teacher.predict(&seqs)?;
    let tagged: Vec<(String, Prediction)> = unlabeled.iter().map(|x| x.id.clone()).zip(preds).collect();
    let filtered = filter_by_confidence(&tagged, p);
    let balanced = balance_classes(&filtered);
    let pos: std::collections::HashMap<&str, usize> =
        unlabeled.iter().enumerate().map(|(i, x)| (x.id.as_str(), i)).collect();
    let silver = balanced
        .into_iter()
        .map(|(id, pr)| SilverExample {
            seq: unlabeled[pos[id.as_str()]].seq.clone(),
            thread_id: id,
            label: pr.label,
            confidence: pr.confidence,
            iteration,
        })
        .collect();
    Ok((tagged.len(), filtered.len(), silver))
}

/// One predict → filter → balance → retrain round. The student starts as a
/// copy of the teacher and trains all parameters on silver labels, revealed
/// target gold and, with `use_gold_labels`, `source_gold`.
pub fn self_train_step<M: Classifier>(
    teacher: &M,
    target: &TargetData,
    source_gold: Option<&[LabeledSeq]>,
    cfg: &TransferConfig,
    iteration: usize,
    p: f64,
) -> Result<(M, IterationRecord, Vec<SilverExample>), SelfTrainError> {
    if target.unlabeled.is_empty() && target.gold.is_empty() {
        return Err(SelfTrainError::NoTargetData);
    }
    let (before, after_filter, silver) = silver_labels(teacher, &target.unlabeled, p, iteration)?;
    let source_gold = if cfg.use_gold_labels {
        source_gold.unwrap_or(&[])
    } else {
        &[]
    };
    let degenerate = silver.is_empty() && target.gold.is_empty();

    let student = if degenerate {
        teacher.clone()
    } else {
        let mut data: Vec<TrainExample> = Vec::with_capacity(silver.len() + target.gold.len() + source_gold.len());
        data.extend(silver.iter().map(|s| TrainExample {
            seq: &s.seq,
            label: s.label,
            weight: 1.0,
        }));
        data.extend(target.gold.iter().map(|g| TrainExample {
            seq: &g.seq,
            label: g.label,
            weight: 1.0,
        }));
        data.extend(source_gold.iter().map(|g| TrainExample {
            seq: &g.seq,
            label: g.label,
            weight: cfg.gold_weight,
        }));
        let tcfg = with_seed(
            &cfg.train,
            derive(cfg.seed, "student", iteration as u64),
            FreezePolicy::None,
        );
        teacher.fine_tune(&data, &tcfg)?
    };

    let record = IterationRecord {
        iteration,
        threshold: p,
        silver_count_before_filter: before,
        after_filter,
        after_balance: silver.len(),
        target_gold_count: target.gold.len(),
        source_gold_count: source_gold.len(),
        degenerate,
        target_val_accuracy: val_accuracy(&student, &target.validation)?.unwrap_or(f64::NAN),
        source_val_accuracy: None,
        teacher_fingerprint: teacher.fingerprint(),
        student_fingerprint: student.fingerprint(),
    };
    Ok((student, record, silver))
}

#[derive(Debug, Clone)]
pub struct TransferOutcome<M> {
    /// The model of the iteration with the best target validation accuracy
    /// (earliest on ties).
    pub best: M,
    pub best_iteration: usize,
    /// Iteration 0 (the teacher) followed by one record per round.
    pub trajectory: Vec<IterationRecord>,
}

/// Fits the teacher, then runs `max_iterations` self-training rounds with the
/// student replacing the teacher after each. `observer` sees every record and
/// the model it describes as soon as it exists.
pub fn run_transfer<M: Classifier>(
    init: &M,
    source: &SourceData,
    target: &TargetData,
    cfg: &TransferConfig,
    observer: &mut dyn FnMut(&IterationRecord, &M),
) -> Result<TransferOutcome<M>, SelfTrainError> {
    cfg.validate()?;
    let pool = pretrain_pool(source, target);
    let teacher = fit_teacher(init, &source.train, &pool, cfg)?;
    let fp = teacher.fingerprint();
    let first = IterationRecord {
        iteration: 0,
        threshold: cfg.p,
        silver_count_before_filter: 0,
        after_filter: 0,
        after_balance: 0,
        target_gold_count: 0,
        source_gold_count: 0,
        degenerate: false,
        target_val_accuracy: val_accuracy(&teacher, &target.validation)?.unwrap_or(f64::NAN),
        source_val_accuracy: val_accuracy(&teacher, &source.validation)?,
        teacher_fingerprint: fp.clone(),
        student_fingerprint: fp,
    };
    observer(&first, &teacher);

    let mut best = (first.target_val_accuracy, 0, teacher.clone());
    let mut trajectory = vec![first];
    let mut teacher = teacher;
    let mut p = cfg.p;
    for k in 1..=cfg.max_iterations {
        let (student, mut record, _) = self_train_step(&teacher, target, Some(&source.train), cfg, k, p)?;
        record.source_val_accuracy = val_accuracy(&student, &source.validation)?;
        observer(&record, &student);
        if record.target_val_accuracy > best.0 {
            best = (record.target_val_accuracy, k, student.clone());
        }
        if record.degenerate && cfg.p_decay {
            p = (p - 0.01).max(0.51);
        }
        trajectory.push(record);
        teacher = student;
    }
    Ok(TransferOutcome {
        best: best.2,
        best_iteration: best.1,
        trajectory,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pred(id: &str, label: Label, conf: f64) -> (String, Prediction) {
        let mut probs = [1.0 - conf, 1.0 - conf];
        probs[label.index()] = conf;
        (
            id.to_string(),
            Prediction {
                probs,
                label,
                confidence: conf,
            },
        )
    }

    #[test]
    fn filter_examples() {
        let xs = vec![
            pred("a", Label::Rumour, 0.97),
            pred("b", Label::NonRumour, 0.95),
            pred("c", Label::Rumour, 0.80),
        ];
        let f = filter_by_confidence(&xs, 0.95);
        assert_eq!(f.iter().map(|x| x.0.as_str()).collect::<Vec<_>>(), ["a", "b"]);
        assert_eq!(filter_by_confidence(&f, 0.95), f);
        let low = vec![pred("a", Label::Rumour, 0.9), pred("b", Label::NonRumour, 0.9)];
        assert!(filter_by_confidence(&low, 0.999).is_empty());
    }

    #[test]
    fn balance_examples() {
        let xs = vec![
            pred("r1", Label::Rumour, 0.99),
            pred("r2", Label::Rumour, 0.97),
            pred("r3", Label::Rumour, 0.96),
            pred("n1", Label::NonRumour, 0.98),
        ];
        let b = balance_classes(&xs);
        assert_eq!(b.iter().map(|x| x.0.as_str()).collect::<Vec<_>>(), ["r1", "n1"]);
        assert!(balance_classes(&xs[..3]).is_empty());
        let tie = vec![
            pred("z", Label::Rumour, 0.96),
            pred("a", Label::Rumour, 0.96),
            pred("n", Label::NonRumour, 0.97),
        ];
        assert_eq!(balance_classes(&tie)[0].0, "a");
    }

    fn labeled(n: usize) -> Vec<LabeledSeq> {
        (0..n)
            .map(|i| LabeledSeq {
                id: format!("t{i:03}"),
                seq: TokenSequence {
                    ids: vec![2, 3],
                    attention_len: 2,
                    segment_boundaries: vec![1],
                },
                label: Label::from_index(i % 2),
            })
            .collect()
    }

    #[test]
    fn semi_supervised_reveal_is_nested_and_bounded() {
        let train = labeled(50);
        let none = semi_supervised_mix(0.0, &train, &[], 3).unwrap();
        assert!(none.gold.is_empty());
        assert_eq!(none.unlabeled.len(), 50);
        let all = semi_supervised_mix(1.0, &train, &[], 3).unwrap();
        assert!(all.unlabeled.is_empty());
        assert_eq!(all.gold.len(), 50);
        let a = semi_supervised_mix(0.2, &train, &[], 3).unwrap();
        let b = semi_supervised_mix(0.6, &train, &[], 3).unwrap();
        assert_eq!((a.gold.len(), b.gold.len()), (10, 30));
        assert!(a.gold.iter().all(|g| b.gold.contains(g)));
        assert!(semi_supervised_mix(1.1, &train, &[], 3).is_err());
        assert!(semi_supervised_mix(-0.1, &train, &[], 3).is_err());
    }

    #[test]
    fn config_bounds() {
        let mut c = TransferConfig::default();
        assert!(c.validate().is_ok());
        c.p = 0.5;
        assert!(c.validate().is_err());
        c.p = 1.0;
        assert!(c.validate().is_err());
        c = TransferConfig {
            max_iterations: 0,
            ..TransferConfig::default()
        };
        assert!(c.validate().is_err());
    }
}
