use std::ops::Range;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ClassifierParams, FreezePolicy, ModelError, ParamGroup};
use crate::corpus::Label;
use crate::tokenizer::{mask_tokens, TokenSequence};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// Fine-tuning learning rates searched for pretrained transformer encoders.
/// They move a randomly initialised model of this size far too little, so
/// the default below is larger; see README.
pub const ENCODER_LEARNING_RATES: [f64; 3] = [1e-5, 2e-5, 5e-5];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub dropout: f64,
    pub seed: u64,
    pub freeze: FreezePolicy,
}

impl Default for TrainConfig {
    /// Fine-tuning defaults: batch 16, dropout 0.1, 4 epochs.
    fn default() -> Self {
        TrainConfig {
            learning_rate: 5e-3,
            epochs: 4,
            batch_size: 16,
            dropout: 0.1,
            seed: 0,
            freeze: FreezePolicy::None,
        }
    }
}

impl TrainConfig {
    /// Masked-token pretraining defaults (batch 8).
    pub fn pretraining() -> Self {
        TrainConfig {
            learning_rate: 7e-3,
            batch_size: 8,
            epochs: 3,
            ..TrainConfig::default()
        }
    }

    fn validate(&self) -> Result<(), ModelError> {
        if self.batch_size == 0
            || self.learning_rate.is_nan()
            || self.learning_rate <= 0.0
            || !(0.0..1.0).contains(&self.dropout)
        {
            return Err(ModelError::InvalidDims(format!(
                "bad training config: batch_size {}, learning_rate {}, dropout {}",
                self.batch_size, self.learning_rate, self.dropout
            )));
        }
        Ok(())
    }
}

/// One labelled example with a loss weight.
#[derive(Debug, Clone, Copy)]
pub struct TrainExample<'a> {
    pub seq: &'a TokenSequence,
    pub label: Label,
    pub weight: f64,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
    lr: f64,
}

impl Adam {
    fn new(n: usize, lr: f64) -> Adam {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            lr,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], trainable: &[Range<usize>]) {
        self.t += 1;
        let c1 = 1.0 - ADAM_BETA1.powi(self.t);
        let c2 = 1.0 - ADAM_BETA2.powi(self.t);
        for r in trainable {
            for i in r.clone() {
                let g = grad[i];
                self.m[i] = ADAM_BETA1 * self.m[i] + (1.0 - ADAM_BETA1) * g;
                self.v[i] = ADAM_BETA2 * self.v[i] + (1.0 - ADAM_BETA2) * g * g;
                let mhat = self.m[i] / c1;
                let vhat = self.v[i] / c2;
                params[i] -= self.lr * mhat / (vhat.sqrt() + ADAM_EPS);
            }
        }
    }
}

fn trainable_ranges(params: &ClassifierParams, freeze: FreezePolicy, include_head: bool) -> Vec<Range<usize>> {
    let layout = params.layout();
    layout
        .groups()
        .into_iter()
        .filter(|g| !freeze.is_frozen(*g))
        .filter(|g| include_head || !matches!(g, ParamGroup::HeadWeight | ParamGroup::HeadBias))
        .map(|g| layout.range(g))
        .collect()
}

/// Mini-batch Adam on the weighted classification loss. Parameters frozen by
/// `cfg.freeze` are left bit-identical.
pub fn train_weighted(
    params: &ClassifierParams,
    data: &[TrainExample<'_>],
    cfg: &TrainConfig,
) -> Result<ClassifierParams, ModelError> {
    if data.is_empty() {
        return Err(ModelError::EmptyData);
    }
    cfg.validate()?;
    cfg.freeze.validate(&params.dims())?;
    let mut p = params.clone();
    p.set_dropout(cfg.dropout);
    let trainable = trainable_ranges(&p, cfg.freeze, true);
    let mut adam = Adam::new(p.values.len(), cfg.learning_rate);
    let mut grad = vec![0.0; p.values.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for (batch, chunk) in order.chunks(cfg.batch_size).enumerate() {
            grad.fill(0.0);
            let scale = 1.0 / chunk.len() as f64;
            let examples: Vec<_> = chunk
                .iter()
                .map(|&i| {
                    (
                        data[i].seq,
                        data[i].label,
                        Some(rng.gen::<u64>()),
                        data[i].weight * scale,
                    )
                })
                .collect();
            let losses = p.batch_classification_backward(&examples, &mut grad)?;
            let loss: f64 = chunk.iter().zip(losses).map(|(&i, l)| data[i].weight * l).sum();
            if !loss.is_finite() {
                return Err(ModelError::NonFiniteLoss { epoch, batch });
            }
            adam.step(&mut p.values, &grad, &trainable);
            if !trainable
                .iter()
                .all(|r| p.values[r.clone()].iter().all(|v| v.is_finite()))
            {
                return Err(ModelError::NonFiniteParams { epoch, batch });
            }
        }
    }
    Ok(p)
}

/// Unweighted supervised fine-tuning.
pub fn train_supervised(
    params: &ClassifierParams,
    data: &[(TokenSequence, Label)],
    cfg: &TrainConfig,
) -> Result<ClassifierParams, ModelError> {
    let examples: Vec<TrainExample<'_>> = data
        .iter()
        .map(|(seq, label)| TrainExample {
            seq,
            label: *label,
            weight: 1.0,
        })
        .collect();
    train_weighted(params, &examples, cfg)
}

/// Masked-token training on unlabelled sequences. Masks are redrawn every
/// epoch; sequences that draw no mask are skipped. The classification head
/// is never updated.
pub fn adaptive_pretrain(
    params: &ClassifierParams,
    unlabeled: &[&TokenSequence],
    cfg: &TrainConfig,
    mask_prob: f64,
) -> Result<ClassifierParams, ModelError> {
    if unlabeled.is_empty() {
        return Err(ModelError::EmptyData);
    }
    cfg.validate()?;
    cfg.freeze.validate(&params.dims())?;
    let mut p = params.clone();
    let trainable = trainable_ranges(&p, cfg.freeze, false);
    let mut adam = Adam::new(p.values.len(), cfg.learning_rate);
    let mut grad = vec![0.0; p.values.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..unlabeled.len()).collect();

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for (batch, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let masked: Vec<_> = chunk
                .iter()
                .map(|&i| mask_tokens(unlabeled[i], mask_prob, rng.gen()))
                .collect::<Result<_, _>>()
                .map_err(|e| ModelError::InvalidDims(e.to_string()))?;
            let used: Vec<_> = masked.iter().filter(|m| !m.targets.is_empty()).collect();
            if used.is_empty() {
                continue;
            }
            grad.fill(0.0);
            let scale = 1.0 / used.len() as f64;
            let examples: Vec<_> = used.iter().map(|m| (&m.corrupted, m.targets.as_slice())).collect();
            let loss: f64 = p.batch_mlm_backward(&examples, scale, Some(&mut grad))?.iter().sum();
            if !loss.is_finite() {
                return Err(ModelError::NonFiniteLoss { epoch, batch });
            }
            adam.step(&mut p.values, &grad, &trainable);
            if !trainable
                .iter()
                .all(|r| p.values[r.clone()].iter().all(|v| v.is_finite()))
            {
                return Err(ModelError::NonFiniteParams { epoch, batch });
            }
        }
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{accuracy, init_params, loss_mlm, Dims};
    use crate::tokenizer::{CLS, PAD, SEP};

    fn seq(tokens: &[u32]) -> TokenSequence {
        let mut ids = vec![CLS];
        ids.extend_from_slice(tokens);
        ids.push(SEP);
        let n = ids.len();
        ids.resize(12, PAD);
        TokenSequence {
            ids,
            attention_len: n,
            segment_boundaries: vec![n - 1],
        }
    }

    /// Label is decided by whether token 5 or token 6 occurs; the rest is noise.
    fn toy_data(n: usize, seed: u64) -> Vec<(TokenSequence, Label)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let label = Label::from_index(i % 2);
                let marker = if label == Label::Rumour { 5 } else { 6 };
                let mut toks: Vec<u32> = (0..4).map(|_| rng.gen_range(7..10)).collect();
                toks.insert(rng.gen_range(0..5), marker);
                (seq(&toks), label)
            })
            .collect()
    }

    fn dims() -> Dims {
        Dims {
            vocab: 10,
            hidden: 8,
            layers: 2,
        }
    }

    #[test]
    fn separable_toy_data_is_learned() {
        let data = toy_data(64, 1);
        let p = init_params(dims(), 1).unwrap();
        let cfg = TrainConfig {
            epochs: 5,
            learning_rate: 0.05,
            ..TrainConfig::default()
        };
        let trained = train_supervised(&p, &data, &cfg).unwrap();
        let refs: Vec<_> = data.iter().map(|(s, l)| (s, *l)).collect();
        assert_eq!(accuracy(&trained, &refs).unwrap(), 1.0);
    }

    #[test]
    fn embeddings_frozen_bit_identical() {
        let data = toy_data(40, 2);
        let p = init_params(dims(), 2).unwrap();
        for freeze in [FreezePolicy::EmbeddingsOnly, FreezePolicy::FirstKLayers(1)] {
            let cfg = TrainConfig {
                epochs: 3,
                freeze,
                ..TrainConfig::default()
            };
            let trained = train_supervised(&p, &data, &cfg).unwrap();
            assert_eq!(trained.embeddings(), p.embeddings());
            assert_ne!(trained.values(), p.values());
            if let FreezePolicy::FirstKLayers(_) = freeze {
                assert_eq!(
                    trained.group(ParamGroup::LayerWeight(0)),
                    p.group(ParamGroup::LayerWeight(0))
                );
                assert_ne!(
                    trained.group(ParamGroup::LayerWeight(1)),
                    p.group(ParamGroup::LayerWeight(1))
                );
            }
        }
    }

    #[test]
    fn training_is_deterministic() {
        let data = toy_data(30, 3);
        let p = init_params(dims(), 3).unwrap();
        let cfg = TrainConfig {
            seed: 11,
            ..TrainConfig::default()
        };
        let a = train_supervised(&p, &data, &cfg).unwrap();
        let b = train_supervised(&p, &data, &cfg).unwrap();
        assert_eq!(a.values(), b.values());
        assert!(matches!(train_supervised(&p, &[], &cfg), Err(ModelError::EmptyData)));
    }

    #[test]
    fn nan_loss_names_batch() {
        let data = toy_data(8, 4);
        let mut p = init_params(dims(), 4).unwrap();
        let d = dims().hidden;
        p.values_mut()[CLS as usize * d] = f64::NAN;
        let err = train_supervised(&p, &data, &TrainConfig::default()).unwrap_err();
        assert!(matches!(err, ModelError::NonFiniteLoss { epoch: 0, batch: 0 }), "{err}");
    }

    #[test]
    fn pretraining_leaves_head_and_lowers_loss() {
        let data = toy_data(100, 5);
        let seqs: Vec<&TokenSequence> = data.iter().map(|(s, _)| s).collect();
        let p = init_params(dims(), 5).unwrap();
        let cfg = TrainConfig {
            learning_rate: 0.02,
            ..TrainConfig::pretraining()
        };
        let trained = adaptive_pretrain(&p, &seqs, &cfg, 0.15).unwrap();
        assert_eq!(trained.group(ParamGroup::HeadWeight), p.group(ParamGroup::HeadWeight));
        assert_eq!(trained.group(ParamGroup::HeadBias), p.group(ParamGroup::HeadBias));
        let mean_loss = |q: &ClassifierParams| {
            let mut total = 0.0;
            let mut n = 0;
            for (i, s) in seqs.iter().enumerate() {
                let m = mask_tokens(s, 0.3, 1000 + i as u64).unwrap();
                if !m.targets.is_empty() {
                    total += loss_mlm(q, &m.corrupted, &m.targets).unwrap();
                    n += 1;
                }
            }
            total / n as f64
        };
        assert!(mean_loss(&trained) < mean_loss(&p));
        assert!(adaptive_pretrain(&p, &[], &cfg, 0.15).is_err());
    }
}
