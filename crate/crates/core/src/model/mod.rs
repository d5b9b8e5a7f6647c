//! A small bag-of-subwords classifier: embedding table, residual `tanh`
//! feed-forward layers applied to each token, mean pooling, a two-way
//! softmax head, and a masked-token head tied to the embedding table.
//!
//! All parameters live in one flat `Vec<f64>`; [`Layout`] maps parameter
//! groups to ranges of it. Gradients share the same layout.

mod checkpoint;
mod gradcheck;
mod train;

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::Label;
use crate::tokenizer::{TokenSequence, MASK};

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_VERSION};
pub use gradcheck::{grad_check, mlm_grad_check, GradCheckReport, FD_STEP};
pub use train::{
    adaptive_pretrain, train_supervised, train_weighted, TrainConfig, TrainExample, ENCODER_LEARNING_RATES,
};

/// Lower bound applied to probabilities before taking logarithms.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("token id {id} outside vocabulary of size {vocab}")]
    TokenOutOfRange { id: u32, vocab: usize },
    #[error("non-finite loss at batch {batch} (epoch {epoch})")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("non-finite parameters after batch {batch} (epoch {epoch})")]
    NonFiniteParams { epoch: usize, batch: usize },
    #[error("no training data")]
    EmptyData,
    #[error("masked-token loss needs at least one target")]
    EmptyTargets,
    #[error("invalid dimensions: {0}")]
    InvalidDims(String),
    #[error("invalid freeze policy: {0}")]
    InvalidFreeze(String),
    #[error("checkpoint {path}: {reason}")]
    Checkpoint { path: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub vocab: usize,
    pub hidden: usize,
    pub layers: usize,
}

impl Dims {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.vocab == 0 || self.hidden == 0 || self.layers == 0 {
            return Err(ModelError::InvalidDims(format!("{self:?}: all must be at least 1")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamGroup {
    Embeddings,
    LayerWeight(usize),
    LayerBias(usize),
    HeadWeight,
    HeadBias,
}

/// Offsets of each parameter group inside the flat parameter vector:
/// embeddings (V×d, row per token), then per layer a d×d weight (row-major,
/// output by input) and a d bias, then the 2×d head weight and 2 head bias.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    dims: Dims,
}

impl Layout {
    pub fn new(dims: Dims) -> Layout {
        Layout { dims }
    }

    fn layer_base(&self, l: usize) -> usize {
        let d = self.dims.hidden;
        self.dims.vocab * d + l * (d * d + d)
    }

    pub fn range(&self, group: ParamGroup) -> Range<usize> {
        let d = self.dims.hidden;
        let head = self.layer_base(self.dims.layers);
        match group {
            ParamGroup::Embeddings => 0..self.dims.vocab * d,
            ParamGroup::LayerWeight(l) => {
                let b = self.layer_base(l);
                b..b + d * d
            }
            ParamGroup::LayerBias(l) => {
                let b = self.layer_base(l) + d * d;
                b..b + d
            }
            ParamGroup::HeadWeight => head..head + 2 * d,
            ParamGroup::HeadBias => head + 2 * d..head + 2 * d + 2,
        }
    }

    pub fn total(&self) -> usize {
        self.range(ParamGroup::HeadBias).end
    }

    pub fn groups(&self) -> Vec<ParamGroup> {
        let mut g = vec![ParamGroup::Embeddings];
        for l in 0..self.dims.layers {
            g.push(ParamGroup::LayerWeight(l));
            g.push(ParamGroup::LayerBias(l));
        }
        g.push(ParamGroup::HeadWeight);
        g.push(ParamGroup::HeadBias);
        g
    }

    pub fn group_of(&self, index: usize) -> ParamGroup {
        *self
            .groups()
            .iter()
            .find(|g| self.range(**g).contains(&index))
            .expect("index inside layout")
    }
}

/// Which parameters stay fixed during supervised fine-tuning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FreezePolicy {
    #[default]
    None,
    EmbeddingsOnly,
    /// Embeddings plus encoder layers `0..k`.
    FirstKLayers(usize),
}

impl FreezePolicy {
    /// The "first three layers" setting, capped at the model depth.
    pub fn first_layers_default(layers: usize) -> FreezePolicy {
        FreezePolicy::FirstKLayers(layers.min(3))
    }

    pub fn validate(&self, dims: &Dims) -> Result<(), ModelError> {
        match *self {
            FreezePolicy::FirstKLayers(k) if k == 0 || k > dims.layers => Err(ModelError::InvalidFreeze(format!(
                "FirstKLayers({k}) needs 0 < k <= {}",
                dims.layers
            ))),
            _ => Ok(()),
        }
    }

    pub fn is_frozen(&self, group: ParamGroup) -> bool {
        match (*self, group) {
            (FreezePolicy::None, _) => false,
            (_, ParamGroup::Embeddings) => true,
            (FreezePolicy::FirstKLayers(k), ParamGroup::LayerWeight(l) | ParamGroup::LayerBias(l)) => l < k,
            _ => false,
        }
    }

    pub fn label(&self) -> String {
        match self {
            FreezePolicy::None => "none".into(),
            FreezePolicy::EmbeddingsOnly => "embeddings".into(),
            FreezePolicy::FirstKLayers(k) => format!("first{k}"),
        }
    }
}

impl std::str::FromStr for FreezePolicy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(FreezePolicy::None),
            "embeddings" => Ok(FreezePolicy::EmbeddingsOnly),
            _ => s
                .strip_prefix("first")
                .and_then(|k| k.parse().ok())
                .map(FreezePolicy::FirstKLayers)
                .ok_or_else(|| format!("unknown freeze policy {s:?} (none|embeddings|first<k>)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierParams {
    dims: Dims,
    dropout: f64,
    values: Vec<f64>,
}

/// Output of one classification forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    pub h_cls: Vec<f64>,
    pub probs: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub probs: [f64; 2],
    pub label: Label,
    pub confidence: f64,
}

impl Prediction {
    /// Ties go to `NonRumour`.
    pub fn from_probs(probs: [f64; 2]) -> Prediction {
        let label = if probs[1] > probs[0] {
            Label::Rumour
        } else {
            Label::NonRumour
        };
        Prediction {
            probs,
            label,
            confidence: probs[label.index()],
        }
    }
}

/// Cached activations of one token's pass through the encoder.
struct EncoderPass {
    /// `h[0]` is the embedding, `h[l + 1]` the output of layer `l`.
    h: Vec<Vec<f64>>,
    /// `tanh` outputs per layer.
    t: Vec<Vec<f64>>,
}

/// Encoder passes of a sorted set of distinct token ids.
struct TokenTable {
    ids: Vec<u32>,
    passes: Vec<EncoderPass>,
}

impl TokenTable {
    fn slot(&self, id: u32) -> usize {
        self.ids.binary_search(&id).expect("token in table")
    }
}

impl EncoderPass {
    fn output(&self) -> &[f64] {
        self.h.last().unwrap()
    }
}

pub fn softmax2(logits: [f64; 2]) -> [f64; 2] {
    let m = logits[0].max(logits[1]);
    let e0 = (logits[0] - m).exp();
    let e1 = (logits[1] - m).exp();
    let s = e0 + e1;
    [e0 / s, e1 / s]
}

/// `−ln p[label]` with `p` floored at [`PROB_FLOOR`].
pub fn loss_bce(probs: [f64; 2], label: Label) -> f64 {
    let p = probs[label.index()];
    if p.is_nan() {
        return f64::NAN;
    }
    -p.max(PROB_FLOOR).ln()
}

/// Weights uniform in `(−1/√d, 1/√d)`, biases zero.
pub fn init_params(dims: Dims, seed: u64) -> Result<ClassifierParams, ModelError> {
    dims.validate()?;
    let layout = Layout::new(dims);
    let mut values = vec![0.0; layout.total()];
    let bound = 1.0 / (dims.hidden as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for g in layout.groups() {
        if matches!(g, ParamGroup::LayerBias(_) | ParamGroup::HeadBias) {
            continue;
        }
        for v in &mut values[layout.range(g)] {
            *v = rng.gen_range(-bound..bound);
        }
    }
    Ok(ClassifierParams {
        dims,
        dropout: 0.1,
        values,
    })
}

impl ClassifierParams {
    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn layout(&self) -> Layout {
        Layout::new(self.dims)
    }

    pub fn dropout(&self) -> f64 {
        self.dropout
    }

    pub fn set_dropout(&mut self, rate: f64) {
        self.dropout = rate;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn group(&self, g: ParamGroup) -> &[f64] {
        &self.values[self.layout().range(g)]
    }

    pub fn group_mut(&mut self, g: ParamGroup) -> &mut [f64] {
        let r = self.layout().range(g);
        &mut self.values[r]
    }

    pub fn embeddings(&self) -> &[f64] {
        self.group(ParamGroup::Embeddings)
    }

    /// Output matrix of the masked-token head. Tied to the embedding table:
    /// both names refer to the same storage.
    pub fn mlm_head(&self) -> &[f64] {
        self.embeddings()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Hex SHA-256 of the checkpoint encoding.
    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(checkpoint::encode(self)))
    }

    fn check_ids(&self, ids: &[u32]) -> Result<(), ModelError> {
        match ids.iter().find(|&&id| id as usize >= self.dims.vocab) {
            Some(&id) => Err(ModelError::TokenOutOfRange {
                id,
                vocab: self.dims.vocab,
            }),
            None => Ok(()),
        }
    }

    fn embedding_row(&self, id: u32) -> &[f64] {
        let d = self.dims.hidden;
        &self.values[id as usize * d..(id as usize + 1) * d]
    }

    /// Encoder passes of every distinct token in `seqs`.
    fn token_table<'a>(&self, seqs: impl IntoIterator<Item = &'a [u32]>) -> TokenTable {
        let mut ids: Vec<u32> = seqs.into_iter().flatten().copied().collect();
        ids.sort_unstable();
        ids.dedup();
        let passes = ids
            .par_iter()
            .map(|&id| self.encode(self.embedding_row(id).to_vec()))
            .collect();
        TokenTable { ids, passes }
    }

    /// Mean of the encoder outputs of `ids`, with the table slot and share
    /// of each distinct token.
    fn pool(&self, table: &TokenTable, ids: &[u32]) -> (Vec<(usize, f64)>, Vec<f64>) {
        let mut pooled = vec![0.0; self.dims.hidden];
        let mut sorted = ids.to_vec();
        sorted.sort_unstable();
        let n = ids.len() as f64;
        let mut shares = Vec::new();
        for run in sorted.chunk_by(|a, b| a == b) {
            let slot = table.slot(run[0]);
            let share = run.len() as f64 / n;
            for (p, h) in pooled.iter_mut().zip(table.passes[slot].output()) {
                *p += share * h;
            }
            shares.push((slot, share));
        }
        (shares, pooled)
    }

    /// Back-propagates the per-token output gradients `d_out` (one per table
    /// slot) through the encoder into the weights and embedding rows.
    fn table_backward(&self, table: &TokenTable, d_out: Vec<Vec<f64>>, grad: &mut [f64]) {
        let d = self.dims.hidden;
        for ((id, pass), dz) in table.ids.iter().zip(&table.passes).zip(d_out) {
            if dz.iter().all(|&g| g == 0.0) {
                continue;
            }
            let d_in = self.encode_backward(pass, dz, grad, 1.0);
            let row = &mut grad[*id as usize * d..(*id as usize + 1) * d];
            for (g, v) in row.iter_mut().zip(&d_in) {
                *g += v;
            }
        }
    }

    fn encode(&self, input: Vec<f64>) -> EncoderPass {
        let d = self.dims.hidden;
        let layout = self.layout();
        let mut h = Vec::with_capacity(self.dims.layers + 1);
        let mut t = Vec::with_capacity(self.dims.layers);
        h.push(input);
        for l in 0..self.dims.layers {
            let w = &self.values[layout.range(ParamGroup::LayerWeight(l))];
            let b = &self.values[layout.range(ParamGroup::LayerBias(l))];
            let prev = &h[l];
            let act: Vec<f64> = (0..d)
                .map(|i| {
                    let row = &w[i * d..(i + 1) * d];
                    (b[i] + row.iter().zip(prev).map(|(a, x)| a * x).sum::<f64>()).tanh()
                })
                .collect();
            let next: Vec<f64> = prev.iter().zip(&act).map(|(x, a)| x + a).collect();
            t.push(act);
            h.push(next);
        }
        EncoderPass { h, t }
    }

    /// Back-propagates `d_out` (gradient wrt the encoder output) through the
    /// layers into `grad`, returning the gradient wrt the input.
    fn encode_backward(&self, pass: &EncoderPass, d_out: Vec<f64>, grad: &mut [f64], scale: f64) -> Vec<f64> {
        let d = self.dims.hidden;
        let layout = self.layout();
        let mut dh = d_out;
        for l in (0..self.dims.layers).rev() {
            let w = &self.values[layout.range(ParamGroup::LayerWeight(l))];
            let da: Vec<f64> = pass.t[l].iter().zip(&dh).map(|(t, g)| g * (1.0 - t * t)).collect();
            let prev = &pass.h[l];
            let wr = layout.range(ParamGroup::LayerWeight(l));
            let gw = &mut grad[wr];
            for i in 0..d {
                let s = da[i] * scale;
                if s != 0.0 {
                    for (g, x) in gw[i * d..(i + 1) * d].iter_mut().zip(prev) {
                        *g += s * x;
                    }
                }
            }
            let br = layout.range(ParamGroup::LayerBias(l));
            for (g, a) in grad[br].iter_mut().zip(&da) {
                *g += a * scale;
            }
            // residual path plus W^T da
            for (i, a) in da.iter().enumerate() {
                let row = &w[i * d..(i + 1) * d];
                for (dx, wij) in dh.iter_mut().zip(row) {
                    *dx += a * wij;
                }
            }
        }
        dh
    }

    fn head_logits(&self, z: &[f64]) -> [f64; 2] {
        let layout = self.layout();
        let w = &self.values[layout.range(ParamGroup::HeadWeight)];
        let b = &self.values[layout.range(ParamGroup::HeadBias)];
        let d = self.dims.hidden;
        let dot = |r: usize| b[r] + w[r * d..(r + 1) * d].iter().zip(z).map(|(a, x)| a * x).sum::<f64>();
        [dot(0), dot(1)]
    }

    fn dropout_mask(&self, seed: u64) -> Vec<f64> {
        let keep = 1.0 - self.dropout;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..self.dims.hidden)
            .map(|_| if rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 })
            .collect()
    }

    fn check_seqs<'a>(&self, seqs: impl IntoIterator<Item = &'a [u32]>) -> Result<(), ModelError> {
        seqs.into_iter().try_for_each(|ids| self.check_ids(ids))
    }

    /// Classification forward pass. Dropout on `h_cls` only in train mode.
    pub fn forward(&self, seq: &TokenSequence, train_mode: bool, seed: u64) -> Result<ForwardTrace, ModelError> {
        let ids = seq.active();
        self.check_ids(ids)?;
        let table = self.token_table([ids]);
        Ok(self.forward_with(&table, ids, train_mode.then_some(seed)))
    }

    fn forward_with(&self, table: &TokenTable, ids: &[u32], dropout_seed: Option<u64>) -> ForwardTrace {
        let (_, mut h_cls) = self.pool(table, ids);
        if let Some(seed) = dropout_seed.filter(|_| self.dropout > 0.0) {
            for (h, m) in h_cls.iter_mut().zip(self.dropout_mask(seed)) {
                *h *= m;
            }
        }
        let probs = softmax2(self.head_logits(&h_cls));
        ForwardTrace { h_cls, probs }
    }

    /// Loss of one example, accumulating `weight`-scaled gradients into `grad`.
    pub(crate) fn classification_backward(
        &self,
        seq: &TokenSequence,
        label: Label,
        dropout_seed: Option<u64>,
        weight: f64,
        grad: &mut [f64],
    ) -> Result<f64, ModelError> {
        Ok(self.batch_classification_backward(&[(seq, label, dropout_seed, weight)], grad)?[0])
    }

    /// Per-example losses of a batch of `(sequence, label, dropout seed,
    /// gradient weight)`, accumulating weighted gradients into `grad`. Each
    /// distinct token is run through the encoder once per batch.
    pub(crate) fn batch_classification_backward(
        &self,
        batch: &[(&TokenSequence, Label, Option<u64>, f64)],
        grad: &mut [f64],
    ) -> Result<Vec<f64>, ModelError> {
        self.check_seqs(batch.iter().map(|b| b.0.active()))?;
        let d = self.dims.hidden;
        let layout = self.layout();
        let table = self.token_table(batch.iter().map(|b| b.0.active()));
        let mut d_out = vec![vec![0.0; d]; table.ids.len()];
        let wr = layout.range(ParamGroup::HeadWeight);
        let br = layout.range(ParamGroup::HeadBias);
        let mut losses = Vec::with_capacity(batch.len());
        for &(seq, label, dropout_seed, weight) in batch {
            let (shares, pooled) = self.pool(&table, seq.active());
            let mask = match dropout_seed {
                Some(s) if self.dropout > 0.0 => Some(self.dropout_mask(s)),
                _ => None,
            };
            let z: Vec<f64> = match &mask {
                Some(m) => pooled.iter().zip(m).map(|(h, m)| h * m).collect(),
                None => pooled,
            };
            let probs = softmax2(self.head_logits(&z));
            losses.push(loss_bce(probs, label));

            let mut dlogits = probs;
            dlogits[label.index()] -= 1.0;
            let w = &self.values[wr.clone()];
            let mut dz: Vec<f64> = (0..d).map(|j| dlogits[0] * w[j] + dlogits[1] * w[d + j]).collect();
            if let Some(m) = &mask {
                dz.iter_mut().zip(m).for_each(|(g, m)| *g *= m);
            }
            for r in 0..2 {
                let s = dlogits[r] * weight;
                for (g, x) in grad[wr.start + r * d..wr.start + (r + 1) * d].iter_mut().zip(&z) {
                    *g += s * x;
                }
                grad[br.start + r] += s;
            }
            for (slot, share) in shares {
                let s = share * weight;
                for (acc, g) in d_out[slot].iter_mut().zip(&dz) {
                    *acc += s * g;
                }
            }
        }
        self.table_backward(&table, d_out, grad);
        Ok(losses)
    }

    /// Logits of the tied masked-token head for a corrupted sequence. Every
    /// masked position reads the pooled encoding of the whole corrupted
    /// sequence (its `[MASK]` tokens included).
    fn mlm_logits(&self, r: &[f64]) -> Vec<f64> {
        self.embeddings()
            .chunks_exact(self.dims.hidden)
            .map(|e| e.iter().zip(r).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Mean masked-token cross-entropy, accumulating `weight`-scaled
    /// gradients into `grad` when given.
    pub(crate) fn mlm_backward(
        &self,
        corrupted: &TokenSequence,
        targets: &[(usize, u32)],
        weight: f64,
        grad: Option<&mut [f64]>,
    ) -> Result<f64, ModelError> {
        Ok(self.batch_mlm_backward(&[(corrupted, targets)], weight, grad)?[0])
    }

    /// Per-sequence masked-token losses of a batch; gradients of every
    /// sequence are scaled by `weight`.
    pub(crate) fn batch_mlm_backward(
        &self,
        batch: &[(&TokenSequence, &[(usize, u32)])],
        weight: f64,
        mut grad: Option<&mut [f64]>,
    ) -> Result<Vec<f64>, ModelError> {
        for (corrupted, targets) in batch {
            if targets.is_empty() {
                return Err(ModelError::EmptyTargets);
            }
            self.check_ids(corrupted.active())?;
            self.check_ids(&targets.iter().map(|t| t.1).collect::<Vec<_>>())?;
            debug_assert!(targets.iter().all(|&(p, _)| corrupted.ids[p] == MASK));
        }
        let d = self.dims.hidden;
        let table = self.token_table(batch.iter().map(|b| b.0.active()));
        let mut d_out = vec![vec![0.0; d]; table.ids.len()];
        let mut losses = Vec::with_capacity(batch.len());
        for (corrupted, targets) in batch {
            let (shares, r) = self.pool(&table, corrupted.active());
            let logits = self.mlm_logits(&r);
            let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
            let z: f64 = exps.iter().sum();
            let n = targets.len() as f64;
            losses.push(
                targets
                    .iter()
                    .map(|&(_, orig)| -(exps[orig as usize] / z).max(PROB_FLOOR).ln())
                    .sum::<f64>()
                    / n,
            );
            let Some(grad) = grad.as_deref_mut() else { continue };
            let mut dlogits: Vec<f64> = exps.iter().map(|e| e / z).collect();
            for &(_, orig) in targets.iter() {
                dlogits[orig as usize] -= 1.0 / n;
            }
            let mut dr = vec![0.0; d];
            for (v, &dl) in dlogits.iter().enumerate() {
                let s = dl * weight;
                let row = &mut grad[v * d..(v + 1) * d];
                for (g, x) in row.iter_mut().zip(&r) {
                    *g += s * x;
                }
                for (acc, e) in dr.iter_mut().zip(self.embedding_row(v as u32)) {
                    *acc += dl * e;
                }
            }
            for (slot, share) in shares {
                let s = share * weight;
                for (acc, g) in d_out[slot].iter_mut().zip(&dr) {
                    *acc += s * g;
                }
            }
        }
        if let Some(grad) = grad {
            self.table_backward(&table, d_out, grad);
        }
        Ok(losses)
    }
}

/// What the transfer loop needs from a classifier. Implemented by
/// [`ClassifierParams`]; another encoder can be swapped in behind it.
pub trait Classifier: Clone + Send + Sync {
    fn predict(&self, seqs: &[&TokenSequence]) -> Result<Vec<Prediction>, ModelError>;
    fn fine_tune(&self, data: &[TrainExample<'_>], cfg: &TrainConfig) -> Result<Self, ModelError>;
    fn pretrain(&self, unlabeled: &[&TokenSequence], cfg: &TrainConfig, mask_prob: f64) -> Result<Self, ModelError>;
    fn fingerprint(&self) -> String;
}

impl Classifier for ClassifierParams {
    fn predict(&self, seqs: &[&TokenSequence]) -> Result<Vec<Prediction>, ModelError> {
        predict(self, seqs)
    }

    fn fine_tune(&self, data: &[TrainExample<'_>], cfg: &TrainConfig) -> Result<Self, ModelError> {
        train_weighted(self, data, cfg)
    }

    fn pretrain(&self, unlabeled: &[&TokenSequence], cfg: &TrainConfig, mask_prob: f64) -> Result<Self, ModelError> {
        adaptive_pretrain(self, unlabeled, cfg, mask_prob)
    }

    fn fingerprint(&self) -> String {
        ClassifierParams::fingerprint(self)
    }
}

/// Masked-token loss of a corrupted sequence.
pub fn loss_mlm(
    params: &ClassifierParams,
    corrupted: &TokenSequence,
    targets: &[(usize, u32)],
) -> Result<f64, ModelError> {
    params.mlm_backward(corrupted, targets, 1.0, None)
}

/// Inference with dropout off. Order of the output follows `seqs`.
pub fn predict(params: &ClassifierParams, seqs: &[&TokenSequence]) -> Result<Vec<Prediction>, ModelError> {
    params.check_seqs(seqs.iter().map(|s| s.active()))?;
    let table = params.token_table(seqs.iter().map(|s| s.active()));
    Ok(seqs
        .par_iter()
        .map(|s| Prediction::from_probs(params.forward_with(&table, s.active(), None).probs))
        .collect())
}

pub fn accuracy<M: Classifier>(params: &M, data: &[(&TokenSequence, Label)]) -> Result<f64, ModelError> {
    if data.is_empty() {
        return Ok(0.0);
    }
    let seqs: Vec<&TokenSequence> = data.iter().map(|(s, _)| *s).collect();
    let preds = params.predict(&seqs)?;
    let correct = preds.iter().zip(data).filter(|(p, (_, l))| p.label == *l).count();
    Ok(correct as f64 / data.len() as f64)
}
