//! Central finite-difference verification of the analytic gradients.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ClassifierParams, FreezePolicy, ModelError, ParamGroup};
use crate::corpus::Label;
use crate::tokenizer::TokenSequence;

pub const FD_STEP: f64 = 1e-5;
const MIN_COORDS: usize = 200;
/// Denominator floor of the relative error.
const REL_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    /// Max of `|analytic − numeric| / max(|analytic|, |numeric|, 1e-8)` over
    /// trainable coordinates; `+∞` if a frozen coordinate reports a nonzero
    /// analytic gradient.
    pub max_relative_error: f64,
    pub checked: usize,
    pub frozen_checked: usize,
    pub worst: Option<(ParamGroup, usize)>,
}

fn relative_error(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(REL_FLOOR)
}

/// Coordinates to probe: every group gets an equal share (all of it when
/// small); half of the embedding share is drawn from rows of tokens that
/// occur in `ids` so the probe sees nonzero gradients.
fn sample_coords(params: &ClassifierParams, ids: &[u32], rng: &mut ChaCha8Rng) -> Vec<usize> {
    let layout = params.layout();
    let groups = layout.groups();
    let quota = MIN_COORDS.div_ceil(groups.len());
    let d = params.dims().hidden;
    let mut coords = Vec::new();
    for g in &groups {
        let r = layout.range(*g);
        if r.len() <= quota {
            coords.extend(r);
            continue;
        }
        if *g == ParamGroup::Embeddings {
            let present = quota / 2;
            for _ in 0..present {
                let tok = ids[rng.gen_range(0..ids.len())] as usize;
                coords.push(tok * d + rng.gen_range(0..d));
            }
            coords.extend(sample(rng, r.len(), quota - present).into_iter().map(|i| r.start + i));
        } else {
            coords.extend(sample(rng, r.len(), quota).into_iter().map(|i| r.start + i));
        }
    }
    coords.sort_unstable();
    coords.dedup();
    // top up with uniform draws when small groups left the quota unfilled
    while coords.len() < MIN_COORDS.min(layout.total()) {
        let i = rng.gen_range(0..layout.total());
        if let Err(pos) = coords.binary_search(&i) {
            coords.insert(pos, i);
        }
    }
    coords
}

/// Compares the gradient the trainer would apply under `freeze` with
/// central differences of `loss_bce ∘ forward` (dropout off). Frozen
/// coordinates are checked against exact zero instead.
pub fn grad_check(
    params: &ClassifierParams,
    example: (&TokenSequence, Label),
    freeze: FreezePolicy,
    seed: u64,
) -> Result<GradCheckReport, ModelError> {
    let (seq, label) = example;
    freeze.validate(&params.dims())?;
    let layout = params.layout();
    let mut grad = vec![0.0; layout.total()];
    params.classification_backward(seq, label, None, 1.0, &mut grad)?;
    for g in layout.groups() {
        if freeze.is_frozen(g) {
            grad[layout.range(g)].fill(0.0);
        }
    }

    let loss_at = |p: &ClassifierParams| -> Result<f64, ModelError> {
        Ok(super::loss_bce(p.forward(seq, false, 0)?.probs, label))
    };
    check_coords(params, &grad, seq.active(), freeze, seed, loss_at)
}

/// The same probe for the masked-token loss.
pub fn mlm_grad_check(
    params: &ClassifierParams,
    corrupted: &TokenSequence,
    targets: &[(usize, u32)],
    seed: u64,
) -> Result<GradCheckReport, ModelError> {
    let mut grad = vec![0.0; params.layout().total()];
    params.mlm_backward(corrupted, targets, 1.0, Some(&mut grad))?;
    // the head takes no part in this loss
    let loss_at = |p: &ClassifierParams| p.mlm_backward(corrupted, targets, 1.0, None);
    check_coords(params, &grad, corrupted.active(), FreezePolicy::None, seed, loss_at)
}

fn check_coords(
    params: &ClassifierParams,
    grad: &[f64],
    ids: &[u32],
    freeze: FreezePolicy,
    seed: u64,
    loss_at: impl Fn(&ClassifierParams) -> Result<f64, ModelError>,
) -> Result<GradCheckReport, ModelError> {
    let layout = params.layout();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = sample_coords(params, ids, &mut rng);
    let mut probe = params.clone();
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        checked: 0,
        frozen_checked: 0,
        worst: None,
    };
    for i in coords {
        let group = layout.group_of(i);
        if freeze.is_frozen(group) {
            report.frozen_checked += 1;
            if grad[i] != 0.0 {
                report.max_relative_error = f64::INFINITY;
                report.worst = Some((group, i));
            }
            continue;
        }
        let orig = probe.values[i];
        probe.values[i] = orig + FD_STEP;
        let up = loss_at(&probe)?;
        probe.values[i] = orig - FD_STEP;
        let down = loss_at(&probe)?;
        probe.values[i] = orig;
        let numeric = (up - down) / (2.0 * FD_STEP);
        let err = relative_error(grad[i], numeric);
        report.checked += 1;
        if err > report.max_relative_error {
            report.max_relative_error = err;
            report.worst = Some((group, i));
        }
    }
    Ok(report)
}
