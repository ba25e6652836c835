//! Accuracy metrics over hard ground-truth groups.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::grouping::{EnvProbabilities, GroupSpace};
use crate::numerics::{Matrix, Network};
use crate::training::MetricsReport;

fn argmax_rows(logits: &Matrix) -> Vec<usize> {
    (0..logits.rows())
        .map(|i| {
            let row = logits.row(i);
            let mut best = 0;
            for (k, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = k;
                }
            }
            best
        })
        .collect()
}

fn tally(
    preds: &[usize],
    targets: &[usize],
    groups: &[usize],
    num_groups: usize,
) -> Result<MetricsReport> {
    let mut correct = vec![0usize; num_groups];
    let mut counts = vec![0usize; num_groups];
    for ((&p, &t), &g) in preds.iter().zip(targets).zip(groups) {
        counts[g] += 1;
        if p == t {
            correct[g] += 1;
        }
    }
    MetricsReport::from_tallies(&correct, &counts)
}

/// Class accuracy of a model, reported per hard `(y, e)` group. Empty groups
/// get count zero and are excluded from the worst-group minimum.
pub fn evaluate(net: &Network, data: &Dataset, space: &GroupSpace) -> Result<MetricsReport> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let groups = data.hard_groups(space)?;
    let preds = argmax_rows(&net.forward(data.features())?);
    tally(&preds, data.labels(), &groups, space.num_groups())
}

/// Environment-prediction accuracy of a pseudo-labeler, reported per hard
/// ground-truth group: the predicted environment (argmax of the classifier's
/// logits) is compared against the annotation.
pub fn evaluate_labeler(net: &Network, data: &Dataset, space: &GroupSpace) -> Result<MetricsReport> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let env = data.require_env("labeler evaluation needs environment annotations")?;
    let groups = data.hard_groups(space)?;
    let preds = argmax_rows(&net.forward(data.features())?);
    tally(&preds, env, &groups, space.num_groups())
}

/// Same evaluation for labelers that emit probabilities directly (zero-shot
/// or externally supplied): the argmax environment per row is scored against
/// the annotation, per hard group.
pub fn evaluate_env_probs(
    env_probs: &EnvProbabilities,
    data: &Dataset,
    space: &GroupSpace,
) -> Result<MetricsReport> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if env_probs.rows() != data.len() {
        return Err(Error::DimMismatch {
            context: "evaluate_env_probs",
            expected: format!("{} probability rows", data.len()),
            actual: format!("{} rows", env_probs.rows()),
        });
    }
    let env = data.require_env("labeler evaluation needs environment annotations")?;
    let groups = data.hard_groups(space)?;
    let preds = argmax_rows(env_probs.matrix());
    tally(&preds, env, &groups, space.num_groups())
}
