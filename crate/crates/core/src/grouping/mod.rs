//! The group space (label x environment), probabilistic group labels, and
//! the pseudo-labelers that produce them.
//!
//! A group is the pair `g = (y, e)`. Robust training needs, for each sample,
//! either a hard group index or a distribution over groups. This module
//! builds the latter from per-environment probabilities: all of a sample's
//! mass stays on groups matching its class label, distributed across
//! environments according to `P(e|x)`.

mod io;
mod labeler;

pub use io::{load_embeddings, load_group_probs, save_group_probs};
pub use labeler::{
    predict_env_probs, train_env_classifier, zero_shot_env_probs, EmbeddingSet,
    EnvClassifierConfig,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Tolerance for probability-row normalization checks.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// The product structure of classes and environments with the canonical
/// index bijection `g = y * |E| + e`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSpace {
    num_classes: usize,
    num_envs: usize,
}

impl GroupSpace {
    pub fn new(num_classes: usize, num_envs: usize) -> Result<Self> {
        if num_classes == 0 || num_envs == 0 {
            return Err(Error::InvalidConfig(
                "group space needs at least one class and one environment".into(),
            ));
        }
        Ok(Self {
            num_classes,
            num_envs,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_envs(&self) -> usize {
        self.num_envs
    }

    pub fn num_groups(&self) -> usize {
        self.num_classes * self.num_envs
    }

    /// Group index of `(y, e)`.
    pub fn group_index(&self, y: usize, e: usize) -> Result<usize> {
        if y >= self.num_classes {
            return Err(Error::IndexOutOfRange {
                what: "class",
                value: y,
                bound: self.num_classes,
            });
        }
        if e >= self.num_envs {
            return Err(Error::IndexOutOfRange {
                what: "environment",
                value: e,
                bound: self.num_envs,
            });
        }
        Ok(y * self.num_envs + e)
    }

    /// Inverse of [`GroupSpace::group_index`].
    pub fn group_components(&self, g: usize) -> Result<(usize, usize)> {
        if g >= self.num_groups() {
            return Err(Error::IndexOutOfRange {
                what: "group",
                value: g,
                bound: self.num_groups(),
            });
        }
        Ok((g / self.num_envs, g % self.num_envs))
    }
}

fn validate_probability_rows(m: &Matrix, what: &'static str) -> Result<()> {
    for r in 0..m.rows() {
        let mut sum = 0.0;
        for &v in m.row(r) {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::NegativeProbability { row: r, value: v });
            }
            sum += v;
        }
        if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
            return Err(Error::RowNotNormalized { row: r, sum });
        }
    }
    let _ = what;
    Ok(())
}

/// Per-sample environment probabilities: row `i` is `P(e|x_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvProbabilities {
    probs: Matrix,
}

impl EnvProbabilities {
    /// Validates that every row is a distribution (non-negative, sums to one
    /// within [`ROW_SUM_TOLERANCE`]).
    pub fn from_matrix(probs: Matrix) -> Result<Self> {
        validate_probability_rows(&probs, "environment probabilities")?;
        Ok(Self { probs })
    }

    pub fn rows(&self) -> usize {
        self.probs.rows()
    }

    pub fn num_envs(&self) -> usize {
        self.probs.cols()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.probs
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.probs.row(i)
    }
}

/// Per-sample group probabilities: row `i` is a distribution over all
/// `|Y| * |E|` groups, zero outside the sample's own class.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupProbabilities {
    probs: Matrix,
}

impl GroupProbabilities {
    /// Validates row normalization. The class-support constraint is a
    /// property of the producer (see [`env_to_group_probs`]); files loaded
    /// from disk are only checked for being distributions.
    pub fn from_matrix(probs: Matrix) -> Result<Self> {
        validate_probability_rows(&probs, "group probabilities")?;
        Ok(Self { probs })
    }

    /// One-hot lift of hard group labels.
    pub fn one_hot(groups: &[usize], num_groups: usize) -> Result<Self> {
        let mut probs = Matrix::zeros(groups.len(), num_groups);
        for (i, &g) in groups.iter().enumerate() {
            if g >= num_groups {
                return Err(Error::IndexOutOfRange {
                    what: "group",
                    value: g,
                    bound: num_groups,
                });
            }
            probs.set(i, g, 1.0);
        }
        Ok(Self { probs })
    }

    pub fn rows(&self) -> usize {
        self.probs.rows()
    }

    pub fn num_groups(&self) -> usize {
        self.probs.cols()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.probs
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.probs.row(i)
    }
}

/// Places each sample's environment probabilities into the group slots of
/// its own class: `Q[i, (y_i, e)] = P[i, e]`, exactly zero elsewhere.
pub fn env_to_group_probs(
    env_probs: &EnvProbabilities,
    labels: &[usize],
    space: &GroupSpace,
) -> Result<GroupProbabilities> {
    if env_probs.rows() != labels.len() {
        return Err(Error::DimMismatch {
            context: "env_to_group_probs",
            expected: format!("{} labels", env_probs.rows()),
            actual: format!("{} labels", labels.len()),
        });
    }
    if env_probs.num_envs() != space.num_envs() {
        return Err(Error::DimMismatch {
            context: "env_to_group_probs",
            expected: format!("{} environments", space.num_envs()),
            actual: format!("{} columns", env_probs.num_envs()),
        });
    }
    validate_probability_rows(env_probs.matrix(), "environment probabilities")?;

    let mut q = Matrix::zeros(env_probs.rows(), space.num_groups());
    for (i, &y) in labels.iter().enumerate() {
        if y >= space.num_classes() {
            return Err(Error::LabelOutOfRange {
                row: i,
                label: y,
                num_classes: space.num_classes(),
            });
        }
        let base = y * space.num_envs();
        let dst = q.row_mut(i);
        for (e, &p) in env_probs.row(i).iter().enumerate() {
            dst[base + e] = p;
        }
    }
    Ok(GroupProbabilities { probs: q })
}

/// Optional probability floor: mixes every row with the uniform distribution
/// so no environment probability sits below `eps / (1 + E * eps)`. A zero
/// floor (the default everywhere) returns the input unchanged.
pub fn floor_env_probs(env_probs: &EnvProbabilities, eps: f64) -> Result<EnvProbabilities> {
    if eps < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "probability floor must be non-negative, got {eps}"
        )));
    }
    if eps == 0.0 {
        return Ok(env_probs.clone());
    }
    let e = env_probs.num_envs() as f64;
    let mut floored = env_probs.matrix().clone();
    for r in 0..floored.rows() {
        for v in floored.row_mut(r) {
            *v = (*v + eps) / (1.0 + e * eps);
        }
    }
    EnvProbabilities::from_matrix(floored)
}

/// Collapses each row to its argmax group; ties break toward the lowest
/// group index.
pub fn harden(q: &GroupProbabilities) -> Vec<usize> {
    (0..q.rows())
        .map(|i| {
            let row = q.row(i);
            let mut best = 0;
            for (g, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = g;
                }
            }
            best
        })
        .collect()
}
