//! Dataset representation, the synthetic spurious-correlation benchmark,
//! CSV ingestion, stratified splitting, and labeled-subset sampling.

mod io;
mod sampling;
mod synthetic;

pub use io::{load_csv, save_csv, DatasetSchema};
pub use sampling::{frequency_weighted_indices, subsample_labeled, LabeledSubset};
pub use synthetic::{generate_synthetic, SyntheticParams};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grouping::GroupSpace;
use crate::numerics::Matrix;

/// Which split a row belongs to, when a dataset carries split tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitTag {
    Train,
    Val,
    Test,
}

impl SplitTag {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitTag::Train => "train",
            SplitTag::Val => "val",
            SplitTag::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "train" => Some(SplitTag::Train),
            "val" => Some(SplitTag::Val),
            "test" => Some(SplitTag::Test),
            _ => None,
        }
    }
}

/// A feature matrix with class labels, optional environment annotations, and
/// optional split tags.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Matrix,
    y: Vec<usize>,
    env: Option<Vec<usize>>,
    split: Option<Vec<SplitTag>>,
}

impl Dataset {
    /// Builds a dataset, validating lengths, finiteness of features, and
    /// (when given a space) label/environment ranges.
    pub fn new(
        x: Matrix,
        y: Vec<usize>,
        env: Option<Vec<usize>>,
        split: Option<Vec<SplitTag>>,
    ) -> Result<Self> {
        let n = x.rows();
        if y.len() != n {
            return Err(Error::DimMismatch {
                context: "Dataset::new",
                expected: format!("{n} labels"),
                actual: format!("{} labels", y.len()),
            });
        }
        if let Some(env) = &env {
            if env.len() != n {
                return Err(Error::DimMismatch {
                    context: "Dataset::new",
                    expected: format!("{n} environment annotations"),
                    actual: format!("{} annotations", env.len()),
                });
            }
        }
        if let Some(split) = &split {
            if split.len() != n {
                return Err(Error::DimMismatch {
                    context: "Dataset::new",
                    expected: format!("{n} split tags"),
                    actual: format!("{} tags", split.len()),
                });
            }
        }
        x.ensure_finite("dataset features")?;
        Ok(Self { x, y, env, split })
    }

    pub fn len(&self) -> usize {
        self.x.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.x.cols()
    }

    pub fn features(&self) -> &Matrix {
        &self.x
    }

    pub fn labels(&self) -> &[usize] {
        &self.y
    }

    pub fn env(&self) -> Option<&[usize]> {
        self.env.as_deref()
    }

    pub fn split_tags(&self) -> Option<&[SplitTag]> {
        self.split.as_deref()
    }

    /// Environment annotations or an error naming the caller's requirement.
    pub fn require_env(&self, context: &'static str) -> Result<&[usize]> {
        self.env.as_deref().ok_or(Error::MissingEnv { context })
    }

    /// Hard group index per row, `g = y * |E| + e`. Requires annotations.
    pub fn hard_groups(&self, space: &GroupSpace) -> Result<Vec<usize>> {
        let env = self.require_env("hard group labels need environment annotations")?;
        self.y
            .iter()
            .zip(env)
            .map(|(&y, &e)| space.group_index(y, e))
            .collect()
    }

    /// Row subset in the order given.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select_rows(indices),
            y: indices.iter().map(|&i| self.y[i]).collect(),
            env: self
                .env
                .as_ref()
                .map(|e| indices.iter().map(|&i| e[i]).collect()),
            split: self
                .split
                .as_ref()
                .map(|s| indices.iter().map(|&i| s[i]).collect()),
        }
    }

    /// Rows carrying the given split tag; the whole dataset if untagged.
    pub fn filter_split(&self, tag: SplitTag) -> Dataset {
        match &self.split {
            None => self.clone(),
            Some(tags) => {
                let idx: Vec<usize> = tags
                    .iter()
                    .enumerate()
                    .filter(|(_, &t)| t == tag)
                    .map(|(i, _)| i)
                    .collect();
                self.select(&idx)
            }
        }
    }
}

/// Stratified train/val/test split.
///
/// Rows are grouped by `(y, env)` (by `y` alone when annotations are absent),
/// each group is shuffled with the seed, and every group is divided by the
/// same fractions so minority groups appear in every split. Fractional group
/// shares are settled by carrying the remainder to the next group, so split
/// totals land on the rounded dataset-level targets.
pub fn split(
    dataset: &Dataset,
    fractions: (f64, f64, f64),
    seed: u64,
) -> Result<(Dataset, Dataset, Dataset)> {
    let fracs = [fractions.0, fractions.1, fractions.2];
    if fracs.iter().any(|f| !f.is_finite() || *f < 0.0) {
        return Err(Error::InvalidConfig(
            "split fractions must be non-negative".into(),
        ));
    }
    let total: f64 = fracs.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidConfig(format!(
            "split fractions must sum to 1, got {total}"
        )));
    }
    let positive = fracs.iter().filter(|f| **f > 0.0).count();

    // Group rows by stratification key.
    let mut keys: Vec<usize> = Vec::with_capacity(dataset.len());
    match dataset.env() {
        Some(env) => {
            let num_envs = env.iter().max().map_or(1, |m| m + 1);
            for (y, e) in dataset.labels().iter().zip(env) {
                keys.push(y * num_envs + e);
            }
        }
        None => keys.extend_from_slice(dataset.labels()),
    }
    let num_keys = keys.iter().max().map_or(0, |m| m + 1);
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); num_keys];
    for (i, &k) in keys.iter().enumerate() {
        groups[k].push(i);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: [Vec<usize>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    // Carried fractional remainders, one per non-final split.
    let mut carry = [0.0_f64; 2];
    for (g, rows) in groups.iter().enumerate() {
        if rows.is_empty() {
            continue;
        }
        if rows.len() < positive {
            return Err(Error::GroupTooSmall {
                group: g,
                size: rows.len(),
                needed: positive,
            });
        }
        let mut shuffled = rows.clone();
        shuffled.shuffle(&mut rng);

        let n_g = rows.len();
        let mut taken = 0usize;
        let mut counts = [0usize; 3];
        for k in 0..2 {
            let target = fracs[k] * n_g as f64 + carry[k];
            let c = (target.floor() as usize).min(n_g - taken);
            carry[k] = target - c as f64;
            counts[k] = c;
            taken += c;
        }
        counts[2] = n_g - taken;

        let mut cursor = 0;
        for (k, &c) in counts.iter().enumerate() {
            out[k].extend_from_slice(&shuffled[cursor..cursor + c]);
            cursor += c;
        }
    }
    for part in &mut out {
        part.sort_unstable();
    }
    Ok((
        dataset.select(&out[0]),
        dataset.select(&out[1]),
        dataset.select(&out[2]),
    ))
}
