//! End-to-end training for all three objectives, worst-group model selection,
//! evaluation metrics, decision-boundary export, and the benchmark pipeline.

mod boundary;
mod eval;
mod pipeline;
mod trainer;

pub use boundary::{decision_boundary_grid, BoundaryPoint};
pub use eval::{evaluate, evaluate_env_probs, evaluate_labeler};
pub use pipeline::{
    run_pipeline, synthesize_benchmark, ObjectiveRun, PipelineOutput, PipelineStages,
};
pub use trainer::train;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::Objective;

/// How the max over groups is optimized during minibatch training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaxMode {
    /// Each step descends the single worst group's weighted loss.
    HardMax,
    /// Exponentiated-gradient group weights (the default): smoother and far
    /// more stable under minibatch noise.
    Eg,
}

/// Hyperparameters for one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub objective: Objective,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub l2: f64,
    /// Generalization adjustment constant: each group's risk is raised by
    /// `c / sqrt(n~_g)`, steering the max toward small groups.
    pub c: f64,
    /// Step size of the exponentiated-gradient group-weight update.
    pub eta_q: f64,
    pub hidden_sizes: Vec<usize>,
    pub seed: u64,
    pub max_mode: MaxMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            objective: Objective::Pgdro,
            epochs: 300,
            batch_size: 128,
            lr: 0.1,
            l2: 1e-4,
            c: 2.0,
            eta_q: 0.01,
            hidden_sizes: vec![16, 16, 16],
            seed: 0,
            max_mode: MaxMode::Eg,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be positive".into()));
        }
        if !(self.lr > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be positive, got {}",
                self.lr
            )));
        }
        if self.l2 < 0.0 || self.c < 0.0 {
            return Err(Error::InvalidConfig(
                "l2 penalty and adjustment constant must be non-negative".into(),
            ));
        }
        if self.objective != Objective::Erm && self.max_mode == MaxMode::Eg && self.eta_q <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "eta_q must be positive for exponentiated-gradient updates, got {}",
                self.eta_q
            )));
        }
        Ok(())
    }
}

/// Average, worst-group, and per-group accuracy over hard ground-truth groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub avg_acc: f64,
    pub worst_group_acc: f64,
    pub per_group_acc: Vec<f64>,
    pub group_counts: Vec<usize>,
}

impl MetricsReport {
    /// Builds a report from per-group tallies. Empty groups report zero
    /// accuracy with a zero count and are excluded from the worst-group
    /// minimum.
    pub fn from_tallies(correct: &[usize], counts: &[usize]) -> Result<Self> {
        assert_eq!(correct.len(), counts.len());
        let total: usize = counts.iter().sum();
        if total == 0 {
            return Err(Error::EmptyDataset);
        }
        let total_correct: usize = correct.iter().sum();
        let per_group_acc: Vec<f64> = correct
            .iter()
            .zip(counts)
            .map(|(&c, &n)| if n > 0 { c as f64 / n as f64 } else { 0.0 })
            .collect();
        let worst_group_acc = per_group_acc
            .iter()
            .zip(counts)
            .filter(|(_, &n)| n > 0)
            .map(|(&a, _)| a)
            .fold(f64::INFINITY, f64::min);
        Ok(Self {
            avg_acc: total_correct as f64 / total as f64,
            worst_group_acc,
            per_group_acc,
            group_counts: counts.to_vec(),
        })
    }
}

/// One epoch's training risks and validation metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Value of the configured objective over the full training set.
    pub objective_value: f64,
    /// Per-group training risks (empty under ERM, which has no groups).
    pub per_group_risk: Vec<f64>,
    pub val: MetricsReport,
}

/// Per-epoch history plus the index of the checkpoint that maximizes
/// validation worst-group accuracy (earliest epoch on ties).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub records: Vec<EpochRecord>,
    pub selected_epoch: Option<usize>,
}

impl TrainHistory {
    /// Checks the selection invariant; used by tests and report writers.
    pub fn selection_is_consistent(&self) -> bool {
        match self.selected_epoch {
            None => self.records.is_empty(),
            Some(sel) => {
                let best = self.records[sel].val.worst_group_acc;
                self.records.iter().all(|r| r.val.worst_group_acc <= best)
                    && self.records[..sel]
                        .iter()
                        .all(|r| r.val.worst_group_acc < best)
            }
        }
    }
}
