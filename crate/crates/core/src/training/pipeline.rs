//! The end-to-end benchmark pipeline: synthesize data, pseudo-label it,
//! train every objective, and evaluate on a group-balanced test set.

use serde::{Deserialize, Serialize};

use crate::data::{generate_synthetic, subsample_labeled, Dataset, LabeledSubset, SyntheticParams};
use crate::error::Result;
use crate::grouping::{
    env_to_group_probs, predict_env_probs, train_env_classifier, EnvClassifierConfig,
    GroupProbabilities, GroupSpace,
};
use crate::numerics::Network;
use crate::objectives::Objective;
use crate::seeds::{self, Stage};
use crate::training::{evaluate, evaluate_labeler, train, MetricsReport, TrainConfig, TrainHistory};

/// Everything the pipeline needs besides the synthetic parameters and the
/// labeled-subset size. Stage seeds are derived from the master seed (the
/// `seed` of the [`SyntheticParams`]), so the configs' own seed fields are
/// overridden.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineStages {
    /// Validation rows per group (balanced; worst-group selection needs every
    /// group populated).
    pub val_per_group: usize,
    /// Test rows per group (balanced, so worst-group accuracy is
    /// well-estimated).
    pub test_per_group: usize,
    pub labeler: EnvClassifierConfig,
    /// One training configuration per objective to run, in order. The
    /// `objective` field of each entry decides the route; seeds are derived
    /// from the master seed.
    pub train: Vec<TrainConfig>,
}

impl Default for PipelineStages {
    fn default() -> Self {
        Self::with_base(
            TrainConfig::default(),
            &[Objective::Erm, Objective::Gdro, Objective::Pgdro],
        )
    }
}

impl PipelineStages {
    /// All objectives share one base configuration.
    pub fn with_base(base: TrainConfig, objectives: &[Objective]) -> Self {
        Self {
            val_per_group: 100,
            test_per_group: 500,
            labeler: EnvClassifierConfig::default(),
            train: objectives
                .iter()
                .map(|&objective| TrainConfig {
                    objective,
                    ..base.clone()
                })
                .collect(),
        }
    }
}

/// One objective's trained model and scores.
#[derive(Debug, Clone)]
pub struct ObjectiveRun {
    pub objective: Objective,
    pub network: Network,
    pub history: TrainHistory,
    pub test_metrics: MetricsReport,
}

/// Output of [`run_pipeline`]: the datasets, the labeler and its quality
/// report, the group probabilities, and one run per objective.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub train: Dataset,
    pub val: Dataset,
    pub test: Dataset,
    pub subset: LabeledSubset,
    pub env_classifier: Network,
    pub labeler_metrics: MetricsReport,
    pub group_probs: GroupProbabilities,
    pub runs: Vec<ObjectiveRun>,
}

impl PipelineOutput {
    pub fn run(&self, objective: Objective) -> Option<&ObjectiveRun> {
        self.runs.iter().find(|r| r.objective == objective)
    }
}

/// Generates the benchmark's train/val/test triple. The training set uses the
/// given parameters; validation and test sets are group-balanced draws
/// (majority fraction one half) with the same feature variances. All three
/// seeds derive from `params.seed` as the master.
pub fn synthesize_benchmark(
    params: &SyntheticParams,
    val_per_group: usize,
    test_per_group: usize,
) -> Result<(Dataset, Dataset, Dataset)> {
    let master = params.seed;
    let train = generate_synthetic(&SyntheticParams {
        seed: seeds::derive(master, Stage::TrainData),
        ..*params
    })?;
    let balanced = |per_group: usize, stage: Stage| {
        generate_synthetic(&SyntheticParams {
            n: 4 * per_group,
            p: 0.5,
            seed: seeds::derive(master, stage),
            ..*params
        })
    };
    let val = balanced(val_per_group, Stage::ValData)?;
    let test = balanced(test_per_group, Stage::TestData)?;
    Ok((train, val, test))
}

/// Runs the full study once: generate data, draw the labeled subset, train
/// the environment classifier on it, turn its predictions into group
/// probabilities, train every requested objective, and evaluate each on the
/// balanced test set. Fully deterministic per `params.seed`.
pub fn run_pipeline(
    params: &SyntheticParams,
    m: usize,
    stages: &PipelineStages,
) -> Result<PipelineOutput> {
    let master = params.seed;
    let space = GroupSpace::new(2, 2)?;
    let (train_ds, val_ds, test_ds) =
        synthesize_benchmark(params, stages.val_per_group, stages.test_per_group)?;

    let subset = subsample_labeled(&train_ds, m, seeds::derive(master, Stage::LabeledSubset))?;
    let labeler_cfg = EnvClassifierConfig {
        seed: seeds::derive(master, Stage::EnvClassifier),
        ..stages.labeler.clone()
    };
    let env_classifier = train_env_classifier(&subset, &train_ds, &labeler_cfg, &space)?;
    let env_probs = predict_env_probs(&env_classifier, train_ds.features())?;
    let group_probs = env_to_group_probs(&env_probs, train_ds.labels(), &space)?;
    let labeler_metrics = evaluate_labeler(&env_classifier, &train_ds, &space)?;

    let mut runs = Vec::with_capacity(stages.train.len());
    for base in &stages.train {
        let objective = base.objective;
        let cfg = TrainConfig {
            seed: seeds::derive(master, Stage::RobustTraining),
            ..base.clone()
        };
        let q = (objective != Objective::Erm).then_some(&group_probs);
        let (network, history) = train(&train_ds, q, &val_ds, &space, &cfg)?;
        let test_metrics = evaluate(&network, &test_ds, &space)?;
        runs.push(ObjectiveRun {
            objective,
            network,
            history,
            test_metrics,
        });
    }

    Ok(PipelineOutput {
        train: train_ds,
        val: val_ds,
        test: test_ds,
        subset,
        env_classifier,
        labeler_metrics,
        group_probs,
        runs,
    })
}
