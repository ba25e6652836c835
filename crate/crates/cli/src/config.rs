//! The experiment config file: one TOML document with a section per stage.
//! Every field has a default, so the whole chain runs with no config at all.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use pgdro_core::data::{DatasetSchema, SyntheticParams};
use pgdro_core::grouping::{EnvClassifierConfig, GroupSpace};
use pgdro_core::objectives::Objective;
use pgdro_core::training::{MaxMode, PipelineStages, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    pub out_dir: PathBuf,
    pub data: DataSection,
    pub labeling: LabelingSection,
    pub train: TrainSection,
    pub sweep: SweepSection,
    pub boundary: BoundarySection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            master_seed: 0,
            out_dir: PathBuf::from("out"),
            data: DataSection::default(),
            labeling: LabelingSection::default(),
            train: TrainSection::default(),
            sweep: SweepSection::default(),
            boundary: BoundarySection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub n: usize,
    pub p: f64,
    pub sigma2_inv: f64,
    pub sigma2_e: f64,
    pub classes: usize,
    pub envs: usize,
    pub val_per_group: usize,
    pub test_per_group: usize,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            n: 4000,
            p: 0.95,
            sigma2_inv: 0.5,
            sigma2_e: 0.05,
            classes: 2,
            envs: 2,
            val_per_group: 100,
            test_per_group: 500,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelingMode {
    /// Train an environment classifier on a small annotated subset.
    Supervised,
    /// Cosine similarity between precomputed embeddings and environment
    /// prototypes, sharpened by a temperature softmax.
    ZeroShot,
    /// Use a group-probabilities file produced elsewhere.
    GivenFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelingSection {
    pub mode: LabelingMode,
    /// Size of the annotated subset for supervised labeling.
    pub m: usize,
    /// Softmax temperature for zero-shot labeling.
    pub temperature: f64,
    /// Optional probability floor applied to the environment probabilities.
    pub epsilon_floor: f64,
    /// Zero-shot inputs: per-sample embedding CSV.
    pub embeddings: Option<PathBuf>,
    /// Zero-shot inputs: per-environment prototype CSV.
    pub prototypes: Option<PathBuf>,
    /// Given-file input: an existing group-probabilities CSV.
    pub probabilities: Option<PathBuf>,
    pub train: EnvClassifierConfig,
}

impl Default for LabelingSection {
    fn default() -> Self {
        Self {
            mode: LabelingMode::Supervised,
            m: 100,
            temperature: 0.01,
            epsilon_floor: 0.0,
            embeddings: None,
            prototypes: None,
            probabilities: None,
            train: EnvClassifierConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub objectives: Vec<Objective>,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub l2: f64,
    pub c: f64,
    pub eta_q: f64,
    pub hidden_sizes: Vec<usize>,
    pub max_mode: MaxMode,
    pub overrides: TrainOverrides,
}

impl Default for TrainSection {
    fn default() -> Self {
        let base = TrainConfig::default();
        Self {
            objectives: vec![Objective::Erm, Objective::Gdro, Objective::Pgdro],
            epochs: base.epochs,
            batch_size: base.batch_size,
            lr: base.lr,
            l2: base.l2,
            c: base.c,
            eta_q: base.eta_q,
            hidden_sizes: base.hidden_sizes,
            max_mode: base.max_mode,
            overrides: TrainOverrides::default(),
        }
    }
}

/// Per-objective hyperparameter overrides; unset fields inherit the shared
/// `[train]` values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainOverrides {
    pub erm: Option<TrainOverride>,
    pub gdro: Option<TrainOverride>,
    pub pgdro: Option<TrainOverride>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainOverride {
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub lr: Option<f64>,
    pub l2: Option<f64>,
    pub c: Option<f64>,
    pub eta_q: Option<f64>,
    pub hidden_sizes: Option<Vec<usize>>,
    pub max_mode: Option<MaxMode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub c_values: Vec<f64>,
    pub objectives: Vec<Objective>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            c_values: vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0],
            objectives: vec![Objective::Gdro, Objective::Pgdro],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundarySection {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub resolution: usize,
}

impl Default for BoundarySection {
    fn default() -> Self {
        Self {
            x_min: -3.0,
            x_max: 3.0,
            y_min: -3.0,
            y_max: 3.0,
            resolution: 200,
        }
    }
}

impl ExperimentConfig {
    /// Loads a config file, or the built-in defaults when no path is given.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let cfg = match path {
            None => Self::default(),
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("cannot read config {}", path.display()))?;
                toml::from_str(&text)
                    .with_context(|| format!("cannot parse config {}", path.display()))?
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.train.objectives.is_empty() {
            bail!("the [train] objectives list must not be empty");
        }
        if self.sweep.c_values.iter().any(|&c| c < 0.0) {
            bail!("sweep adjustment values must be non-negative");
        }
        Ok(())
    }

    pub fn schema(&self) -> DatasetSchema {
        DatasetSchema {
            num_classes: self.data.classes,
            num_envs: self.data.envs,
        }
    }

    pub fn group_space(&self) -> Result<GroupSpace> {
        Ok(GroupSpace::new(self.data.classes, self.data.envs)?)
    }

    /// Synthetic parameters with the master seed installed; stage seeds are
    /// derived from it downstream.
    pub fn synthetic_params(&self, master_seed: u64) -> SyntheticParams {
        SyntheticParams {
            n: self.data.n,
            p: self.data.p,
            sigma2_inv: self.data.sigma2_inv,
            sigma2_e: self.data.sigma2_e,
            seed: master_seed,
        }
    }

    /// The training configuration for one objective: shared `[train]` values
    /// plus that objective's overrides. The seed is filled by the caller.
    pub fn train_config(&self, objective: Objective) -> TrainConfig {
        let t = &self.train;
        let mut cfg = TrainConfig {
            objective,
            epochs: t.epochs,
            batch_size: t.batch_size,
            lr: t.lr,
            l2: t.l2,
            c: t.c,
            eta_q: t.eta_q,
            hidden_sizes: t.hidden_sizes.clone(),
            seed: 0,
            max_mode: t.max_mode,
        };
        let over = match objective {
            Objective::Erm => &t.overrides.erm,
            Objective::Gdro => &t.overrides.gdro,
            Objective::Pgdro => &t.overrides.pgdro,
        };
        if let Some(over) = over {
            if let Some(v) = over.epochs {
                cfg.epochs = v;
            }
            if let Some(v) = over.batch_size {
                cfg.batch_size = v;
            }
            if let Some(v) = over.lr {
                cfg.lr = v;
            }
            if let Some(v) = over.l2 {
                cfg.l2 = v;
            }
            if let Some(v) = over.c {
                cfg.c = v;
            }
            if let Some(v) = over.eta_q {
                cfg.eta_q = v;
            }
            if let Some(v) = &over.hidden_sizes {
                cfg.hidden_sizes = v.clone();
            }
            if let Some(v) = over.max_mode {
                cfg.max_mode = v;
            }
        }
        cfg
    }

    /// Stage bundle for the end-to-end pipeline.
    pub fn pipeline_stages(&self) -> PipelineStages {
        PipelineStages {
            val_per_group: self.data.val_per_group,
            test_per_group: self.data.test_per_group,
            labeler: self.labeling.train.clone(),
            train: self
                .train
                .objectives
                .iter()
                .map(|&objective| self.train_config(objective))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = ExperimentConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        let back: ExperimentConfig = toml::from_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn overrides_apply_per_objective() {
        let text = r#"
            [train]
            c = 2.0
            [train.overrides.pgdro]
            c = 4.5
            lr = 0.05
        "#;
        let cfg: ExperimentConfig = toml::from_str(text).unwrap();
        assert_eq!(cfg.train_config(Objective::Gdro).c, 2.0);
        let pg = cfg.train_config(Objective::Pgdro);
        assert_eq!(pg.c, 4.5);
        assert_eq!(pg.lr, 0.05);
        assert_eq!(pg.epochs, 300);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = toml::from_str::<ExperimentConfig>("[data]\nnn = 4\n").unwrap_err();
        assert!(err.to_string().contains("nn"));
    }

    #[test]
    fn empty_objectives_fail_validation() {
        let cfg: ExperimentConfig = toml::from_str("[train]\nobjectives = []\n").unwrap();
        assert!(cfg.validate().is_err());
    }
}
