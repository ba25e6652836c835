//! Pseudo-labelers: the supervised environment classifier and the zero-shot
//! embedding-similarity labeler.

use serde::{Deserialize, Serialize};

use crate::data::{frequency_weighted_indices, Dataset, LabeledSubset};
use crate::error::{Error, Result};
use crate::grouping::{EnvProbabilities, GroupSpace};
use crate::numerics::{softmax_rows, Matrix, Network};

/// Training configuration for the supervised environment classifier. The
/// architecture mirrors the main model's default shape; training is a fixed
/// epoch budget (no validation-based selection).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvClassifierConfig {
    pub hidden_sizes: Vec<usize>,
    pub lr: f64,
    pub l2: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for EnvClassifierConfig {
    fn default() -> Self {
        Self {
            hidden_sizes: vec![16, 16, 16],
            lr: 0.1,
            l2: 1e-4,
            epochs: 20,
            batch_size: 32,
            seed: 0,
        }
    }
}

/// Trains a classifier mapping features to environment logits by minimizing
/// cross-entropy over frequency-weighted draws from the labeled subset.
/// Sampling weights each member inversely to its group's count, so rare
/// groups are seen as often as common ones. Deterministic per seed.
pub fn train_env_classifier(
    subset: &LabeledSubset,
    parent: &Dataset,
    cfg: &EnvClassifierConfig,
    space: &GroupSpace,
) -> Result<Network> {
    if subset.is_empty() {
        return Err(Error::InvalidConfig(
            "labeled subset is empty; cannot train an environment classifier".into(),
        ));
    }
    for env in 0..space.num_envs() {
        if !subset.env().contains(&env) {
            return Err(Error::MissingEnvironmentClass { env });
        }
    }
    if cfg.batch_size == 0 || cfg.lr <= 0.0 {
        return Err(Error::InvalidConfig(
            "environment classifier needs a positive batch size and learning rate".into(),
        ));
    }

    let mut layer_sizes = vec![parent.dim()];
    layer_sizes.extend_from_slice(&cfg.hidden_sizes);
    layer_sizes.push(space.num_envs());
    let mut net = Network::xavier_init(&layer_sizes, cfg.seed)?;

    let draws_per_epoch = subset.len();
    let env_by_index: std::collections::HashMap<usize, usize> = subset
        .indices()
        .iter()
        .copied()
        .zip(subset.env().iter().copied())
        .collect();

    for epoch in 0..cfg.epochs {
        let stream = frequency_weighted_indices(
            subset,
            space,
            draws_per_epoch,
            cfg.seed
                .wrapping_add(1)
                .wrapping_add(epoch as u64),
        )?;
        for batch in stream.chunks(cfg.batch_size) {
            let x = parent.features().select_rows(batch);
            let targets: Vec<usize> = batch.iter().map(|i| env_by_index[i]).collect();
            let weights = vec![1.0 / batch.len() as f64; batch.len()];
            let grads = net.backward(&x, &targets, &weights)?;
            net = net.sgd_step(&grads, cfg.lr, cfg.l2)?;
        }
    }
    Ok(net)
}

/// Softmax of the classifier's logits, one distribution per row.
pub fn predict_env_probs(net: &Network, x: &Matrix) -> Result<EnvProbabilities> {
    let logits = net.forward(x)?;
    EnvProbabilities::from_matrix(softmax_rows(&logits))
}

/// Precomputed embeddings standing in for an external encoder: one row per
/// input sample and one prototype row per environment description.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    inputs: Matrix,
    prototypes: Matrix,
    temperature: f64,
}

impl EmbeddingSet {
    pub fn new(inputs: Matrix, prototypes: Matrix, temperature: f64) -> Result<Self> {
        if inputs.cols() != prototypes.cols() {
            return Err(Error::DimMismatch {
                context: "EmbeddingSet::new",
                expected: format!("{} embedding dims", prototypes.cols()),
                actual: format!("{} dims", inputs.cols()),
            });
        }
        if !(temperature > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "softmax temperature must be positive, got {temperature}"
            )));
        }
        for (kind, m) in [("input", &inputs), ("prototype", &prototypes)] {
            for r in 0..m.rows() {
                if norm(m.row(r)) == 0.0 {
                    return Err(Error::ZeroNormEmbedding { kind, row: r });
                }
            }
        }
        Ok(Self {
            inputs,
            prototypes,
            temperature,
        })
    }

    pub fn num_inputs(&self) -> usize {
        self.inputs.rows()
    }

    pub fn num_envs(&self) -> usize {
        self.prototypes.rows()
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Zero-shot environment probabilities: cosine similarity between each input
/// embedding and each environment prototype, sharpened by a temperature
/// softmax per row.
pub fn zero_shot_env_probs(emb: &EmbeddingSet) -> Result<EnvProbabilities> {
    let e = emb.num_envs();
    let mut probs = Matrix::zeros(emb.num_inputs(), e);
    let proto_norms: Vec<f64> = (0..e).map(|r| norm(emb.prototypes.row(r))).collect();
    for i in 0..emb.num_inputs() {
        let row = emb.inputs.row(i);
        let n_i = norm(row);
        let mut scaled: Vec<f64> = (0..e)
            .map(|j| dot(row, emb.prototypes.row(j)) / (n_i * proto_norms[j]) / emb.temperature)
            .collect();
        let max = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in &mut scaled {
            *v = (*v - max).exp();
            sum += *v;
        }
        for (j, v) in scaled.iter().enumerate() {
            probs.set(i, j, v / sum);
        }
    }
    EnvProbabilities::from_matrix(probs)
}
