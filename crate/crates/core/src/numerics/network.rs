//! Feedforward classifier with explicit gradients.
//!
//! The network is a plain multi-layer perceptron: rectified-linear hidden
//! layers and a raw-logit output layer feeding softmax cross-entropy.
//! Networks are immutable snapshots; every update returns a new value, so
//! checkpointing is a clone and instances can be sent across threads.

use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Hidden-layer activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    Relu,
}

/// A feedforward network: `layer_sizes[0]` inputs through rectified-linear
/// hidden layers to `layer_sizes.last()` raw logits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    layer_sizes: Vec<usize>,
    weights: Vec<Matrix>,
    biases: Vec<Vec<f64>>,
    activation: Activation,
}

/// Parameter gradients, shape-congruent with the owning [`Network`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub d_weights: Vec<Matrix>,
    pub d_biases: Vec<Vec<f64>>,
}

impl Gradients {
    /// Zero gradients for the given network.
    pub fn zeros_like(net: &Network) -> Self {
        Self {
            d_weights: net
                .weights
                .iter()
                .map(|w| Matrix::zeros(w.rows(), w.cols()))
                .collect(),
            d_biases: net.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    /// True when every entry is finite.
    pub fn is_finite(&self) -> bool {
        self.d_weights
            .iter()
            .all(|m| m.data().iter().all(|v| v.is_finite()))
            && self
                .d_biases
                .iter()
                .all(|b| b.iter().all(|v| v.is_finite()))
    }

    /// Largest absolute entry; useful for oracle comparisons.
    pub fn max_abs(&self) -> f64 {
        let w = self
            .d_weights
            .iter()
            .flat_map(|m| m.data().iter())
            .fold(0.0_f64, |acc, v| acc.max(v.abs()));
        self.d_biases
            .iter()
            .flatten()
            .fold(w, |acc, v| acc.max(v.abs()))
    }
}

fn validate_layer_sizes(layer_sizes: &[usize]) -> Result<()> {
    if layer_sizes.len() < 2 {
        return Err(Error::InvalidConfig(
            "a network needs at least an input and an output layer".into(),
        ));
    }
    if layer_sizes.iter().any(|&s| s == 0) {
        return Err(Error::InvalidConfig("layer sizes must be positive".into()));
    }
    Ok(())
}

impl Network {
    /// Network with all parameters zero.
    pub fn zeros(layer_sizes: &[usize]) -> Result<Self> {
        validate_layer_sizes(layer_sizes)?;
        let weights = layer_sizes
            .windows(2)
            .map(|w| Matrix::zeros(w[0], w[1]))
            .collect();
        let biases = layer_sizes[1..].iter().map(|&s| vec![0.0; s]).collect();
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            weights,
            biases,
            activation: Activation::Relu,
        })
    }

    /// Seeded Xavier-uniform initialization: weights drawn from
    /// `±sqrt(6 / (fan_in + fan_out))` per layer, biases zero. The stream is
    /// ChaCha8, so a seed pins every parameter.
    pub fn xavier_init(layer_sizes: &[usize], seed: u64) -> Result<Self> {
        validate_layer_sizes(layer_sizes)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::with_capacity(layer_sizes.len() - 1);
        for w in layer_sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let dist = Uniform::new_inclusive(-limit, limit)
                .map_err(|e| Error::InvalidConfig(e.to_string()))?;
            let data = (0..fan_in * fan_out)
                .map(|_| dist.sample(&mut rng))
                .collect();
            weights.push(Matrix::from_vec(fan_in, fan_out, data)?);
        }
        let biases = layer_sizes[1..].iter().map(|&s| vec![0.0; s]).collect();
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            weights,
            biases,
            activation: Activation::Relu,
        })
    }

    /// Builds a network from explicit parameters, checking shape congruence.
    pub fn from_parts(weights: Vec<Matrix>, biases: Vec<Vec<f64>>) -> Result<Self> {
        if weights.is_empty() || weights.len() != biases.len() {
            return Err(Error::InvalidConfig(
                "weights and biases must be non-empty and equal in number".into(),
            ));
        }
        let mut layer_sizes = vec![weights[0].rows()];
        for (i, (w, b)) in weights.iter().zip(&biases).enumerate() {
            if w.rows() != layer_sizes[i] {
                return Err(Error::DimMismatch {
                    context: "Network::from_parts",
                    expected: format!("{} input rows at layer {i}", layer_sizes[i]),
                    actual: format!("{} rows", w.rows()),
                });
            }
            if b.len() != w.cols() {
                return Err(Error::DimMismatch {
                    context: "Network::from_parts",
                    expected: format!("bias length {} at layer {i}", w.cols()),
                    actual: format!("length {}", b.len()),
                });
            }
            layer_sizes.push(w.cols());
        }
        Ok(Self {
            layer_sizes,
            weights,
            biases,
            activation: Activation::Relu,
        })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn weights(&self) -> &[Matrix] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    /// Total parameter count (weights plus biases).
    pub fn num_params(&self) -> usize {
        self.weights
            .iter()
            .map(|w| w.rows() * w.cols())
            .sum::<usize>()
            + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    /// Reads the parameter at a flat index: all weight matrices in layer
    /// order (row-major), then all bias vectors.
    pub fn param(&self, mut idx: usize) -> f64 {
        for w in &self.weights {
            let n = w.rows() * w.cols();
            if idx < n {
                return w.data()[idx];
            }
            idx -= n;
        }
        for b in &self.biases {
            if idx < b.len() {
                return b[idx];
            }
            idx -= b.len();
        }
        panic!("parameter index out of range");
    }

    /// Writes the parameter at a flat index (see [`Network::param`]).
    pub fn set_param(&mut self, mut idx: usize, value: f64) {
        for w in &mut self.weights {
            let n = w.rows() * w.cols();
            if idx < n {
                w.data_mut()[idx] = value;
                return;
            }
            idx -= n;
        }
        for b in &mut self.biases {
            if idx < b.len() {
                b[idx] = value;
                return;
            }
            idx -= b.len();
        }
        panic!("parameter index out of range");
    }

    fn check_input(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.input_dim() {
            return Err(Error::DimMismatch {
                context: "Network::forward",
                expected: format!("{} input columns", self.input_dim()),
                actual: format!("{} columns", x.cols()),
            });
        }
        Ok(())
    }

    /// Forward pass over a batch. Returns raw logits, one row per input row.
    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        Ok(self.forward_cached(x)?.pop().unwrap())
    }

    /// Forward pass that keeps every post-activation layer output.
    /// `result[0]` is the input itself; `result.last()` the logits.
    fn forward_cached(&self, x: &Matrix) -> Result<Vec<Matrix>> {
        self.check_input(x)?;
        let layers = self.weights.len();
        let mut acts = Vec::with_capacity(layers + 1);
        acts.push(x.clone());
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = acts[l].matmul(w)?;
            for r in 0..z.rows() {
                let row = z.row_mut(r);
                for (v, bias) in row.iter_mut().zip(b) {
                    *v += bias;
                }
                if l + 1 < layers {
                    match self.activation {
                        Activation::Relu => {
                            for v in row.iter_mut() {
                                if *v < 0.0 {
                                    *v = 0.0;
                                }
                            }
                        }
                    }
                }
            }
            acts.push(z);
        }
        acts.last().unwrap().ensure_finite("forward logits")?;
        Ok(acts)
    }

    /// Gradient of `sum_i weights[i] * cross_entropy(logits_i, labels[i])`
    /// with respect to every parameter.
    pub fn backward(
        &self,
        x: &Matrix,
        labels: &[usize],
        sample_weights: &[f64],
    ) -> Result<Gradients> {
        let n = x.rows();
        if labels.len() != n || sample_weights.len() != n {
            return Err(Error::DimMismatch {
                context: "Network::backward",
                expected: format!("{n} labels and sample weights"),
                actual: format!("{} labels, {} weights", labels.len(), sample_weights.len()),
            });
        }
        if let Some(w) = sample_weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::NonFinite {
                context: format!("backward sample weight {w}"),
            });
        }

        let acts = self.forward_cached(x)?;
        let logits = acts.last().unwrap();
        let k = self.output_dim();

        // dL/dlogits = w_i * (softmax(logits_i) - onehot(y_i))
        let mut delta = softmax_rows(logits);
        for i in 0..n {
            let y = labels[i];
            if y >= k {
                return Err(Error::LabelOutOfRange {
                    row: i,
                    label: y,
                    num_classes: k,
                });
            }
            let w = sample_weights[i];
            let row = delta.row_mut(i);
            row[y] -= 1.0;
            for v in row.iter_mut() {
                *v *= w;
            }
        }

        let mut grads = Gradients::zeros_like(self);
        for l in (0..self.weights.len()).rev() {
            let input = &acts[l];
            grads.d_weights[l] = input.transpose().matmul(&delta)?;
            let db = &mut grads.d_biases[l];
            for r in 0..delta.rows() {
                for (acc, v) in db.iter_mut().zip(delta.row(r)) {
                    *acc += v;
                }
            }
            if l > 0 {
                let mut prev = delta.matmul(&self.weights[l].transpose())?;
                // Mask by the rectifier: activations cached post-ReLU, so
                // a zero activation means a zero derivative.
                for r in 0..prev.rows() {
                    let act_row = acts[l].row(r);
                    for (v, &a) in prev.row_mut(r).iter_mut().zip(act_row) {
                        if a <= 0.0 {
                            *v = 0.0;
                        }
                    }
                }
                delta = prev;
            }
        }
        Ok(grads)
    }

    /// One SGD step with decoupled-from-nothing plain weight decay:
    /// `theta <- theta - lr * (grad + l2 * theta)`.
    pub fn sgd_step(&self, grads: &Gradients, lr: f64, l2: f64) -> Result<Network> {
        if !grads.is_finite() {
            return Err(Error::NonFinite {
                context: "sgd_step gradients".into(),
            });
        }
        if grads.d_weights.len() != self.weights.len() {
            return Err(Error::DimMismatch {
                context: "Network::sgd_step",
                expected: format!("{} layers", self.weights.len()),
                actual: format!("{} layers", grads.d_weights.len()),
            });
        }
        let mut next = self.clone();
        for (w, dw) in next.weights.iter_mut().zip(&grads.d_weights) {
            for (v, g) in w.data_mut().iter_mut().zip(dw.data()) {
                *v -= lr * (g + l2 * *v);
            }
        }
        for (b, db) in next.biases.iter_mut().zip(&grads.d_biases) {
            for (v, g) in b.iter_mut().zip(db) {
                *v -= lr * (g + l2 * *v);
            }
        }
        Ok(next)
    }
}

/// Row-wise softmax with max-subtraction.
pub fn softmax_rows(logits: &Matrix) -> Matrix {
    let mut out = logits.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}

/// Per-sample softmax cross-entropy, computed with max-subtraction so that
/// extreme logits do not overflow.
pub fn softmax_cross_entropy(logits: &Matrix, labels: &[usize]) -> Result<Vec<f64>> {
    if labels.len() != logits.rows() {
        return Err(Error::DimMismatch {
            context: "softmax_cross_entropy",
            expected: format!("{} labels", logits.rows()),
            actual: format!("{} labels", labels.len()),
        });
    }
    let k = logits.cols();
    let mut losses = Vec::with_capacity(labels.len());
    for (i, &y) in labels.iter().enumerate() {
        if y >= k {
            return Err(Error::LabelOutOfRange {
                row: i,
                label: y,
                num_classes: k,
            });
        }
        let row = logits.row(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_sum: f64 = row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        losses.push(log_sum + max - row[y]);
    }
    Ok(losses)
}

/// Central-difference gradient estimate for an arbitrary scalar loss of the
/// parameters. This is the numerical oracle the analytic [`Network::backward`]
/// is tested against; it never touches the backward pass.
pub fn finite_difference_gradient<F>(net: &Network, loss_fn: F, step: f64) -> Gradients
where
    F: Fn(&Network) -> f64,
{
    assert!(step > 0.0, "finite-difference step must be positive");
    let mut probe = net.clone();
    let mut flat = Vec::with_capacity(net.num_params());
    for idx in 0..net.num_params() {
        let orig = probe.param(idx);
        probe.set_param(idx, orig + step);
        let plus = loss_fn(&probe);
        probe.set_param(idx, orig - step);
        let minus = loss_fn(&probe);
        probe.set_param(idx, orig);
        flat.push((plus - minus) / (2.0 * step));
    }

    let mut grads = Gradients::zeros_like(net);
    let mut it = flat.into_iter();
    for dw in &mut grads.d_weights {
        for v in dw.data_mut() {
            *v = it.next().unwrap();
        }
    }
    for db in &mut grads.d_biases {
        for v in db.iter_mut() {
            *v = it.next().unwrap();
        }
    }
    grads
}
