//! Synthetic two-feature benchmark with a controlled spurious correlation.
//!
//! Each sample is `x = [z_inv, z_e]` where the invariant feature tracks the
//! class (`z_inv ~ N(y, sigma2_inv)` for `y` in {-1,+1}) and the spurious
//! feature tracks the environment (`z_e ~ N(e, sigma2_e)`). A majority
//! fraction `p` of samples has `y = e` (the correlation holds); the rest has
//! `y = -e`. Internally classes and environments are stored as {0,1} indices
//! with 0 encoding -1 and 1 encoding +1; the signed algebra exists only here.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Parameters of the synthetic generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticParams {
    /// Total sample count.
    pub n: usize,
    /// Majority fraction in (0, 1): the share of samples with `y = e`.
    pub p: f64,
    /// Variance of the invariant feature around `y`.
    pub sigma2_inv: f64,
    /// Variance of the environment feature around `e`.
    pub sigma2_e: f64,
    /// Gaussian sampling uses `rand_distr::Normal` (ziggurat) driven by
    /// ChaCha8, so this seed pins every feature value.
    pub seed: u64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        Self {
            n: 4000,
            p: 0.95,
            sigma2_inv: 0.5,
            sigma2_e: 0.05,
            seed: 0,
        }
    }
}

impl SyntheticParams {
    pub fn validate(&self) -> Result<()> {
        if self.n < 4 {
            return Err(Error::InvalidConfig(format!(
                "synthetic n must be at least 4, got {}",
                self.n
            )));
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "majority fraction must lie in (0, 1), got {}",
                self.p
            )));
        }
        if self.sigma2_inv <= 0.0 || self.sigma2_e <= 0.0 {
            return Err(Error::InvalidConfig(
                "feature variances must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Deterministic group sizes in group-index order
    /// `g = y_idx * 2 + e_idx`, i.e. `[(-1,-1), (-1,+1), (+1,-1), (+1,+1)]`.
    ///
    /// `n_maj = round(p * n)` splits evenly across the two majority groups
    /// (g0 and g3, where `y = e`), odd remainders going to the first group of
    /// the pair; the minority pair (g1, g2) divides `n - n_maj` the same way.
    pub fn group_sizes(&self) -> Result<[usize; 4]> {
        self.validate()?;
        let n_maj = (self.p * self.n as f64).round() as usize;
        let n_min = self.n - n_maj;
        let sizes = [
            n_maj.div_ceil(2), // g0 = (y=-1, e=-1), majority
            n_min.div_ceil(2), // g1 = (y=-1, e=+1), minority
            n_min / 2,         // g2 = (y=+1, e=-1), minority
            n_maj / 2,         // g3 = (y=+1, e=+1), majority
        ];
        if sizes.iter().any(|&s| s == 0) {
            return Err(Error::InvalidConfig(format!(
                "degenerate synthetic sizes: n = {}, p = {} leaves an empty group",
                self.n, self.p
            )));
        }
        Ok(sizes)
    }
}

/// Generates the benchmark dataset. Rows are emitted in group-index order;
/// callers that need shuffled access shuffle by index.
pub fn generate_synthetic(params: &SyntheticParams) -> Result<Dataset> {
    let sizes = params.group_sizes()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let inv = Normal::new(0.0, params.sigma2_inv.sqrt())
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let env_noise =
        Normal::new(0.0, params.sigma2_e.sqrt()).map_err(|e| Error::InvalidConfig(e.to_string()))?;

    let mut x = Matrix::zeros(params.n, 2);
    let mut y = Vec::with_capacity(params.n);
    let mut env = Vec::with_capacity(params.n);
    let mut row = 0;
    for (g, &size) in sizes.iter().enumerate() {
        let (y_idx, e_idx) = (g / 2, g % 2);
        let y_signed = (2 * y_idx) as f64 - 1.0;
        let e_signed = (2 * e_idx) as f64 - 1.0;
        for _ in 0..size {
            x.set(row, 0, y_signed + inv.sample(&mut rng));
            x.set(row, 1, e_signed + env_noise.sample(&mut rng));
            y.push(y_idx);
            env.push(e_idx);
            row += 1;
        }
    }
    Dataset::new(x, y, Some(env), None)
}
