//! Training objectives: ERM, hard-label group-robust risk (G-DRO), and its
//! probabilistic-group generalization (PG-DRO).
//!
//! The robust risk is a max over groups of the group's weighted average loss
//! plus a size-dependent generalization adjustment:
//!
//! ```text
//! max_g { (1/n~_g) * sum_i Q[i,g] * loss_i  +  C / sqrt(n~_g) }
//! ```
//!
//! where `n~_g = sum_i Q[i,g]` is the group's effective size — the total soft
//! membership mass. With one-hot `Q` this is exactly the hard-label worst-group
//! risk; [`gdro_risk`] computes that case independently from indicator counts
//! so the two routes can be checked against each other.
//!
//! Minibatch training needs the max turned into per-sample weights. A weight
//! vector on the group simplex (`RobustState::q`) is either moved by an
//! exponentiated-gradient update ([`update_group_weights`]) or snapped to the
//! argmax group (hard-max mode), and [`sample_weights`] folds it back onto
//! samples so that one weighted backward pass descends the q-weighted risk.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grouping::GroupProbabilities;

/// Groups with effective size below this are treated as unoccupied: they are
/// excluded from the max and carry zero weight, since the adjustment
/// `C / sqrt(n~_g)` diverges as the mass vanishes.
pub const OCCUPANCY_THRESHOLD: f64 = 1e-8;

/// Which empirical risk is being minimized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    Erm,
    Gdro,
    Pgdro,
}

impl Objective {
    pub fn as_str(self) -> &'static str {
        match self {
            Objective::Erm => "erm",
            Objective::Gdro => "gdro",
            Objective::Pgdro => "pgdro",
        }
    }
}

impl std::fmt::Display for Objective {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "erm" => Ok(Objective::Erm),
            "gdro" | "g-dro" => Ok(Objective::Gdro),
            "pgdro" | "pg-dro" => Ok(Objective::Pgdro),
            other => Err(Error::InvalidConfig(format!("unknown objective `{other}`"))),
        }
    }
}

/// The state of the max-player: a weight vector on the group simplex plus
/// the quantities it is updated against. Effective sizes are computed once
/// per dataset, never per batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustState {
    q: Vec<f64>,
    n_tilde: Vec<f64>,
    c: f64,
    eta_q: f64,
    objective: Objective,
}

impl RobustState {
    /// Starts with uniform weight over occupied groups; unoccupied groups
    /// get exactly zero and stay there.
    pub fn new(objective: Objective, n_tilde: Vec<f64>, c: f64, eta_q: f64) -> Self {
        let occupied = n_tilde
            .iter()
            .filter(|&&n| n >= OCCUPANCY_THRESHOLD)
            .count()
            .max(1);
        let q = n_tilde
            .iter()
            .map(|&n| {
                if n >= OCCUPANCY_THRESHOLD {
                    1.0 / occupied as f64
                } else {
                    0.0
                }
            })
            .collect();
        Self {
            q,
            n_tilde,
            c,
            eta_q,
            objective,
        }
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn n_tilde(&self) -> &[f64] {
        &self.n_tilde
    }

    pub fn adjustment(&self) -> f64 {
        self.c
    }

    pub fn eta_q(&self) -> f64 {
        self.eta_q
    }

    pub fn objective(&self) -> Objective {
        self.objective
    }

    pub fn num_groups(&self) -> usize {
        self.n_tilde.len()
    }

    pub fn is_occupied(&self, g: usize) -> bool {
        self.n_tilde[g] >= OCCUPANCY_THRESHOLD
    }

    /// Concentrates all weight on one group (hard-max mode).
    pub fn with_one_hot(&self, group: usize) -> RobustState {
        let mut next = self.clone();
        next.q.iter_mut().for_each(|v| *v = 0.0);
        next.q[group] = 1.0;
        next
    }
}

/// Per-group risks together with the winning group and objective value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRiskReport {
    /// Unadjusted weighted average loss per group; zero for unoccupied groups.
    pub per_group_risk: Vec<f64>,
    /// `per_group_risk[g] + C / sqrt(n~_g)` for occupied groups, zero otherwise.
    pub adjusted_risk: Vec<f64>,
    /// Argmax of the adjusted risk over occupied groups (ties toward the
    /// lowest index).
    pub worst_group: usize,
    /// The adjusted risk of the worst group.
    pub objective_value: f64,
}

/// Effective group sizes: column sums of the group-probability matrix.
pub fn effective_group_sizes(q: &GroupProbabilities) -> Vec<f64> {
    let mut sizes = vec![0.0; q.num_groups()];
    for i in 0..q.rows() {
        for (acc, &v) in sizes.iter_mut().zip(q.row(i)) {
            *acc += v;
        }
    }
    sizes
}

/// Soft per-group risks: `L_g = (1/n~_g) * sum_i Q[i,g] * losses[i]`.
/// Unoccupied groups report zero.
pub fn per_group_weighted_loss(
    losses: &[f64],
    q: &GroupProbabilities,
    n_tilde: &[f64],
) -> Vec<f64> {
    assert_eq!(losses.len(), q.rows(), "losses must match Q rows");
    assert_eq!(n_tilde.len(), q.num_groups(), "n_tilde must match Q columns");
    let mut sums = vec![0.0; q.num_groups()];
    for (i, &loss) in losses.iter().enumerate() {
        for (acc, &mass) in sums.iter_mut().zip(q.row(i)) {
            *acc += mass * loss;
        }
    }
    sums.iter()
        .zip(n_tilde)
        .map(|(&s, &n)| if n >= OCCUPANCY_THRESHOLD { s / n } else { 0.0 })
        .collect()
}

fn report_from_group_risks(per_group_risk: Vec<f64>, n_tilde: &[f64], c: f64) -> GroupRiskReport {
    let adjusted_risk: Vec<f64> = per_group_risk
        .iter()
        .zip(n_tilde)
        .map(|(&l, &n)| {
            if n >= OCCUPANCY_THRESHOLD {
                l + c / n.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let mut worst_group = 0;
    let mut best = f64::NEG_INFINITY;
    for (g, (&a, &n)) in adjusted_risk.iter().zip(n_tilde).enumerate() {
        if n >= OCCUPANCY_THRESHOLD && a > best {
            best = a;
            worst_group = g;
        }
    }
    let objective_value = if best == f64::NEG_INFINITY { 0.0 } else { best };
    GroupRiskReport {
        per_group_risk,
        adjusted_risk,
        worst_group,
        objective_value,
    }
}

/// The probabilistic-group robust risk.
pub fn pg_dro_risk(
    losses: &[f64],
    q: &GroupProbabilities,
    n_tilde: &[f64],
    c: f64,
) -> GroupRiskReport {
    assert!(c >= 0.0, "adjustment constant must be non-negative");
    report_from_group_risks(per_group_weighted_loss(losses, q, n_tilde), n_tilde, c)
}

/// The hard-label worst-group risk, computed from indicator counts. This is
/// deliberately independent of the soft path so the two can be compared.
pub fn gdro_risk(
    losses: &[f64],
    groups: &[usize],
    num_groups: usize,
    c: f64,
) -> Result<GroupRiskReport> {
    assert!(c >= 0.0, "adjustment constant must be non-negative");
    if losses.len() != groups.len() {
        return Err(Error::DimMismatch {
            context: "gdro_risk",
            expected: format!("{} group labels", losses.len()),
            actual: format!("{} labels", groups.len()),
        });
    }
    let mut sums = vec![0.0; num_groups];
    let mut counts = vec![0.0f64; num_groups];
    for (&loss, &g) in losses.iter().zip(groups) {
        if g >= num_groups {
            return Err(Error::IndexOutOfRange {
                what: "group",
                value: g,
                bound: num_groups,
            });
        }
        sums[g] += loss;
        counts[g] += 1.0;
    }
    let per_group_risk: Vec<f64> = sums
        .iter()
        .zip(&counts)
        .map(|(&s, &n)| if n > 0.0 { s / n } else { 0.0 })
        .collect();
    Ok(report_from_group_risks(per_group_risk, &counts, c))
}

/// Plain average loss.
pub fn erm_risk(losses: &[f64]) -> f64 {
    if losses.is_empty() {
        return 0.0;
    }
    losses.iter().sum::<f64>() / losses.len() as f64
}

/// One multiplicative-weights step on the simplex:
/// `q_g <- q_g * exp(eta_q * adjusted_risk_g)`, renormalized. The exponent is
/// shifted by the maximum occupied risk, which leaves the result unchanged in
/// exact arithmetic but keeps the update stable for large risks. As
/// `eta_q -> inf` the update concentrates on the argmax group.
pub fn update_group_weights(state: &RobustState, adjusted_risk: &[f64]) -> Result<RobustState> {
    assert_eq!(
        adjusted_risk.len(),
        state.num_groups(),
        "risk vector must match the group count"
    );
    if state.eta_q <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "group-weight step size must be positive, got {}",
            state.eta_q
        )));
    }
    let mut shift = f64::NEG_INFINITY;
    for (g, &r) in adjusted_risk.iter().enumerate() {
        if !r.is_finite() {
            return Err(Error::NonFinite {
                context: format!("adjusted risk for group {g}"),
            });
        }
        if state.is_occupied(g) && r > shift {
            shift = r;
        }
    }
    if shift == f64::NEG_INFINITY {
        shift = 0.0;
    }

    let mut next = state.clone();
    let mut sum = 0.0;
    for (g, q) in next.q.iter_mut().enumerate() {
        if state.is_occupied(g) {
            *q *= (state.eta_q * (adjusted_risk[g] - shift)).exp();
        } else {
            *q = 0.0;
        }
        sum += *q;
    }
    if sum <= 0.0 || !sum.is_finite() {
        return Err(Error::NonFinite {
            context: "group-weight normalization".into(),
        });
    }
    for q in &mut next.q {
        *q /= sum;
    }
    Ok(next)
}

/// Folds the group weights back onto samples:
/// `w_i = sum_g q_g * Q[i,g] / n~_g`. Summing `w_i * losses[i]` then equals
/// `sum_g q_g * L_g`, so a weighted backward pass is exactly the gradient of
/// the q-weighted risk (the adjustment is constant in the parameters). Under
/// ERM the weights are uniform `1/N`.
pub fn sample_weights(state: &RobustState, q: &GroupProbabilities) -> Vec<f64> {
    let n = q.rows();
    if state.objective == Objective::Erm {
        return vec![1.0 / n as f64; n];
    }
    (0..n)
        .map(|i| {
            let row = q.row(i);
            let mut w = 0.0;
            for g in 0..state.num_groups() {
                if state.is_occupied(g) {
                    w += state.q[g] * row[g] / state.n_tilde[g];
                }
            }
            w
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Matrix;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn soft_q(rows: &[Vec<f64>]) -> GroupProbabilities {
        GroupProbabilities::from_matrix(Matrix::from_rows(rows).unwrap()).unwrap()
    }

    fn random_hard_instance(
        rng: &mut ChaCha8Rng,
        max_n: usize,
        max_g: usize,
    ) -> (Vec<f64>, Vec<usize>, usize) {
        let n = rng.random_range(1..=max_n);
        let num_groups = rng.random_range(1..=max_g);
        let losses = (0..n).map(|_| rng.random_range(0.0..5.0)).collect();
        let groups = (0..n).map(|_| rng.random_range(0..num_groups)).collect();
        (losses, groups, num_groups)
    }

    #[test]
    fn effective_sizes_reduce_to_hard_counts() {
        let q = GroupProbabilities::one_hot(&[0, 2, 2, 1, 2], 4).unwrap();
        assert_eq!(effective_group_sizes(&q), vec![1.0, 1.0, 3.0, 0.0]);
    }

    #[test]
    fn effective_sizes_hand_case() {
        let q = soft_q(&[vec![0.0, 0.0, 0.3, 0.7], vec![0.5, 0.5, 0.0, 0.0]]);
        assert_eq!(effective_group_sizes(&q), vec![0.5, 0.5, 0.3, 0.7]);
    }

    #[test]
    fn effective_sizes_sum_to_n() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let n = rng.random_range(1..40);
            let g = rng.random_range(1..8);
            let mut m = Matrix::zeros(n, g);
            for i in 0..n {
                let mut raw: Vec<f64> = (0..g).map(|_| rng.random_range(0.0..1.0)).collect();
                let sum: f64 = raw.iter().sum();
                for v in &mut raw {
                    *v /= sum;
                }
                m.row_mut(i).copy_from_slice(&raw);
            }
            let q = GroupProbabilities::from_matrix(m).unwrap();
            let total: f64 = effective_group_sizes(&q).iter().sum();
            assert!((total - n as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn one_hot_group_losses_are_group_means() {
        let q = GroupProbabilities::one_hot(&[0, 0, 1], 2).unwrap();
        let n_tilde = effective_group_sizes(&q);
        let risks = per_group_weighted_loss(&[1.0, 3.0, 5.0], &q, &n_tilde);
        assert_eq!(risks, vec![2.0, 5.0]);
    }

    #[test]
    fn constant_losses_give_constant_group_risk() {
        let q = soft_q(&[vec![0.5, 0.5], vec![0.2, 0.8], vec![1.0, 0.0]]);
        let n_tilde = effective_group_sizes(&q);
        let risks = per_group_weighted_loss(&[2.5, 2.5, 2.5], &q, &n_tilde);
        for r in risks {
            assert_relative_eq!(r, 2.5, max_relative = 1e-12);
        }
    }

    #[test]
    fn mixed_q_hand_computed_group_risks() {
        // losses (1, 2, 4); Q rows (0.2,0.8), (0.5,0.5), (1,0):
        //   n~ = (1.7, 1.3)
        //   L_0 = (0.2 + 1.0 + 4.0) / 1.7 = 5.2/1.7
        //   L_1 = (0.8 + 1.0 + 0.0) / 1.3 = 1.8/1.3
        let q = soft_q(&[vec![0.2, 0.8], vec![0.5, 0.5], vec![1.0, 0.0]]);
        let n_tilde = effective_group_sizes(&q);
        let risks = per_group_weighted_loss(&[1.0, 2.0, 4.0], &q, &n_tilde);
        assert_relative_eq!(risks[0], 3.058823529411765, max_relative = 1e-12);
        assert_relative_eq!(risks[1], 1.384615384615385, max_relative = 1e-12);
    }

    #[test]
    fn adjusted_risk_hand_case() {
        // Four unit-loss samples in group 0, one 0.2-loss sample in group 1:
        // L = (1.0, 0.2), n~ = (4, 1), C = 1 -> adjusted (1.5, 1.2), worst 0.
        let q = GroupProbabilities::one_hot(&[0, 0, 0, 0, 1], 2).unwrap();
        let n_tilde = effective_group_sizes(&q);
        let report = pg_dro_risk(&[1.0, 1.0, 1.0, 1.0, 0.2], &q, &n_tilde, 1.0);
        assert_relative_eq!(report.adjusted_risk[0], 1.5, max_relative = 1e-12);
        assert_relative_eq!(report.adjusted_risk[1], 1.2, max_relative = 1e-12);
        assert_eq!(report.worst_group, 0);
        assert_relative_eq!(report.objective_value, 1.5, max_relative = 1e-12);
    }

    #[test]
    fn large_adjustment_flips_worst_group_to_smallest() {
        // With L = (1.0, 0.2), n~ = (4, 1): group 1 wins once
        // 0.2 + C > 1.0 + C/2, i.e. C > 1.6. Check both sides of the
        // analytically computed threshold.
        let below = report_from_group_risks(vec![1.0, 0.2], &[4.0, 1.0], 1.59);
        assert_eq!(below.worst_group, 0);
        let above = report_from_group_risks(vec![1.0, 0.2], &[4.0, 1.0], 1.61);
        assert_eq!(above.worst_group, 1);
    }

    #[test]
    fn increasing_c_never_moves_worst_toward_larger_groups() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let g = rng.random_range(2..6);
            let risks: Vec<f64> = (0..g).map(|_| rng.random_range(0.0..2.0)).collect();
            let n_tilde: Vec<f64> = (0..g).map(|_| rng.random_range(0.5..50.0)).collect();
            let mut last_size = f64::NEG_INFINITY;
            let mut last_c = -1.0;
            for step in 0..12 {
                let c = step as f64 * 0.5;
                let report = report_from_group_risks(risks.clone(), &n_tilde, c);
                let size = n_tilde[report.worst_group];
                if last_c >= 0.0 {
                    assert!(
                        size <= last_size + 1e-12,
                        "worst group drifted to a larger group as C grew"
                    );
                }
                last_size = size;
                last_c = c;
            }
        }
    }

    #[test]
    fn pg_dro_with_one_hot_q_equals_gdro_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..500 {
            let (losses, groups, num_groups) = random_hard_instance(&mut rng, 50, 8);
            let c = rng.random_range(0.0..3.0);
            let q = GroupProbabilities::one_hot(&groups, num_groups).unwrap();
            let n_tilde = effective_group_sizes(&q);
            let soft = pg_dro_risk(&losses, &q, &n_tilde, c);
            let hard = gdro_risk(&losses, &groups, num_groups, c).unwrap();
            assert_eq!(soft, hard);
        }
    }

    #[test]
    fn gdro_single_group_is_mean_plus_adjustment() {
        let losses = [1.0, 2.0, 3.0, 6.0];
        let report = gdro_risk(&losses, &[0, 0, 0, 0], 1, 2.0).unwrap();
        assert_relative_eq!(report.objective_value, 3.0 + 2.0 / 2.0, max_relative = 1e-12);
        assert_eq!(report.worst_group, 0);
    }

    #[test]
    fn gdro_excludes_empty_groups() {
        let report = gdro_risk(&[0.1, 0.2], &[0, 0], 3, 5.0).unwrap();
        assert_eq!(report.worst_group, 0);
        assert_eq!(report.adjusted_risk[1], 0.0);
        assert_eq!(report.adjusted_risk[2], 0.0);
    }

    #[test]
    fn gdro_rejects_out_of_range_group() {
        assert!(gdro_risk(&[1.0], &[4], 2, 0.0).is_err());
    }

    #[test]
    fn erm_risk_is_the_mean() {
        assert_eq!(erm_risk(&[3.0, 3.0, 3.0]), 3.0);
        assert_eq!(erm_risk(&[0.0, 2.0]), 1.0);
        // Single-group reduction: the group-weighted loss collapsed to one
        // group is the plain mean.
        let q = GroupProbabilities::one_hot(&[0, 0], 1).unwrap();
        let n_tilde = effective_group_sizes(&q);
        let group = per_group_weighted_loss(&[0.0, 2.0], &q, &n_tilde);
        assert_eq!(group[0], erm_risk(&[0.0, 2.0]));
    }

    #[test]
    fn equal_risks_leave_weights_unchanged() {
        let state = RobustState::new(Objective::Pgdro, vec![2.0, 2.0, 2.0], 0.0, 0.5);
        let next = update_group_weights(&state, &[1.0, 1.0, 1.0]).unwrap();
        for (&a, &b) in state.q().iter().zip(next.q()) {
            assert_relative_eq!(a, b, max_relative = 1e-12);
        }
    }

    #[test]
    fn eg_update_closed_form() {
        // q = (0.5, 0.5), risks (1, 0), eta = 1 -> q' = (e, 1)/(e + 1).
        let state = RobustState::new(Objective::Pgdro, vec![1.0, 1.0], 0.0, 1.0);
        let next = update_group_weights(&state, &[1.0, 0.0]).unwrap();
        let e = std::f64::consts::E;
        assert_relative_eq!(next.q()[0], e / (e + 1.0), max_relative = 1e-12);
        assert_relative_eq!(next.q()[1], 1.0 / (e + 1.0), max_relative = 1e-12);
    }

    #[test]
    fn repeated_updates_concentrate_on_argmax() {
        let mut state = RobustState::new(Objective::Pgdro, vec![1.0, 1.0, 1.0], 0.0, 0.3);
        let risks = [0.5, 2.0, 1.0];
        for _ in 0..200 {
            state = update_group_weights(&state, &risks).unwrap();
        }
        assert!(state.q()[1] > 0.999999, "q = {:?}", state.q());
    }

    #[test]
    fn large_eta_recovers_hard_max() {
        let state = RobustState::new(Objective::Pgdro, vec![1.0, 1.0, 1.0], 0.0, 1e6);
        let next = update_group_weights(&state, &[0.1, 0.9, 0.3]).unwrap();
        assert!(next.q()[1] > 1.0 - 1e-9);
    }

    #[test]
    fn weights_stay_on_the_simplex() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut state = RobustState::new(Objective::Pgdro, vec![3.0, 1.0, 0.0, 2.0], 1.0, 0.05);
        for _ in 0..500 {
            let risks: Vec<f64> = (0..4).map(|_| rng.random_range(0.0..100.0)).collect();
            state = update_group_weights(&state, &risks).unwrap();
            let sum: f64 = state.q().iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
            assert_eq!(state.q()[2], 0.0, "unoccupied group must keep zero weight");
        }
    }

    #[test]
    fn non_finite_risk_is_rejected() {
        let state = RobustState::new(Objective::Pgdro, vec![1.0, 1.0], 0.0, 1.0);
        assert!(update_group_weights(&state, &[f64::NAN, 0.0]).is_err());
        assert!(update_group_weights(&state, &[f64::INFINITY, 0.0]).is_err());
    }

    #[test]
    fn hard_one_hot_weights_select_worst_group_members() {
        let groups = [0usize, 1, 0, 1, 1];
        let q = GroupProbabilities::one_hot(&groups, 2).unwrap();
        let n_tilde = effective_group_sizes(&q);
        let state = RobustState::new(Objective::Gdro, n_tilde, 0.0, 1.0).with_one_hot(1);
        let weights = sample_weights(&state, &q);
        for (i, &g) in groups.iter().enumerate() {
            if g == 1 {
                assert_relative_eq!(weights[i], 1.0 / 3.0, max_relative = 1e-12);
            } else {
                assert_eq!(weights[i], 0.0);
            }
        }
    }

    #[test]
    fn erm_weights_are_uniform() {
        let q = GroupProbabilities::one_hot(&[0, 1, 1, 0], 2).unwrap();
        let n_tilde = effective_group_sizes(&q);
        let state = RobustState::new(Objective::Erm, n_tilde, 0.0, 1.0);
        assert_eq!(sample_weights(&state, &q), vec![0.25; 4]);
    }

    #[test]
    fn weighted_loss_identity_holds() {
        // sum_i w_i * loss_i == sum_g q_g * L_g for random soft instances.
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..100 {
            let n = rng.random_range(1..30);
            let g = rng.random_range(1..6);
            let mut m = Matrix::zeros(n, g);
            for i in 0..n {
                let mut raw: Vec<f64> = (0..g).map(|_| rng.random_range(0.0..1.0)).collect();
                let sum: f64 = raw.iter().sum();
                for v in &mut raw {
                    *v /= sum;
                }
                m.row_mut(i).copy_from_slice(&raw);
            }
            let q = GroupProbabilities::from_matrix(m).unwrap();
            let losses: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..4.0)).collect();
            let n_tilde = effective_group_sizes(&q);
            let mut state = RobustState::new(Objective::Pgdro, n_tilde.clone(), 0.5, 0.2);
            let report = pg_dro_risk(&losses, &q, &n_tilde, 0.5);
            state = update_group_weights(&state, &report.adjusted_risk).unwrap();

            let weights = sample_weights(&state, &q);
            let lhs: f64 = weights.iter().zip(&losses).map(|(w, l)| w * l).sum();
            let group_risks = per_group_weighted_loss(&losses, &q, &n_tilde);
            let rhs: f64 = state
                .q()
                .iter()
                .zip(&group_risks)
                .map(|(q_g, l_g)| q_g * l_g)
                .sum();
            assert!((lhs - rhs).abs() < 1e-10, "identity violated: {lhs} vs {rhs}");

            let total: f64 = weights.iter().sum();
            assert!((total - 1.0).abs() < 1e-9, "weights sum to {total}");
        }
    }
}
