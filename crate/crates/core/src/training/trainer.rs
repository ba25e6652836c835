//! The minibatch training loop.
//!
//! All three objectives share one loop; they differ in how per-sample weights
//! are produced. ERM weights every batch row uniformly. The robust objectives
//! maintain a weight vector `q` on the group simplex, refresh it each step
//! from the batch's adjusted group risks, and fold it onto samples so a
//! single weighted backward pass descends the q-weighted robust risk.
//!
//! The hard-label route (G-DRO) runs on indicator counts and the soft route
//! (PG-DRO) on probability masses, but both feed the same scaling, update,
//! and descent code. With one-hot probabilities the two routes produce
//! bit-identical arithmetic, so hard-label training is exactly the
//! probabilistic loop at its degenerate point — checked, not assumed.
//!
//! Effective group sizes are computed once over the full training set; batch
//! group risks are unbiased estimates built from batch column masses scaled
//! by `N / batch_len`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::grouping::{harden, GroupProbabilities, GroupSpace};
use crate::numerics::{softmax_cross_entropy, Network};
use crate::objectives::{
    erm_risk, gdro_risk, pg_dro_risk, update_group_weights, Objective, RobustState,
    OCCUPANCY_THRESHOLD,
};
use crate::seeds;
use crate::training::{EpochRecord, MaxMode, TrainConfig, TrainHistory};

enum Route {
    Erm,
    /// Hard group labels and integer-valued counts.
    Hard { groups: Vec<usize> },
    /// Soft membership masses.
    Soft,
}

/// Adjusted batch group risks from per-group loss sums. `masses` are the
/// full-dataset effective sizes; sums are scaled by `n_total / batch_len` to
/// stay unbiased for the full-set risk.
fn batch_adjusted_risks(
    sums: &[f64],
    masses: &[f64],
    n_total: f64,
    batch_len: f64,
    c: f64,
) -> Vec<f64> {
    sums.iter()
        .zip(masses)
        .map(|(&s, &m)| {
            if m >= OCCUPANCY_THRESHOLD {
                s * n_total / (batch_len * m) + c / m.sqrt()
            } else {
                0.0
            }
        })
        .collect()
}

fn occupied_argmax(values: &[f64], masses: &[f64]) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (g, (&v, &m)) in values.iter().zip(masses).enumerate() {
        if m >= OCCUPANCY_THRESHOLD && v > best_v {
            best_v = v;
            best = g;
        }
    }
    best
}

/// Trains a classifier and returns the checkpoint selected by validation
/// worst-group accuracy together with the per-epoch history.
///
/// `q` carries the group probabilities; it is required for the robust
/// objectives (G-DRO hardens it to per-sample argmax groups) and ignored
/// under ERM. Deterministic for a fixed `(inputs, config)` pair.
pub fn train(
    train_data: &Dataset,
    q: Option<&GroupProbabilities>,
    val: &Dataset,
    space: &GroupSpace,
    cfg: &TrainConfig,
) -> Result<(Network, TrainHistory)> {
    cfg.validate()?;
    if train_data.is_empty() {
        return Err(Error::EmptyDataset);
    }

    // Worst-group selection needs every group represented in validation.
    let val_groups = val.hard_groups(space)?;
    let mut val_counts = vec![0usize; space.num_groups()];
    for &g in &val_groups {
        val_counts[g] += 1;
    }
    if let Some(g) = val_counts.iter().position(|&c| c == 0) {
        return Err(Error::EmptyValidationGroup { group: g });
    }

    let n = train_data.len();
    let (route, masses, state) = match cfg.objective {
        Objective::Erm => (Route::Erm, Vec::new(), None),
        objective => {
            let q = q.ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "objective {objective} requires group probabilities"
                ))
            })?;
            if q.rows() != n {
                return Err(Error::DimMismatch {
                    context: "train",
                    expected: format!("{n} group-probability rows"),
                    actual: format!("{} rows", q.rows()),
                });
            }
            match objective {
                Objective::Gdro => {
                    let groups = harden(q);
                    let mut counts = vec![0.0f64; q.num_groups()];
                    for &g in &groups {
                        counts[g] += 1.0;
                    }
                    let state = RobustState::new(Objective::Gdro, counts.clone(), cfg.c, cfg.eta_q);
                    (Route::Hard { groups }, counts, Some(state))
                }
                Objective::Pgdro => {
                    let n_tilde = crate::objectives::effective_group_sizes(q);
                    let state =
                        RobustState::new(Objective::Pgdro, n_tilde.clone(), cfg.c, cfg.eta_q);
                    (Route::Soft, n_tilde, Some(state))
                }
                Objective::Erm => unreachable!(),
            }
        }
    };
    let mut state = state;

    let mut layer_sizes = vec![train_data.dim()];
    layer_sizes.extend_from_slice(&cfg.hidden_sizes);
    layer_sizes.push(space.num_classes());
    let mut net = Network::xavier_init(&layer_sizes, cfg.seed)?;

    let mut history = TrainHistory {
        records: Vec::with_capacity(cfg.epochs),
        selected_epoch: None,
    };
    let mut best: Option<(f64, Network)> = None;

    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(seeds::derive_indexed(cfg.seed, 1, 0));
    let mut order: Vec<usize> = (0..n).collect();
    let num_groups = masses.len();

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        for batch in order.chunks(cfg.batch_size) {
            let x = train_data.features().select_rows(batch);
            let labels: Vec<usize> = batch.iter().map(|&i| train_data.labels()[i]).collect();
            let losses = softmax_cross_entropy(&net.forward(&x)?, &labels)?;
            let scale = n as f64 / batch.len() as f64;

            let weights: Vec<f64> = match &route {
                Route::Erm => vec![1.0 / batch.len() as f64; batch.len()],
                Route::Hard { groups } => {
                    let st = state.as_mut().unwrap();
                    let mut sums = vec![0.0; num_groups];
                    for (&i, &loss) in batch.iter().zip(&losses) {
                        sums[groups[i]] += loss;
                    }
                    let adjusted =
                        batch_adjusted_risks(&sums, &masses, n as f64, batch.len() as f64, cfg.c);
                    *st = next_state(st, &adjusted, &masses, cfg.max_mode)?;
                    batch
                        .iter()
                        .map(|&i| {
                            let g = groups[i];
                            st.q()[g] / masses[g] * scale
                        })
                        .collect()
                }
                Route::Soft => {
                    let q = q.unwrap();
                    let st = state.as_mut().unwrap();
                    let mut sums = vec![0.0; num_groups];
                    for (&i, &loss) in batch.iter().zip(&losses) {
                        for (acc, &mass) in sums.iter_mut().zip(q.row(i)) {
                            *acc += mass * loss;
                        }
                    }
                    let adjusted =
                        batch_adjusted_risks(&sums, &masses, n as f64, batch.len() as f64, cfg.c);
                    *st = next_state(st, &adjusted, &masses, cfg.max_mode)?;
                    batch
                        .iter()
                        .map(|&i| {
                            let row = q.row(i);
                            let mut w = 0.0;
                            for g in 0..num_groups {
                                if masses[g] >= OCCUPANCY_THRESHOLD {
                                    w += st.q()[g] * row[g] / masses[g];
                                }
                            }
                            w * scale
                        })
                        .collect()
                }
            };

            let grads = net.backward(&x, &labels, &weights)?;
            net = net.sgd_step(&grads, cfg.lr, cfg.l2)?;
        }

        // Full-training-set risk for the history, then validation metrics.
        let full_losses =
            softmax_cross_entropy(&net.forward(train_data.features())?, train_data.labels())?;
        let (objective_value, per_group_risk) = match &route {
            Route::Erm => (erm_risk(&full_losses), Vec::new()),
            Route::Hard { groups } => {
                let report = gdro_risk(&full_losses, groups, num_groups, cfg.c)?;
                (report.objective_value, report.per_group_risk)
            }
            Route::Soft => {
                let report = pg_dro_risk(&full_losses, q.unwrap(), &masses, cfg.c);
                (report.objective_value, report.per_group_risk)
            }
        };
        let val_metrics = crate::training::evaluate(&net, val, space)?;

        let better = match &best {
            None => true,
            Some((best_acc, _)) => val_metrics.worst_group_acc > *best_acc,
        };
        if better {
            best = Some((val_metrics.worst_group_acc, net.clone()));
            history.selected_epoch = Some(epoch);
        }
        history.records.push(EpochRecord {
            epoch,
            objective_value,
            per_group_risk,
            val: val_metrics,
        });
    }

    let final_net = match best {
        Some((_, checkpoint)) => checkpoint,
        None => net, // zero-epoch budget: the initialized network
    };
    Ok((final_net, history))
}

fn next_state(
    state: &RobustState,
    adjusted: &[f64],
    masses: &[f64],
    mode: MaxMode,
) -> Result<RobustState> {
    match mode {
        MaxMode::Eg => update_group_weights(state, adjusted),
        MaxMode::HardMax => Ok(state.with_one_hot(occupied_argmax(adjusted, masses))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, SyntheticParams};
    use crate::grouping::{env_to_group_probs, EnvProbabilities};
    use crate::numerics::Matrix;

    fn space() -> GroupSpace {
        GroupSpace::new(2, 2).unwrap()
    }

    fn benchmark(n: usize, p: f64, seed: u64) -> Dataset {
        generate_synthetic(&SyntheticParams {
            n,
            p,
            sigma2_inv: 0.5,
            sigma2_e: 0.05,
            seed,
        })
        .unwrap()
    }

    fn balanced_val(per_group: usize, seed: u64) -> Dataset {
        benchmark(4 * per_group, 0.5, seed)
    }

    fn true_group_probs(ds: &Dataset) -> GroupProbabilities {
        let env = ds.env().unwrap();
        let mut p = Matrix::zeros(ds.len(), 2);
        for (i, &e) in env.iter().enumerate() {
            p.set(i, e, 1.0);
        }
        env_to_group_probs(
            &EnvProbabilities::from_matrix(p).unwrap(),
            ds.labels(),
            &space(),
        )
        .unwrap()
    }

    fn small_cfg(objective: Objective, seed: u64) -> TrainConfig {
        TrainConfig {
            objective,
            epochs: 12,
            batch_size: 64,
            hidden_sizes: vec![8, 8, 8],
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn zero_epochs_returns_initialized_network() {
        let train_ds = benchmark(200, 0.8, 1);
        let val = balanced_val(10, 2);
        let cfg = TrainConfig {
            epochs: 0,
            ..small_cfg(Objective::Erm, 3)
        };
        let (net, history) = train(&train_ds, None, &val, &space(), &cfg).unwrap();
        assert!(history.records.is_empty());
        assert_eq!(history.selected_epoch, None);
        let mut sizes = vec![2usize];
        sizes.extend_from_slice(&cfg.hidden_sizes);
        sizes.push(2);
        assert_eq!(net, Network::xavier_init(&sizes, cfg.seed).unwrap());
    }

    #[test]
    fn robust_objectives_require_group_probabilities() {
        let train_ds = benchmark(100, 0.8, 1);
        let val = balanced_val(5, 2);
        for objective in [Objective::Gdro, Objective::Pgdro] {
            let err = train(&train_ds, None, &val, &space(), &small_cfg(objective, 0))
                .unwrap_err();
            assert!(err.to_string().contains("group probabilities"));
        }
    }

    #[test]
    fn q_row_mismatch_is_rejected() {
        let train_ds = benchmark(100, 0.8, 1);
        let val = balanced_val(5, 2);
        let q = GroupProbabilities::one_hot(&[0; 99], 4).unwrap();
        assert!(
            train(&train_ds, Some(&q), &val, &space(), &small_cfg(Objective::Pgdro, 0)).is_err()
        );
    }

    #[test]
    fn empty_validation_group_is_rejected() {
        let train_ds = benchmark(100, 0.8, 1);
        // Validation set with only majority groups: groups 1 and 2 missing.
        let val_src = benchmark(40, 0.9, 5);
        let keep: Vec<usize> = (0..val_src.len())
            .filter(|&i| {
                let g = val_src.labels()[i] * 2 + val_src.env().unwrap()[i];
                g == 0 || g == 3
            })
            .collect();
        let val = val_src.select(&keep);
        let err = train(&train_ds, None, &val, &space(), &small_cfg(Objective::Erm, 0))
            .unwrap_err();
        assert!(matches!(err, Error::EmptyValidationGroup { .. }));
    }

    #[test]
    fn training_is_deterministic() {
        let train_ds = benchmark(200, 0.9, 7);
        let val = balanced_val(8, 8);
        let q = true_group_probs(&train_ds);
        let cfg = small_cfg(Objective::Pgdro, 5);
        let (net_a, hist_a) = train(&train_ds, Some(&q), &val, &space(), &cfg).unwrap();
        let (net_b, hist_b) = train(&train_ds, Some(&q), &val, &space(), &cfg).unwrap();
        assert_eq!(net_a, net_b);
        assert_eq!(hist_a, hist_b);
    }

    #[test]
    fn selection_maximizes_validation_worst_group() {
        let train_ds = benchmark(300, 0.9, 3);
        let val = balanced_val(10, 4);
        let q = true_group_probs(&train_ds);
        for objective in [Objective::Erm, Objective::Gdro, Objective::Pgdro] {
            let cfg = small_cfg(objective, 2);
            let q_opt = (objective != Objective::Erm).then_some(&q);
            let (_, history) = train(&train_ds, q_opt, &val, &space(), &cfg).unwrap();
            assert!(history.selection_is_consistent(), "{objective}");
            assert_eq!(history.records.len(), cfg.epochs);
        }
    }

    #[test]
    fn one_hot_pgdro_reproduces_gdro_exactly() {
        let train_ds = benchmark(240, 0.85, 11);
        let val = balanced_val(8, 12);
        let q = true_group_probs(&train_ds); // one-hot by construction
        for mode in [MaxMode::Eg, MaxMode::HardMax] {
            let gdro_cfg = TrainConfig {
                max_mode: mode,
                ..small_cfg(Objective::Gdro, 17)
            };
            let pgdro_cfg = TrainConfig {
                objective: Objective::Pgdro,
                ..gdro_cfg.clone()
            };
            let (net_hard, hist_hard) =
                train(&train_ds, Some(&q), &val, &space(), &gdro_cfg).unwrap();
            let (net_soft, hist_soft) =
                train(&train_ds, Some(&q), &val, &space(), &pgdro_cfg).unwrap();
            // Bit-exact equality of parameters, not approximate closeness.
            assert_eq!(net_hard, net_soft);
            assert_eq!(hist_hard.selected_epoch, hist_soft.selected_epoch);
            for (a, b) in hist_hard.records.iter().zip(&hist_soft.records) {
                assert_eq!(a.objective_value.to_bits(), b.objective_value.to_bits());
                assert_eq!(a.val, b.val);
            }
        }
    }

    #[test]
    fn erm_learns_the_majority_shortcut() {
        // On heavily correlated data ERM gets high average validation
        // accuracy while its worst group lags far behind.
        let train_ds = benchmark(2000, 0.95, 21);
        let val = balanced_val(50, 22);
        let cfg = TrainConfig {
            epochs: 60,
            ..small_cfg(Objective::Erm, 23)
        };
        let (net, _) = train(&train_ds, None, &val, &space(), &cfg).unwrap();
        let report = crate::training::evaluate(&net, &val, &space()).unwrap();
        assert!(report.avg_acc > 0.8, "avg {}", report.avg_acc);
        assert!(
            report.avg_acc - report.worst_group_acc > 0.05,
            "expected a visible gap, got avg {} worst {}",
            report.avg_acc,
            report.worst_group_acc
        );
    }
}
