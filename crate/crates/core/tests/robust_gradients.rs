//! The weighted backward pass must be the exact gradient of the q-weighted
//! robust risk. The adjustment term is constant in the parameters, so the
//! analytic gradient of `sum_g q_g * (L_g + C/sqrt(n~_g))` is a single
//! backward pass with the folded sample weights; central finite differences
//! of the full objective are the independent oracle.

use pgdro_core::grouping::{env_to_group_probs, EnvProbabilities, GroupProbabilities, GroupSpace};
use pgdro_core::numerics::{
    finite_difference_gradient, softmax_cross_entropy, Matrix, Network,
};
use pgdro_core::objectives::{
    effective_group_sizes, per_group_weighted_loss, sample_weights, update_group_weights,
    Objective, RobustState,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_soft_instance(
    rng: &mut ChaCha8Rng,
    n: usize,
    classes: usize,
    envs: usize,
) -> (Matrix, Vec<usize>, GroupProbabilities, GroupSpace) {
    let space = GroupSpace::new(classes, envs).unwrap();
    let x = Matrix::from_vec(
        n,
        2,
        (0..n * 2).map(|_| rng.random_range(-2.0..2.0)).collect(),
    )
    .unwrap();
    let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..classes)).collect();
    let mut envp = Matrix::zeros(n, envs);
    for i in 0..n {
        let mut raw: Vec<f64> = (0..envs).map(|_| rng.random_range(0.05..1.0)).collect();
        let sum: f64 = raw.iter().sum();
        for v in &mut raw {
            *v /= sum;
        }
        envp.row_mut(i).copy_from_slice(&raw);
    }
    let envp = EnvProbabilities::from_matrix(envp).unwrap();
    let q = env_to_group_probs(&envp, &labels, &space).unwrap();
    (x, labels, q, space)
}

fn robust_objective(
    net: &Network,
    x: &Matrix,
    labels: &[usize],
    q: &GroupProbabilities,
    n_tilde: &[f64],
    state: &RobustState,
    c: f64,
) -> f64 {
    let losses = softmax_cross_entropy(&net.forward(x).unwrap(), labels).unwrap();
    let group_risks = per_group_weighted_loss(&losses, q, n_tilde);
    state
        .q()
        .iter()
        .enumerate()
        .map(|(g, &w)| {
            if n_tilde[g] >= 1e-8 {
                w * (group_risks[g] + c / n_tilde[g].sqrt())
            } else {
                0.0
            }
        })
        .sum()
}

#[test]
fn weighted_backward_matches_finite_differences_of_robust_risk() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for trial in 0..20 {
        let classes = rng.random_range(2..4);
        let envs = rng.random_range(2..4);
        let n = rng.random_range(4..16);
        let (x, labels, q, _space) = random_soft_instance(&mut rng, n, classes, envs);
        let n_tilde = effective_group_sizes(&q);
        let c = rng.random_range(0.0..3.0);

        // Move q off the uniform point so the test is not a special case.
        let mut state = RobustState::new(Objective::Pgdro, n_tilde.clone(), c, 0.5);
        let nudge: Vec<f64> = (0..q.num_groups())
            .map(|_| rng.random_range(0.0..2.0))
            .collect();
        state = update_group_weights(&state, &nudge).unwrap();

        let net = Network::xavier_init(&[2, 5, classes], 100 + trial).unwrap();
        let weights = sample_weights(&state, &q);
        let analytic = net.backward(&x, &labels, &weights).unwrap();
        let numeric = finite_difference_gradient(
            &net,
            |candidate| robust_objective(candidate, &x, &labels, &q, &n_tilde, &state, c),
            1e-5,
        );

        for (a, b) in analytic.d_weights.iter().zip(&numeric.d_weights) {
            for (&g1, &g2) in a.data().iter().zip(b.data()) {
                let rel = (g1 - g2).abs() / g1.abs().max(g2.abs()).max(1e-8);
                assert!(rel < 1e-4, "trial {trial}: weight gradient {g1} vs {g2}");
            }
        }
        for (a, b) in analytic.d_biases.iter().zip(&numeric.d_biases) {
            for (&g1, &g2) in a.iter().zip(b) {
                let rel = (g1 - g2).abs() / g1.abs().max(g2.abs()).max(1e-8);
                assert!(rel < 1e-4, "trial {trial}: bias gradient {g1} vs {g2}");
            }
        }
    }
}

#[test]
fn hard_max_weights_descend_the_single_worst_group() {
    // With q one-hot at the worst group, the folded weights select exactly
    // that group's members, so the backward pass is the gradient of the worst
    // group's average loss.
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (x, labels, q, _space) = random_soft_instance(&mut rng, 10, 2, 2);
    let hard = pgdro_core::grouping::harden(&q);
    let one_hot = GroupProbabilities::one_hot(&hard, q.num_groups()).unwrap();
    let n_tilde = effective_group_sizes(&one_hot);
    let worst = 3.min(
        n_tilde
            .iter()
            .enumerate()
            .filter(|(_, &m)| m >= 1e-8)
            .map(|(g, _)| g)
            .next_back()
            .unwrap(),
    );
    let state = RobustState::new(Objective::Gdro, n_tilde.clone(), 0.0, 1.0).with_one_hot(worst);

    let net = Network::xavier_init(&[2, 4, 2], 55).unwrap();
    let weights = sample_weights(&state, &one_hot);
    let analytic = net.backward(&x, &labels, &weights).unwrap();

    let members: Vec<usize> = hard
        .iter()
        .enumerate()
        .filter(|(_, &g)| g == worst)
        .map(|(i, _)| i)
        .collect();
    let numeric = finite_difference_gradient(
        &net,
        |candidate| {
            let losses =
                softmax_cross_entropy(&candidate.forward(&x).unwrap(), &labels).unwrap();
            members.iter().map(|&i| losses[i]).sum::<f64>() / members.len() as f64
        },
        1e-5,
    );
    for (a, b) in analytic.d_weights.iter().zip(&numeric.d_weights) {
        for (&g1, &g2) in a.data().iter().zip(b.data()) {
            let rel = (g1 - g2).abs() / g1.abs().max(g2.abs()).max(1e-8);
            assert!(rel < 1e-4, "weight gradient {g1} vs {g2}");
        }
    }
}
