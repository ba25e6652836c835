//! Labeled-subset extraction and frequency-weighted sampling.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::grouping::GroupSpace;

/// A small group-annotated subset of a parent dataset. Both labels and
/// environments are materialized so group frequencies can be computed without
/// going back to the parent.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSubset {
    indices: Vec<usize>,
    y: Vec<usize>,
    env: Vec<usize>,
}

impl LabeledSubset {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Indices into the parent dataset, ascending.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn labels(&self) -> &[usize] {
        &self.y
    }

    pub fn env(&self) -> &[usize] {
        &self.env
    }

    /// Hard group index of each member.
    pub fn groups(&self, space: &GroupSpace) -> Result<Vec<usize>> {
        self.y
            .iter()
            .zip(&self.env)
            .map(|(&y, &e)| space.group_index(y, e))
            .collect()
    }
}

/// Uniform without-replacement sample of `m` annotated rows.
pub fn subsample_labeled(dataset: &Dataset, m: usize, seed: u64) -> Result<LabeledSubset> {
    let env =
        dataset.require_env("cannot form a labeled subset without environment annotations")?;
    if m > dataset.len() {
        return Err(Error::InvalidConfig(format!(
            "labeled subset size {m} exceeds dataset size {}",
            dataset.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices = rand::seq::index::sample(&mut rng, dataset.len(), m).into_vec();
    indices.sort_unstable();
    let y = indices.iter().map(|&i| dataset.labels()[i]).collect();
    let env = indices.iter().map(|&i| env[i]).collect();
    Ok(LabeledSubset { indices, y, env })
}

/// Draws `len` indices into the parent dataset, with replacement, where each
/// member's probability is proportional to the reciprocal of its group's
/// count in the subset. Every occurring group is therefore drawn equally
/// often in expectation.
pub fn frequency_weighted_indices(
    subset: &LabeledSubset,
    space: &GroupSpace,
    len: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    if subset.is_empty() {
        return Err(Error::InvalidConfig(
            "cannot sample from an empty labeled subset".into(),
        ));
    }
    let groups = subset.groups(space)?;
    let mut counts = vec![0usize; space.num_groups()];
    for &g in &groups {
        counts[g] += 1;
    }
    let weights: Vec<f64> = groups.iter().map(|&g| 1.0 / counts[g] as f64).collect();
    let dist = WeightedIndex::new(&weights).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..len)
        .map(|_| subset.indices[dist.sample(&mut rng)])
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Matrix;

    fn dataset_with_groups(group_sizes: &[usize]) -> Dataset {
        // Groups are (y, e) pairs over a 2x2 space, filled in group order.
        let mut rows = Vec::new();
        let mut y = Vec::new();
        let mut env = Vec::new();
        for (g, &size) in group_sizes.iter().enumerate() {
            for i in 0..size {
                rows.push(vec![g as f64, i as f64]);
                y.push(g / 2);
                env.push(g % 2);
            }
        }
        Dataset::new(Matrix::from_rows(&rows).unwrap(), y, Some(env), None).unwrap()
    }

    #[test]
    fn full_subsample_returns_every_index() {
        let ds = dataset_with_groups(&[3, 3, 2, 2]);
        let subset = subsample_labeled(&ds, ds.len(), 0).unwrap();
        assert_eq!(subset.indices(), (0..ds.len()).collect::<Vec<_>>());
    }

    #[test]
    fn subsample_is_deterministic_and_distinct() {
        let ds = dataset_with_groups(&[40, 40, 10, 10]);
        let a = subsample_labeled(&ds, 25, 9).unwrap();
        let b = subsample_labeled(&ds, 25, 9).unwrap();
        assert_eq!(a, b);
        let mut sorted = a.indices().to_vec();
        sorted.dedup();
        assert_eq!(sorted.len(), 25);
        let c = subsample_labeled(&ds, 25, 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn subsample_requires_annotations() {
        let ds = Dataset::new(Matrix::zeros(4, 1), vec![0, 1, 0, 1], None, None).unwrap();
        let err = subsample_labeled(&ds, 2, 0).unwrap_err();
        assert!(matches!(err, Error::MissingEnv { .. }));
    }

    #[test]
    fn oversized_subset_is_rejected() {
        let ds = dataset_with_groups(&[2, 2, 2, 2]);
        assert!(subsample_labeled(&ds, 9, 0).is_err());
    }

    #[test]
    fn equal_groups_sample_uniformly() {
        let ds = dataset_with_groups(&[5, 5, 5, 5]);
        let subset = subsample_labeled(&ds, ds.len(), 0).unwrap();
        let space = GroupSpace::new(2, 2).unwrap();
        let draws = frequency_weighted_indices(&subset, &space, 40_000, 1).unwrap();
        let mut per_index = vec![0usize; ds.len()];
        for d in draws {
            per_index[d] += 1;
        }
        let expected = 40_000.0 / ds.len() as f64;
        for (i, &c) in per_index.iter().enumerate() {
            assert!(
                (c as f64 - expected).abs() < 0.25 * expected,
                "index {i} drawn {c} times"
            );
        }
    }

    #[test]
    fn unequal_groups_equalize_in_expectation() {
        // Two occurring groups sized 90 and 10; each should absorb half the
        // draws. The binomial standard deviation at 1e5 draws is ~0.0016, so
        // the 0.01 bound sits beyond six sigma.
        let mut rows = Vec::new();
        let mut env = Vec::new();
        for i in 0..100 {
            rows.push(vec![i as f64]);
            env.push(usize::from(i >= 90));
        }
        let ds = Dataset::new(
            Matrix::from_rows(&rows).unwrap(),
            vec![0; 100],
            Some(env),
            None,
        )
        .unwrap();
        let subset = subsample_labeled(&ds, 100, 2).unwrap();

        let space = GroupSpace::new(2, 2).unwrap();
        let draws = frequency_weighted_indices(&subset, &space, 100_000, 3).unwrap();
        let env = ds.env().unwrap();
        let in_group0 = draws.iter().filter(|&&i| env[i] == 0).count();
        let freq = in_group0 as f64 / 100_000.0;
        assert!((freq - 0.5).abs() < 0.01, "group-0 frequency {freq}");
    }

    #[test]
    fn single_group_subset_draws_only_from_it() {
        let ds = Dataset::new(
            Matrix::zeros(6, 1),
            vec![0; 6],
            Some(vec![0; 6]),
            None,
        )
        .unwrap();
        let subset = subsample_labeled(&ds, 4, 0).unwrap();
        let space = GroupSpace::new(2, 2).unwrap();
        let draws = frequency_weighted_indices(&subset, &space, 1000, 5).unwrap();
        assert!(draws.iter().all(|&i| subset.indices().contains(&i)));
    }
}
