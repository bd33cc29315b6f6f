use rand::Rng;
use rayon::prelude::*;

use super::tree::{Builder, DecisionTree, FeatureSampler};
use super::{Dataset, ForestParams};
use crate::corpus::CategoryLabel;
use crate::rng::{substream, Domain};

#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest {
    trees: Vec<DecisionTree>,
    seed: u64,
}

impl RandomForest {
    pub fn from_trees(trees: Vec<DecisionTree>, seed: u64) -> Option<Self> {
        (!trees.is_empty()).then_some(RandomForest { trees, seed })
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn predict(&self, x: &[f64]) -> CategoryLabel {
        majority_vote(self.trees.iter().map(|t| t.predict(x)))
    }
}

/// Most frequent label; ties go to `"34"`.
pub fn majority_vote<I: IntoIterator<Item = CategoryLabel>>(votes: I) -> CategoryLabel {
    let mut tally = [0usize; 2];
    for v in votes {
        tally[v.index()] += 1;
    }
    if tally[1] >= tally[0] {
        CategoryLabel::High
    } else {
        CategoryLabel::Low
    }
}

/// Tree `t` draws its bootstrap sample and feature subsets from substream `t`
/// of the seed, so trees can be grown in parallel.
pub(super) fn fit(data: &Dataset, params: &ForestParams, seed: u64) -> RandomForest {
    let n = data.len();
    let max_features = params.max_features.resolve(data.dim());
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = substream(seed, Domain::ForestTree, t as u64);
            let idx: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            let sampler = FeatureSampler {
                rng: &mut rng,
                max_features,
            };
            Builder::new(data, params.tree, Some(sampler)).build(idx)
        })
        .collect();
    RandomForest { trees, seed }
}
