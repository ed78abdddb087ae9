//! Bagged Gini trees with per-node feature subsampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{grow, BinnedData, Objective, Tree, TreeParams};
use crate::par;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub n_features: usize,
    pub trees: Vec<Tree>,
}

#[derive(Debug, Clone, Copy)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub seed: u64,
}

impl RandomForest {
    /// Fits on `rows` with 0/1 labels `y`. Each tree gets its own RNG
    /// derived from `seed` and the tree index, so the result does not depend
    /// on how trees are scheduled across threads.
    pub fn fit(rows: &[Vec<f64>], y: &[f64], params: ForestParams) -> Self {
        let data = BinnedData::new(rows);
        let n = rows.len();
        let n_features = data.n_features;
        let max_features = ((n_features as f64).sqrt().round() as usize).max(1);
        let ones = vec![1.0; n];
        let tree_params = TreeParams {
            max_depth: params.max_depth,
            max_features: Some(max_features),
            objective: Objective::Gini {
                min_samples_leaf: params.min_samples_leaf,
            },
        };
        let trees = par::map_range(params.n_trees, |t| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed.wrapping_add(t as u64));
            let samples: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            grow(&data, samples, &ones, y, &tree_params, &mut rng)
        });
        Self { n_features, trees }
    }

    /// Mean of the per-tree positive fractions.
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        if self.trees.is_empty() {
            return 0.5;
        }
        self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64
    }
}
