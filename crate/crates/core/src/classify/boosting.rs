//! Second-order gradient boosting on the logistic loss.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{grow, BinnedData, Objective, Tree, TreeParams};

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedTrees {
    pub n_features: usize,
    pub base_score: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
}

#[derive(Debug, Clone, Copy)]
pub struct BoostParams {
    pub n_rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub lambda: f64,
    pub min_child_weight: f64,
    pub seed: u64,
}

impl BoostedTrees {
    pub fn fit(rows: &[Vec<f64>], y: &[f64], params: BoostParams) -> Self {
        let data = BinnedData::new(rows);
        let n = rows.len();
        let mean = (y.iter().sum::<f64>() / n.max(1) as f64).clamp(1e-6, 1.0 - 1e-6);
        let base_score = (mean / (1.0 - mean)).ln();
        let tree_params = TreeParams {
            max_depth: params.max_depth,
            max_features: None,
            objective: Objective::Newton {
                lambda: params.lambda,
                min_child_weight: params.min_child_weight,
            },
        };
        // all features are scanned, so the rng is never drawn from
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let mut margin = vec![base_score; n];
        let mut trees = Vec::with_capacity(params.n_rounds);
        for _ in 0..params.n_rounds {
            let p: Vec<f64> = margin.iter().map(|&m| sigmoid(m)).collect();
            let g: Vec<f64> = p.iter().zip(y).map(|(p, y)| p - y).collect();
            let h: Vec<f64> = p.iter().map(|p| (p * (1.0 - p)).max(1e-16)).collect();
            let tree = grow(&data, (0..n).collect(), &h, &g, &tree_params, &mut rng);
            for (m, row) in margin.iter_mut().zip(rows) {
                *m += params.learning_rate * tree.predict(row);
            }
            trees.push(tree);
        }
        Self {
            n_features: data.n_features,
            base_score,
            learning_rate: params.learning_rate,
            trees,
        }
    }

    pub fn margin(&self, x: &[f64]) -> f64 {
        self.base_score + self.learning_rate * self.trees.iter().map(|t| t.predict(x)).sum::<f64>()
    }

    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.margin(x))
    }
}
