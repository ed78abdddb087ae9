//! Histogram-based decision trees.
//!
//! Features are quantized once into at most [`MAX_BINS`] bins per column.
//! A node is grown by accumulating per-bin statistics over its samples and
//! scanning cut points left to right. The stored threshold is a raw feature
//! value, so prediction works on unbinned inputs: `x <= threshold` goes left.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub const MAX_BINS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if x[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }
}

/// Cut points per feature plus the row-major binned matrix.
pub struct BinnedData {
    pub n_rows: usize,
    pub n_features: usize,
    /// `thresholds[f][j]`: rows with bin `<= j` satisfy `x <= thresholds[f][j]`.
    pub thresholds: Vec<Vec<f64>>,
    bins: Vec<u8>,
}

impl BinnedData {
    pub fn new(rows: &[Vec<f64>]) -> Self {
        let n_rows = rows.len();
        let n_features = rows.first().map_or(0, Vec::len);
        let mut thresholds = Vec::with_capacity(n_features);
        for f in 0..n_features {
            let mut vals: Vec<f64> = rows.iter().map(|r| r[f]).collect();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            let cuts: Vec<f64> = if vals.len() <= MAX_BINS {
                vals.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
            } else {
                let mut c: Vec<f64> = (1..MAX_BINS)
                    .map(|k| {
                        let pos = k * (vals.len() - 1) / MAX_BINS;
                        0.5 * (vals[pos] + vals[pos + 1])
                    })
                    .collect();
                c.dedup();
                c
            };
            thresholds.push(cuts);
        }
        let mut bins = vec![0u8; n_rows * n_features];
        for (r, row) in rows.iter().enumerate() {
            for f in 0..n_features {
                let b = thresholds[f].partition_point(|&t| t < row[f]);
                bins[r * n_features + f] = b as u8;
            }
        }
        Self {
            n_rows,
            n_features,
            thresholds,
            bins,
        }
    }

    #[inline]
    fn bin(&self, row: usize, feature: usize) -> usize {
        self.bins[row * self.n_features + feature] as usize
    }
}

/// How split quality and leaf values are computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    /// Binary classification with Gini impurity. Per-sample stats are
    /// `(1, label)`; leaves hold the positive fraction.
    Gini { min_samples_leaf: usize },
    /// Second-order boosting step. Per-sample stats are `(hessian,
    /// gradient)`; leaves hold `-G / (H + lambda)`.
    Newton { lambda: f64, min_child_weight: f64 },
}

#[derive(Debug, Clone, Copy, Default)]
struct Stats {
    count: usize,
    a: f64,
    b: f64,
}

impl Stats {
    fn add(&mut self, a: f64, b: f64) {
        self.count += 1;
        self.a += a;
        self.b += b;
    }

    fn minus(self, o: Stats) -> Stats {
        Stats {
            count: self.count - o.count,
            a: self.a - o.a,
            b: self.b - o.b,
        }
    }
}

impl Objective {
    fn score(&self, s: Stats) -> f64 {
        match *self {
            Objective::Gini { .. } => {
                if s.a <= 0.0 {
                    0.0
                } else {
                    (s.b * s.b + (s.a - s.b) * (s.a - s.b)) / s.a
                }
            }
            Objective::Newton { lambda, .. } => s.b * s.b / (s.a + lambda),
        }
    }

    fn leaf(&self, s: Stats) -> f64 {
        match *self {
            Objective::Gini { .. } => {
                if s.a > 0.0 {
                    s.b / s.a
                } else {
                    0.0
                }
            }
            Objective::Newton { lambda, .. } => -s.b / (s.a + lambda),
        }
    }

    fn admissible(&self, s: Stats) -> bool {
        match *self {
            Objective::Gini { min_samples_leaf } => s.count >= min_samples_leaf.max(1),
            Objective::Newton {
                min_child_weight, ..
            } => s.count > 0 && s.a >= min_child_weight,
        }
    }

    fn is_pure(&self, s: Stats) -> bool {
        match self {
            Objective::Gini { .. } => s.b <= 0.0 || s.b >= s.a,
            Objective::Newton { .. } => false,
        }
    }
}

pub struct TreeParams {
    pub max_depth: usize,
    /// Features considered per node; `None` means all.
    pub max_features: Option<usize>,
    pub objective: Objective,
}

/// Grows a tree on the rows listed in `samples` (repeats allowed, as in a
/// bootstrap). `a[i]`/`b[i]` are per-row statistics as described by the
/// objective.
pub fn grow<R: Rng>(
    data: &BinnedData,
    samples: Vec<usize>,
    a: &[f64],
    b: &[f64],
    params: &TreeParams,
    rng: &mut R,
) -> Tree {
    let mut nodes = vec![Node::Leaf { value: 0.0 }];
    let mut stack = vec![(0usize, samples, 0usize)];
    while let Some((slot, rows, depth)) = stack.pop() {
        let mut total = Stats::default();
        for &r in &rows {
            total.add(a[r], b[r]);
        }
        let leaf = Node::Leaf {
            value: params.objective.leaf(total),
        };
        if depth >= params.max_depth || params.objective.is_pure(total) {
            nodes[slot] = leaf;
            continue;
        }
        match best_split(data, &rows, a, b, total, params, rng) {
            Some((feature, bin)) => {
                let (l, r): (Vec<usize>, Vec<usize>) = rows
                    .into_iter()
                    .partition(|&row| data.bin(row, feature) <= bin);
                let left = nodes.len();
                nodes.push(Node::Leaf { value: 0.0 });
                let right = nodes.len();
                nodes.push(Node::Leaf { value: 0.0 });
                nodes[slot] = Node::Split {
                    feature,
                    threshold: data.thresholds[feature][bin],
                    left,
                    right,
                };
                stack.push((right, r, depth + 1));
                stack.push((left, l, depth + 1));
            }
            None => nodes[slot] = leaf,
        }
    }
    Tree { nodes }
}

fn best_split<R: Rng>(
    data: &BinnedData,
    rows: &[usize],
    a: &[f64],
    b: &[f64],
    total: Stats,
    params: &TreeParams,
    rng: &mut R,
) -> Option<(usize, usize)> {
    let features: Vec<usize> = match params.max_features {
        Some(k) if k < data.n_features => sample(rng, data.n_features, k).into_vec(),
        _ => (0..data.n_features).collect(),
    };
    let parent = params.objective.score(total);
    let mut best: Option<(f64, usize, usize)> = None;
    let mut hist = vec![Stats::default(); MAX_BINS];
    for f in features {
        let cuts = data.thresholds[f].len();
        if cuts == 0 {
            continue;
        }
        hist[..=cuts].iter_mut().for_each(|s| *s = Stats::default());
        for &r in rows {
            hist[data.bin(r, f)].add(a[r], b[r]);
        }
        let mut left = Stats::default();
        for (j, h) in hist.iter().enumerate().take(cuts) {
            left.count += h.count;
            left.a += h.a;
            left.b += h.b;
            if left.count == 0 {
                continue;
            }
            let right = total.minus(left);
            if right.count == 0 {
                break;
            }
            if !params.objective.admissible(left) || !params.objective.admissible(right) {
                continue;
            }
            let gain = params.objective.score(left) + params.objective.score(right) - parent;
            if gain > 1e-12 && best.is_none_or(|(g, _, _)| gain > g) {
                best = Some((gain, f, j));
            }
        }
    }
    best.map(|(_, f, j)| (f, j))
}
