//! Bagged CART forests for regression (variance reduction) and binary
//! classification (Gini), grown from scratch.
//!
//! Seed mapping: tree `k` draws its bootstrap sample from the stream
//! `seed.stream([BOOTSTRAP, k])` as `n` uniform positions into the row order
//! given to the fit, and its per-node feature subsets from
//! `seed.stream([FEATURES, k])`. Reordering rows and remapping the drawn
//! positions through the same permutation therefore grows identical trees.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{self, purpose, SeedSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForestTask {
    Regression,
    Classification,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Features tried per split; `None` uses the task default.
    pub mtry: Option<usize>,
    /// Minimum terminal-node size; `None` uses the task default (5 / 10).
    pub min_node_size: Option<usize>,
    pub max_depth: Option<usize>,
    pub bootstrap: bool,
    pub seed: SeedSpec,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 500,
            mtry: None,
            min_node_size: None,
            max_depth: None,
            bootstrap: true,
            seed: SeedSpec::default(),
        }
    }
}

impl ForestConfig {
    pub fn resolved_mtry(&self, task: ForestTask, p: usize) -> usize {
        self.mtry.unwrap_or(match task {
            ForestTask::Regression => p / 3,
            ForestTask::Classification => (p as f64).sqrt().ceil() as usize,
        })
        .clamp(1, p.max(1))
    }

    pub fn resolved_min_node_size(&self, task: ForestTask) -> usize {
        self.min_node_size
            .unwrap_or(match task {
                ForestTask::Regression => 5,
                ForestTask::Classification => 10,
            })
            .max(1)
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::Config("n_trees must be at least 1".into()));
        }
        if let Some(m) = self.mtry {
            if m == 0 || m > p {
                return Err(Error::Config(format!("mtry = {m} outside 1..={p}")));
            }
        }
        Ok(())
    }
}

const LEAF: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Node {
    feature: u32,
    threshold: f64,
    left: u32,
    right: u32,
    value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    #[inline]
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut i = 0usize;
        loop {
            let n = &self.nodes[i];
            if n.feature == LEAF {
                return n.value;
            }
            i = if row[n.feature as usize] <= n.threshold {
                n.left as usize
            } else {
                n.right as usize
            };
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, i: usize) -> usize {
            let n = &t.nodes[i];
            if n.feature == LEAF {
                0
            } else {
                1 + go(t, n.left as usize).max(go(t, n.right as usize))
            }
        }
        go(self, 0)
    }

    /// `(feature, threshold)` of the root split, if any.
    pub fn root_split(&self) -> Option<(usize, f64)> {
        let n = &self.nodes[0];
        (n.feature != LEAF).then_some((n.feature as usize, n.threshold))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub task: ForestTask,
    pub config: ForestConfig,
    pub mtry: usize,
    pub min_node_size: usize,
    pub trees: Vec<Tree>,
}

impl Forest {
    pub fn predict(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(row)).sum::<f64>() / self.trees.len() as f64
    }
}

/// Draw bootstrap positions per tree according to the documented seed mapping.
pub fn draw_samples(cfg: &ForestConfig, n: usize) -> Vec<Vec<usize>> {
    (0..cfg.n_trees)
        .map(|k| {
            if cfg.bootstrap {
                let mut rng = cfg.seed.stream(&[purpose::BOOTSTRAP, k as u64]);
                (0..n).map(|_| seed::index(&mut rng, 0, n)).collect()
            } else {
                (0..n).collect()
            }
        })
        .collect()
}

pub fn fit_forest(rows: &[Vec<f64>], y: &[f64], task: ForestTask, cfg: &ForestConfig) -> Result<Forest> {
    let samples = draw_samples(cfg, rows.len());
    fit_forest_with_samples(rows, y, task, cfg, &samples)
}

/// Grow one tree per entry of `samples` (row positions, repetitions allowed).
pub fn fit_forest_with_samples(
    rows: &[Vec<f64>],
    y: &[f64],
    task: ForestTask,
    cfg: &ForestConfig,
    samples: &[Vec<usize>],
) -> Result<Forest> {
    let p = rows.first().map_or(0, Vec::len);
    if p == 0 {
        return Err(Error::Config("forest needs at least one feature".into()));
    }
    if rows.len() != y.len() {
        return Err(Error::InvalidData(format!("{} rows but {} responses", rows.len(), y.len())));
    }
    cfg.validate(p)?;
    let mtry = cfg.resolved_mtry(task, p);
    let min_node_size = cfg.resolved_min_node_size(task);
    let grower = Grower {
        rows,
        y,
        task,
        mtry,
        min_node_size,
        max_depth: cfg.max_depth.unwrap_or(usize::MAX),
        p,
    };
    let trees = samples
        .par_iter()
        .enumerate()
        .map(|(k, s)| grower.grow(s.clone(), cfg.seed, k))
        .collect();
    Ok(Forest {
        task,
        config: cfg.clone(),
        mtry,
        min_node_size,
        trees,
    })
}

struct Grower<'a> {
    rows: &'a [Vec<f64>],
    y: &'a [f64],
    task: ForestTask,
    mtry: usize,
    min_node_size: usize,
    max_depth: usize,
    p: usize,
}

struct Split {
    feature: usize,
    threshold: f64,
    score: f64,
}

impl Grower<'_> {
    fn grow(&self, sample: Vec<usize>, seed: SeedSpec, k: usize) -> Tree {
        let mut rng = seed.stream(&[purpose::FEATURES, k as u64]);
        let mut nodes = Vec::new();
        // explicit stack: (node slot, indices, depth)
        nodes.push(self.leaf(&sample));
        let mut stack = vec![(0usize, sample, 0usize)];
        let mut feats: Vec<usize> = (0..self.p).collect();
        while let Some((slot, idx, depth)) = stack.pop() {
            if depth >= self.max_depth || idx.len() < 2 * self.min_node_size || self.is_pure(&idx) {
                continue;
            }
            // partial Fisher-Yates for the first `mtry` features
            for i in 0..self.mtry {
                let j = seed::index(&mut rng, i, self.p);
                feats.swap(i, j);
            }
            let parent = self.node_score(&idx);
            let mut best: Option<Split> = None;
            for &f in &feats[..self.mtry] {
                if let Some(s) = self.best_split(&idx, f) {
                    if best.as_ref().is_none_or(|b| s.score > b.score) {
                        best = Some(s);
                    }
                }
            }
            let Some(best) = best else { continue };
            if best.score <= parent + 1e-12 * parent.abs().max(1e-300) {
                continue;
            }
            let (l, r): (Vec<usize>, Vec<usize>) = idx
                .iter()
                .partition(|&&i| self.rows[i][best.feature] <= best.threshold);
            let li = nodes.len() as u32;
            nodes.push(self.leaf(&l));
            let ri = nodes.len() as u32;
            nodes.push(self.leaf(&r));
            let n = &mut nodes[slot];
            n.feature = best.feature as u32;
            n.threshold = best.threshold;
            n.left = li;
            n.right = ri;
            stack.push((ri as usize, r, depth + 1));
            stack.push((li as usize, l, depth + 1));
        }
        Tree { nodes }
    }

    fn leaf(&self, idx: &[usize]) -> Node {
        let value = idx.iter().map(|&i| self.y[i]).sum::<f64>() / idx.len() as f64;
        Node {
            feature: LEAF,
            threshold: 0.0,
            left: 0,
            right: 0,
            value,
        }
    }

    fn is_pure(&self, idx: &[usize]) -> bool {
        let first = self.y[idx[0]];
        idx.iter().all(|&i| self.y[i] == first)
    }

    /// Higher is better. Regression: `S^2 / n` (SSE reduction up to a constant);
    /// classification: `(n1^2 + n0^2) / n` (Gini reduction up to a constant).
    fn node_score(&self, idx: &[usize]) -> f64 {
        let n = idx.len() as f64;
        let s: f64 = idx.iter().map(|&i| self.y[i]).sum();
        match self.task {
            ForestTask::Regression => s * s / n,
            ForestTask::Classification => (s * s + (n - s) * (n - s)) / n,
        }
    }

    fn best_split(&self, idx: &[usize], f: usize) -> Option<Split> {
        let mut order: Vec<(f64, f64)> = idx.iter().map(|&i| (self.rows[i][f], self.y[i])).collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n = order.len();
        let total: f64 = order.iter().map(|o| o.1).sum();
        let mut left_sum = 0.0;
        let mut best: Option<Split> = None;
        for i in 0..n - 1 {
            left_sum += order[i].1;
            let nl = i + 1;
            let nr = n - nl;
            if order[i].0 == order[i + 1].0 || nl < self.min_node_size || nr < self.min_node_size {
                continue;
            }
            let (nl_f, nr_f) = (nl as f64, nr as f64);
            let right_sum = total - left_sum;
            let score = match self.task {
                ForestTask::Regression => left_sum * left_sum / nl_f + right_sum * right_sum / nr_f,
                ForestTask::Classification => {
                    (left_sum * left_sum + (nl_f - left_sum) * (nl_f - left_sum)) / nl_f
                        + (right_sum * right_sum + (nr_f - right_sum) * (nr_f - right_sum)) / nr_f
                }
            };
            if best.as_ref().is_none_or(|b| score > b.score) {
                best = Some(Split {
                    feature: f,
                    threshold: 0.5 * (order[i].0 + order[i + 1].0),
                    score,
                });
            }
        }
        best
    }
}
