//! Random-forest regression from scratch: bootstrap-sampled
//! variance-reduction trees, gain-based feature importances, and
//! deterministic construction from per-tree derived seeds (bit-identical
//! for any worker count).

use super::DesignMatrix;
use crate::hash::derive_seed_indexed;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Features considered per split.
    pub features_per_split: usize,
    /// Draw a bootstrap sample of size n per tree; `false` trains every
    /// tree on the full data (useful for single-tree oracles).
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for RfParams {
    fn default() -> Self {
        Self {
            n_trees: 200,
            max_depth: 8,
            min_leaf: 5,
            features_per_split: 2, // ceil(5/3) for the five-score design
            bootstrap: true,
            seed: 0,
        }
    }
}

/// Flat binary regression tree. `feature == usize::MAX` marks a leaf.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub feature: usize,
    pub threshold: f64,
    pub left: usize,
    pub right: usize,
    pub value: f64,
    pub gain: f64,
}

const LEAF: usize = usize::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            let node = &self.nodes[i];
            if node.feature == LEAF {
                return node.value;
            }
            i = if row[node.feature] < node.threshold {
                node.left
            } else {
                node.right
            };
        }
    }

    /// Root node accessor for the stump oracle tests.
    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<Tree>,
    pub params: RfParams,
    pub n_features: usize,
    /// Normalized total split gain per feature; all zero (flagged) when
    /// no tree ever split.
    pub importances: Vec<f64>,
    pub no_splits: bool,
}

impl Forest {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict_row(row)).sum();
        sum / self.trees.len() as f64
    }
}

struct TreeBuilder<'a> {
    design: &'a DesignMatrix,
    params: &'a RfParams,
    nodes: Vec<Node>,
    gains: Vec<f64>,
    rng: ChaCha8Rng,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    gain: f64,
}

impl TreeBuilder<'_> {
    /// Greedy best split over a random feature subset: maximize the SSE
    /// reduction parent - (left + right), computed from prefix sums over
    /// the value-sorted sample. Candidate thresholds are midpoints
    /// between consecutive distinct values.
    fn best_split(&mut self, indices: &[usize]) -> Option<BestSplit> {
        let m = self.design.n_features();
        let mtry = self.params.features_per_split.clamp(1, m);
        // Sample features without replacement, then sort for a canonical
        // evaluation order.
        let mut features: Vec<usize> = (0..m).collect();
        for i in 0..mtry {
            let j = self.rng.gen_range(i..m);
            features.swap(i, j);
        }
        let mut chosen = features[..mtry].to_vec();
        chosen.sort_unstable();

        let n = indices.len() as f64;
        let sum: f64 = indices.iter().map(|&i| self.design.target[i]).sum();
        let sum2: f64 = indices
            .iter()
            .map(|&i| self.design.target[i] * self.design.target[i])
            .sum();
        let parent_sse = sum2 - sum * sum / n;

        let mut best: Option<BestSplit> = None;
        for &feature in &chosen {
            let mut order: Vec<usize> = indices.to_vec();
            order.sort_by(|&a, &b| {
                self.design.row(a)[feature]
                    .partial_cmp(&self.design.row(b)[feature])
                    .unwrap()
                    .then(a.cmp(&b))
            });

            let mut left_sum = 0.0;
            let mut left_sum2 = 0.0;
            for split_at in 1..order.len() {
                let prev = order[split_at - 1];
                let y_prev = self.design.target[prev];
                left_sum += y_prev;
                left_sum2 += y_prev * y_prev;

                let v_prev = self.design.row(prev)[feature];
                let v_here = self.design.row(order[split_at])[feature];
                if v_prev == v_here {
                    continue;
                }
                if split_at < self.params.min_leaf || order.len() - split_at < self.params.min_leaf
                {
                    continue;
                }
                let nl = split_at as f64;
                let nr = n - nl;
                let right_sum = sum - left_sum;
                let right_sum2 = sum2 - left_sum2;
                let sse = (left_sum2 - left_sum * left_sum / nl)
                    + (right_sum2 - right_sum * right_sum / nr);
                let gain = parent_sse - sse;
                let threshold = v_prev + (v_here - v_prev) / 2.0;
                let better = match &best {
                    None => gain > 1e-12,
                    Some(b) => gain > b.gain + 1e-12,
                };
                if better {
                    best = Some(BestSplit {
                        feature,
                        threshold,
                        gain,
                    });
                }
            }
        }
        best
    }

    fn build(&mut self, indices: Vec<usize>, depth: usize) -> usize {
        let mean =
            indices.iter().map(|&i| self.design.target[i]).sum::<f64>() / indices.len() as f64;
        let make_leaf = depth >= self.params.max_depth
            || indices.len() < 2 * self.params.min_leaf
            || indices.len() < 2;

        let split = if make_leaf { None } else { self.best_split(&indices) };
        match split {
            None => {
                self.nodes.push(Node {
                    feature: LEAF,
                    threshold: 0.0,
                    left: 0,
                    right: 0,
                    value: mean,
                    gain: 0.0,
                });
                self.nodes.len() - 1
            }
            Some(s) => {
                let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
                    .into_iter()
                    .partition(|&i| self.design.row(i)[s.feature] < s.threshold);
                self.gains[s.feature] += s.gain;
                let node_pos = self.nodes.len();
                self.nodes.push(Node {
                    feature: s.feature,
                    threshold: s.threshold,
                    left: 0,
                    right: 0,
                    value: mean,
                    gain: s.gain,
                });
                let left = self.build(left_idx, depth + 1);
                let right = self.build(right_idx, depth + 1);
                self.nodes[node_pos].left = left;
                self.nodes[node_pos].right = right;
                node_pos
            }
        }
    }
}

fn fit_tree(design: &DesignMatrix, params: &RfParams, tree_index: usize) -> (Tree, Vec<f64>) {
    let seed = derive_seed_indexed(params.seed, "tree", tree_index as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = design.n_rows();
    let indices: Vec<usize> = if params.bootstrap {
        (0..n).map(|_| rng.gen_range(0..n)).collect()
    } else {
        (0..n).collect()
    };
    let mut builder = TreeBuilder {
        design,
        params,
        nodes: Vec::new(),
        gains: vec![0.0; design.n_features()],
        rng,
    };
    builder.build(indices, 0);
    (Tree { nodes: builder.nodes }, builder.gains)
}

/// Fits the forest. Trees are built in parallel with per-tree derived
/// seeds and collected in index order, so the result is identical for
/// any number of workers.
pub fn rf_fit(design: &DesignMatrix, params: &RfParams) -> Result<Forest, super::EngagementError> {
    if design.n_rows() < 2 {
        return Err(super::EngagementError::EmptyDesign);
    }
    let fitted: Vec<(Tree, Vec<f64>)> = (0..params.n_trees)
        .into_par_iter()
        .map(|t| fit_tree(design, params, t))
        .collect();

    let mut importances = vec![0.0; design.n_features()];
    for (_, gains) in &fitted {
        for (acc, g) in importances.iter_mut().zip(gains) {
            *acc += g;
        }
    }
    let total: f64 = importances.iter().sum();
    let no_splits = total <= 0.0;
    if !no_splits {
        for v in importances.iter_mut() {
            *v /= total;
        }
    } else {
        importances.iter_mut().for_each(|v| *v = 0.0);
    }

    Ok(Forest {
        trees: fitted.into_iter().map(|(t, _)| t).collect(),
        params: params.clone(),
        n_features: design.n_features(),
        importances,
        no_splits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn design(rows: Vec<Vec<f64>>, y: Vec<f64>) -> DesignMatrix {
        let m = rows[0].len();
        DesignMatrix {
            post_ids: (0..rows.len()).map(|i| format!("p{i}")).collect(),
            feature_names: (0..m).map(|j| format!("x{j}")).collect(),
            rows: rows.into_iter().flatten().collect(),
            n_features: m,
            target: y,
            standardized: false,
        }
    }

    fn signal_design(seed: u64, n: usize) -> DesignMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let y: Vec<f64> = rows.iter().map(|r| r[0]).collect(); // y = x0 exactly
        design(rows, y)
    }

    #[test]
    fn pure_signal_feature_dominates_importances() {
        let d = signal_design(3, 300);
        let params = RfParams {
            n_trees: 50,
            features_per_split: 3,
            ..Default::default()
        };
        let forest = rf_fit(&d, &params).unwrap();
        assert!(forest.importances[0] >= 0.9, "{:?}", forest.importances);
        let total: f64 = forest.importances.iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
        assert!(forest.importances.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn constant_target_predicts_the_constant() {
        let d = design(
            vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0], vec![0.0, 1.0]],
            vec![4.2; 4],
        );
        let forest = rf_fit(&d, &RfParams { n_trees: 10, ..Default::default() }).unwrap();
        assert!(forest.no_splits);
        assert!(forest.importances.iter().all(|&v| v == 0.0));
        assert!((forest.predict_row(&[9.9, -3.0]) - 4.2).abs() < 1e-12);
    }

    #[test]
    fn depth_one_tree_matches_exhaustive_stump_oracle() {
        // Perfectly separable data: y jumps at x0 = 2.5.
        let rows = vec![
            vec![1.0, 7.0],
            vec![2.0, 3.0],
            vec![3.0, 5.0],
            vec![4.0, 1.0],
        ];
        let y = vec![0.0, 0.0, 10.0, 10.0];
        let d = design(rows.clone(), y.clone());
        let params = RfParams {
            n_trees: 1,
            max_depth: 1,
            min_leaf: 1,
            features_per_split: 2,
            bootstrap: false,
            seed: 1,
        };
        let forest = rf_fit(&d, &params).unwrap();
        let root = forest.trees[0].root();

        // Oracle: enumerate every (feature, midpoint) stump and take the
        // SSE-minimizing one.
        let mut best: Option<(usize, f64, f64)> = None; // (feature, threshold, sse)
        for feature in 0..2 {
            let mut values: Vec<f64> = rows.iter().map(|r| r[feature]).collect();
            values.sort_by(|a, b| a.partial_cmp(b).unwrap());
            values.dedup();
            for w in values.windows(2) {
                let threshold = (w[0] + w[1]) / 2.0;
                let (mut ls, mut ls2, mut ln, mut rs, mut rs2, mut rn) =
                    (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
                for (r, &yi) in rows.iter().zip(&y) {
                    if r[feature] < threshold {
                        ls += yi;
                        ls2 += yi * yi;
                        ln += 1.0;
                    } else {
                        rs += yi;
                        rs2 += yi * yi;
                        rn += 1.0;
                    }
                }
                let sse = (ls2 - ls * ls / ln) + (rs2 - rs * rs / rn);
                if best.is_none() || sse < best.unwrap().2 - 1e-12 {
                    best = Some((feature, threshold, sse));
                }
            }
        }
        let (feature, threshold, _) = best.unwrap();
        assert_eq!(root.feature, feature);
        assert!((root.threshold - threshold).abs() < 1e-12);
        // Leaf means on each side.
        let left = &forest.trees[0].nodes[root.left];
        let right = &forest.trees[0].nodes[root.right];
        assert_eq!(left.value, 0.0);
        assert_eq!(right.value, 10.0);
    }

    #[test]
    fn fixed_seed_is_bit_identical_across_worker_counts() {
        let d = signal_design(5, 120);
        let params = RfParams { n_trees: 24, ..Default::default() };
        let fit_with_threads = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| rf_fit(&d, &params).unwrap())
        };
        let f1 = fit_with_threads(1);
        let f4 = fit_with_threads(4);
        let f8 = fit_with_threads(8);
        assert_eq!(f1, f4);
        assert_eq!(f4, f8);
    }

    #[test]
    fn min_leaf_bounds_training_rows_per_leaf() {
        let d = signal_design(7, 64);
        let params = RfParams {
            n_trees: 4,
            min_leaf: 10,
            features_per_split: 3,
            bootstrap: false,
            ..Default::default()
        };
        let forest = rf_fit(&d, &params).unwrap();
        for tree in &forest.trees {
            let mut counts = vec![0usize; tree.nodes.len()];
            for i in 0..d.n_rows() {
                let row = d.row(i);
                let mut node = 0;
                loop {
                    let n = &tree.nodes[node];
                    if n.feature == LEAF {
                        counts[node] += 1;
                        break;
                    }
                    node = if row[n.feature] < n.threshold { n.left } else { n.right };
                }
            }
            for (node, &count) in tree.nodes.iter().zip(&counts) {
                if node.feature == LEAF {
                    assert!(count >= params.min_leaf, "leaf with {count} rows");
                }
            }
        }
    }
}
