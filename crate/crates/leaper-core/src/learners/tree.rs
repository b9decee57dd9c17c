//! CART regression tree: greedy weighted variance-reduction splits, mean
//! leaves.

use serde::{Deserialize, Serialize};

use super::{check_training_inputs, SampleWeightVector, TreeParams};
use crate::error::{Error, Result};
use crate::rng::rng_from;

/// Node of a fitted tree. `Split` routes a query left iff
/// `x[feature] <= threshold`; `gain` is the weighted SSE decrease the split
/// achieved on its training rows (kept for feature importance).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "t", rename_all = "lowercase")]
pub enum TreeNode {
    Split { feature: usize, threshold: f64, gain: f64, left: usize, right: usize },
    Leaf { value: f64 },
}

/// Fitted regression tree. Nodes live in an arena with the root at index 0;
/// every leaf predicts the weighted mean of the training targets routed to
/// it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<TreeNode>,
    pub n_features: usize,
}

impl RegressionTree {
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                actual: x.len(),
            });
        }
        Ok(self.predict_unchecked(x))
    }

    pub(crate) fn predict_unchecked(&self, x: &[f64]) -> f64 {
        let mut index = 0;
        loop {
            match &self.nodes[index] {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Split { feature, threshold, left, right, .. } => {
                    index = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    /// The root split, if the tree has one: (feature, threshold, gain).
    pub fn root_split(&self) -> Option<(usize, f64, f64)> {
        match self.nodes.first() {
            Some(&TreeNode::Split { feature, threshold, gain, .. }) => {
                Some((feature, threshold, gain))
            }
            _ => None,
        }
    }
}

/// Routes `x` to a leaf and returns its value.
pub fn predict_tree(tree: &RegressionTree, x: &[f64]) -> Result<f64> {
    tree.predict(x)
}

/// Fits a CART regression tree.
///
/// At each node the (feature, threshold) pair minimizing the weighted sum of
/// child squared deviations is chosen among midpoints between consecutive
/// distinct sorted feature values; ties break to the lowest feature index,
/// then the lowest threshold. Growth stops on the depth limit, the leaf-size
/// limit, or zero target variance. `weights = None` means uniform.
pub fn fit_regression_tree(
    x: &[Vec<f64>],
    y: &[f64],
    weights: Option<&SampleWeightVector>,
    params: &TreeParams,
    seed: u64,
) -> Result<RegressionTree> {
    let d = check_training_inputs(x, y)?;
    params.validate(d)?;
    let uniform;
    let w: &[f64] = match weights {
        Some(sw) => {
            if sw.len() != x.len() {
                return Err(Error::DimensionMismatch {
                    expected: x.len(),
                    actual: sw.len(),
                });
            }
            sw.as_slice()
        }
        None => {
            uniform = SampleWeightVector::uniform(x.len());
            uniform.as_slice()
        }
    };

    let mut builder = Builder {
        x,
        y,
        w,
        params,
        d,
        rng: rng_from(seed),
        nodes: Vec::new(),
    };
    let rows: Vec<usize> = (0..x.len()).collect();
    builder.build(rows, 0);
    Ok(RegressionTree { nodes: builder.nodes, n_features: d })
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    w: &'a [f64],
    params: &'a TreeParams,
    d: usize,
    rng: rand_chacha::ChaCha8Rng,
    nodes: Vec<TreeNode>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    children_sse: f64,
}

impl Builder<'_> {
    /// Builds the subtree over `rows`; returns its root's node index.
    fn build(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let constant = {
            let first = self.y[rows[0]];
            rows.iter().all(|&r| self.y[r] == first)
        };
        let depth_ok = self.params.max_depth.is_none_or(|limit| depth < limit);
        let size_ok = rows.len() >= 2 * self.params.min_samples_leaf;

        if constant || !depth_ok || !size_ok {
            return self.push_leaf(&rows);
        }
        let candidates = self.candidate_features();
        let Some(split) = self.best_split(&rows, &candidates) else {
            return self.push_leaf(&rows);
        };

        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&r| self.x[r][split.feature] <= split.threshold);
        let parent_sse = prefix_sse(sums(rows.iter().map(|&r| (self.y[r], self.w[r]))));
        let gain = (parent_sse - split.children_sse).max(0.0);

        let index = self.nodes.len();
        self.nodes.push(TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            gain,
            left: 0,
            right: 0,
        });
        let left = self.build(left_rows, depth + 1);
        let right = self.build(right_rows, depth + 1);
        match &mut self.nodes[index] {
            TreeNode::Split { left: l, right: r, .. } => {
                *l = left;
                *r = right;
            }
            TreeNode::Leaf { .. } => unreachable!(),
        }
        index
    }

    fn push_leaf(&mut self, rows: &[usize]) -> usize {
        let (wy, ww) = rows
            .iter()
            .fold((0.0, 0.0), |(wy, ww), &r| (wy + self.w[r] * self.y[r], ww + self.w[r]));
        // A branch can carry only zero-weight rows; fall back to the plain
        // mean so the leaf still reflects its targets.
        let value = if ww > 0.0 {
            wy / ww
        } else {
            rows.iter().map(|&r| self.y[r]).sum::<f64>() / rows.len() as f64
        };
        self.nodes.push(TreeNode::Leaf { value });
        self.nodes.len() - 1
    }

    /// Features to scan at this node, ascending (the tie-break order).
    fn candidate_features(&mut self) -> Vec<usize> {
        match self.params.max_features {
            Some(m) if m < self.d => {
                let mut picked =
                    rand::seq::index::sample(&mut self.rng, self.d, m).into_vec();
                picked.sort_unstable();
                picked
            }
            _ => (0..self.d).collect(),
        }
    }

    /// Evaluates every (feature, boundary) candidate with prefix sums, then
    /// picks the first one within the tie tolerance of the minimum so that
    /// mathematically tied candidates resolve by (lowest feature, lowest
    /// threshold) rather than by summation noise.
    fn best_split(&self, rows: &[usize], features: &[usize]) -> Option<BestSplit> {
        let msl = self.params.min_samples_leaf;
        let n = rows.len();
        let mut candidates: Vec<BestSplit> = Vec::new();
        let mut sorted: Vec<(f64, f64, f64)> = Vec::with_capacity(n);
        for &feature in features {
            sorted.clear();
            sorted.extend(rows.iter().map(|&r| (self.x[r][feature], self.y[r], self.w[r])));
            sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

            let total = sums(sorted.iter().map(|&(_, y, w)| (y, w)));
            let mut left = (0.0, 0.0, 0.0);
            for i in 0..n - 1 {
                let (v, y, w) = sorted[i];
                left = (left.0 + w, left.1 + w * y, left.2 + w * y * y);
                let v_next = sorted[i + 1].0;
                if v == v_next {
                    continue;
                }
                if i + 1 < msl || n - (i + 1) < msl {
                    continue;
                }
                let right = (total.0 - left.0, total.1 - left.1, total.2 - left.2);
                candidates.push(BestSplit {
                    feature,
                    threshold: split_threshold(v, v_next),
                    children_sse: prefix_sse(left) + prefix_sse(right),
                });
            }
        }
        let scale = sums(rows.iter().map(|&r| (self.y[r], self.w[r]))).2;
        let sses: Vec<f64> = candidates.iter().map(|c| c.children_sse).collect();
        let winner = super::fuzzy_argmin(&sses, super::split_tie_tolerance(scale))?;
        Some(candidates.swap_remove(winner))
    }
}

/// (Σw, Σwy, Σwy²) of a target/weight stream.
fn sums(pairs: impl Iterator<Item = (f64, f64)>) -> (f64, f64, f64) {
    pairs.fold((0.0, 0.0, 0.0), |(sw, swy, swyy), (y, w)| {
        (sw + w, swy + w * y, swyy + w * y * y)
    })
}

/// Weighted SSE around the weighted mean from accumulated sums; zero-weight
/// groups contribute nothing.
fn prefix_sse((sw, swy, swyy): (f64, f64, f64)) -> f64 {
    if sw <= 0.0 {
        0.0
    } else {
        (swyy - swy * swy / sw).max(0.0)
    }
}

/// Midpoint between two consecutive distinct values, guarded so the left
/// child keeps exactly the rows ≤ the lower value even when the midpoint
/// rounds up onto the upper value.
pub(crate) fn split_threshold(lower: f64, upper: f64) -> f64 {
    let mid = 0.5 * (lower + upper);
    if mid < upper {
        mid
    } else {
        lower
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fit(x: &[Vec<f64>], y: &[f64], params: &TreeParams) -> RegressionTree {
        fit_regression_tree(x, y, None, params, 0).unwrap()
    }

    #[test]
    fn single_sample_yields_single_leaf() {
        let tree = fit(&[vec![1.0, 2.0]], &[3.5], &TreeParams::default());
        assert_eq!(tree.nodes, vec![TreeNode::Leaf { value: 3.5 }]);
        assert_eq!(tree.predict(&[9.0, 9.0]).unwrap(), 3.5);
    }

    #[test]
    fn perfect_separation_on_two_points() {
        let tree = fit(&[vec![0.0], vec![1.0]], &[0.0, 10.0], &TreeParams::default());
        assert_eq!(tree.root_split().map(|(f, t, _)| (f, t)), Some((0, 0.5)));
        assert_eq!(tree.predict(&[0.4]).unwrap(), 0.0);
        assert_eq!(tree.predict(&[0.6]).unwrap(), 10.0);
        assert_eq!(tree.predict(&[0.5]).unwrap(), 0.0, "boundary routes left");
    }

    #[test]
    fn constant_targets_make_a_leaf() {
        let tree = fit(
            &[vec![0.0], vec![1.0], vec![2.0]],
            &[4.0, 4.0, 4.0],
            &TreeParams::default(),
        );
        assert_eq!(tree.nodes, vec![TreeNode::Leaf { value: 4.0 }]);
    }

    #[test]
    fn depth_limit_stops_growth() {
        let x: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let stump = fit(&x, &y, &TreeParams { max_depth: Some(1), ..Default::default() });
        // One split, two leaves.
        assert_eq!(stump.nodes.len(), 3);
        let deep = fit(&x, &y, &TreeParams::default());
        for (i, &target) in y.iter().enumerate() {
            assert_eq!(deep.predict(&x[i]).unwrap(), target);
        }
    }

    #[test]
    fn min_samples_leaf_is_respected() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| (i * i) as f64).collect();
        let tree = fit(
            &x,
            &y,
            &TreeParams { min_samples_leaf: 3, ..Default::default() },
        );
        // Count rows reaching each leaf.
        let mut leaf_counts = std::collections::HashMap::new();
        for row in &x {
            let mut index = 0;
            loop {
                match &tree.nodes[index] {
                    TreeNode::Leaf { .. } => break,
                    TreeNode::Split { feature, threshold, left, right, .. } => {
                        index =
                            if row[*feature] <= *threshold { *left } else { *right };
                    }
                }
            }
            *leaf_counts.entry(index).or_insert(0usize) += 1;
        }
        assert!(leaf_counts.values().all(|&c| c >= 3), "{leaf_counts:?}");
    }

    #[test]
    fn leaves_reproduce_weighted_means() {
        let x: Vec<Vec<f64>> =
            (0..16).map(|i| vec![(i % 4) as f64, (i / 4) as f64]).collect();
        let y: Vec<f64> = (0..16).map(|i| ((i * 7) % 5) as f64).collect();
        let w = SampleWeightVector::new((1..=16).map(|i| i as f64 / 4.0).collect()).unwrap();
        let tree =
            fit_regression_tree(&x, &y, Some(&w), &TreeParams::default(), 3).unwrap();
        // Replay routing; compare each leaf value to the weighted mean of
        // the rows that reach it.
        let mut routed: std::collections::HashMap<usize, Vec<usize>> =
            std::collections::HashMap::new();
        for (r, row) in x.iter().enumerate() {
            let mut index = 0;
            loop {
                match &tree.nodes[index] {
                    TreeNode::Leaf { .. } => break,
                    TreeNode::Split { feature, threshold, left, right, .. } => {
                        index =
                            if row[*feature] <= *threshold { *left } else { *right };
                    }
                }
            }
            routed.entry(index).or_default().push(r);
        }
        for (leaf, rows) in routed {
            let TreeNode::Leaf { value } = tree.nodes[leaf] else { panic!() };
            let ww: f64 = rows.iter().map(|&r| w.as_slice()[r]).sum();
            let wy: f64 = rows.iter().map(|&r| w.as_slice()[r] * y[r]).sum();
            assert!((value - wy / ww).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let params = TreeParams::default();
        assert!(matches!(
            fit_regression_tree(&[], &[], None, &params, 0).unwrap_err(),
            Error::EmptyInput(_)
        ));
        let err = fit_regression_tree(&[vec![f64::NAN]], &[1.0], None, &params, 0)
            .unwrap_err();
        assert_eq!(err.to_string(), "non-finite value at row 0, column 0");
        let err = fit_regression_tree(&[vec![1.0]], &[f64::INFINITY], None, &params, 0)
            .unwrap_err();
        assert_eq!(err.to_string(), "non-finite value at row 0, target");
        let err = fit_regression_tree(
            &[vec![1.0]],
            &[1.0],
            None,
            &TreeParams { max_features: Some(2), ..Default::default() },
            0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
        let tree = fit(&[vec![0.0], vec![1.0]], &[0.0, 1.0], &params);
        assert!(tree.predict(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn deterministic_under_feature_subsampling() {
        let x: Vec<Vec<f64>> = (0..40)
            .map(|i| (0..6).map(|j| ((i * 31 + j * 17) % 13) as f64).collect())
            .collect();
        let y: Vec<f64> = (0..40).map(|i| ((i * 11) % 7) as f64).collect();
        let params = TreeParams { max_features: Some(2), ..Default::default() };
        let a = fit_regression_tree(&x, &y, None, &params, 42).unwrap();
        let b = fit_regression_tree(&x, &y, None, &params, 42).unwrap();
        assert_eq!(a, b);
        let c = fit_regression_tree(&x, &y, None, &params, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn adjacent_float_values_route_consistently() {
        let lo = 1.0f64;
        let hi = lo + f64::EPSILON; // midpoint rounds onto hi
        let threshold = split_threshold(lo, hi);
        assert!(lo <= threshold && threshold < hi);
        let tree = fit(&[vec![lo], vec![hi]], &[0.0, 10.0], &TreeParams::default());
        assert_eq!(tree.predict(&[lo]).unwrap(), 0.0);
        assert_eq!(tree.predict(&[hi]).unwrap(), 10.0);
    }
}
