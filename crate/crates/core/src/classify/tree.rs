//! Binary CART decision tree with Gini impurity.

use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::ingest::Label;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    pub min_leaf_size: usize,
    pub max_depth: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams { min_leaf_size: 1, max_depth: None }
    }
}

/// Class counts as `[fishing, non_fishing]`.
pub type Counts = [usize; 2];

fn slot(label: Label) -> usize {
    match label {
        Label::Fishing => 0,
        Label::NonFishing => 1,
    }
}

pub fn gini(counts: Counts) -> f64 {
    let n = (counts[0] + counts[1]) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let (p, q) = (counts[0] as f64 / n, counts[1] as f64 / n);
    1.0 - p * p - q * q
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    /// Rows with `value < threshold` go left.
    Branch {
        feature: usize,
        threshold: f64,
        counts: Counts,
        /// Node probability times node impurity.
        risk: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        label: Label,
        counts: Counts,
        risk: f64,
    },
}

impl TreeNode {
    pub fn counts(&self) -> Counts {
        match self {
            TreeNode::Branch { counts, .. } | TreeNode::Leaf { counts, .. } => *counts,
        }
    }

    pub fn risk(&self) -> f64 {
        match self {
            TreeNode::Branch { risk, .. } | TreeNode::Leaf { risk, .. } => *risk,
        }
    }

    pub fn predict(&self, row: &[f64]) -> Label {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { label, .. } => return *label,
                TreeNode::Branch { feature, threshold, left, right, .. } => {
                    node = if row[*feature] < *threshold { left } else { right };
                }
            }
        }
    }

    /// Depth-first visit of every node.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a TreeNode)) {
        f(self);
        if let TreeNode::Branch { left, right, .. } = self {
            left.visit(f);
            right.visit(f);
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Branch { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub feature_names: Vec<String>,
    pub params: TreeParams,
    pub root: TreeNode,
}

impl DecisionTree {
    pub fn predict(&self, row: &[f64]) -> Label {
        self.root.predict(row)
    }

    pub fn predict_many(&self, rows: &[Vec<f64>]) -> Vec<Label> {
        rows.iter().map(|r| self.predict(r)).collect()
    }

    pub fn n_branches(&self) -> usize {
        let mut n = 0;
        self.root.visit(&mut |node| n += usize::from(matches!(node, TreeNode::Branch { .. })));
        n
    }
}

/// A candidate split scored exactly: the weighted-Gini decrease is maximal when
/// `s_l / n_l + s_r / n_r` is, with `s = a² + b²` over the side's class counts.
/// That quantity is kept as the fraction `num / den`.
#[derive(Debug, Clone, Copy)]
pub struct SplitScore {
    num: u128,
    den: u128,
}

impl SplitScore {
    pub fn new(left: Counts, right: Counts) -> SplitScore {
        let s = |c: Counts| (c[0] as u128).pow(2) + (c[1] as u128).pow(2);
        let (nl, nr) = ((left[0] + left[1]) as u128, (right[0] + right[1]) as u128);
        SplitScore { num: s(left) * nr + s(right) * nl, den: nl * nr }
    }

    pub fn beats(&self, other: &SplitScore) -> bool {
        self.num * other.den > other.num * self.den
    }

    /// True when the split lowers impurity relative to the unsplit `parent`.
    pub fn improves_on(&self, parent: Counts) -> bool {
        let n = (parent[0] + parent[1]) as u128;
        let s = (parent[0] as u128).pow(2) + (parent[1] as u128).pow(2);
        self.num * n > s * self.den
    }
}

/// Threshold strictly above `lo` and at most `hi`.
pub fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid > lo && mid <= hi {
        mid
    } else {
        hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BestSplit {
    pub feature: usize,
    pub threshold: f64,
    pub left: Counts,
    pub right: Counts,
}

/// Exhaustive search over all features and all midpoints between distinct values.
/// Ties go to the lowest feature index, then the lowest threshold.
pub fn best_split(ds: &LabeledDataset, indices: &[usize], min_leaf: usize) -> Option<BestSplit> {
    let mut total: Counts = [0, 0];
    for &i in indices {
        total[slot(ds.labels[i])] += 1;
    }
    let n = indices.len();
    let mut best: Option<(SplitScore, BestSplit)> = None;
    let mut order = indices.to_vec();
    for feature in 0..ds.n_features() {
        order.sort_by(|&a, &b| ds.rows[a][feature].total_cmp(&ds.rows[b][feature]).then(a.cmp(&b)));
        let mut left: Counts = [0, 0];
        for k in 0..n - 1 {
            left[slot(ds.labels[order[k]])] += 1;
            let (lo, hi) = (ds.rows[order[k]][feature], ds.rows[order[k + 1]][feature]);
            if !(lo < hi) {
                continue;
            }
            let n_left = k + 1;
            if n_left < min_leaf || n - n_left < min_leaf {
                continue;
            }
            let right = [total[0] - left[0], total[1] - left[1]];
            let score = SplitScore::new(left, right);
            if best.as_ref().is_none_or(|(b, _)| score.beats(b)) {
                best = Some((score, BestSplit { feature, threshold: midpoint(lo, hi), left, right }));
            }
        }
    }
    best.filter(|(score, _)| score.improves_on(total)).map(|(_, split)| split)
}

fn leaf(counts: Counts, n_total: usize) -> TreeNode {
    // ties go to the positive (fishing) class
    let label = if counts[0] >= counts[1] { Label::Fishing } else { Label::NonFishing };
    let n = (counts[0] + counts[1]) as f64;
    TreeNode::Leaf { label, counts, risk: n / n_total as f64 * gini(counts) }
}

fn grow(ds: &LabeledDataset, indices: Vec<usize>, depth: usize, params: &TreeParams, n_total: usize) -> TreeNode {
    let mut counts: Counts = [0, 0];
    for &i in &indices {
        counts[slot(ds.labels[i])] += 1;
    }
    let pure = counts[0] == 0 || counts[1] == 0;
    let depth_reached = params.max_depth.is_some_and(|d| depth >= d);
    if pure || depth_reached || indices.len() < 2 * params.min_leaf_size {
        return leaf(counts, n_total);
    }
    let Some(split) = best_split(ds, &indices, params.min_leaf_size) else {
        return leaf(counts, n_total);
    };
    let (l, r): (Vec<usize>, Vec<usize>) = indices.iter().partition(|&&i| ds.rows[i][split.feature] < split.threshold);
    let left = grow(ds, l, depth + 1, params, n_total);
    let right = grow(ds, r, depth + 1, params, n_total);
    let n = indices.len() as f64;
    TreeNode::Branch {
        feature: split.feature,
        threshold: split.threshold,
        counts,
        risk: n / n_total as f64 * gini(counts),
        left: Box::new(left),
        right: Box::new(right),
    }
}

/// Greedy recursive induction; deterministic for a given dataset.
pub fn train_tree(ds: &LabeledDataset, params: &TreeParams) -> Result<DecisionTree> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if ds.n_features() == 0 {
        return Err(Error::Data("dataset has no features".into()));
    }
    if params.min_leaf_size == 0 {
        return Err(Error::InvalidConfig("min_leaf_size must be at least 1".into()));
    }
    let root = grow(ds, (0..ds.len()).collect(), 0, params, ds.len());
    Ok(DecisionTree { feature_names: ds.feature_names.clone(), params: params.clone(), root })
}
