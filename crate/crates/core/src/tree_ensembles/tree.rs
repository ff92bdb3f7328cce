//! Weighted CART regression trees.
//!
//! Splits minimize the weighted sum of squared errors. Continuous features
//! split at midpoints between adjacent distinct values and rows with
//! `x >= threshold` go right. Categorical features split on a subset of
//! codes; codes in the subset go right and every other code, including
//! codes never seen in training, goes left.
//!
//! Growth is best-first: the leaf whose best split removes the most squared
//! error is expanded next, which lets `max_leaves` produce exactly `J`
//! terminal nodes. Without a leaf limit the result is the ordinary greedy
//! tree.

use crate::error::{invalid, Error, Result};
use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Categorical features with at most this many levels are split by
/// exhaustive subset search; larger ones by ordering levels on their mean.
const EXHAUSTIVE_LEVELS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeControls {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub max_leaves: Option<usize>,
    /// Features drawn at random for each split; `None` uses all of them.
    pub m_try: Option<usize>,
    /// Cost-complexity parameter on the squared error per unit weight;
    /// 0 disables pruning.
    pub ccp_alpha: f64,
}

impl Default for TreeControls {
    fn default() -> Self {
        TreeControls {
            max_depth: None,
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_leaves: None,
            m_try: None,
            ccp_alpha: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitRule {
    Threshold(f64),
    /// Sorted codes routed right.
    Categories(Vec<i64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub feature: usize,
    pub rule: SplitRule,
    pub left: usize,
    pub right: usize,
    /// Reduction in weighted squared error.
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    /// Weighted mean of the training targets reaching the node.
    pub value: f64,
    pub weight: f64,
    pub n_samples: usize,
    /// Weighted squared error around `value`.
    pub sse: f64,
    pub depth: usize,
    pub split: Option<Split>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PruningRecord {
    pub ccp_alpha: f64,
    pub leaves_before: usize,
    pub leaves_after: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    /// Node 0 is the root.
    pub nodes: Vec<Node>,
    pub n_features: usize,
    pub pruning: PruningRecord,
}

impl SplitRule {
    pub fn goes_right(&self, v: f64) -> bool {
        match self {
            SplitRule::Threshold(t) => v >= *t,
            SplitRule::Categories(codes) => codes.binary_search(&(v.round() as i64)).is_ok(),
        }
    }
}

impl RegressionTree {
    /// A single leaf predicting `value`.
    pub fn constant(value: f64, n_features: usize) -> Self {
        RegressionTree {
            nodes: vec![Node {
                value,
                weight: 0.0,
                n_samples: 0,
                sse: 0.0,
                depth: 0,
                split: None,
            }],
            n_features,
            pruning: PruningRecord {
                ccp_alpha: 0.0,
                leaves_before: 1,
                leaves_after: 1,
            },
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.split.is_none()).count()
    }

    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    /// Index of the leaf reached by a row given as a feature accessor.
    pub fn leaf_of(&self, value: impl Fn(usize) -> f64) -> usize {
        let mut at = 0;
        while let Some(s) = &self.nodes[at].split {
            at = if s.rule.goes_right(value(s.feature)) { s.right } else { s.left };
        }
        at
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.nodes[self.leaf_of(|f| row[f])].value
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got: x.ncols(),
            });
        }
        Ok((0..x.nrows())
            .map(|i| self.nodes[self.leaf_of(|f| x[(i, f)])].value)
            .collect())
    }

    /// Features used by at least one split.
    pub fn used_features(&self) -> Vec<usize> {
        let mut f: Vec<usize> = self
            .nodes
            .iter()
            .filter_map(|n| n.split.as_ref().map(|s| s.feature))
            .collect();
        f.sort_unstable();
        f.dedup();
        f
    }
}

/// Row orderings of every column, shared across trees fit on the same
/// matrix.
#[derive(Debug, Clone)]
pub struct Presorted {
    order: Vec<Vec<u32>>,
}

impl Presorted {
    pub fn new(x: &DMatrix<f64>) -> Self {
        let n = x.nrows();
        let order = (0..x.ncols())
            .map(|f| {
                let col = x.column(f);
                let mut idx: Vec<u32> = (0..n as u32).collect();
                idx.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]).then(a.cmp(&b)));
                idx
            })
            .collect();
        Presorted { order }
    }
}

/// Inputs to a single tree fit. `counts` are bootstrap multiplicities; rows
/// with count 0 are left out.
pub struct TreeData<'a> {
    pub x: &'a DMatrix<f64>,
    pub categorical: &'a [bool],
    pub y: &'a [f64],
    pub w: &'a [f64],
    pub counts: Option<&'a [u32]>,
    /// Candidate features; `None` means all columns.
    pub features: Option<&'a [usize]>,
    pub presorted: Option<&'a Presorted>,
}

#[derive(Clone, Copy, Default)]
struct Stats {
    w: f64,
    wy: f64,
    n: usize,
}

struct Candidate {
    gain: f64,
    feature: usize,
    rule: SplitRule,
}

struct Heaped {
    gain: f64,
    node: usize,
}

impl PartialEq for Heaped {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Heaped {}
impl PartialOrd for Heaped {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Heaped {
    fn cmp(&self, o: &Self) -> Ordering {
        self.gain.total_cmp(&o.gain).then(o.node.cmp(&self.node))
    }
}

struct Grower<'a, R: Rng> {
    x: &'a [f64],
    n_rows: usize,
    categorical: &'a [bool],
    y: &'a [f64],
    /// Effective weight: observation weight times multiplicity.
    ew: Vec<f64>,
    mult: Vec<usize>,
    features: Vec<usize>,
    /// `idx[k]` holds the in-bag rows sorted by feature `features[k]`;
    /// every node owns the same range in each of them.
    idx: Vec<Vec<u32>>,
    scratch: Vec<u32>,
    right: Vec<bool>,
    controls: TreeControls,
    rng: &'a mut R,
    nodes: Vec<Node>,
    ranges: Vec<(usize, usize)>,
    pending: Vec<Option<Candidate>>,
}

impl<R: Rng> Grower<'_, R> {
    fn col(&self, f: usize) -> &[f64] {
        &self.x[f * self.n_rows..(f + 1) * self.n_rows]
    }

    fn make_node(&mut self, start: usize, end: usize, depth: usize) -> usize {
        let rows = &self.idx[0][start..end];
        let mut st = Stats::default();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &r in rows {
            let r = r as usize;
            st.w += self.ew[r];
            st.wy += self.ew[r] * self.y[r];
            st.n += self.mult[r];
            lo = lo.min(self.y[r]);
            hi = hi.max(self.y[r]);
        }
        let mean = (st.wy / st.w).clamp(lo, hi);
        let sse: f64 = rows
            .iter()
            .map(|&r| self.ew[r as usize] * (self.y[r as usize] - mean).powi(2))
            .sum();
        let id = self.nodes.len();
        self.nodes.push(Node {
            value: mean,
            weight: st.w,
            n_samples: st.n,
            sse,
            depth,
            split: None,
        });
        self.ranges.push((start, end));
        let splittable = lo < hi
            && st.n >= self.controls.min_samples_split
            && st.n >= 2 * self.controls.min_samples_leaf
            && self.controls.max_depth.is_none_or(|d| depth < d);
        let cand = if splittable { self.best_split(id) } else { None };
        self.pending.push(cand);
        id
    }

    fn best_split(&mut self, id: usize) -> Option<Candidate> {
        let (start, end) = self.ranges[id];
        let node = &self.nodes[id];
        let (mean, total_w, total_n, sse) = (node.value, node.weight, node.n_samples, node.sse);
        let slots: Vec<usize> = match self.controls.m_try {
            Some(m) if m < self.features.len() => {
                let mut s = sample(self.rng, self.features.len(), m).into_vec();
                s.sort_unstable();
                s
            }
            _ => (0..self.features.len()).collect(),
        };
        let min_leaf = self.controls.min_samples_leaf.max(1);
        let mut best: Option<Candidate> = None;
        for k in slots {
            let f = self.features[k];
            let col = self.col(f);
            let rows = &self.idx[k][start..end];
            let found = if self.categorical[f] {
                self.categorical_split(col, rows, mean, total_w, total_n, min_leaf)
            } else {
                let mut acc = Stats::default();
                let mut top: Option<(f64, f64)> = None;
                for i in 0..rows.len() - 1 {
                    let r = rows[i] as usize;
                    acc.w += self.ew[r];
                    acc.wy += self.ew[r] * (self.y[r] - mean);
                    acc.n += self.mult[r];
                    let (a, b) = (col[r], col[rows[i + 1] as usize]);
                    if a == b || acc.n < min_leaf || total_n - acc.n < min_leaf {
                        continue;
                    }
                    let rw = total_w - acc.w;
                    if acc.w <= 0.0 || rw <= 0.0 {
                        continue;
                    }
                    // the node's centered sum is zero, so the right sum is -acc.wy
                    let gain = acc.wy * acc.wy / acc.w + acc.wy * acc.wy / rw;
                    if top.is_none_or(|(g, _)| gain > g) {
                        let mid = 0.5 * (a + b);
                        let thr = if mid > a { mid } else { b };
                        top = Some((gain, thr));
                    }
                }
                top.map(|(g, t)| (g, SplitRule::Threshold(t)))
            };
            if let Some((gain, rule)) = found {
                if best.as_ref().is_none_or(|b| gain > b.gain) {
                    best = Some(Candidate { gain, feature: f, rule });
                }
            }
        }
        best.filter(|b| b.gain > 1e-12 * sse && b.gain > 0.0)
    }

    fn categorical_split(
        &self,
        col: &[f64],
        rows: &[u32],
        mean: f64,
        total_w: f64,
        total_n: usize,
        min_leaf: usize,
    ) -> Option<(f64, SplitRule)> {
        let mut levels: Vec<(i64, Stats)> = Vec::new();
        for &r in rows {
            let r = r as usize;
            let code = col[r].round() as i64;
            let pos = match levels.binary_search_by_key(&code, |l| l.0) {
                Ok(p) => p,
                Err(p) => {
                    levels.insert(p, (code, Stats::default()));
                    p
                }
            };
            let s = &mut levels[pos].1;
            s.w += self.ew[r];
            s.wy += self.ew[r] * (self.y[r] - mean);
            s.n += self.mult[r];
        }
        let l = levels.len();
        if l < 2 {
            return None;
        }
        let eval = |right: &[usize]| -> Option<f64> {
            let mut acc = Stats::default();
            for &k in right {
                acc.w += levels[k].1.w;
                acc.wy += levels[k].1.wy;
                acc.n += levels[k].1.n;
            }
            let lw = total_w - acc.w;
            if acc.n < min_leaf || total_n - acc.n < min_leaf || acc.w <= 0.0 || lw <= 0.0 {
                return None;
            }
            Some(acc.wy * acc.wy / acc.w + acc.wy * acc.wy / lw)
        };
        let mut best: Option<(f64, Vec<usize>)> = None;
        let mut consider = |set: Vec<usize>| {
            if let Some(g) = eval(&set) {
                if best.as_ref().is_none_or(|(bg, _)| g > *bg) {
                    best = Some((g, set));
                }
            }
        };
        if l <= EXHAUSTIVE_LEVELS {
            // the lowest code always stays left so each partition appears once
            for mask in 1u32..(1 << (l - 1)) {
                consider((1..l).filter(|k| mask & (1 << (k - 1)) != 0).collect());
            }
        } else {
            let mut by_mean: Vec<usize> = (0..l).collect();
            by_mean.sort_by(|&a, &b| {
                (levels[a].1.wy / levels[a].1.w).total_cmp(&(levels[b].1.wy / levels[b].1.w))
            });
            for cut in 1..l {
                consider(by_mean[cut..].to_vec());
            }
        }
        best.map(|(g, set)| {
            let mut codes: Vec<i64> = set.iter().map(|&k| levels[k].0).collect();
            codes.sort_unstable();
            (g, SplitRule::Categories(codes))
        })
    }

    fn split(&mut self, id: usize, cand: Candidate) {
        let (start, end) = self.ranges[id];
        let depth = self.nodes[id].depth;
        let col_start = cand.feature * self.n_rows;
        let mut n_left = 0;
        for &r in &self.idx[0][start..end] {
            let go = cand.rule.goes_right(self.x[col_start + r as usize]);
            self.right[r as usize] = go;
            n_left += usize::from(!go);
        }
        for k in 0..self.idx.len() {
            let seg = &mut self.idx[k][start..end];
            let (mut l, mut r) = (0, 0);
            for i in 0..seg.len() {
                let row = seg[i];
                if self.right[row as usize] {
                    self.scratch[r] = row;
                    r += 1;
                } else {
                    seg[l] = row;
                    l += 1;
                }
            }
            seg[l..].copy_from_slice(&self.scratch[..r]);
        }
        let mid = start + n_left;
        let left = self.make_node(start, mid, depth + 1);
        let right = self.make_node(mid, end, depth + 1);
        self.nodes[id].split = Some(Split {
            feature: cand.feature,
            rule: cand.rule,
            left,
            right,
            gain: cand.gain,
        });
    }
}

/// Grows one tree. The caller's `rng` supplies the per-split feature draws.
pub fn fit_tree_data<R: Rng>(
    data: &TreeData<'_>,
    controls: &TreeControls,
    rng: &mut R,
) -> Result<RegressionTree> {
    let (n, p) = data.x.shape();
    if n == 0 {
        return Err(invalid("cannot fit a tree to an empty training set"));
    }
    if data.y.len() != n || data.w.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: if data.y.len() != n { data.y.len() } else { data.w.len() },
        });
    }
    if data.categorical.len() != p {
        return Err(Error::DimensionMismatch { expected: p, got: data.categorical.len() });
    }
    if let Some(m) = controls.m_try {
        if m == 0 {
            return Err(invalid("m_try must be at least 1"));
        }
    }
    if controls.max_leaves.is_some_and(|j| j < 1) {
        return Err(invalid("max_leaves must be at least 1"));
    }
    let features: Vec<usize> = match data.features {
        Some(f) => f.to_vec(),
        None => (0..p).collect(),
    };
    if let Some(&bad) = features.iter().find(|&&f| f >= p) {
        return Err(invalid(format!("feature index {bad} out of range for {p} columns")));
    }
    let mult: Vec<usize> = match data.counts {
        Some(c) => c.iter().map(|&v| v as usize).collect(),
        None => vec![1; n],
    };
    let ew: Vec<f64> = data.w.iter().zip(&mult).map(|(w, &m)| w * m as f64).collect();
    let in_bag = |r: &u32| mult[*r as usize] > 0;
    let mut idx: Vec<Vec<u32>> = Vec::with_capacity(features.len().max(1));
    let owned;
    let presorted = match data.presorted {
        Some(p) => p,
        None => {
            owned = Presorted::new(data.x);
            &owned
        }
    };
    for &f in &features {
        idx.push(presorted.order[f].iter().copied().filter(in_bag).collect());
    }
    if idx.is_empty() {
        idx.push((0..n as u32).filter(in_bag).collect());
    }
    let n_in = idx[0].len();
    if n_in == 0 {
        return Err(invalid("no rows with positive multiplicity"));
    }
    let x = data.x.as_slice();
    let mut g = Grower {
        x,
        n_rows: n,
        categorical: data.categorical,
        y: data.y,
        ew,
        mult,
        features,
        idx,
        scratch: vec![0; n_in],
        right: vec![false; n],
        controls: *controls,
        rng,
        nodes: Vec::new(),
        ranges: Vec::new(),
        pending: Vec::new(),
    };
    let root = g.make_node(0, n_in, 0);
    let mut heap = BinaryHeap::new();
    if let Some(c) = &g.pending[root] {
        heap.push(Heaped { gain: c.gain, node: root });
    }
    let mut leaves = 1;
    while let Some(Heaped { node, .. }) = heap.pop() {
        if controls.max_leaves.is_some_and(|j| leaves >= j) {
            break;
        }
        let cand = g.pending[node].take().expect("queued node has a candidate");
        g.split(node, cand);
        leaves += 1;
        let s = g.nodes[node].split.as_ref().expect("just split");
        for child in [s.left, s.right] {
            if let Some(c) = &g.pending[child] {
                heap.push(Heaped { gain: c.gain, node: child });
            }
        }
    }
    let mut tree = RegressionTree {
        nodes: g.nodes,
        n_features: p,
        pruning: PruningRecord {
            ccp_alpha: controls.ccp_alpha,
            leaves_before: leaves,
            leaves_after: leaves,
        },
    };
    if controls.ccp_alpha > 0.0 {
        prune(&mut tree, controls.ccp_alpha);
    }
    Ok(tree)
}

/// Fits a tree with every feature a candidate at every split.
pub fn fit_tree_matrix(
    x: &DMatrix<f64>,
    categorical: &[bool],
    y: &[f64],
    w: &[f64],
    controls: &TreeControls,
    seed: u64,
) -> Result<RegressionTree> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let data = TreeData {
        x,
        categorical,
        y,
        w,
        counts: None,
        features: None,
        presorted: None,
    };
    fit_tree_data(&data, controls, &mut rng)
}

/// Minimal cost-complexity pruning: keeps the smallest subtree minimizing
/// `sum(leaf sse) / W + alpha * leaves`.
fn prune(tree: &mut RegressionTree, alpha: f64) {
    let total_w = tree.nodes[0].weight;
    // (cost, leaves) of the best subtree rooted at each node, children first
    fn best(nodes: &mut [Node], at: usize, alpha: f64, total_w: f64) -> f64 {
        let as_leaf = nodes[at].sse / total_w + alpha;
        let Some((l, r)) = nodes[at].split.as_ref().map(|s| (s.left, s.right)) else {
            return as_leaf;
        };
        let sub = best(nodes, l, alpha, total_w) + best(nodes, r, alpha, total_w);
        if as_leaf <= sub {
            nodes[at].split = None;
            as_leaf
        } else {
            sub
        }
    }
    best(&mut tree.nodes, 0, alpha, total_w);
    // drop unreachable nodes, renumbering in preorder
    let old = std::mem::take(&mut tree.nodes);
    let mut stack = vec![(0usize, None::<(usize, bool)>)];
    while let Some((at, parent)) = stack.pop() {
        let id = tree.nodes.len();
        let mut node = old[at].clone();
        let children = node.split.as_ref().map(|s| (s.left, s.right));
        if let Some(s) = node.split.as_mut() {
            s.left = usize::MAX;
            s.right = usize::MAX;
        }
        tree.nodes.push(node);
        if let Some((p, is_right)) = parent {
            let s = tree.nodes[p].split.as_mut().expect("parent is a split");
            if is_right {
                s.right = id;
            } else {
                s.left = id;
            }
        }
        if let Some((l, r)) = children {
            stack.push((r, Some((id, true))));
            stack.push((l, Some((id, false))));
        }
    }
    tree.pruning.leaves_after = tree.n_leaves();
}
