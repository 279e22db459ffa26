//! Fully-expanded CART regression trees.

use crate::rng::Stream;

/// One node of a [`Tree`]. Children are indices into [`Tree::nodes`].
#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// In-bag training responses that reached this node, bootstrap repeats
    /// included. `pure` is false only for unsplittable nodes whose rows share
    /// one feature vector but not one response.
    Leaf { responses: Vec<f64>, pure: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<TreeNode>,
}

impl Tree {
    pub const ROOT: usize = 0;

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &TreeNode {
        &self.nodes[id]
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, id: usize) -> usize {
            match t.node(id) {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + go(t, *left).max(go(t, *right)),
            }
        }
        go(self, Self::ROOT)
    }

    /// Leaf reached by dropping `x` down the tree: `(responses, pure)`.
    pub fn leaf(&self, x: &[f64]) -> (&[f64], bool) {
        let mut id = Self::ROOT;
        loop {
            match &self.nodes[id] {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => id = if x[*feature] <= *threshold { *left } else { *right },
                TreeNode::Leaf { responses, pure } => return (responses, *pure),
            }
        }
    }
}

/// Column-major copy of the training rows a forest is grown from.
pub(crate) struct TrainingMatrix {
    columns: Vec<Vec<f64>>,
    responses: Vec<f64>,
}

impl TrainingMatrix {
    pub(crate) fn new(rows: &[&[f64]], responses: Vec<f64>, n_features: usize) -> Self {
        let columns = (0..n_features)
            .map(|j| rows.iter().map(|r| r[j]).collect())
            .collect();
        Self { columns, responses }
    }

    pub(crate) fn len(&self) -> usize {
        self.responses.len()
    }

    fn n_features(&self) -> usize {
        self.columns.len()
    }
}

struct Candidate {
    score: f64,
    feature: usize,
    threshold: f64,
}

impl Candidate {
    /// Lower score wins; ties go to the lower feature index, then threshold.
    fn beats(&self, other: &Candidate) -> bool {
        (self.score, self.feature, self.threshold) < (other.score, other.feature, other.threshold)
    }
}

pub(crate) struct Grower<'a> {
    data: &'a TrainingMatrix,
    /// Features evaluated per node before the search may stop.
    n_candidates: usize,
    stream: Stream,
    nodes: Vec<TreeNode>,
    scratch: Vec<(f64, f64)>,
}

impl<'a> Grower<'a> {
    pub(crate) fn new(data: &'a TrainingMatrix, n_candidates: usize, stream: Stream) -> Self {
        Self {
            data,
            n_candidates,
            stream,
            nodes: Vec::new(),
            scratch: Vec::new(),
        }
    }

    /// Bootstrap sample of the training rows, drawn from the tree's stream
    /// before any node is grown.
    pub(crate) fn bootstrap_sample(&mut self) -> Vec<usize> {
        let n = self.data.len();
        (0..n).map(|_| self.stream.below(n)).collect()
    }

    pub(crate) fn grow(mut self, mut samples: Vec<usize>) -> Tree {
        self.build(&mut samples);
        Tree { nodes: self.nodes }
    }

    /// Depth-first, left subtree first; the stream is consumed in this order.
    fn build(&mut self, samples: &mut [usize]) -> usize {
        let id = self.nodes.len();
        let y = &self.data.responses;
        let first = y[samples[0]];
        let pure = samples.iter().all(|&i| y[i] == first);
        if samples.len() < 2 || pure {
            self.nodes.push(self.leaf(samples, true));
            return id;
        }

        let Some(best) = self.best_split(samples) else {
            self.nodes.push(self.leaf(samples, false));
            return id;
        };

        // Placeholder, patched once both children exist.
        self.nodes.push(TreeNode::Leaf {
            responses: Vec::new(),
            pure: true,
        });
        let column = &self.data.columns[best.feature];
        let mut cut = 0;
        for k in 0..samples.len() {
            if column[samples[k]] <= best.threshold {
                samples.swap(k, cut);
                cut += 1;
            }
        }
        debug_assert!(cut > 0 && cut < samples.len());
        let (lo, hi) = samples.split_at_mut(cut);
        let left = self.build(lo);
        let right = self.build(hi);
        self.nodes[id] = TreeNode::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        id
    }

    fn leaf(&self, samples: &[usize], pure: bool) -> TreeNode {
        TreeNode::Leaf {
            responses: samples.iter().map(|&i| self.data.responses[i]).collect(),
            pure,
        }
    }

    /// Visits features in a random order, evaluating at least
    /// `n_candidates` of them and continuing past that only while every
    /// visited feature was constant at this node. `None` means every feature
    /// is constant here, i.e. the node is unsplittable.
    fn best_split(&mut self, samples: &[usize]) -> Option<Candidate> {
        let p = self.data.n_features();
        let mut order: Vec<usize> = (0..p).collect();
        let mut best: Option<Candidate> = None;
        for t in 0..p {
            if t >= self.n_candidates && best.is_some() {
                break;
            }
            let j = t + self.stream.below(p - t);
            order.swap(t, j);
            if let Some(c) = self.best_threshold(order[t], samples) {
                if best.as_ref().is_none_or(|b| c.beats(b)) {
                    best = Some(c);
                }
            }
        }
        best
    }

    /// Minimum total within-child sum of squares over midpoints between
    /// consecutive distinct values of `feature`.
    fn best_threshold(&mut self, feature: usize, samples: &[usize]) -> Option<Candidate> {
        let column = &self.data.columns[feature];
        let y = &self.data.responses;
        let n = samples.len();
        let centre = samples.iter().map(|&i| y[i]).sum::<f64>() / n as f64;

        self.scratch.clear();
        self.scratch
            .extend(samples.iter().map(|&i| (column[i], y[i] - centre)));
        self.scratch
            .sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite features"));
        let pairs = &self.scratch;
        if pairs[0].0 == pairs[n - 1].0 {
            return None;
        }

        let total: f64 = pairs.iter().map(|p| p.1).sum();
        let total_sq: f64 = pairs.iter().map(|p| p.1 * p.1).sum();
        let (mut sum_l, mut sq_l) = (0.0, 0.0);
        let mut best: Option<Candidate> = None;
        for k in 1..n {
            let (x_prev, r_prev) = pairs[k - 1];
            sum_l += r_prev;
            sq_l += r_prev * r_prev;
            let x_next = pairs[k].0;
            if x_prev == x_next {
                continue;
            }
            let n_l = k as f64;
            let n_r = (n - k) as f64;
            let sum_r = total - sum_l;
            let sq_r = total_sq - sq_l;
            let score = (sq_l - sum_l * sum_l / n_l) + (sq_r - sum_r * sum_r / n_r);
            let cand = Candidate {
                score,
                feature,
                threshold: midpoint(x_prev, x_next),
            };
            if best.as_ref().is_none_or(|b| cand.beats(b)) {
                best = Some(cand);
            }
        }
        best
    }
}

/// Midpoint of two adjacent distinct values, falling back to the lower one
/// when rounding would push the midpoint onto the upper value.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid >= hi || mid < lo {
        lo
    } else {
        mid
    }
}
