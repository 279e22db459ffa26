//! Random forests of fully-expanded regression trees and the prediction
//! intervals built from their pooled leaf responses.

mod quantile;
mod tree;

use std::io::{self, Write};

use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::Stream;
use crate::util::ceil_product;

pub use quantile::empirical_quantile;
pub use tree::{Tree, TreeNode};

use tree::{Grower, TrainingMatrix};

pub const DEFAULT_TREES: usize = 1000;
pub const DEFAULT_MTRY: f64 = 1.0;

/// What to do when a test row lands in an unsplittable leaf with differing
/// responses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ImpureLeafPolicy {
    /// Refuse to build an interval for that row.
    #[default]
    Error,
    /// Pool the leaf's responses anyway and flag the result.
    Pool,
}

impl std::str::FromStr for ImpureLeafPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "error" => Ok(Self::Error),
            "pool" => Ok(Self::Pool),
            other => Err(Error::InvalidParameter(format!(
                "impure-leaf policy `{other}` (expected error|pool)"
            ))),
        }
    }
}

impl std::fmt::Display for ImpureLeafPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Error => "error",
            Self::Pool => "pool",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestConfig {
    /// Fraction of predictors considered at each split, in `(0, 1]`.
    pub mtry: f64,
    pub n_trees: usize,
    pub seed: u64,
    pub impure_leaf_policy: ImpureLeafPolicy,
    /// Grow each tree from a bootstrap resample. Disabling it grows every
    /// tree on the training rows as given.
    pub bootstrap: bool,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            mtry: DEFAULT_MTRY,
            n_trees: DEFAULT_TREES,
            seed: 0,
            impure_leaf_policy: ImpureLeafPolicy::Error,
            bootstrap: true,
        }
    }
}

impl ForestConfig {
    pub fn with_mtry(self, mtry: f64) -> Self {
        Self { mtry, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mtry > 0.0 && self.mtry <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "mtry {} not in (0, 1]",
                self.mtry
            )));
        }
        if self.n_trees == 0 {
            return Err(Error::InvalidParameter("n_trees must be >= 1".into()));
        }
        Ok(())
    }

    /// Features considered per split: `max(1, ⌈p · mtry⌉)`.
    pub fn candidates_per_split(&self, n_features: usize) -> usize {
        ceil_product(self.mtry, n_features).clamp(1, n_features.max(1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    trees: Vec<Tree>,
    config: ForestConfig,
    feature_count: usize,
}

/// Leaf responses pooled over every tree for one input.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledResponses {
    pub values: Vec<f64>,
    /// Set when an impure leaf contributed (pool policy only).
    pub impure: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionInterval {
    pub lower: f64,
    pub upper: f64,
    /// Conditional-mean prediction.
    pub point: f64,
    pub nc: f64,
    /// Built from a pool that included an impure leaf.
    pub impure: bool,
}

impl PredictionInterval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    /// Closed-interval membership.
    pub fn contains(&self, y: f64) -> bool {
        self.lower <= y && y <= self.upper
    }
}

pub fn train_forest(train: &Dataset, config: &ForestConfig) -> Result<ForestModel> {
    let all: Vec<usize> = (0..train.len()).collect();
    train_forest_on(train, &all, config)
}

/// Trains on the rows of `data` at `indices` (repeats allowed).
///
/// Tree `i` draws its bootstrap sample and then its per-node feature orders
/// from `Stream::derived(config.seed, i)`, so the forest does not depend on
/// how trees are scheduled across threads.
pub fn train_forest_on(
    data: &Dataset,
    indices: &[usize],
    config: &ForestConfig,
) -> Result<ForestModel> {
    config.validate()?;
    if indices.len() < 2 {
        return Err(Error::too_few(
            "forest",
            format!("need at least 2 training rows, got {}", indices.len()),
        ));
    }
    let p = data.feature_count();
    if p == 0 {
        return Err(Error::InvalidParameter("dataset has no features".into()));
    }
    let rows: Vec<&[f64]> = indices.iter().map(|&i| data.row(i)).collect();
    let y: Vec<f64> = indices.iter().map(|&i| data.responses()[i]).collect();
    let matrix = TrainingMatrix::new(&rows, y, p);
    let n_candidates = config.candidates_per_split(p);

    let trees = (0..config.n_trees)
        .into_par_iter()
        .map(|i| {
            let mut grower = Grower::new(&matrix, n_candidates, Stream::derived(config.seed, i as u64));
            let sample = if config.bootstrap {
                grower.bootstrap_sample()
            } else {
                (0..matrix.len()).collect()
            };
            grower.grow(sample)
        })
        .collect();

    Ok(ForestModel {
        trees,
        config: *config,
        feature_count: p,
    })
}

impl ForestModel {
    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn config(&self) -> &ForestConfig {
        &self.config
    }

    pub fn feature_count(&self) -> usize {
        self.feature_count
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.feature_count {
            return Err(Error::DimensionMismatch {
                expected: self.feature_count,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Mean over trees of each reached leaf's mean response.
    pub fn predict_mean(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let total: f64 = self
            .trees
            .iter()
            .map(|t| {
                let (resp, _) = t.leaf(x);
                resp.iter().sum::<f64>() / resp.len() as f64
            })
            .sum();
        Ok(total / self.trees.len() as f64)
    }

    pub fn pooled_responses(&self, x: &[f64]) -> Result<PooledResponses> {
        self.pool(x, self.config.impure_leaf_policy)
    }

    fn pool(&self, x: &[f64], policy: ImpureLeafPolicy) -> Result<PooledResponses> {
        self.check_dim(x)?;
        let mut values = Vec::new();
        let mut impure = false;
        for tree in &self.trees {
            let (resp, pure) = tree.leaf(x);
            if !pure {
                if policy == ImpureLeafPolicy::Error {
                    return Err(Error::ImpureLeaf);
                }
                impure = true;
            }
            values.extend_from_slice(resp);
        }
        Ok(PooledResponses { values, impure })
    }

    /// Intervals for one input at several nominal confidences, sharing one
    /// pooled sort.
    pub fn intervals_for(&self, x: &[f64], ncs: &[f64]) -> Result<Vec<PredictionInterval>> {
        self.intervals_with(x, ncs, self.config.impure_leaf_policy)
    }

    /// As [`intervals_for`](Self::intervals_for) under an explicit policy.
    pub fn intervals_with(
        &self,
        x: &[f64],
        ncs: &[f64],
        policy: ImpureLeafPolicy,
    ) -> Result<Vec<PredictionInterval>> {
        for &nc in ncs {
            check_nc(nc)?;
        }
        let pooled = self.pool(x, policy)?;
        let point = self.predict_mean(x)?;
        let mut sorted = pooled.values;
        sorted.sort_by(f64::total_cmp);
        Ok(ncs
            .iter()
            .map(|&nc| {
                let (alpha, beta) = interval_quantiles(nc);
                PredictionInterval {
                    lower: quantile::quantile_sorted(&sorted, alpha),
                    upper: quantile::quantile_sorted(&sorted, beta),
                    point,
                    nc,
                    impure: pooled.impure,
                }
            })
            .collect())
    }

    /// Text dump of every tree, for debugging. The layout is versioned
    /// (`metatune-forest v1`) but carries no compatibility promise.
    pub fn dump<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "metatune-forest v1")?;
        writeln!(
            w,
            "config mtry={} n_trees={} seed={} impure_leaf={} bootstrap={} features={}",
            self.config.mtry,
            self.config.n_trees,
            self.config.seed,
            self.config.impure_leaf_policy,
            self.config.bootstrap,
            self.feature_count
        )?;
        for (i, tree) in self.trees.iter().enumerate() {
            writeln!(w, "tree {i} nodes={}", tree.nodes().len())?;
            for (id, node) in tree.nodes().iter().enumerate() {
                match node {
                    TreeNode::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => writeln!(w, "  {id} split f={feature} t={threshold} l={left} r={right}")?,
                    TreeNode::Leaf { responses, pure } => {
                        let r: Vec<String> = responses.iter().map(f64::to_string).collect();
                        writeln!(w, "  {id} leaf pure={pure} y=[{}]", r.join(","))?
                    }
                }
            }
        }
        Ok(())
    }
}

/// Lower and upper quantile levels `(α, β)` with `α = (1 - nc)/2`, `β = 1 - α`.
pub fn interval_quantiles(nc: f64) -> (f64, f64) {
    let alpha = (1.0 - nc) / 2.0;
    (alpha, 1.0 - alpha)
}

fn check_nc(nc: f64) -> Result<()> {
    if nc > 0.0 && nc < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "nominal confidence {nc} not in (0, 1)"
        )))
    }
}

pub fn prediction_intervals(
    model: &ForestModel,
    test: &Dataset,
    nc: f64,
) -> Result<Vec<PredictionInterval>> {
    check_nc(nc)?;
    test.rows()
        .iter()
        .map(|x| Ok(model.intervals_for(x, &[nc])?[0]))
        .collect()
}
