//! The eight validation techniques and the predicted performance they
//! produce for every (MTRY, nominal confidence) grid cell.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::audit::{Probe, Stage};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::forest::{train_forest_on, ForestConfig};
use crate::metrics::{evaluate_rows, ConfigPerformance};
use crate::rng::{mix, Stream};
use crate::split::{
    bootstrap_split, holdout_split, kfold_partition, tscv_splits, tshvcv_splits, SplitIndices,
};
use crate::util::ceil_product;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TechniqueId {
    Bootstrap,
    TenByTenFold,
    Holdout25_75,
    Holdout50_50,
    Holdout75_25,
    Loo,
    Tscv,
    Tshvcv,
}

impl TechniqueId {
    /// Canonical order; also the tie-break order for meta-validation.
    pub const ALL: [TechniqueId; 8] = [
        TechniqueId::Bootstrap,
        TechniqueId::TenByTenFold,
        TechniqueId::Holdout25_75,
        TechniqueId::Holdout50_50,
        TechniqueId::Holdout75_25,
        TechniqueId::Loo,
        TechniqueId::Tscv,
        TechniqueId::Tshvcv,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Self::Bootstrap => "Bootstrap",
            Self::TenByTenFold => "10x10fold",
            Self::Holdout25_75 => "25/75",
            Self::Holdout50_50 => "50/50",
            Self::Holdout75_25 => "75/25",
            Self::Loo => "LOO",
            Self::Tscv => "TSCV",
            Self::Tshvcv => "TSHVCV",
        }
    }

    pub fn canonical_index(self) -> usize {
        Self::ALL.iter().position(|&t| t == self).expect("listed")
    }

    /// Training and testing respect chronological order.
    pub fn preserves_order(self) -> bool {
        matches!(
            self,
            Self::Holdout25_75 | Self::Holdout50_50 | Self::Holdout75_25 | Self::Tscv | Self::Tshvcv
        )
    }

    fn holdout_fraction(self) -> Option<f64> {
        match self {
            Self::Holdout25_75 => Some(0.25),
            Self::Holdout50_50 => Some(0.50),
            Self::Holdout75_25 => Some(0.75),
            _ => None,
        }
    }
}

impl fmt::Display for TechniqueId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for TechniqueId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace(['-', '_'], "/");
        let id = match key.as_str() {
            "bootstrap" | "100/oos/bootstrap" => Self::Bootstrap,
            "10x10fold" | "10x10" => Self::TenByTenFold,
            "25/75" => Self::Holdout25_75,
            "50/50" => Self::Holdout50_50,
            "75/25" => Self::Holdout75_25,
            "loo" => Self::Loo,
            "tscv" => Self::Tscv,
            "tshvcv" => Self::Tshvcv,
            _ => return Err(Error::InvalidParameter(format!("unknown technique `{s}`"))),
        };
        Ok(id)
    }
}

/// Parameters shared by the techniques. `None` hv-block settings are derived
/// from the row count: `v = ⌈0.05·m⌉`, `h = v`, `s = 2v + 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TechniqueParams {
    pub bootstrap_repeats: usize,
    pub kfold_k: usize,
    pub kfold_repeats: usize,
    pub tscv_initial_fraction: f64,
    pub tscv_splits: usize,
    pub tshvcv_v: Option<usize>,
    pub tshvcv_h: Option<usize>,
    pub tshvcv_step: Option<usize>,
}

impl Default for TechniqueParams {
    fn default() -> Self {
        Self {
            bootstrap_repeats: 100,
            kfold_k: 10,
            kfold_repeats: 10,
            tscv_initial_fraction: 0.5,
            tscv_splits: 10,
            tshvcv_v: None,
            tshvcv_h: None,
            tshvcv_step: None,
        }
    }
}

impl TechniqueParams {
    /// hv-block `(v, h, s)` for `m` rows.
    pub fn tshvcv_for(&self, m: usize) -> (usize, usize, usize) {
        let v = self.tshvcv_v.unwrap_or_else(|| ceil_product(0.05, m));
        let h = self.tshvcv_h.unwrap_or(v);
        let s = self.tshvcv_step.unwrap_or(2 * v + 1);
        (v, h, s)
    }
}

fn too_few(tech: TechniqueId, m: usize, e: impl fmt::Display) -> Error {
    Error::too_few(format!("technique {tech}"), format!("{m} rows: {e}"))
}

/// Train/test splits of technique `tech` over `m` rows.
///
/// Randomised techniques draw from a stream keyed by `(seed, technique)`;
/// 10×10-fold re-seeds each repetition `r` with `mix(that key, r)`.
pub fn technique_splits(
    tech: TechniqueId,
    params: &TechniqueParams,
    m: usize,
    seed: u64,
) -> Result<Vec<SplitIndices>> {
    let key = mix(seed, tech.canonical_index() as u64);
    let wrap = |e: Error| too_few(tech, m, e);
    let splits = match tech {
        TechniqueId::Holdout25_75 | TechniqueId::Holdout50_50 | TechniqueId::Holdout75_25 => {
            vec![holdout_split(m, tech.holdout_fraction().expect("holdout")).map_err(wrap)?]
        }
        TechniqueId::Tscv => {
            let start = ceil_product(params.tscv_initial_fraction, m);
            let n = params.tscv_splits.min(m.saturating_sub(start)).max(1);
            tscv_splits(m, params.tscv_initial_fraction, n).map_err(wrap)?
        }
        TechniqueId::Tshvcv => {
            let (v, h, s) = params.tshvcv_for(m);
            tshvcv_splits(m, v, h, s).map_err(wrap)?
        }
        TechniqueId::TenByTenFold => {
            let mut all = Vec::with_capacity(params.kfold_k * params.kfold_repeats);
            for r in 0..params.kfold_repeats {
                let mut rng = Stream::derived(key, r as u64);
                all.extend(kfold_partition(m, params.kfold_k, &mut rng).map_err(wrap)?);
            }
            all
        }
        TechniqueId::Bootstrap => {
            let mut rng = Stream::new(key);
            (0..params.bootstrap_repeats)
                .map(|_| bootstrap_split(m, &mut rng).map_err(wrap))
                .collect::<Result<_>>()?
        }
        TechniqueId::Loo => {
            if m < 3 {
                return Err(too_few(tech, m, "leave-one-out needs at least 3 rows"));
            }
            (0..m)
                .map(|i| SplitIndices {
                    train: (0..m).filter(|&j| j != i).collect(),
                    test: vec![i],
                })
                .collect()
        }
    };
    if splits.is_empty() {
        return Err(too_few(tech, m, "no splits"));
    }
    if let Some(bad) = splits.iter().find(|s| s.train.len() < 2 || s.test.is_empty()) {
        return Err(too_few(
            tech,
            m,
            format!("split with {} train / {} test rows", bad.train.len(), bad.test.len()),
        ));
    }
    Ok(splits)
}

/// Pooled prediction for one (MTRY, nc) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictedCell {
    pub mtry: f64,
    pub nc: f64,
    pub predicted_coverage: f64,
    pub predicted_mean_width: f64,
    pub predicted_reliable: bool,
    pub usable: bool,
    pub n_points: usize,
    pub covered: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictedPerformance {
    pub technique: TechniqueId,
    pub n_splits: usize,
    /// Grid-major: all ncs for the first MTRY, then the next MTRY, …
    pub cells: Vec<PredictedCell>,
}

impl PredictedPerformance {
    /// Cells at one nominal confidence, in grid order.
    pub fn at_nc(&self, nc: f64) -> Vec<&PredictedCell> {
        self.cells.iter().filter(|c| c.nc == nc).collect()
    }
}

/// Applies `tech` to `train`, fitting one forest per (split, MTRY) and
/// pooling every held-out point's coverage and width across splits.
///
/// A cell whose forests hit an impure leaf under the error policy is marked
/// unusable; other cells are unaffected.
pub fn predict_performance(
    tech: TechniqueId,
    params: &TechniqueParams,
    train: &Dataset,
    mtry_grid: &[f64],
    ncs: &[f64],
    base: &ForestConfig,
    probe: Probe<'_>,
) -> Result<PredictedPerformance> {
    if mtry_grid.is_empty() || ncs.is_empty() {
        return Err(Error::InvalidParameter("empty MTRY grid or nc list".into()));
    }
    let splits = technique_splits(tech, params, train.len(), base.seed)?;
    for s in &splits {
        let ids = |idx: &[usize]| idx.iter().map(|&i| train.origin()[i]).collect::<Vec<_>>();
        probe.record(Stage::Technique(tech), &ids(&s.train), &ids(&s.test));
    }

    let jobs: Vec<(usize, usize)> = (0..splits.len())
        .flat_map(|s| (0..mtry_grid.len()).map(move |g| (s, g)))
        .collect();
    let results: Vec<Vec<ConfigPerformance>> = jobs
        .par_iter()
        .map(|&(s, g)| {
            let config = base.with_mtry(mtry_grid[g]);
            let model = train_forest_on(train, &splits[s].train, &config)?;
            evaluate_rows(&model, train, &splits[s].test, ncs)
        })
        .collect::<Result<_>>()?;

    let mut cells = Vec::with_capacity(mtry_grid.len() * ncs.len());
    for (g, &mtry) in mtry_grid.iter().enumerate() {
        for (j, &nc) in ncs.iter().enumerate() {
            let mut covered = 0;
            let mut n_points = 0;
            let mut width_sum = 0.0;
            let mut usable = true;
            for s in 0..splits.len() {
                let perf = &results[s * mtry_grid.len() + g][j];
                covered += perf.covered_count();
                n_points += perf.point_coverage.len();
                width_sum += perf.point_width.iter().sum::<f64>();
                usable &= perf.usable;
            }
            let coverage = covered as f64 / n_points as f64;
            cells.push(PredictedCell {
                mtry,
                nc,
                predicted_coverage: coverage,
                predicted_mean_width: width_sum / n_points as f64,
                predicted_reliable: coverage >= nc,
                usable,
                n_points,
                covered,
            });
        }
    }
    Ok(PredictedPerformance {
        technique: tech,
        n_splits: splits.len(),
        cells,
    })
}
