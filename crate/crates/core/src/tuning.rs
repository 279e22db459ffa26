//! MTRY grid search, configuration selection and benefit tagging.

use std::fmt;

use rayon::prelude::*;

use crate::audit::{Probe, Stage};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::forest::{train_forest, ForestConfig, DEFAULT_MTRY};
use crate::metrics::{evaluate_many, ConfigPerformance};
use crate::split::holdout_split;
use crate::stats::{friedman, TestResult};
use crate::validation::{predict_performance, PredictedCell, PredictedPerformance, TechniqueId, TechniqueParams};

/// Fraction of the (chronologically ordered) data used to train in the
/// evaluation split; the rest is the evaluation test set.
pub const EVALUATION_TRAIN_FRACTION: f64 = 0.66;

pub const DEFAULT_NCS: [f64; 3] = [0.90, 0.95, 0.99];

/// `[0.05, 0.10, …, 1.00]`, built as `i / 20`.
pub fn mtry_grid() -> Vec<f64> {
    (1..=20).map(|i| f64::from(i) / 20.0).collect()
}

/// Potential benefit of tuning at all, judged from actual performance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PotentialTag {
    /// Default unreliable, another configuration reliable.
    Du,
    /// Default reliable, a reliable configuration is significantly narrower.
    Sb,
    /// Every configuration unreliable.
    Au,
    /// Default reliable, a narrower reliable configuration exists but not significantly.
    Nsb,
    /// Default reliable and narrowest among reliable configurations.
    E,
}

impl PotentialTag {
    pub fn benefit_rank(self) -> u8 {
        match self {
            Self::Du => 4,
            Self::Sb => 3,
            Self::Au => 2,
            Self::Nsb => 1,
            Self::E => 0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Du => "DU",
            Self::Sb => "SB",
            Self::Au => "AU",
            Self::Nsb => "NSB",
            Self::E => "E",
        }
    }
}

/// Benefit of tuning with a particular technique, relative to the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BenefitTag {
    Du,
    Sb,
    Apu,
    Pu,
    Nsd,
    Nku,
    Sw,
    Tu,
}

impl BenefitTag {
    pub const ALL: [BenefitTag; 8] = [
        Self::Du,
        Self::Sb,
        Self::Apu,
        Self::Pu,
        Self::Nsd,
        Self::Nku,
        Self::Sw,
        Self::Tu,
    ];

    pub fn benefit_rank(self) -> u8 {
        match self {
            Self::Du => 7,
            Self::Sb => 6,
            Self::Apu => 5,
            Self::Pu => 4,
            Self::Nsd => 3,
            Self::Nku => 2,
            Self::Sw => 1,
            Self::Tu => 0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Du => "DU",
            Self::Sb => "SB",
            Self::Apu => "APU",
            Self::Pu => "PU",
            Self::Nsd => "NSD",
            Self::Nku => "NKU",
            Self::Sw => "SW",
            Self::Tu => "TU",
        }
    }

    pub fn is_beneficial(self) -> bool {
        self.benefit_rank() > Self::Nsd.benefit_rank()
    }

    pub fn is_counterproductive(self) -> bool {
        self.benefit_rank() < Self::Nsd.benefit_rank()
    }
}

impl fmt::Display for PotentialTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl fmt::Display for BenefitTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Selection heuristic: the usable, predicted-reliable cell with the
/// smallest predicted mean width (ties to the smaller MTRY), or `None` when
/// nothing is predicted reliable.
pub fn select_configuration(cells: &[&PredictedCell]) -> Option<f64> {
    cells
        .iter()
        .filter(|c| c.usable && c.predicted_reliable)
        .min_by(|a, b| {
            a.predicted_mean_width
                .total_cmp(&b.predicted_mean_width)
                .then(a.mtry.total_cmp(&b.mtry))
        })
        .map(|c| c.mtry)
}

/// Potential benefit from the actual grid at one nc. `default` may or may
/// not also appear in `grid`; it is matched by MTRY and never counted as
/// "another" configuration.
pub fn rq1_tag(grid: &[ConfigPerformance], default: &ConfigPerformance) -> Result<(PotentialTag, Option<TestResult>)> {
    let others: Vec<&ConfigPerformance> = grid.iter().filter(|c| c.mtry != default.mtry).collect();
    let any_other_reliable = others.iter().any(|c| c.usable_reliable());
    if !default.usable_reliable() {
        let tag = if any_other_reliable {
            PotentialTag::Du
        } else {
            PotentialTag::Au
        };
        return Ok((tag, None));
    }
    let best_narrower = others
        .iter()
        .filter(|c| c.usable_reliable() && c.mean_width < default.mean_width)
        .min_by(|a, b| a.mean_width.total_cmp(&b.mean_width).then(a.mtry.total_cmp(&b.mtry)));
    match best_narrower {
        None => Ok((PotentialTag::E, None)),
        Some(best) => {
            let test = width_test(default, best)?;
            let tag = if test.significant {
                PotentialTag::Sb
            } else {
                PotentialTag::Nsb
            };
            Ok((tag, Some(test)))
        }
    }
}

/// Friedman's test on the paired point widths of two configurations.
pub fn width_test(a: &ConfigPerformance, b: &ConfigPerformance) -> Result<TestResult> {
    if a.point_width.len() != b.point_width.len() {
        return Err(Error::Shape("configurations scored on different points".into()));
    }
    let rows: Vec<Vec<f64>> = a
        .point_width
        .iter()
        .zip(&b.point_width)
        .map(|(&x, &y)| vec![x, y])
        .collect();
    friedman(&rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WidthComparison {
    NotSignificant,
    /// Selected significantly narrower than default.
    Narrower,
    /// Selected significantly wider than default.
    Wider,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SelectionFacts {
    pub reliable: bool,
    pub comparison: WidthComparison,
}

/// Everything the technique benefit tag depends on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rq2Facts {
    pub default_reliable: bool,
    /// Some grid configuration (default included) is actually reliable.
    pub any_reliable: bool,
    pub selection: Option<SelectionFacts>,
}

/// Benefit tag for one (technique, nc). Exactly one tag per input.
pub fn classify_rq2(f: Rq2Facts) -> BenefitTag {
    match f.selection {
        None if f.default_reliable => BenefitTag::Tu,
        None if f.any_reliable => BenefitTag::Pu,
        None => BenefitTag::Apu,
        Some(sel) => match (f.default_reliable, sel.reliable) {
            (false, true) => BenefitTag::Du,
            (false, false) => BenefitTag::Nku,
            (true, false) => BenefitTag::Tu,
            (true, true) => match sel.comparison {
                WidthComparison::Narrower => BenefitTag::Sb,
                WidthComparison::Wider => BenefitTag::Sw,
                WidthComparison::NotSignificant => BenefitTag::Nsd,
            },
        },
    }
}

/// Tags one (technique, nc) from its selection and the actual grid.
pub fn rq2_tag(
    selected_mtry: Option<f64>,
    grid: &[ConfigPerformance],
    default: &ConfigPerformance,
) -> Result<(BenefitTag, Option<TestResult>)> {
    let any_reliable = default.usable_reliable() || grid.iter().any(ConfigPerformance::usable_reliable);
    let mut test = None;
    let selection = match selected_mtry {
        None => None,
        Some(mtry) => {
            let sel = if mtry == default.mtry {
                default
            } else {
                grid.iter()
                    .find(|c| c.mtry == mtry)
                    .ok_or_else(|| Error::InvalidParameter(format!("selected MTRY {mtry} not in grid")))?
            };
            let mut comparison = WidthComparison::NotSignificant;
            if sel.usable_reliable() && default.usable_reliable() {
                let t = width_test(default, sel)?;
                if t.significant {
                    if sel.mean_width < default.mean_width {
                        comparison = WidthComparison::Narrower;
                    } else if sel.mean_width > default.mean_width {
                        comparison = WidthComparison::Wider;
                    }
                }
                test = Some(t);
            }
            Some(SelectionFacts {
                reliable: sel.usable_reliable(),
                comparison,
            })
        }
    };
    let tag = classify_rq2(Rq2Facts {
        default_reliable: default.usable_reliable(),
        any_reliable,
        selection,
    });
    Ok((tag, test))
}

/// Grid, default and technique settings for a tuning run.
#[derive(Debug, Clone, PartialEq)]
pub struct TuningSettings {
    pub base: ForestConfig,
    pub default_mtry: f64,
    pub grid: Vec<f64>,
    pub params: TechniqueParams,
}

impl Default for TuningSettings {
    fn default() -> Self {
        Self {
            base: ForestConfig::default(),
            default_mtry: DEFAULT_MTRY,
            grid: mtry_grid(),
            params: TechniqueParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuningOutcome {
    pub technique: TechniqueId,
    pub nc: f64,
    /// Predicted cells at this nc, in grid order.
    pub predicted: Vec<PredictedCell>,
    pub selected_mtry: Option<f64>,
    pub default_mtry: f64,
    pub tag: BenefitTag,
    /// Default-vs-selected width test, when both are actually reliable.
    pub comparison: Option<TestResult>,
}

/// Actual performance of every grid configuration on a frame's test set.
#[derive(Debug, Clone, PartialEq)]
pub struct ActualGrid {
    pub ncs: Vec<f64>,
    /// `[nc][grid index]`.
    pub grid: Vec<Vec<ConfigPerformance>>,
    /// `[nc]`.
    pub default: Vec<ConfigPerformance>,
}

impl ActualGrid {
    pub fn nc_index(&self, nc: f64) -> Option<usize> {
        self.ncs.iter().position(|&x| x == nc)
    }
}

/// Fits every grid configuration (plus the default when it is off-grid) on
/// `train` and scores it on `test`.
pub fn actual_grid(
    train: &Dataset,
    test: &Dataset,
    ncs: &[f64],
    settings: &TuningSettings,
    probe: Probe<'_>,
) -> Result<ActualGrid> {
    probe.record(Stage::Actual, train.origin(), test.origin());
    let mut mtrys = settings.grid.clone();
    let default_pos = match mtrys.iter().position(|&m| m == settings.default_mtry) {
        Some(i) => i,
        None => {
            mtrys.push(settings.default_mtry);
            mtrys.len() - 1
        }
    };
    let per_mtry: Vec<Vec<ConfigPerformance>> = mtrys
        .par_iter()
        .map(|&mtry| {
            let model = train_forest(train, &settings.base.with_mtry(mtry))?;
            evaluate_many(&model, test, ncs)
        })
        .collect::<Result<_>>()?;
    let n_grid = settings.grid.len();
    let grid = (0..ncs.len())
        .map(|j| per_mtry[..n_grid].iter().map(|v| v[j].clone()).collect())
        .collect();
    let default = (0..ncs.len()).map(|j| per_mtry[default_pos][j].clone()).collect();
    Ok(ActualGrid {
        ncs: ncs.to_vec(),
        grid,
        default,
    })
}

/// Everything computed in one train/test frame.
#[derive(Debug, Clone, PartialEq)]
pub struct TuningReport {
    pub techniques: Vec<TechniqueId>,
    pub ncs: Vec<f64>,
    pub train_rows: usize,
    pub test_rows: usize,
    pub actual: ActualGrid,
    /// `[nc]`.
    pub potential: Vec<(PotentialTag, Option<TestResult>)>,
    pub predicted: Vec<PredictedPerformance>,
    /// `[technique][nc]`.
    pub outcomes: Vec<Vec<TuningOutcome>>,
}

impl TuningReport {
    pub fn outcome(&self, tech: TechniqueId, nc: f64) -> Option<&TuningOutcome> {
        let t = self.techniques.iter().position(|&x| x == tech)?;
        let j = self.ncs.iter().position(|&x| x == nc)?;
        Some(&self.outcomes[t][j])
    }
}

/// Tuning inside an explicit frame: techniques see only `train`; actual
/// performance fits on `train` and scores on `test`.
pub fn tune_in_frame(
    train: &Dataset,
    test: &Dataset,
    techniques: &[TechniqueId],
    ncs: &[f64],
    settings: &TuningSettings,
    probe: Probe<'_>,
) -> Result<TuningReport> {
    if ncs.is_empty() || techniques.is_empty() {
        return Err(Error::InvalidParameter("no techniques or nominal confidences".into()));
    }
    let actual = actual_grid(train, test, ncs, settings, probe)?;
    let potential = (0..ncs.len())
        .map(|j| rq1_tag(&actual.grid[j], &actual.default[j]))
        .collect::<Result<Vec<_>>>()?;

    let predicted = techniques
        .iter()
        .map(|&t| predict_performance(t, &settings.params, train, &settings.grid, ncs, &settings.base, probe))
        .collect::<Result<Vec<_>>>()?;

    let mut outcomes = Vec::with_capacity(techniques.len());
    for pred in &predicted {
        let mut row = Vec::with_capacity(ncs.len());
        for (j, &nc) in ncs.iter().enumerate() {
            let cells = pred.at_nc(nc);
            let selected = select_configuration(&cells);
            let (tag, comparison) = rq2_tag(selected, &actual.grid[j], &actual.default[j])?;
            row.push(TuningOutcome {
                technique: pred.technique,
                nc,
                predicted: cells.into_iter().cloned().collect(),
                selected_mtry: selected,
                default_mtry: settings.default_mtry,
                tag,
                comparison,
            });
        }
        outcomes.push(row);
    }

    Ok(TuningReport {
        techniques: techniques.to_vec(),
        ncs: ncs.to_vec(),
        train_rows: train.len(),
        test_rows: test.len(),
        actual,
        potential,
        predicted,
        outcomes,
    })
}

/// The order-preserving evaluation split shared by every analysis.
pub fn evaluation_split(data: &Dataset) -> Result<(Dataset, Dataset)> {
    let split = holdout_split(data.len(), EVALUATION_TRAIN_FRACTION)
        .map_err(|e| Error::too_few("evaluation split", e.to_string()))?;
    Ok((data.subset(&split.train), data.subset(&split.test)))
}

pub fn run_tuning(
    data: &Dataset,
    techniques: &[TechniqueId],
    ncs: &[f64],
    settings: &TuningSettings,
    probe: Probe<'_>,
) -> Result<TuningReport> {
    let (train, test) = evaluation_split(data)?;
    tune_in_frame(&train, &test, techniques, ncs, settings, probe)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn perf(mtry: f64, nc: f64, covered: usize, widths: &[f64]) -> ConfigPerformance {
        let n = widths.len();
        let cov = (0..n).map(|i| i < covered).collect();
        ConfigPerformance::from_points(mtry, nc, cov, widths.to_vec(), true, 0)
    }

    fn cell(mtry: f64, width: f64, reliable: bool) -> PredictedCell {
        PredictedCell {
            mtry,
            nc: 0.9,
            predicted_coverage: if reliable { 0.95 } else { 0.5 },
            predicted_mean_width: width,
            predicted_reliable: reliable,
            usable: true,
            n_points: 10,
            covered: 0,
        }
    }

    #[test]
    fn grid_values() {
        let g = mtry_grid();
        assert_eq!(g.len(), 20);
        assert_eq!(g[19], 1.0);
        assert_eq!(g[6], 0.35);
        assert_eq!(g[0], 0.05);
    }

    #[test]
    fn selection_rules() {
        let a = cell(0.3, 3.1, true);
        let b = cell(0.4, 2.9, true);
        assert_eq!(select_configuration(&[&a, &b]), Some(0.4));
        let u = cell(0.1, 1.0, false);
        assert_eq!(select_configuration(&[&u]), None);
        let t1 = cell(0.60, 2.0, true);
        let t2 = cell(0.25, 2.0, true);
        assert_eq!(select_configuration(&[&t1, &t2]), Some(0.25));
        let mut bad = cell(0.05, 0.1, true);
        bad.usable = false;
        assert_eq!(select_configuration(&[&bad, &a]), Some(0.3));
    }

    #[test]
    fn rank_orders() {
        let mut tags = BenefitTag::ALL.to_vec();
        tags.reverse();
        tags.sort_by_key(|t| std::cmp::Reverse(t.benefit_rank()));
        assert_eq!(tags, BenefitTag::ALL.to_vec());
        let beneficial: Vec<_> = BenefitTag::ALL.into_iter().filter(|t| t.is_beneficial()).collect();
        assert_eq!(beneficial, vec![BenefitTag::Du, BenefitTag::Sb, BenefitTag::Apu, BenefitTag::Pu]);
        let bad: Vec<_> = BenefitTag::ALL.into_iter().filter(|t| t.is_counterproductive()).collect();
        assert_eq!(bad, vec![BenefitTag::Nku, BenefitTag::Sw, BenefitTag::Tu]);
        assert!(PotentialTag::Du.benefit_rank() > PotentialTag::Sb.benefit_rank());
        assert!(PotentialTag::Au.benefit_rank() > PotentialTag::Nsb.benefit_rank());
        assert!(PotentialTag::Nsb.benefit_rank() > PotentialTag::E.benefit_rank());
    }

    #[test]
    fn rq1_scenarios() {
        let w = [1.0; 10];
        // Default unreliable, another reliable.
        let grid = vec![perf(0.5, 0.9, 10, &w), perf(1.0, 0.9, 8, &w)];
        assert_eq!(rq1_tag(&grid, &grid[1]).unwrap().0, PotentialTag::Du);
        // Nothing reliable.
        let grid = vec![perf(0.5, 0.9, 7, &w), perf(1.0, 0.9, 8, &w)];
        assert_eq!(rq1_tag(&grid, &grid[1]).unwrap().0, PotentialTag::Au);
        // All identical and reliable.
        let grid = vec![perf(0.5, 0.9, 10, &w), perf(1.0, 0.9, 10, &w)];
        assert_eq!(rq1_tag(&grid, &grid[1]).unwrap().0, PotentialTag::E);
        // Narrower everywhere: significant.
        let narrow = [0.5; 10];
        let grid = vec![perf(0.5, 0.9, 10, &narrow), perf(1.0, 0.9, 10, &w)];
        let (tag, test) = rq1_tag(&grid, &grid[1]).unwrap();
        assert_eq!(tag, PotentialTag::Sb);
        assert!(test.unwrap().significant);
        // Narrower on average but on a single point only: not significant.
        let mut one = [1.0; 10];
        one[0] = 0.0;
        let grid = vec![perf(0.5, 0.9, 10, &one), perf(1.0, 0.9, 10, &w)];
        assert_eq!(rq1_tag(&grid, &grid[1]).unwrap().0, PotentialTag::Nsb);
    }

    #[test]
    fn rq2_from_performance() {
        let w = [1.0; 10];
        let wide = [2.0; 10];
        let grid = vec![perf(0.5, 0.9, 10, &wide), perf(1.0, 0.9, 10, &w)];
        assert_eq!(rq2_tag(Some(0.5), &grid, &grid[1]).unwrap().0, BenefitTag::Sw);
        assert_eq!(rq2_tag(Some(1.0), &grid, &grid[1]).unwrap().0, BenefitTag::Nsd);
        assert_eq!(rq2_tag(None, &grid, &grid[1]).unwrap().0, BenefitTag::Tu);
        let grid = vec![perf(0.5, 0.9, 10, &w), perf(1.0, 0.9, 5, &w)];
        assert_eq!(rq2_tag(Some(0.5), &grid, &grid[1]).unwrap().0, BenefitTag::Du);
        assert_eq!(rq2_tag(None, &grid, &grid[1]).unwrap().0, BenefitTag::Pu);
        let grid = vec![perf(0.5, 0.9, 5, &w), perf(1.0, 0.9, 5, &w)];
        assert_eq!(rq2_tag(None, &grid, &grid[1]).unwrap().0, BenefitTag::Apu);
        assert_eq!(rq2_tag(Some(0.5), &grid, &grid[1]).unwrap().0, BenefitTag::Nku);
        assert!(rq2_tag(Some(0.7), &grid, &grid[1]).is_err());
    }

    #[test]
    fn selected_default_is_nsd() {
        let w: Vec<f64> = (0..10).map(f64::from).collect();
        let grid = vec![perf(1.0, 0.9, 10, &w)];
        let (tag, test) = rq2_tag(Some(1.0), &grid, &grid[0]).unwrap();
        assert_eq!(tag, BenefitTag::Nsd);
        assert!(test.unwrap().degenerate);
    }
}
