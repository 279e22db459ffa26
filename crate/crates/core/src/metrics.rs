//! Coverage, width and reliability of one configuration's intervals.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::forest::{ForestModel, ImpureLeafPolicy, PredictionInterval};
use crate::util::mean;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigPerformance {
    pub mtry: f64,
    pub nc: f64,
    pub point_coverage: Vec<bool>,
    pub point_width: Vec<f64>,
    pub coverage: f64,
    pub mean_width: f64,
    /// `coverage >= nc`, no tolerance.
    pub reliable: bool,
    /// False when any interval could not be built under the error policy.
    pub usable: bool,
    /// Points whose interval pooled an impure leaf (pool policy) or failed
    /// (error policy).
    pub flagged_points: usize,
}

impl ConfigPerformance {
    /// Builds the aggregate from per-point outcomes.
    pub fn from_points(
        mtry: f64,
        nc: f64,
        point_coverage: Vec<bool>,
        point_width: Vec<f64>,
        usable: bool,
        flagged_points: usize,
    ) -> Self {
        assert_eq!(point_coverage.len(), point_width.len());
        let coverage = if point_coverage.is_empty() {
            f64::NAN
        } else {
            point_coverage.iter().filter(|&&c| c).count() as f64 / point_coverage.len() as f64
        };
        let mean_width = mean(&point_width);
        Self {
            mtry,
            nc,
            reliable: coverage >= nc,
            point_coverage,
            point_width,
            coverage,
            mean_width,
            usable,
            flagged_points,
        }
    }

    pub fn from_intervals(mtry: f64, nc: f64, intervals: &[PredictionInterval], actual: &[f64]) -> Self {
        assert_eq!(intervals.len(), actual.len());
        let cov = intervals
            .iter()
            .zip(actual)
            .map(|(iv, &y)| point_coverage(y, iv))
            .collect();
        let width = intervals.iter().map(PredictionInterval::width).collect();
        let flagged = intervals.iter().filter(|iv| iv.impure).count();
        Self::from_points(mtry, nc, cov, width, true, flagged)
    }

    /// Reliable and built without failures: the only cells tuning may trust.
    pub fn usable_reliable(&self) -> bool {
        self.usable && self.reliable
    }

    pub fn covered_count(&self) -> usize {
        self.point_coverage.iter().filter(|&&c| c).count()
    }
}

/// Closed-interval membership.
pub fn point_coverage(y: f64, interval: &PredictionInterval) -> bool {
    interval.contains(y)
}

pub fn evaluate(model: &ForestModel, test: &Dataset, nc: f64) -> Result<ConfigPerformance> {
    Ok(evaluate_many(model, test, &[nc])?.remove(0))
}

/// One [`ConfigPerformance`] per nominal confidence, sharing each row's pool.
pub fn evaluate_many(model: &ForestModel, test: &Dataset, ncs: &[f64]) -> Result<Vec<ConfigPerformance>> {
    let all: Vec<usize> = (0..test.len()).collect();
    evaluate_rows(model, test, &all, ncs)
}

/// Evaluates on the rows of `data` at `indices`.
///
/// A row that hits an impure leaf under the error policy is still scored
/// from its pooled responses, but the whole result is marked unusable, so
/// no point is dropped and no failure goes unreported.
pub fn evaluate_rows(
    model: &ForestModel,
    data: &Dataset,
    indices: &[usize],
    ncs: &[f64],
) -> Result<Vec<ConfigPerformance>> {
    if indices.is_empty() {
        return Err(Error::too_few("evaluation", "empty test set"));
    }
    let k = ncs.len();
    let mut cover = vec![Vec::with_capacity(indices.len()); k];
    let mut width = vec![Vec::with_capacity(indices.len()); k];
    let mut flagged = 0;
    let mut usable = true;

    for &i in indices {
        let x = data.row(i);
        let y = data.responses()[i];
        let intervals = match model.intervals_for(x, ncs) {
            Ok(iv) => {
                flagged += usize::from(iv.first().is_some_and(|v| v.impure));
                iv
            }
            Err(Error::ImpureLeaf) => {
                usable = false;
                flagged += 1;
                model.intervals_with(x, ncs, ImpureLeafPolicy::Pool)?
            }
            Err(e) => return Err(e),
        };
        for (j, iv) in intervals.iter().enumerate() {
            cover[j].push(point_coverage(y, iv));
            width[j].push(iv.width());
        }
    }

    let mtry = model.config().mtry;
    let out: Vec<ConfigPerformance> = ncs
        .iter()
        .zip(cover.into_iter().zip(width))
        .map(|(&nc, (c, w))| ConfigPerformance::from_points(mtry, nc, c, w, usable, flagged))
        .collect();
    debug_assert!(coverage_monotone(&out));
    Ok(out)
}

/// Coverage never decreases as the nominal confidence grows.
pub fn coverage_monotone(batch: &[ConfigPerformance]) -> bool {
    let mut sorted: Vec<&ConfigPerformance> = batch.iter().collect();
    sorted.sort_by(|a, b| a.nc.total_cmp(&b.nc));
    sorted.windows(2).all(|w| w[0].coverage <= w[1].coverage)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forest::{train_forest, ForestConfig};

    fn iv(lower: f64, upper: f64) -> PredictionInterval {
        PredictionInterval {
            lower,
            upper,
            point: (lower + upper) / 2.0,
            nc: 0.9,
            impure: false,
        }
    }

    #[test]
    fn closed_interval_membership() {
        assert!(point_coverage(5.0, &iv(0.0, 10.0)));
        assert!(point_coverage(10.0, &iv(0.0, 10.0)));
        assert!(point_coverage(0.0, &iv(0.0, 10.0)));
        assert!(!point_coverage(10.5, &iv(0.0, 10.0)));
    }

    #[test]
    fn coverage_and_width_arithmetic() {
        let ivs = [iv(0.0, 2.0), iv(6.0, 7.0), iv(9.0, 12.0)];
        let perf = ConfigPerformance::from_intervals(1.0, 0.9, &ivs, &[1.0, 5.0, 10.0]);
        assert_eq!(perf.point_coverage, vec![true, false, true]);
        assert!((perf.coverage - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(perf.mean_width, 2.0);
        assert!(!perf.reliable);
    }

    #[test]
    fn reliability_has_no_tolerance() {
        let cov: Vec<bool> = (0..100).map(|i| i < 89).collect();
        let perf = ConfigPerformance::from_points(1.0, 0.90, cov, vec![1.0; 100], true, 0);
        assert_eq!(perf.coverage, 0.89);
        assert!(!perf.reliable);
        let cov: Vec<bool> = (0..100).map(|i| i < 90).collect();
        assert!(ConfigPerformance::from_points(1.0, 0.90, cov, vec![1.0; 100], true, 0).reliable);
    }

    #[test]
    fn constant_data_is_reliable_everywhere() {
        let rows = (0..20).map(|i| vec![i as f64]).collect();
        let ds = Dataset::from_rows(rows, vec![2.0; 20]).unwrap();
        let cfg = ForestConfig {
            n_trees: 10,
            ..ForestConfig::default()
        };
        let model = train_forest(&ds, &cfg).unwrap();
        for perf in evaluate_many(&model, &ds, &[0.5, 0.9, 0.99]).unwrap() {
            assert_eq!(perf.coverage, 1.0);
            assert_eq!(perf.mean_width, 0.0);
            assert!(perf.reliable && perf.usable);
        }
    }

    #[test]
    fn impure_leaf_marks_unusable_without_dropping_points() {
        let rows = vec![vec![1.0], vec![1.0], vec![2.0], vec![3.0]];
        let ds = Dataset::from_rows(rows, vec![1.0, 5.0, 2.0, 3.0]).unwrap();
        let cfg = ForestConfig {
            n_trees: 1,
            bootstrap: false,
            ..ForestConfig::default()
        };
        let model = train_forest(&ds, &cfg).unwrap();
        let perf = evaluate(&model, &ds, 0.9).unwrap();
        assert!(!perf.usable);
        assert_eq!(perf.point_coverage.len(), 4);
        assert_eq!(perf.flagged_points, 2);
        assert!(!perf.usable_reliable());
    }
}
