//! Nonparametric paired tests: Cochran's Q on binary outcomes and Friedman's
//! rank test on real-valued outcomes. Rows are blocks (test points), columns
//! are treatments (configurations).

mod chi2;

pub use chi2::{chi_square_sf, gamma_q, ln_gamma};

use crate::error::{Error, Result};

/// Significance level for every hypothesis test.
pub const ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    /// `p_value <= ALPHA`.
    pub significant: bool,
    /// No block discriminates between treatments; statistic 0, p 1.
    pub degenerate: bool,
    /// Friedman tie-correction divisor (1 for Cochran's Q).
    pub tie_correction: f64,
}

impl TestResult {
    fn from_statistic(statistic: f64, df: usize, tie_correction: f64) -> Result<Self> {
        let p_value = chi_square_sf(statistic, df)?;
        Ok(Self {
            statistic,
            df,
            p_value,
            significant: p_value <= ALPHA,
            degenerate: false,
            tie_correction,
        })
    }

    fn degenerate(df: usize, tie_correction: f64) -> Self {
        Self {
            statistic: 0.0,
            df,
            p_value: 1.0,
            significant: false,
            degenerate: true,
            tie_correction,
        }
    }
}

fn check_shape<T>(rows: &[Vec<T>], min_blocks: usize) -> Result<usize> {
    if rows.len() < min_blocks {
        return Err(Error::Shape(format!(
            "need at least {min_blocks} blocks, got {}",
            rows.len()
        )));
    }
    let k = rows[0].len();
    if k < 2 {
        return Err(Error::Shape(format!("need at least 2 treatments, got {k}")));
    }
    if rows.iter().any(|r| r.len() != k) {
        return Err(Error::Shape("ragged matrix".into()));
    }
    Ok(k)
}

/// Cochran's Q over a `blocks × treatments` boolean matrix.
pub fn cochran_q(outcomes: &[Vec<bool>]) -> Result<TestResult> {
    let k = check_shape(outcomes, 1)?;
    let mut col = vec![0.0f64; k];
    let mut grand = 0.0;
    let mut row_sq = 0.0;
    for row in outcomes {
        let r = row.iter().filter(|&&b| b).count() as f64;
        for (j, &b) in row.iter().enumerate() {
            if b {
                col[j] += 1.0;
            }
        }
        grand += r;
        row_sq += r * r;
    }
    let kf = k as f64;
    let denom = kf * grand - row_sq;
    if denom <= 0.0 {
        return Ok(TestResult::degenerate(k - 1, 1.0));
    }
    let expected = grand / kf;
    let spread: f64 = col.iter().map(|g| (g - expected).powi(2)).sum();
    let q = kf * (kf - 1.0) * spread / denom;
    TestResult::from_statistic(q.max(0.0), k - 1, 1.0)
}

/// Average ranks (1-based) with ties sharing the mean of their rank range.
/// Also returns `Σ (t³ - t)` over tie groups.
pub fn average_ranks(values: &[f64]) -> (Vec<f64>, f64) {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut ties = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            ranks[idx] = avg;
        }
        let t = (j - i) as f64;
        ties += t * t * t - t;
        i = j;
    }
    (ranks, ties)
}

/// Friedman's test with average ranks and the tie-corrected statistic.
pub fn friedman(values: &[Vec<f64>]) -> Result<TestResult> {
    let k = check_shape(values, 2)?;
    if values.iter().flatten().any(|v| v.is_nan()) {
        return Err(Error::Domain("NaN in Friedman input".into()));
    }
    let b = values.len() as f64;
    let kf = k as f64;
    let mut rank_sums = vec![0.0; k];
    let mut ties = 0.0;
    for row in values {
        let (ranks, t) = average_ranks(row);
        for (s, r) in rank_sums.iter_mut().zip(ranks) {
            *s += r;
        }
        ties += t;
    }
    let correction = 1.0 - ties / (b * kf * (kf * kf - 1.0));
    if correction <= 1e-12 {
        return Ok(TestResult::degenerate(k - 1, correction.max(0.0)));
    }
    let centre = (kf + 1.0) / 2.0;
    let spread: f64 = rank_sums.iter().map(|s| (s / b - centre).powi(2)).sum();
    let stat = 12.0 * b / (kf * (kf + 1.0)) * spread / correction;
    TestResult::from_statistic(stat.max(0.0), k - 1, correction)
}
