use crate::error::{Error, Result};
use crate::util::ceil_product;

/// Smallest value whose empirical CDF reaches `tau`: the order statistic
/// `v(⌈τ·n⌉)` (1-based), or the minimum when `τ = 0`.
pub fn empirical_quantile(values: &[f64], tau: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyValues);
    }
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::Domain(format!("quantile level {tau} not in [0, 1]")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(quantile_sorted(&sorted, tau))
}

pub(crate) fn quantile_sorted(sorted: &[f64], tau: f64) -> f64 {
    let n = sorted.len();
    let rank = ceil_product(tau, n).clamp(1, n);
    sorted[rank - 1]
}
