//! Independent reference implementations used by the integration tests.
//! Nothing here calls into the library's numerics.
#![allow(dead_code)]

use metatune::forest::{ForestModel, TreeNode};

// ---------------------------------------------------------------- intervals

/// Leaf responses reached by `x` in every tree, by explicit node walking.
pub fn pooled(model: &ForestModel, x: &[f64]) -> (Vec<f64>, bool, f64) {
    let mut all = Vec::new();
    let mut impure = false;
    let mut mean_sum = 0.0;
    for tree in model.trees() {
        let mut id = 0usize;
        let (resp, pure) = loop {
            match tree.node(id) {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => id = if x[*feature] <= *threshold { *left } else { *right },
                TreeNode::Leaf { responses, pure } => break (responses, *pure),
            }
        };
        impure |= !pure;
        mean_sum += resp.iter().sum::<f64>() / resp.len() as f64;
        all.extend_from_slice(resp);
    }
    (all, impure, mean_sum / model.trees().len() as f64)
}

/// Interval at nominal confidence `percent`/100, computed with exact
/// integer rank arithmetic: the lower level is `(100 - percent) / 200`, so
/// `⌈α n⌉ = ⌈(100 - percent) n / 200⌉`.
pub fn interval(model: &ForestModel, x: &[f64], percent: u32) -> (f64, f64, f64, bool) {
    let (mut values, impure, point) = pooled(model, x);
    values.sort_by(f64::total_cmp);
    let n = values.len() as u64;
    let a_num = u64::from(100 - percent) * n;
    let b_num = u64::from(100 + percent) * n;
    let rank = |num: u64| num.div_ceil(200).clamp(1, n) as usize;
    (values[rank(a_num) - 1], values[rank(b_num) - 1], point, impure)
}

// ---------------------------------------------------------------- chi-square

fn gamma_half_integer(df: usize) -> f64 {
    // Γ(df / 2) for integer df.
    if df.is_multiple_of(2) {
        (1..df / 2).map(|i| i as f64).product()
    } else {
        let mut g = std::f64::consts::PI.sqrt();
        let mut a = 0.5;
        while a < df as f64 / 2.0 - 0.25 {
            g *= a;
            a += 1.0;
        }
        g
    }
}

/// `P(χ²_df > x)` by Simpson integration of the density after the
/// substitution `t = s²`, which removes the singularity at 0 for df = 1.
pub fn chi_square_tail(x: f64, df: usize) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let k = df as f64;
    let c = 1.0 / (2f64.powf(k / 2.0) * gamma_half_integer(df));
    let f = move |s: f64| 2.0 * c * s.powf(k - 1.0) * (-s * s / 2.0).exp();
    // Composite Simpson on [√x, √x + 60]; the integrand is smooth and the
    // tail beyond is below e^-1800.
    let a = x.sqrt();
    let panels = 120_000usize;
    let h = 60.0 / panels as f64;
    let mut total = f(a) + f(a + 60.0);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        total += w * f(a + i as f64 * h);
    }
    total * h / 3.0
}

// ---------------------------------------------------------------- tests

/// Cochran's Q via `(k-1)(k ΣC² - N²) / (kN - ΣR²)`; `None` when degenerate.
pub fn cochran(m: &[Vec<bool>]) -> Option<f64> {
    let k = m[0].len() as f64;
    let cols: Vec<f64> = (0..m[0].len())
        .map(|j| m.iter().filter(|r| r[j]).count() as f64)
        .collect();
    let rows: Vec<f64> = m.iter().map(|r| r.iter().filter(|&&b| b).count() as f64).collect();
    let n: f64 = rows.iter().sum();
    let den = k * n - rows.iter().map(|r| r * r).sum::<f64>();
    if den == 0.0 {
        return None;
    }
    Some((k - 1.0) * (k * cols.iter().map(|c| c * c).sum::<f64>() - n * n) / den)
}

/// McNemar's statistic `(b - c)² / (b + c)` for two paired binary columns.
pub fn mcnemar(m: &[Vec<bool>]) -> Option<f64> {
    let b = m.iter().filter(|r| r[0] && !r[1]).count() as f64;
    let c = m.iter().filter(|r| !r[0] && r[1]).count() as f64;
    if b + c == 0.0 {
        None
    } else {
        Some((b - c).powi(2) / (b + c))
    }
}

/// Mid-rank by counting: `#less + (#equal + 1) / 2`.
fn midrank(row: &[f64], v: f64) -> f64 {
    let less = row.iter().filter(|&&u| u < v).count() as f64;
    let equal = row.iter().filter(|&&u| u == v).count() as f64;
    less + (equal + 1.0) / 2.0
}

/// Friedman via `(12/(bk(k+1)) ΣR² - 3b(k+1)) / C` with the tie factor
/// `C = 1 - Σ(t³ - t) / (b k (k² - 1))`; `None` when `C` vanishes.
pub fn friedman(m: &[Vec<f64>]) -> Option<(f64, f64)> {
    let b = m.len() as f64;
    let k = m[0].len();
    let kf = k as f64;
    let mut sums = vec![0.0; k];
    let mut ties = 0.0;
    for row in m {
        for (j, &v) in row.iter().enumerate() {
            sums[j] += midrank(row, v);
        }
        let mut seen: Vec<f64> = Vec::new();
        for &v in row {
            if !seen.contains(&v) {
                seen.push(v);
                let t = row.iter().filter(|&&u| u == v).count() as f64;
                ties += t * t * t - t;
            }
        }
    }
    let c = 1.0 - ties / (b * kf * (kf * kf - 1.0));
    if c <= 1e-12 {
        return None;
    }
    let ss: f64 = sums.iter().map(|s| s * s).sum();
    let stat = (12.0 / (b * kf * (kf + 1.0)) * ss - 3.0 * b * (kf + 1.0)) / c;
    Some((stat, c))
}

// ---------------------------------------------------------------- tags

/// Technique benefit tags, written directly from the scenario definitions.
/// `significant` and `narrower` describe the default-vs-selected width test.
pub fn rq2_reference(
    default_reliable: bool,
    any_reliable: bool,
    selection_made: bool,
    selected_reliable: bool,
    significant: bool,
    narrower: bool,
) -> &'static str {
    if !selection_made {
        // All configurations predicted unreliable.
        return if default_reliable {
            "TU" // No configuration selected, not even the usable default.
        } else if any_reliable {
            "PU"
        } else {
            "APU"
        };
    }
    if !default_reliable && selected_reliable {
        return "DU";
    }
    if !default_reliable && !selected_reliable {
        return "NKU";
    }
    if !selected_reliable {
        return "TU";
    }
    if !significant {
        "NSD"
    } else if narrower {
        "SB"
    } else {
        "SW"
    }
}

// ---------------------------------------------------------------- isolation

/// `⌈percent · m / 100⌉` in integers.
fn ceil_percent(percent: usize, m: usize) -> usize {
    (percent * m).div_ceil(100)
}

/// Checks every logged access of a tuning/meta run over `m` rows (original
/// ids `0..m` in chronological order) against the frame boundaries it is
/// allowed to see. Returns one message per violation.
pub fn isolation_violations(records: &[metatune::AccessRecord], m: usize) -> Vec<String> {
    use metatune::Stage;
    let outer = ceil_percent(66, m);
    let mut bad = Vec::new();
    for r in records {
        // (rows techniques may touch, start of the actual-evaluation window, its end)
        let (visible, eval_lo, eval_hi) = match r.scope.as_str() {
            "tuning" => (outer, outer, m),
            s if s.starts_with("meta ") => {
                let pct = match s {
                    "meta 25/75 inner" => 25,
                    "meta 50/50 inner" => 50,
                    "meta 75/25 inner" => 75,
                    _ => {
                        bad.push(format!("unknown scope {s}"));
                        continue;
                    }
                };
                let inner = ceil_percent(pct, outer);
                (inner, inner, outer)
            }
            s => {
                bad.push(format!("unknown scope {s}"));
                continue;
            }
        };
        let within = |ids: &[usize], lo: usize, hi: usize| ids.iter().all(|&i| lo <= i && i < hi);
        match r.stage {
            Stage::Technique(t) => {
                if !within(&r.train, 0, visible) || !within(&r.eval, 0, visible) {
                    bad.push(format!("{} technique {t} read rows at or beyond {visible}", r.scope));
                }
                if r.train.iter().any(|i| r.eval.binary_search(i).is_ok()) {
                    bad.push(format!("{} technique {t} evaluated on training rows", r.scope));
                }
            }
            Stage::Actual => {
                if !within(&r.train, 0, visible) {
                    bad.push(format!("{} actual fit read rows at or beyond {visible}", r.scope));
                }
                if !within(&r.eval, eval_lo, eval_hi) {
                    bad.push(format!("{} actual scoring outside [{eval_lo}, {eval_hi})", r.scope));
                }
            }
        }
    }
    bad
}
