/// `⌈fraction · n⌉`, treating products within 1e-9 (relative) of an integer
/// as that integer so that e.g. `0.66 · 100` rounds to 66, not 67.
pub fn ceil_product(fraction: f64, n: usize) -> usize {
    let t = fraction * n as f64;
    let r = t.round();
    if (t - r).abs() <= 1e-9 * t.abs().max(1.0) {
        r as usize
    } else {
        t.ceil() as usize
    }
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snaps_float_noise() {
        assert_eq!(ceil_product(0.66, 100), 66);
        assert_eq!(ceil_product(0.66, 10), 7);
        assert_eq!(ceil_product(0.95, 20), 19);
        assert_eq!(ceil_product(1.0 - (1.0 - 0.9) / 2.0, 20), 19);
        assert_eq!(ceil_product(0.05, 10), 1);
        assert_eq!(ceil_product(0.0, 10), 0);
    }
}
