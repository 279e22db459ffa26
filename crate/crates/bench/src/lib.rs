//! Synthetic datasets for benchmarks.

use metatune::Dataset;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `y = Σ (j+1)·x_j + noise` with uniform features on `[0, 10)` and
/// noise uniform on `[-1, 1)`.
pub fn linear(rows: usize, features: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs = Vec::with_capacity(rows);
    let mut ys = Vec::with_capacity(rows);
    for _ in 0..rows {
        let x: Vec<f64> = (0..features).map(|_| rng.gen_range(0.0..10.0)).collect();
        let signal: f64 = x.iter().enumerate().map(|(j, v)| (j as f64 + 1.0) * v).sum();
        ys.push(signal + rng.gen_range(-1.0..1.0));
        xs.push(x);
    }
    Dataset::from_rows(xs, ys).expect("finite synthetic data")
}

/// `k` random `n`-vectors, for rank-test benchmarks.
pub fn matrix(blocks: usize, k: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..blocks)
        .map(|_| (0..k).map(|_| f64::from(rng.gen_range(0u32..20))).collect())
        .collect()
}
