//! Train/test index-set primitives that every validation technique is built from.

use crate::error::{Error, Result};
use crate::rng::Stream;
use crate::util::ceil_product;

/// Attempts before [`bootstrap_split`] gives up on a non-empty out-of-bag set.
pub const BOOTSTRAP_RETRIES: usize = 100;

/// Row indices of one train/test partition.
///
/// `train` may contain repeats (bootstrap multisets); `test` never does.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitIndices {
    /// True when every training index precedes every test index.
    pub fn is_order_preserving(&self) -> bool {
        match (self.train.iter().max(), self.test.iter().min()) {
            (Some(a), Some(b)) => a < b,
            _ => true,
        }
    }
}

/// Order-preserving holdout: train on the first `⌈fraction · m⌉` rows.
pub fn holdout_split(m: usize, train_fraction: f64) -> Result<SplitIndices> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "holdout train fraction {train_fraction} not in (0, 1)"
        )));
    }
    let cut = ceil_product(train_fraction, m);
    if cut == 0 || cut >= m {
        return Err(Error::DegenerateSplit(format!(
            "holdout of {m} rows at {train_fraction} leaves an empty side"
        )));
    }
    Ok(SplitIndices {
        train: (0..cut).collect(),
        test: (cut..m).collect(),
    })
}

/// Draws `m` indices with replacement; the out-of-bag indices form the test set.
pub fn bootstrap_split(m: usize, rng: &mut Stream) -> Result<SplitIndices> {
    if m < 2 {
        return Err(Error::DegenerateSplit(format!("bootstrap needs m >= 2, got {m}")));
    }
    for _ in 0..BOOTSTRAP_RETRIES {
        let train: Vec<usize> = (0..m).map(|_| rng.below(m)).collect();
        let test = out_of_bag(m, &train);
        if !test.is_empty() {
            return Ok(SplitIndices { train, test });
        }
    }
    Err(Error::EmptyOutOfBag {
        attempts: BOOTSTRAP_RETRIES,
    })
}

/// Indices in `[0, m)` absent from `drawn`, ascending.
pub fn out_of_bag(m: usize, drawn: &[usize]) -> Vec<usize> {
    let mut seen = vec![false; m];
    for &i in drawn {
        seen[i] = true;
    }
    (0..m).filter(|&i| !seen[i]).collect()
}

/// Shuffled k-fold partition. Fold sizes differ by at most one; split `i`
/// tests on fold `i`. Both sides are returned sorted ascending.
pub fn kfold_partition(m: usize, k: usize, rng: &mut Stream) -> Result<Vec<SplitIndices>> {
    if k < 2 || k > m {
        return Err(Error::BadFoldCount { k, m });
    }
    let mut perm: Vec<usize> = (0..m).collect();
    rng.shuffle(&mut perm);

    let (base, extra) = (m / k, m % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for i in 0..k {
        let size = base + usize::from(i < extra);
        let mut fold = perm[start..start + size].to_vec();
        fold.sort_unstable();
        folds.push(fold);
        start += size;
    }

    let mut fold_of = vec![0usize; m];
    for (i, fold) in folds.iter().enumerate() {
        for &idx in fold {
            fold_of[idx] = i;
        }
    }
    Ok(folds
        .into_iter()
        .enumerate()
        .map(|(i, test)| SplitIndices {
            train: (0..m).filter(|&idx| fold_of[idx] != i).collect(),
            test,
        })
        .collect())
}

/// Rolling-origin splits with an expanding training window.
///
/// The region after the initial window `[⌈initial_fraction · m⌉, m)` is cut
/// into `n_splits` contiguous chunks; split `j` trains on everything before
/// chunk `j` and tests on chunk `j`.
pub fn tscv_splits(m: usize, initial_fraction: f64, n_splits: usize) -> Result<Vec<SplitIndices>> {
    if !(initial_fraction > 0.0 && initial_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "initial fraction {initial_fraction} not in (0, 1)"
        )));
    }
    let start = ceil_product(initial_fraction, m);
    if n_splits == 0 || start == 0 || start >= m {
        return Err(Error::DegenerateSplit(format!(
            "tscv: initial window {start} of {m} rows with {n_splits} splits"
        )));
    }
    let rest = m - start;
    if n_splits > rest {
        return Err(Error::DegenerateSplit(format!(
            "tscv: {n_splits} splits but only {rest} rows after the initial window"
        )));
    }
    let bound = |j: usize| start + j * rest / n_splits;
    Ok((0..n_splits)
        .map(|j| SplitIndices {
            train: (0..bound(j)).collect(),
            test: (bound(j)..bound(j + 1)).collect(),
        })
        .collect())
}

/// hv-block splits: for each center `i = v, v+s, …, ≤ m-1-v`, test on
/// `[i-v, i+v]` and train on everything outside `[i-v-h, i+v+h]`.
pub fn tshvcv_splits(m: usize, v: usize, h: usize, s: usize) -> Result<Vec<SplitIndices>> {
    if s == 0 {
        return Err(Error::InvalidParameter("tshvcv step must be >= 1".into()));
    }
    if m < 2 * v + 2 * h + 2 {
        return Err(Error::DegenerateSplit(format!(
            "tshvcv needs m >= 2v+2h+2 = {}, got {m}",
            2 * v + 2 * h + 2
        )));
    }
    let last = m - 1 - v;
    Ok((v..=last)
        .step_by(s)
        .map(|i| {
            let lo = (i - v).saturating_sub(h);
            let hi = i + v + h;
            SplitIndices {
                train: (0..m).filter(|&j| j < lo || j > hi).collect(),
                test: (i - v..=i + v).collect(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn holdout_ceiling() {
        let s = holdout_split(10, 0.66).unwrap();
        assert_eq!(s.train, (0..7).collect::<Vec<_>>());
        assert_eq!(s.test, vec![7, 8, 9]);
        let s = holdout_split(4, 0.5).unwrap();
        assert_eq!((s.train, s.test), (vec![0, 1], vec![2, 3]));
        assert!(matches!(holdout_split(1, 0.5), Err(Error::DegenerateSplit(_))));
    }

    #[test]
    fn bootstrap_test_is_out_of_bag() {
        let mut rng = Stream::new(11);
        let s = bootstrap_split(4, &mut rng).unwrap();
        assert_eq!(s.train.len(), 4);
        assert_eq!(s.test, out_of_bag(4, &s.train));
        assert!(s.test.iter().all(|t| !s.train.contains(t)));
    }

    #[test]
    fn bootstrap_draw_is_frozen_for_seed() {
        // Seed 71 is the first whose ChaCha8 draw over 4 rows is exactly
        // [0, 0, 2, 3]; recorded once, guards cross-platform stability.
        let mut rng = Stream::new(71);
        let s = bootstrap_split(4, &mut rng).unwrap();
        assert_eq!(s.train, vec![0, 0, 2, 3]);
        assert_eq!(s.test, vec![1]);
    }

    #[test]
    fn out_of_bag_of_full_draw_is_empty() {
        assert!(out_of_bag(2, &[0, 1]).is_empty());
        assert_eq!(out_of_bag(4, &[0, 0, 2, 3]), vec![1]);
    }

    #[test]
    fn bootstrap_retries_on_empty_out_of_bag() {
        // For m = 2 half of all draws cover both indices; over many seeds at
        // least one first attempt must have been rejected and retried.
        let mut retried = false;
        for seed in 0..64 {
            let mut probe = Stream::new(seed);
            let first: Vec<usize> = (0..2).map(|_| probe.below(2)).collect();
            let mut rng = Stream::new(seed);
            let s = bootstrap_split(2, &mut rng).unwrap();
            assert_eq!(s.test.len(), 1);
            if out_of_bag(2, &first).is_empty() {
                retried = true;
                assert_ne!(s.train, first);
            }
        }
        assert!(retried);
    }

    #[test]
    fn bootstrap_out_of_bag_fraction() {
        // E[|oob|/m] = (1 - 1/m)^m = 0.36603 for m = 100.
        let m = 100;
        let mut rng = Stream::new(5);
        let draws = 10_000;
        let total: usize = (0..draws)
            .map(|_| bootstrap_split(m, &mut rng).unwrap().test.len())
            .sum();
        let frac = total as f64 / (draws * m) as f64;
        let expected = (1.0 - 1.0 / m as f64).powi(m as i32);
        assert!((frac - expected).abs() < 0.01, "{frac} vs {expected}");
    }

    #[test]
    fn kfold_shapes() {
        let mut rng = Stream::new(1);
        let splits = kfold_partition(10, 10, &mut rng).unwrap();
        assert!(splits.iter().all(|s| s.test.len() == 1 && s.train.len() == 9));
        let mut all: Vec<usize> = splits.iter().flat_map(|s| s.test.clone()).collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());

        let mut sizes: Vec<usize> = kfold_partition(10, 3, &mut rng)
            .unwrap()
            .iter()
            .map(|s| s.test.len())
            .collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![3, 3, 4]);
    }

    #[test]
    fn kfold_deterministic_and_bounds() {
        let a = kfold_partition(23, 5, &mut Stream::new(9)).unwrap();
        let b = kfold_partition(23, 5, &mut Stream::new(9)).unwrap();
        assert_eq!(a, b);
        assert!(matches!(
            kfold_partition(5, 6, &mut Stream::new(0)),
            Err(Error::BadFoldCount { .. })
        ));
        assert!(kfold_partition(5, 1, &mut Stream::new(0)).is_err());
    }

    #[test]
    fn tscv_boundaries() {
        let splits = tscv_splits(10, 0.5, 5).unwrap();
        let tests: Vec<Vec<usize>> = splits.iter().map(|s| s.test.clone()).collect();
        assert_eq!(tests, vec![vec![5], vec![6], vec![7], vec![8], vec![9]]);
        for (j, s) in splits.iter().enumerate() {
            assert_eq!(s.train, (0..5 + j).collect::<Vec<_>>());
        }
        let one = tscv_splits(10, 0.5, 1).unwrap();
        assert_eq!(one[0].train, (0..5).collect::<Vec<_>>());
        assert_eq!(one[0].test, (5..10).collect::<Vec<_>>());
        assert!(tscv_splits(10, 0.5, 6).is_err());
    }

    #[test]
    fn tshvcv_enumeration() {
        let splits = tshvcv_splits(11, 1, 1, 3).unwrap();
        let centers: Vec<usize> = splits.iter().map(|s| s.test[1]).collect();
        assert_eq!(centers, vec![1, 4, 7]);
        assert_eq!(splits[1].test, vec![3, 4, 5]);
        assert_eq!(splits[1].train, vec![0, 1, 7, 8, 9, 10]);
        assert_eq!(splits[1].train.len(), 11 - 2 - 2 - 1);
    }

    #[test]
    fn tshvcv_degenerates_to_loo() {
        let splits = tshvcv_splits(5, 0, 0, 1).unwrap();
        assert_eq!(splits.len(), 5);
        for (i, s) in splits.iter().enumerate() {
            assert_eq!(s.test, vec![i]);
            assert_eq!(s.train, (0..5).filter(|&j| j != i).collect::<Vec<_>>());
        }
        assert!(tshvcv_splits(5, 1, 1, 1).is_err());
    }

    proptest! {
        #[test]
        fn order_preserving_primitives(m in 4usize..80, frac in 0.1f64..0.9, n in 1usize..6) {
            if let Ok(s) = holdout_split(m, frac) {
                prop_assert!(s.is_order_preserving());
                prop_assert_eq!(s.train.len() + s.test.len(), m);
            }
            if let Ok(splits) = tscv_splits(m, frac, n) {
                for w in splits.windows(2) {
                    prop_assert!(w[1].train.len() > w[0].train.len());
                }
                for s in &splits {
                    prop_assert!(s.is_order_preserving());
                    prop_assert!(!s.test.is_empty());
                }
                prop_assert_eq!(splits.last().unwrap().test.last().copied(), Some(m - 1));
            }
        }

        #[test]
        fn tshvcv_buffers(m in 6usize..60, v in 0usize..3, h in 0usize..3, s in 1usize..5) {
            if let Ok(splits) = tshvcv_splits(m, v, h, s) {
                for sp in &splits {
                    prop_assert_eq!(sp.test.len(), 2 * v + 1);
                    let lo = sp.test[0];
                    let hi = *sp.test.last().unwrap();
                    prop_assert!(hi < m);
                    for &t in &sp.train {
                        prop_assert!(t + h < lo || t > hi + h);
                    }
                    if lo >= h && hi + h < m {
                        prop_assert_eq!(sp.train.len(), m - 2 * v - 2 * h - 1);
                    }
                }
            }
        }

        #[test]
        fn kfold_covers_once(m in 2usize..60, k in 2usize..12, seed in any::<u64>()) {
            prop_assume!(k <= m);
            let splits = kfold_partition(m, k, &mut Stream::new(seed)).unwrap();
            let mut count = vec![0; m];
            for s in &splits {
                for &t in &s.test { count[t] += 1; }
                prop_assert_eq!(s.train.len() + s.test.len(), m);
                prop_assert!(s.train.iter().all(|i| !s.test.contains(i)));
            }
            prop_assert!(count.iter().all(|&c| c == 1));
        }
    }
}
