use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::rng::{stream, Stream};

/// Train / test / validation proportions.
pub const SPLIT_RATIOS: (f64, f64, f64) = (0.64, 0.20, 0.16);

/// Disjoint index sets covering a dataset.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub validation: Vec<usize>,
}

impl Split {
    pub fn len(&self) -> usize {
        self.train.len() + self.test.len() + self.validation.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Seeded split stratified by the event indicator.
///
/// Overall sizes follow [`SPLIT_RATIOS`] (rounded); each stratum receives
/// its rounded share of the train and test sets and the censored stratum
/// absorbs the rounding remainder.
pub fn split(events: &[bool], seed: u64) -> Split {
    let n = events.len();
    let n_train = (SPLIT_RATIOS.0 * n as f64).round() as usize;
    let n_test = ((SPLIT_RATIOS.1 * n as f64).round() as usize).min(n - n_train);

    let mut rng = stream(seed, Stream::Split);
    let mut uncensored: Vec<usize> = (0..n).filter(|&i| events[i]).collect();
    let mut censored: Vec<usize> = (0..n).filter(|&i| !events[i]).collect();
    uncensored.shuffle(&mut rng);
    censored.shuffle(&mut rng);

    let ne = uncensored.len();
    let train_e = ((SPLIT_RATIOS.0 * ne as f64).round() as usize).min(n_train);
    let test_e = ((SPLIT_RATIOS.1 * ne as f64).round() as usize)
        .min(ne - train_e)
        .min(n_test);
    let nc = censored.len();
    let train_c = (n_train - train_e).min(nc);
    let test_c = (n_test - test_e).min(nc - train_c);

    let mut train: Vec<usize> = uncensored[..train_e].to_vec();
    train.extend_from_slice(&censored[..train_c]);
    let mut test: Vec<usize> = uncensored[train_e..train_e + test_e].to_vec();
    test.extend_from_slice(&censored[train_c..train_c + test_c]);
    let mut validation: Vec<usize> = uncensored[train_e + test_e..].to_vec();
    validation.extend_from_slice(&censored[train_c + test_c..]);

    train.sort_unstable();
    test.sort_unstable();
    validation.sort_unstable();
    Split {
        train,
        test,
        validation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn events(n: usize, rate: f64, seed: u64) -> Vec<bool> {
        let mut rng = stream(seed, Stream::Probe);
        (0..n).map(|_| rng.random::<f64>() < rate).collect()
    }

    #[test]
    fn hundred_rows_give_64_20_16() {
        let s = split(&events(100, 0.55, 1), 3);
        assert_eq!(
            (s.train.len(), s.test.len(), s.validation.len()),
            (64, 20, 16)
        );
    }

    #[test]
    fn same_seed_same_split() {
        let e = events(200, 0.3, 2);
        assert_eq!(split(&e, 11), split(&e, 11));
    }

    #[test]
    fn different_seeds_differ() {
        let e = events(60, 0.5, 2);
        assert_ne!(split(&e, 1).train, split(&e, 2).train);
    }

    #[test]
    fn stratification_keeps_censoring_rate() {
        let e = events(2000, 0.142, 5);
        let s = split(&e, 0);
        let global = e.iter().filter(|&&x| x).count() as f64 / e.len() as f64;
        for part in [&s.train, &s.test, &s.validation] {
            let r = part.iter().filter(|&&i| e[i]).count() as f64 / part.len() as f64;
            assert!((r - global).abs() < 0.02, "{r} vs {global}");
        }
    }

    proptest! {
        #[test]
        fn split_is_a_partition(n in 1usize..300, rate in 0.0f64..1.0, seed in 0u64..50) {
            let e = events(n, rate, seed);
            let s = split(&e, seed);
            let mut all: Vec<usize> = s.train.iter().chain(&s.test).chain(&s.validation).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            prop_assert_eq!(s.train.len(), (0.64 * n as f64).round() as usize);
        }
    }
}
