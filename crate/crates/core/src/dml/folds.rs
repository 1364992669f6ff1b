use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Random partition of `0..n` into `n_folds` folds of near-equal size.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    fold_of: Vec<usize>,
    n_folds: usize,
    seed: u64,
}

impl FoldAssignment {
    /// Builds an assignment from explicit labels; every fold must be non-empty.
    pub fn from_labels(fold_of: Vec<usize>, n_folds: usize, seed: u64) -> Result<Self> {
        if n_folds < 2 || n_folds > fold_of.len() {
            return Err(Error::InvalidFoldCount { n: fold_of.len(), folds: n_folds });
        }
        let mut counts = vec![0usize; n_folds];
        for &f in &fold_of {
            if f >= n_folds {
                return Err(Error::InvalidFoldCount { n: fold_of.len(), folds: n_folds });
            }
            counts[f] += 1;
        }
        if counts.contains(&0) {
            return Err(Error::InvalidFoldCount { n: fold_of.len(), folds: n_folds });
        }
        Ok(Self { fold_of, n_folds, seed })
    }

    pub fn n(&self) -> usize {
        self.fold_of.len()
    }

    pub fn n_folds(&self) -> usize {
        self.n_folds
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn fold_of(&self) -> &[usize] {
        &self.fold_of
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.n_folds];
        for &f in &self.fold_of {
            s[f] += 1;
        }
        s
    }

    /// `(training complement, held-out rows)` for one fold, both ascending.
    pub fn split(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        (0..self.n()).partition(|&i| self.fold_of[i] != fold)
    }
}

pub fn make_folds(n: usize, n_folds: usize, seed: u64) -> Result<FoldAssignment> {
    if n_folds < 2 || n_folds > n {
        return Err(Error::InvalidFoldCount { n, folds: n_folds });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold_of = vec![0; n];
    for (k, &i) in order.iter().enumerate() {
        fold_of[i] = k % n_folds;
    }
    Ok(FoldAssignment { fold_of, n_folds, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_division() {
        let f = make_folds(10, 5, 1).unwrap();
        assert_eq!(f.sizes(), vec![2; 5]);
    }

    #[test]
    fn uneven_division() {
        let mut s = make_folds(7, 3, 1).unwrap().sizes();
        s.sort_unstable();
        assert_eq!(s, vec![2, 2, 3]);
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        assert_eq!(make_folds(50, 5, 9).unwrap(), make_folds(50, 5, 9).unwrap());
        assert_ne!(make_folds(50, 5, 9).unwrap().fold_of(), make_folds(50, 5, 10).unwrap().fold_of());
    }

    #[test]
    fn invalid_counts() {
        assert!(matches!(make_folds(10, 1, 0), Err(Error::InvalidFoldCount { .. })));
        assert!(matches!(make_folds(3, 4, 0), Err(Error::InvalidFoldCount { .. })));
        assert!(FoldAssignment::from_labels(vec![0, 0, 2], 3, 0).is_err());
    }

    proptest! {
        #[test]
        fn sizes_balanced(n in 2usize..300, l in 2usize..12, seed in any::<u64>()) {
            prop_assume!(l <= n);
            let s = make_folds(n, l, seed).unwrap().sizes();
            let (lo, hi) = (*s.iter().min().unwrap(), *s.iter().max().unwrap());
            prop_assert!(lo >= 1 && hi - lo <= 1);
            prop_assert_eq!(s.iter().sum::<usize>(), n);
        }
    }
}
