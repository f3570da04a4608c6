//! Sensitivity and specificity against a known outlier set, and percentile
//! bootstrap intervals over iteration-level scores.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{mean, quantile_sorted};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    /// Fraction of true outliers flagged; `None` when there are none.
    pub sensitivity: Option<f64>,
    /// Fraction of non-outliers left unflagged; `None` when every index is an outlier.
    pub specificity: Option<f64>,
}

pub fn score(flags: &[bool], truth: &[usize]) -> Result<Score> {
    let t = flags.len();
    let mut is_true = vec![false; t];
    for &i in truth {
        if i >= t {
            return Err(Error::Dimension(format!("true outlier {i} outside 0..{t}")));
        }
        is_true[i] = true;
    }
    let (mut tp, mut pos, mut tn, mut neg) = (0usize, 0usize, 0usize, 0usize);
    for (&f, &y) in flags.iter().zip(&is_true) {
        if y {
            pos += 1;
            tp += usize::from(f);
        } else {
            neg += 1;
            tn += usize::from(!f);
        }
    }
    let ratio = |a: usize, b: usize| (b > 0).then(|| a as f64 / b as f64);
    Ok(Score { sensitivity: ratio(tp, pos), specificity: ratio(tn, neg) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Mean of `values` with a 95% percentile bootstrap interval.
pub fn bootstrap_ci<R: Rng + ?Sized>(values: &[f64], resamples: usize, rng: &mut R) -> Option<Interval> {
    if values.is_empty() {
        return None;
    }
    let point = mean(values);
    let n = values.len();
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| values[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    if means.is_empty() {
        return Some(Interval { mean: point, lo: point, hi: point });
    }
    means.sort_by(f64::total_cmp);
    Some(Interval {
        mean: point,
        lo: quantile_sorted(&means, 0.025)?,
        hi: quantile_sorted(&means, 0.975)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn flags_at(t: usize, idx: &[usize]) -> Vec<bool> {
        let mut f = vec![false; t];
        for &i in idx {
            f[i] = true;
        }
        f
    }

    #[test]
    fn hand_counts() {
        let s = score(&flags_at(10, &[1, 5]), &[1, 2]).unwrap();
        assert_eq!(s.sensitivity, Some(0.5));
        assert_eq!(s.specificity, Some(7.0 / 8.0));

        let none = score(&flags_at(10, &[]), &[3]).unwrap();
        assert_eq!((none.sensitivity, none.specificity), (Some(0.0), Some(1.0)));

        let exact = score(&flags_at(10, &[3, 4]), &[3, 4]).unwrap();
        assert_eq!((exact.sensitivity, exact.specificity), (Some(1.0), Some(1.0)));

        let empty_truth = score(&flags_at(10, &[3]), &[]).unwrap();
        assert_eq!(empty_truth.sensitivity, None);
        assert_eq!(empty_truth.specificity, Some(0.9));

        assert!(score(&flags_at(4, &[]), &[4]).is_err());
    }

    #[test]
    fn single_value_interval_is_degenerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ci = bootstrap_ci(&[0.75], 1000, &mut rng).unwrap();
        assert_eq!((ci.mean, ci.lo, ci.hi), (0.75, 0.75, 0.75));
        assert!(bootstrap_ci(&[], 10, &mut rng).is_none());
    }

    #[test]
    fn interval_brackets_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let v: Vec<f64> = (0..50).map(|i| (i % 7) as f64 / 7.0).collect();
        let ci = bootstrap_ci(&v, 1000, &mut rng).unwrap();
        assert!(ci.lo < ci.mean && ci.mean < ci.hi);
    }
}
