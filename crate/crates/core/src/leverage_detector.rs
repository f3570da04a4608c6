//! PCA leverage and the median-multiple outlier rule.

use serde::{Deserialize, Serialize};

use crate::pca_reduce::ReducedBasis;
use crate::stats::median;

pub const DEFAULT_ALPHA: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeverageResult {
    pub h: Vec<f64>,
    pub median: f64,
    pub alpha: f64,
    pub threshold: f64,
    pub flags: Vec<bool>,
}

impl LeverageResult {
    pub fn flagged(&self) -> Vec<usize> {
        self.flags.iter().enumerate().filter(|(_, &f)| f).map(|(i, _)| i).collect()
    }
}

/// Diagonal of the projector `U Uᵗ`: the squared norm of each row of U.
pub fn leverage(basis: &ReducedBasis) -> Vec<f64> {
    let u = &basis.u;
    let mut h = vec![0.0; u.nrows()];
    for col in u.column_iter() {
        for (acc, x) in h.iter_mut().zip(col.iter()) {
            *acc += x * x;
        }
    }
    for x in &mut h {
        *x = x.min(1.0);
    }
    h
}

/// Flags `h_t > alpha * median(h)`; values exactly at the threshold are not flagged.
pub fn leverage_outliers(h: &[f64], alpha: f64) -> LeverageResult {
    let m = median(h).unwrap_or(f64::NAN);
    let threshold = alpha * m;
    let flags = h.iter().map(|&x| x > threshold).collect();
    LeverageResult { h: h.to_vec(), median: m, alpha, threshold, flags }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_leverage_flags_nothing() {
        let r = leverage_outliers(&[0.2; 10], DEFAULT_ALPHA);
        assert!(r.flags.iter().all(|f| !f));
    }

    #[test]
    fn hand_computed_flags() {
        let r = leverage_outliers(&[0.9, 0.02, 0.02, 0.02, 0.02], 3.0);
        assert_eq!(r.median, 0.02);
        assert!((r.threshold - 0.06).abs() < 1e-15);
        assert_eq!(r.flagged(), vec![0]);
    }

    #[test]
    fn ties_at_threshold_not_flagged() {
        let r = leverage_outliers(&[0.3, 0.1, 0.1], 3.0);
        // 3 * 0.1 rounds to 0.30000000000000004 > 0.3; use an exact case too
        assert!(!r.flags[0]);
        let r = leverage_outliers(&[0.75, 0.25, 0.25], 3.0);
        assert_eq!(r.threshold, 0.75);
        assert!(!r.flags[0]);
    }

    #[test]
    fn default_alpha_is_three() {
        assert_eq!(DEFAULT_ALPHA, 3.0);
    }
}
