use nalgebra::{Cholesky, DMatrix};
use serde::{Deserialize, Serialize};

use super::calibration::DistanceCalibration;
use super::fast_mcd::McdFit;
use crate::distributions::f_quantile;
use crate::error::{Error, Result};
use crate::stats::median;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceResult {
    /// Squared MCD distances `d²` of every observation.
    pub raw: Vec<f64>,
    /// `c (m - p + 1) / (p m) · d²`.
    pub scaled: Vec<f64>,
    /// Scaled distances rescaled so their median over the complement of the
    /// MCD subset equals the F median. Values for subset members are kept
    /// but never flagged.
    pub transformed: Vec<f64>,
    pub in_subset: Vec<bool>,
    pub flags: Vec<bool>,
    /// Upper `1 - gamma` quantile of F(p, m - p + 1).
    pub threshold: f64,
    pub f_median: f64,
}

impl DistanceResult {
    pub fn flagged(&self) -> Vec<usize> {
        self.flags.iter().enumerate().filter(|(_, &f)| f).map(|(i, _)| i).collect()
    }
}

/// Flags observations outside the MCD subset whose median-matched distance
/// exceeds the F quantile.
pub fn distance_outliers(
    x: &DMatrix<f64>,
    fit: &McdFit,
    cal: &DistanceCalibration,
) -> Result<DistanceResult> {
    let (n, p) = x.shape();
    if n != fit.n() || p != fit.p || p != cal.p {
        return Err(Error::Dimension(format!(
            "scores are {n}x{p} but the fit is for n = {}, p = {} and calibration p = {}",
            fit.n(),
            fit.p,
            cal.p
        )));
    }
    let chol = Cholesky::new(fit.scatter.clone()).ok_or(Error::SingularScatter)?;

    let mut centered = x.transpose();
    for mut col in centered.column_iter_mut() {
        col -= &fit.location;
    }
    let solved = chol.l().solve_lower_triangular(&centered).ok_or(Error::SingularScatter)?;
    let raw: Vec<f64> = solved.column_iter().map(|c| c.norm_squared()).collect();

    let (df1, df2) = cal.df;
    let factor = cal.c * df2 / (df1 * cal.m);
    let scaled: Vec<f64> = raw.iter().map(|d| factor * d).collect();

    let outside: Vec<f64> = fit.complement.iter().map(|&i| scaled[i]).collect();
    let outside_median = median(&outside).ok_or_else(|| {
        Error::Calibration("MCD subset covers every observation".into())
    })?;
    if !(outside_median > 0.0) {
        return Err(Error::Calibration("median distance outside the subset is zero".into()));
    }
    let f_median = f_quantile(0.5, df1, df2);
    let ratio = f_median / outside_median;
    let transformed: Vec<f64> = scaled.iter().map(|d| d * ratio).collect();

    let threshold = f_quantile(1.0 - cal.gamma, df1, df2);
    let in_subset = fit.in_subset();
    let flags = transformed
        .iter()
        .zip(&in_subset)
        .map(|(&d, &inside)| !inside && d > threshold)
        .collect();
    Ok(DistanceResult { raw, scaled, transformed, in_subset, flags, threshold, f_median })
}
