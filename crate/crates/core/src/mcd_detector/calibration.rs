//! Constants of the F approximation for robust distances of observations
//! outside the MCD subset: the consistency factor `c` and the Wishart degrees
//! of freedom `m`.
//!
//! `m` has a closed form (Croux and Haesbroeck's asymptotic value with Hardin
//! and Rocke's small-sample correction) and a Monte Carlo estimate. The
//! simulation fits MCD to Gaussian samples of the same shape and matches the
//! first two moments of the diagonal of the consistency-corrected scatter,
//! whose entries behave like `chi2_m / m`.

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fast_mcd::{fast_mcd_with, McdOptions};
use crate::distributions::{chi2_cdf, chi2_quantile};
use crate::error::{Error, Result};
use crate::seeds::rng_for;
use crate::stats::{mean, variance};

/// Tail mass above the flagging quantile.
pub const DEFAULT_GAMMA: f64 = 0.001;

/// Replicates used when the closed form is unusable and the simulation is the
/// only estimate of `m`.
pub const FALLBACK_REPLICATES: usize = 2000;
pub const FALLBACK_STARTS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationSource {
    ClosedForm,
    Simulation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceCalibration {
    pub c: f64,
    pub m: f64,
    pub gamma: f64,
    pub p: usize,
    /// Degrees of freedom `(p, m - p + 1)` of the reference F law.
    pub df: (f64, f64),
    pub source: CalibrationSource,
}

impl DistanceCalibration {
    pub fn new(c: f64, m: f64, p: usize, gamma: f64, source: CalibrationSource) -> Result<Self> {
        if !(c > 0.0 && c <= 1.0) {
            return Err(Error::Calibration(format!("consistency factor {c} outside (0, 1]")));
        }
        if !(m > p as f64 - 1.0) {
            return Err(Error::Calibration(format!("m = {m} does not exceed p - 1 = {}", p - 1)));
        }
        if !(gamma > 0.0 && gamma < 0.5) {
            return Err(Error::Config(format!("gamma = {gamma} outside (0, 0.5)")));
        }
        Ok(DistanceCalibration { c, m, gamma, p, df: (p as f64, m - p as f64 + 1.0), source })
    }
}

/// `P(chi2_{p+2} < chi2_{p, ratio}) / ratio`, where `chi2_{p, ratio}` is the
/// `ratio` quantile of chi-squared with p degrees of freedom.
pub fn consistency_factor(p: usize, ratio: f64) -> f64 {
    assert!(ratio > 0.0 && ratio <= 1.0, "ratio must lie in (0, 1]");
    if ratio >= 1.0 {
        return 1.0;
    }
    let q = chi2_quantile(ratio, p as f64);
    chi2_cdf(q, p as f64 + 2.0) / ratio
}

/// Asymptotic Wishart degrees of freedom for the raw MCD scatter with
/// subset fraction `ratio = h / n`.
pub fn asymptotic_wishart_df(n: usize, p: usize, ratio: f64) -> f64 {
    let pf = p as f64;
    let tail = 1.0 - ratio;
    let q = chi2_quantile(ratio, pf);
    let c_alpha = ratio / chi2_cdf(q, pf + 2.0);
    let c2 = -0.5 * chi2_cdf(q, pf + 2.0);
    let c3 = -0.5 * chi2_cdf(q, pf + 4.0);
    let c4 = 3.0 * c3;
    let b1 = c_alpha * (c3 - c4) / ratio;
    let b2 = 0.5 + c_alpha / ratio * (c3 - q / pf * (c2 + ratio / 2.0));
    let v1 = ratio * b1 * b1 * (tail * (c_alpha * q / pf - 1.0).powi(2) - 1.0)
        - 2.0
            * c3
            * c_alpha
            * c_alpha
            * (3.0 * (b1 - pf * b2).powi(2) + (pf + 2.0) * b2 * (2.0 * b1 - pf * b2));
    let v2 = n as f64 * (b1 * (b1 - pf * b2) * ratio).powi(2) * c_alpha * c_alpha;
    let v = v1 / v2;
    2.0 / (c_alpha * c_alpha * v)
}

/// Multiplier applied to the asymptotic degrees of freedom for finite samples.
pub fn small_sample_correction(n: usize, p: usize) -> f64 {
    (0.725 - 0.00663 * p as f64 - 0.0780 * (n as f64).ln()).exp()
}

/// Small-sample corrected `m`; errors when the result does not exceed `p - 1`.
pub fn wishart_df(n: usize, p: usize, ratio: f64) -> Result<f64> {
    if !(ratio > 0.5 && ratio < 1.0) {
        return Err(Error::Calibration(format!("subset fraction {ratio} outside (0.5, 1)")));
    }
    let m = asymptotic_wishart_df(n, p, ratio) * small_sample_correction(n, p);
    if !(m.is_finite() && m > p as f64 - 1.0) {
        return Err(Error::Calibration(format!(
            "closed-form m = {m} does not exceed p - 1 for n = {n}, p = {p}"
        )));
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulatedCalibration {
    pub m: f64,
    /// Mean of the raw scatter diagonal, a simulation estimate of `c`.
    pub c: f64,
    pub replicates: usize,
}

/// Monte Carlo estimate of `(c, m)` for standard Gaussian samples of shape
/// n×p and subset size h.
pub fn simulate_calibration(
    n: usize,
    p: usize,
    h: usize,
    replicates: usize,
    seed: u64,
    opts: &McdOptions,
) -> Result<SimulatedCalibration> {
    if replicates < 2 {
        return Err(Error::Config("simulation needs at least 2 replicates".into()));
    }
    let diagonals: Vec<Vec<f64>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_for(seed, &[0x5157, r as u64]);
            let x = DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng));
            let fit = fast_mcd_with(&x, h, seed ^ r as u64, opts)?;
            Ok(fit.scatter.diagonal().iter().copied().collect())
        })
        .collect::<Result<_>>()?;
    let pooled: Vec<f64> = diagonals.into_iter().flatten().collect();
    let mu = mean(&pooled);
    let var = variance(&pooled);
    Ok(SimulatedCalibration { m: 2.0 * mu * mu / var, c: mu, replicates })
}

/// Closed-form calibration, falling back to simulation when the closed form
/// gives `m <= p - 1`.
pub fn calibrate(n: usize, p: usize, h: usize, gamma: f64, seed: u64) -> Result<DistanceCalibration> {
    let ratio = h as f64 / n as f64;
    let c = consistency_factor(p, ratio);
    match wishart_df(n, p, ratio) {
        Ok(m) => DistanceCalibration::new(c, m, p, gamma, CalibrationSource::ClosedForm),
        Err(Error::Calibration(_)) => {
            let opts = McdOptions { n_starts: FALLBACK_STARTS, ..McdOptions::default() };
            let sim = simulate_calibration(n, p, h, FALLBACK_REPLICATES, seed, &opts)?;
            DistanceCalibration::new(c, sim.m, p, gamma, CalibrationSource::Simulation)
        }
        Err(e) => Err(e),
    }
}
