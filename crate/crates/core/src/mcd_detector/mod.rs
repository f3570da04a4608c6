//! Robust distance outlier detection on PCA scores.
//!
//! [`fast_mcd`] finds the minimum covariance determinant subset,
//! [`calibration`] supplies the F-law constants for distances of the
//! observations outside it, and [`distance_outliers`] applies the
//! median-matched quantile rule.

pub mod calibration;
mod distance;
mod fast_mcd;
mod kernels;

pub use calibration::{
    asymptotic_wishart_df, calibrate, consistency_factor, simulate_calibration,
    small_sample_correction, wishart_df, CalibrationSource, DistanceCalibration,
    SimulatedCalibration, DEFAULT_GAMMA,
};
pub use distance::{distance_outliers, DistanceResult};
pub use fast_mcd::{
    cstep_checks, cstep_violations, default_h, fast_mcd, fast_mcd_with, McdFit, McdOptions,
};
