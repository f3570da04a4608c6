//! Outlier detection for wide data matrices (many more columns than rows),
//! built for fMRI quality control: each row is a time point, each column a
//! voxel.
//!
//! The pipeline robustly scales the columns, reduces the matrix to its
//! leading principal components, and flags time points two ways: by
//! leverage in the reduced basis, and by robust Mahalanobis distance from a
//! minimum covariance determinant fit calibrated against an F distribution.
//!
//! ```no_run
//! use hidim::{detect, load_matrix, DetectConfig, MatrixFormat};
//!
//! let y = load_matrix("scan.bin".as_ref(), MatrixFormat::FlatBinary)?;
//! let report = detect(&y, &DetectConfig::default())?;
//! println!("{:?}", report.distance_outliers());
//! # Ok::<(), hidim::Error>(())
//! ```

pub mod distributions;
pub mod error;
pub mod leverage_detector;
pub mod matrix_io;
pub mod mcd_detector;
pub mod pca_reduce;
pub mod pipeline;
pub mod report;
pub mod robust_prep;
pub mod seeds;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};
pub use leverage_detector::{leverage, leverage_outliers, LeverageResult};
pub use matrix_io::{load_matrix, save_matrix, DataMatrix, MatrixFormat};
pub use mcd_detector::{calibrate, distance_outliers, fast_mcd, DistanceCalibration, McdFit};
pub use pca_reduce::{gram_svd, reduce, select_model_order, OrderBounds, ReducedBasis};
pub use pipeline::{detect, run, DetectConfig, Detection, Methods};
pub use report::{read_report, write_report, OutlierReport};
pub use robust_prep::{robust_scale, ScalingRecord};
