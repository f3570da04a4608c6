//! Robust scaling, PCA reduction and both detectors on one shared basis.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::leverage_detector::{leverage, leverage_outliers, LeverageResult, DEFAULT_ALPHA};
use crate::matrix_io::DataMatrix;
use crate::mcd_detector::{
    calibrate, default_h, distance_outliers, fast_mcd_with, DistanceCalibration, DistanceResult,
    McdFit, McdOptions, DEFAULT_GAMMA,
};
use crate::pca_reduce::{gram_svd, reduce, select_model_order, OrderBounds, ReducedBasis};
use crate::report::{McdSummary, OutlierReport, REPORT_VERSION};
use crate::robust_prep::{robust_scale, ScalingRecord};
use crate::seeds::derive_seed;

/// Rows needed beyond the lower model-order bound when distances are computed.
const MIN_ROWS_OVER_ORDER: usize = 5;

/// Rows needed for leverage alone.
const MIN_ROWS_LEVERAGE: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Methods {
    pub leverage: bool,
    pub distance: bool,
}

impl Default for Methods {
    fn default() -> Self {
        Methods { leverage: true, distance: true }
    }
}

impl FromStr for Methods {
    type Err = Error;

    /// Comma-separated subset of `leverage`, `distance`.
    fn from_str(s: &str) -> Result<Self> {
        let mut m = Methods { leverage: false, distance: false };
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part {
                "leverage" => m.leverage = true,
                "distance" => m.distance = true,
                other => return Err(Error::Config(format!("unknown method {other:?}"))),
            }
        }
        if !m.leverage && !m.distance {
            return Err(Error::Config("no detection method selected".into()));
        }
        Ok(m)
    }
}

impl fmt::Display for Methods {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.leverage, self.distance) {
            (true, true) => write!(f, "leverage,distance"),
            (true, false) => write!(f, "leverage"),
            (false, true) => write!(f, "distance"),
            (false, false) => write!(f, ""),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectConfig {
    /// Leverage multiplier on the median leverage.
    pub alpha: f64,
    /// Tail mass above the distance threshold.
    pub gamma: f64,
    pub order_bounds: OrderBounds,
    /// MCD subset size as a fraction of T; `None` uses ⌊(T + Q + 1) / 2⌋.
    pub h_ratio: Option<f64>,
    pub seed: u64,
    pub methods: Methods,
    pub mcd: McdOptions,
}

impl Default for DetectConfig {
    fn default() -> Self {
        DetectConfig {
            alpha: DEFAULT_ALPHA,
            gamma: DEFAULT_GAMMA,
            order_bounds: OrderBounds::default(),
            h_ratio: None,
            seed: 0,
            methods: Methods::default(),
            mcd: McdOptions::default(),
        }
    }
}

impl DetectConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 1.0) {
            return Err(Error::Config(format!("alpha must exceed 1, got {}", self.alpha)));
        }
        if !(self.gamma > 0.0 && self.gamma < 0.5) {
            return Err(Error::Config(format!("gamma must lie in (0, 0.5), got {}", self.gamma)));
        }
        self.order_bounds.validate()?;
        if let Some(r) = self.h_ratio {
            if !(r > 0.5 && r < 1.0) {
                return Err(Error::Config(format!("h ratio must lie in (0.5, 1), got {r}")));
            }
        }
        if !self.methods.leverage && !self.methods.distance {
            return Err(Error::Config("no detection method selected".into()));
        }
        if self.mcd.n_starts == 0 {
            return Err(Error::Config("MCD needs at least one random start".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct DistanceStage {
    pub fit: McdFit,
    pub calibration: DistanceCalibration,
    pub result: DistanceResult,
}

/// Every intermediate of one detection run.
#[derive(Debug, Clone)]
pub struct Detection {
    pub scaling: ScalingRecord,
    pub basis: ReducedBasis,
    pub leverage: Option<LeverageResult>,
    pub distance: Option<DistanceStage>,
    pub t: usize,
    pub v: usize,
    pub dropped_cols: Vec<usize>,
}

/// Distance calibrations keyed by `(n, p, h, gamma, seed)`. The calibration
/// depends on nothing else, so repeated runs on equally shaped data can share
/// it.
#[derive(Debug, Default)]
pub struct CalibrationCache {
    entries: Mutex<HashMap<(usize, usize, usize, u64, u64), DistanceCalibration>>,
}

impl CalibrationCache {
    fn get_or_compute(&self, n: usize, p: usize, h: usize, gamma: f64, seed: u64) -> Result<DistanceCalibration> {
        let key = (n, p, h, gamma.to_bits(), seed);
        if let Some(c) = self.entries.lock().unwrap_or_else(|e| e.into_inner()).get(&key) {
            return Ok(c.clone());
        }
        let cal = calibrate(n, p, h, gamma, seed)?;
        self.entries.lock().unwrap_or_else(|e| e.into_inner()).insert(key, cal.clone());
        Ok(cal)
    }
}

/// Runs the full pipeline and keeps the intermediates.
pub fn run(y: &DataMatrix, cfg: &DetectConfig) -> Result<Detection> {
    run_cached(y, cfg, &CalibrationCache::default())
}

/// [`run`] with calibrations shared through `cache`.
pub fn run_cached(y: &DataMatrix, cfg: &DetectConfig, cache: &CalibrationCache) -> Result<Detection> {
    cfg.validate()?;
    let t = y.rows();
    let min_rows = if cfg.methods.distance {
        cfg.order_bounds.lo + MIN_ROWS_OVER_ORDER
    } else {
        MIN_ROWS_LEVERAGE
    };
    if t < min_rows {
        return Err(Error::Dimension(format!(
            "{t} time points; at least {min_rows} needed for model order bounds ({}, {})",
            cfg.order_bounds.lo, cfg.order_bounds.hi
        )));
    }

    let (scaled, scaling) = robust_scale(y)?;
    let decomp = gram_svd(&scaled)?;
    let q = select_model_order(&decomp.eigenvalues, cfg.order_bounds)?;
    let basis = reduce(&decomp, q)?;

    let leverage = cfg.methods.leverage.then(|| leverage_outliers(&leverage(&basis), cfg.alpha));

    let distance = if cfg.methods.distance {
        let h = match cfg.h_ratio {
            Some(r) => (r * t as f64).floor() as usize,
            None => default_h(t, q),
        };
        let fit = fast_mcd_with(&basis.u, h, derive_seed(cfg.seed, &[1]), &cfg.mcd)?;
        let calibration = cache.get_or_compute(t, q, h, cfg.gamma, derive_seed(cfg.seed, &[2]))?;
        let result = distance_outliers(&basis.u, &fit, &calibration)?;
        Some(DistanceStage { fit, calibration, result })
    } else {
        None
    };

    Ok(Detection {
        scaling,
        basis,
        leverage,
        distance,
        t,
        v: y.source_cols(),
        dropped_cols: scaled.dropped_cols(),
    })
}

/// Runs the pipeline and summarizes it as a report.
pub fn detect(y: &DataMatrix, cfg: &DetectConfig) -> Result<OutlierReport> {
    Ok(run(y, cfg)?.to_report(cfg))
}

impl Detection {
    pub fn to_report(&self, cfg: &DetectConfig) -> OutlierReport {
        let lev = self.leverage.as_ref();
        let dist = self.distance.as_ref();
        OutlierReport {
            version: REPORT_VERSION,
            t: self.t,
            v: self.v,
            q: self.basis.q,
            leverage: lev.map(|l| l.h.clone()),
            leverage_median: lev.map(|l| l.median),
            leverage_threshold: lev.map(|l| l.threshold),
            leverage_flags: lev.map(|l| l.flags.clone()),
            n_leverage_outliers: lev.map(|l| l.flags.iter().filter(|&&f| f).count()),
            distance: dist.map(|d| {
                d.result
                    .transformed
                    .iter()
                    .zip(&d.result.in_subset)
                    .map(|(&x, &inside)| (!inside).then_some(x))
                    .collect()
            }),
            distance_threshold: dist.map(|d| d.result.threshold),
            distance_flags: dist.map(|d| d.result.flags.clone()),
            n_distance_outliers: dist.map(|d| d.result.flags.iter().filter(|&&f| f).count()),
            mcd: dist.map(|d| McdSummary {
                c: d.calibration.c,
                m: d.calibration.m,
                h: d.fit.h,
                p: d.fit.p,
                df1: d.calibration.df.0,
                df2: d.calibration.df.1,
                log_det: d.fit.log_det,
                exhaustive: d.fit.exhaustive,
                calibration: d.calibration.source,
                f_median: d.result.f_median,
                subset: d.fit.subset.clone(),
            }),
            dropped_cols: self.dropped_cols.clone(),
            seed: cfg.seed,
            config_echo: cfg.clone(),
        }
    }

    pub fn leverage_flags(&self) -> Option<&[bool]> {
        self.leverage.as_ref().map(|l| l.flags.as_slice())
    }

    pub fn distance_flags(&self) -> Option<&[bool]> {
        self.distance.as_ref().map(|d| d.result.flags.as_slice())
    }
}
