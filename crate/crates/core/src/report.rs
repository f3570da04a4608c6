//! The versioned JSON report and its per-time-point CSV companion.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mcd_detector::CalibrationSource;
use crate::pipeline::DetectConfig;

pub const REPORT_VERSION: u32 = 1;

/// JSON schema for [`OutlierReport`] documents.
pub const REPORT_SCHEMA: &str = include_str!("../schema/report.schema.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McdSummary {
    pub c: f64,
    pub m: f64,
    pub h: usize,
    pub p: usize,
    pub df1: f64,
    pub df2: f64,
    pub log_det: f64,
    pub exhaustive: bool,
    pub calibration: CalibrationSource,
    pub f_median: f64,
    /// Indices of the MCD subset, ascending.
    pub subset: Vec<usize>,
}

/// Per-time-point statistics and flags. Fields belonging to a method that was
/// not run are `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierReport {
    pub version: u32,
    #[serde(rename = "T")]
    pub t: usize,
    #[serde(rename = "V")]
    pub v: usize,
    #[serde(rename = "Q")]
    pub q: usize,
    pub leverage: Option<Vec<f64>>,
    pub leverage_median: Option<f64>,
    pub leverage_threshold: Option<f64>,
    pub leverage_flags: Option<Vec<bool>>,
    pub n_leverage_outliers: Option<usize>,
    /// Median-matched distances; `null` for members of the MCD subset.
    pub distance: Option<Vec<Option<f64>>>,
    pub distance_threshold: Option<f64>,
    pub distance_flags: Option<Vec<bool>>,
    pub n_distance_outliers: Option<usize>,
    pub mcd: Option<McdSummary>,
    pub dropped_cols: Vec<usize>,
    pub seed: u64,
    pub config_echo: DetectConfig,
}

impl OutlierReport {
    pub fn leverage_outliers(&self) -> Vec<usize> {
        flagged(self.leverage_flags.as_deref())
    }

    pub fn distance_outliers(&self) -> Vec<usize> {
        flagged(self.distance_flags.as_deref())
    }

    /// Checks the structural invariants: array lengths, flags only above
    /// thresholds, leverage in [0, 1] summing to Q.
    pub fn check(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Format(msg));
        if let Some(h) = &self.leverage {
            let flags = self.leverage_flags.as_deref().unwrap_or_default();
            let thr = self.leverage_threshold.unwrap_or(f64::NAN);
            if h.len() != self.t || flags.len() != self.t {
                return bad("leverage arrays do not have T entries".into());
            }
            if h.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
                return bad("leverage outside [0, 1]".into());
            }
            let sum: f64 = h.iter().sum();
            if (sum - self.q as f64).abs() > 1e-8 {
                return bad(format!("leverage sums to {sum}, expected Q = {}", self.q));
            }
            if h.iter().zip(flags).any(|(&x, &f)| f != (x > thr)) {
                return bad("leverage flag disagrees with threshold".into());
            }
            if self.n_leverage_outliers != Some(flags.iter().filter(|&&f| f).count()) {
                return bad("leverage outlier count mismatch".into());
            }
        }
        if let Some(d) = &self.distance {
            let flags = self.distance_flags.as_deref().unwrap_or_default();
            let thr = self.distance_threshold.unwrap_or(f64::NAN);
            if d.len() != self.t || flags.len() != self.t {
                return bad("distance arrays do not have T entries".into());
            }
            for (x, &f) in d.iter().zip(flags) {
                match x {
                    None if f => return bad("MCD subset member flagged".into()),
                    Some(v) if f && !(*v > thr) => {
                        return bad("distance flag below threshold".into())
                    }
                    _ => {}
                }
            }
            if self.n_distance_outliers != Some(flags.iter().filter(|&&f| f).count()) {
                return bad("distance outlier count mismatch".into());
            }
        }
        Ok(())
    }
}

fn flagged(flags: Option<&[bool]>) -> Vec<usize> {
    flags
        .unwrap_or_default()
        .iter()
        .enumerate()
        .filter(|(_, &f)| f)
        .map(|(i, _)| i)
        .collect()
}

/// Where the per-time-point CSV for a report at `path` goes: the same path
/// with a `.csv` extension, or `<name>.points.csv` if that would collide.
pub fn companion_csv_path(path: &Path) -> PathBuf {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("csv") => {
            let mut name = path.file_name().unwrap_or_default().to_os_string();
            name.push(".points.csv");
            path.with_file_name(name)
        }
        _ => path.with_extension("csv"),
    }
}

pub fn report_to_json(report: &OutlierReport) -> Result<String> {
    serde_json::to_string_pretty(report).map_err(|e| Error::Serialize(e.to_string()))
}

pub fn report_to_csv(report: &OutlierReport) -> String {
    let mut out = String::from("t,leverage,leverage_flag,distance,distance_flag,in_mcd_subset\n");
    let na = || "NA".to_string();
    let subset: Vec<bool> = match &report.mcd {
        Some(m) => {
            let mut mask = vec![false; report.t];
            for &i in &m.subset {
                mask[i] = true;
            }
            mask
        }
        None => Vec::new(),
    };
    for t in 0..report.t {
        let lev = report.leverage.as_ref().map_or_else(na, |h| format!("{:?}", h[t]));
        let lev_flag = report.leverage_flags.as_ref().map_or_else(na, |f| u8::from(f[t]).to_string());
        let dist = report
            .distance
            .as_ref()
            .and_then(|d| d[t])
            .map_or_else(na, |x| format!("{x:?}"));
        let dist_flag = report.distance_flags.as_ref().map_or_else(na, |f| u8::from(f[t]).to_string());
        let in_subset = subset.get(t).map_or_else(na, |&b| u8::from(b).to_string());
        out.push_str(&format!("{t},{lev},{lev_flag},{dist},{dist_flag},{in_subset}\n"));
    }
    out
}

/// Writes the JSON report to `path` and the per-time-point CSV next to it.
pub fn write_report(report: &OutlierReport, path: &Path) -> Result<()> {
    let json = report_to_json(report)?;
    fs::write(path, json).map_err(|e| Error::io(path, e))?;
    let csv_path = companion_csv_path(path);
    fs::write(&csv_path, report_to_csv(report)).map_err(|e| Error::io(&csv_path, e))
}

pub fn read_report(path: &Path) -> Result<OutlierReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("report json: {e}")))
}
