//! The simulation protocol: noise setups over an SNR grid, artifact
//! injection, scoring and bootstrap summaries.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::artifacts::{inject_banding, inject_ghosting, inject_motion, inject_spike, GHOST_WINDOW};
use super::phantom::{make_phantom, PhantomConfig, PhantomScan};
use super::score::{bootstrap_ci, score, Score};
use crate::error::{Error, Result};
use crate::matrix_io::DataMatrix;
use crate::pipeline::{run_cached, CalibrationCache, DetectConfig};
use crate::seeds::{derive_seed, rng_for};

/// Volumes hit by a spike, motion or banding artifact in one iteration.
pub const ARTIFACT_VOLUMES: usize = 10;

pub const DEFAULT_SNR_GRID: [f64; 9] = [0.025, 0.05, 0.075, 0.1, 0.2, 0.4, 0.6, 0.8, 1.0];
pub const DEFAULT_SCANS: [usize; 3] = [141, 171, 89];
pub const DEFAULT_ITERATIONS: usize = 1000;
pub const DEFAULT_BOOTSTRAP: usize = 1000;

/// Noise model of a simulated scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Setup {
    /// Baseline plus white noise.
    BaselineWhite,
    /// Baseline, functional signal and white noise.
    SignalWhite,
    /// Baseline, functional signal and structured noise.
    SignalStructured,
}

impl Setup {
    pub const ALL: [Setup; 3] = [Setup::BaselineWhite, Setup::SignalWhite, Setup::SignalStructured];

    pub fn number(self) -> u8 {
        match self {
            Setup::BaselineWhite => 1,
            Setup::SignalWhite => 2,
            Setup::SignalStructured => 3,
        }
    }

    fn has_signal(self) -> bool {
        self != Setup::BaselineWhite
    }
}

impl From<Setup> for u8 {
    fn from(s: Setup) -> u8 {
        s.number()
    }
}

impl TryFrom<u8> for Setup {
    type Error = Error;

    fn try_from(n: u8) -> Result<Self> {
        match n {
            1 => Ok(Setup::BaselineWhite),
            2 => Ok(Setup::SignalWhite),
            3 => Ok(Setup::SignalStructured),
            _ => Err(Error::Config(format!("setup must be 1, 2 or 3, got {n}"))),
        }
    }
}

impl FromStr for Setup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let n: u8 = s.trim().parse().map_err(|_| Error::Config(format!("bad setup {s:?}")))?;
        Setup::try_from(n)
    }
}

impl fmt::Display for Setup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArtifactKind {
    None,
    Spike,
    Motion,
    Banding,
    Ghosting,
}

impl ArtifactKind {
    pub const ALL: [ArtifactKind; 5] = [
        ArtifactKind::None,
        ArtifactKind::Spike,
        ArtifactKind::Motion,
        ArtifactKind::Banding,
        ArtifactKind::Ghosting,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ArtifactKind::None => "none",
            ArtifactKind::Spike => "spike",
            ArtifactKind::Motion => "motion",
            ArtifactKind::Banding => "banding",
            ArtifactKind::Ghosting => "ghosting",
        }
    }

    fn code(self) -> u64 {
        self as u64
    }
}

impl FromStr for ArtifactKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ArtifactKind::ALL
            .into_iter()
            .find(|a| a.name() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown artifact {s:?}")))
    }
}

impl fmt::Display for ArtifactKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Uniform draw ranges for artifact intensities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArtifactRanges {
    /// Fractional intensity increase.
    pub spike: (f64, f64),
    /// Rotation angle in degrees.
    pub motion: (f64, f64),
    /// k-space multiplication factor.
    pub banding: (f64, f64),
    /// Mean ghost intensity over mean scan intensity.
    pub ghosting: (f64, f64),
}

impl Default for ArtifactRanges {
    fn default() -> Self {
        ArtifactRanges {
            spike: (0.01, 0.10),
            motion: (1.0, 5.0),
            banding: (50.0, 200.0),
            ghosting: (0.06, 0.32),
        }
    }
}

impl ArtifactRanges {
    fn range(&self, kind: ArtifactKind) -> (f64, f64) {
        match kind {
            ArtifactKind::None => (0.0, 0.0),
            ArtifactKind::Spike => self.spike,
            ArtifactKind::Motion => self.motion,
            ArtifactKind::Banding => self.banding,
            ArtifactKind::Ghosting => self.ghosting,
        }
    }

    fn validate(&self) -> Result<()> {
        let within = |(lo, hi): (f64, f64), min: f64, max: f64| min <= lo && lo <= hi && hi <= max;
        let ok = within(self.spike, 0.0, 0.10)
            && within(self.motion, 0.0, 5.0)
            && within(self.banding, 1.0, 200.0)
            && within(self.ghosting, 0.0, 0.32);
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("artifact ranges out of bounds: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Scan lengths T, one phantom each.
    pub scans: Vec<usize>,
    pub setups: Vec<Setup>,
    pub artifacts: Vec<ArtifactKind>,
    pub iterations: usize,
    /// Target SNRs for artifact-free runs. Artifact runs use the phantom's
    /// own signal-to-structured-noise ratio.
    pub snr_grid: Vec<f64>,
    pub ranges: ArtifactRanges,
    pub bootstrap_resamples: usize,
    pub phantom: PhantomConfig,
    pub detect: DetectConfig,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            scans: DEFAULT_SCANS.to_vec(),
            setups: Setup::ALL.to_vec(),
            artifacts: ArtifactKind::ALL.to_vec(),
            iterations: DEFAULT_ITERATIONS,
            snr_grid: DEFAULT_SNR_GRID.to_vec(),
            ranges: ArtifactRanges::default(),
            bootstrap_resamples: DEFAULT_BOOTSTRAP,
            phantom: PhantomConfig::default(),
            detect: DetectConfig::default(),
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("at least one iteration is required".into()));
        }
        if self.scans.is_empty() || self.setups.is_empty() || self.artifacts.is_empty() {
            return Err(Error::Config("scans, setups and artifacts must be non-empty".into()));
        }
        if self.artifacts.contains(&ArtifactKind::None) && self.snr_grid.is_empty() {
            return Err(Error::Config("artifact-free runs need a non-empty SNR grid".into()));
        }
        if let Some(l) = self.snr_grid.iter().find(|&&l| !(l > 0.0 && l.is_finite())) {
            return Err(Error::Config(format!("SNR values must be positive, got {l}")));
        }
        if let Some(&t) = self.scans.iter().find(|&&t| t < GHOST_WINDOW.max(ARTIFACT_VOLUMES) + 1) {
            return Err(Error::Config(format!("scan length {t} too short for artifact injection")));
        }
        self.ranges.validate()?;
        self.detect.validate()
    }
}

/// Noise to add to `B (+ X)` for `setup` at target SNR `lambda`.
pub fn scale_noise<R: Rng + ?Sized>(
    phantom: &PhantomScan,
    setup: Setup,
    lambda: f64,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Config(format!("SNR must be positive, got {lambda}")));
    }
    let signal_var = phantom.signal_variance();
    if !(signal_var > 0.0) {
        return Err(Error::Config("phantom has no signal variance".into()));
    }
    match setup {
        Setup::BaselineWhite | Setup::SignalWhite => {
            let sd = (signal_var / lambda).sqrt();
            Ok(DMatrix::from_fn(phantom.t(), phantom.v(), |_, _| {
                let z: f64 = StandardNormal.sample(rng);
                sd * z
            }))
        }
        Setup::SignalStructured => {
            let scale = (phantom.baseline_snr() / lambda).sqrt();
            Ok(&phantom.structured_noise * scale)
        }
    }
}

/// One (scan, setup, artifact, SNR) combination.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Cell {
    scan: usize,
    setup: Setup,
    artifact: ArtifactKind,
    lambda_index: usize,
    lambda: f64,
}

impl Cell {
    /// Artifact-free structured-noise data does not change across iterations.
    fn is_fixed(&self) -> bool {
        self.setup == Setup::SignalStructured && self.artifact == ArtifactKind::None
    }

    fn seed_path(&self, t: usize) -> [u64; 4] {
        [t as u64, u64::from(self.setup.number()), self.artifact.code(), self.lambda_index as u64]
    }
}

/// Scores of both methods for one simulated scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationScores {
    pub leverage: Option<Score>,
    pub distance: Option<Score>,
}

/// A simulated scan with its ground truth.
#[derive(Debug, Clone)]
pub struct SimulatedScan {
    pub data: DMatrix<f64>,
    pub truth: Vec<usize>,
    pub intensity: f64,
}

/// Builds one scan: `B (+ X) + noise` with the artifact injected.
pub fn simulate_scan<R: Rng + ?Sized>(
    phantom: &PhantomScan,
    setup: Setup,
    lambda: f64,
    artifact: ArtifactKind,
    ranges: &ArtifactRanges,
    rng: &mut R,
) -> Result<SimulatedScan> {
    let mut data = scale_noise(phantom, setup, lambda, rng)?;
    if setup.has_signal() {
        data += &phantom.signal;
    }
    for mut row in data.row_iter_mut() {
        for (x, b) in row.iter_mut().zip(&phantom.baseline) {
            *x += b;
        }
    }

    let t = phantom.t();
    let (lo, hi) = ranges.range(artifact);
    let intensity = if artifact == ArtifactKind::None { 0.0 } else { rng.random_range(lo..=hi) };
    let geom = &phantom.geometry;
    let truth: Vec<usize> = match artifact {
        ArtifactKind::None => Vec::new(),
        ArtifactKind::Ghosting => {
            let start = rng.random_range(0..=t - GHOST_WINDOW);
            inject_ghosting(&mut data, geom, &phantom.baseline, start, intensity)?;
            (start..start + GHOST_WINDOW).collect()
        }
        _ => {
            let mut idx = sample(rng, t, ARTIFACT_VOLUMES).into_vec();
            idx.sort_unstable();
            for &i in &idx {
                match artifact {
                    ArtifactKind::Spike => inject_spike(&mut data, i, intensity)?,
                    ArtifactKind::Motion => inject_motion(&mut data, geom, i, intensity)?,
                    _ => inject_banding(&mut data, geom, i, intensity)?,
                }
            }
            idx
        }
    };
    Ok(SimulatedScan { data, truth, intensity })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: String,
    pub setup: Setup,
    pub artifact: ArtifactKind,
    pub scan_t: usize,
    pub lambda: f64,
    pub metric: String,
    /// `None` when the metric is undefined for every iteration.
    pub mean: Option<f64>,
    pub ci_lo: Option<f64>,
    pub ci_hi: Option<f64>,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanInfo {
    pub t: usize,
    pub v: usize,
    pub baseline_snr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub config: ExperimentConfig,
    pub scans: Vec<ScanInfo>,
    pub rows: Vec<SummaryRow>,
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentSummary> {
    cfg.validate()?;
    let phantoms: Vec<PhantomScan> = cfg
        .scans
        .par_iter()
        .map(|&t| make_phantom(derive_seed(cfg.seed, &[0, t as u64]), t, &cfg.phantom))
        .collect::<Result<_>>()?;

    let mut cells = Vec::new();
    for (scan, ph) in phantoms.iter().enumerate() {
        for &setup in &cfg.setups {
            for &artifact in &cfg.artifacts {
                if artifact == ArtifactKind::None {
                    for (lambda_index, &lambda) in cfg.snr_grid.iter().enumerate() {
                        cells.push(Cell { scan, setup, artifact, lambda_index, lambda });
                    }
                } else {
                    let lambda = ph.baseline_snr();
                    cells.push(Cell { scan, setup, artifact, lambda_index: 0, lambda });
                }
            }
        }
    }

    let tasks: Vec<(usize, usize)> = cells
        .iter()
        .enumerate()
        .flat_map(|(c, cell)| {
            let n = if cell.is_fixed() { 1 } else { cfg.iterations };
            (0..n).map(move |i| (c, i))
        })
        .collect();

    let cache = CalibrationCache::default();
    let outcomes: Vec<IterationScores> = tasks
        .par_iter()
        .map(|&(c, iteration)| {
            let cell = &cells[c];
            let ph = &phantoms[cell.scan];
            let mut path = cell.seed_path(ph.t()).to_vec();
            path.push(iteration as u64);
            let mut rng = rng_for(cfg.seed, &[&[1], path.as_slice()].concat());
            let scan =
                simulate_scan(ph, cell.setup, cell.lambda, cell.artifact, &cfg.ranges, &mut rng)?;
            let detection = run_cached(&DataMatrix::new(scan.data)?, &cfg.detect, &cache)?;
            Ok(IterationScores {
                leverage: detection.leverage_flags().map(|f| score(f, &scan.truth)).transpose()?,
                distance: detection.distance_flags().map(|f| score(f, &scan.truth)).transpose()?,
            })
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut offset = 0;
    for cell in &cells {
        let n = if cell.is_fixed() { 1 } else { cfg.iterations };
        let per_cell = &outcomes[offset..offset + n];
        offset += n;
        let ph = &phantoms[cell.scan];
        let methods: [(&str, fn(&IterationScores) -> Option<Score>); 2] =
            [("leverage", |s| s.leverage), ("distance", |s| s.distance)];
        for (m, (method, pick)) in methods.iter().enumerate() {
            if per_cell.iter().all(|s| pick(s).is_none()) {
                continue;
            }
            let metrics: [(&str, fn(&Score) -> Option<f64>); 2] =
                [("sensitivity", |s| s.sensitivity), ("specificity", |s| s.specificity)];
            for (k, (metric, get)) in metrics.iter().enumerate() {
                let mut values: Vec<f64> =
                    per_cell.iter().filter_map(|s| pick(s).as_ref().and_then(get)).collect();
                if cell.is_fixed() && !values.is_empty() {
                    values = vec![values[0]; cfg.iterations];
                }
                let mut path = cell.seed_path(ph.t()).to_vec();
                path.extend([m as u64, k as u64]);
                let mut rng = rng_for(cfg.seed, &[&[2], path.as_slice()].concat());
                let ci = bootstrap_ci(&values, cfg.bootstrap_resamples, &mut rng);
                rows.push(SummaryRow {
                    method: method.to_string(),
                    setup: cell.setup,
                    artifact: cell.artifact,
                    scan_t: ph.t(),
                    lambda: cell.lambda,
                    metric: metric.to_string(),
                    mean: ci.map(|c| c.mean),
                    ci_lo: ci.map(|c| c.lo),
                    ci_hi: ci.map(|c| c.hi),
                    n: values.len(),
                });
            }
        }
    }

    let scans = phantoms
        .iter()
        .map(|p| ScanInfo { t: p.t(), v: p.v(), baseline_snr: p.baseline_snr() })
        .collect();
    Ok(ExperimentSummary { config: cfg.clone(), scans, rows })
}

pub fn summary_to_csv(summary: &ExperimentSummary) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let ser = |e: csv::Error| Error::Serialize(e.to_string());
    w.write_record(["method", "setup", "artifact", "scan_T", "lambda", "metric", "mean", "ci_lo", "ci_hi"])
        .map_err(ser)?;
    let num = |x: Option<f64>| x.map_or_else(|| "NA".to_string(), |v| format!("{v:?}"));
    for r in &summary.rows {
        w.write_record([
            r.method.clone(),
            r.setup.to_string(),
            r.artifact.to_string(),
            r.scan_t.to_string(),
            format!("{:?}", r.lambda),
            r.metric.clone(),
            num(r.mean),
            num(r.ci_lo),
            num(r.ci_hi),
        ])
        .map_err(ser)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Serialize(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Serialize(e.to_string()))
}

pub fn summary_to_json(summary: &ExperimentSummary) -> Result<String> {
    serde_json::to_string_pretty(summary).map_err(|e| Error::Serialize(e.to_string()))
}

/// Writes `<stem>.csv` and `<stem>.json` under `dir`.
pub fn write_summary(summary: &ExperimentSummary, dir: &Path, stem: &str) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let csv_path = dir.join(format!("{stem}.csv"));
    fs::write(&csv_path, summary_to_csv(summary)?).map_err(|e| Error::io(&csv_path, e))?;
    let json_path = dir.join(format!("{stem}.json"));
    fs::write(&json_path, summary_to_json(summary)?).map_err(|e| Error::io(&json_path, e))
}
