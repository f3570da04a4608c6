//! Synthetic single-slice scans: anatomy, functional signal and structured noise.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeds::rng_for;
use crate::stats::variance;

/// Pixel grid plus the in-mask pixels that become the matrix columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub rows: usize,
    pub cols: usize,
    /// Row-major grid indices of in-mask pixels, ascending.
    pub voxels: Vec<usize>,
    /// Row-major mask over the full grid.
    pub mask: Vec<bool>,
}

impl Geometry {
    /// Elliptical mask centred on the grid.
    pub fn ellipse(rows: usize, cols: usize, semi_rows: f64, semi_cols: f64) -> Self {
        let (cr, cc) = center(rows, cols);
        let mut mask = vec![false; rows * cols];
        let mut voxels = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let dr = (r as f64 - cr) / semi_rows;
                let dc = (c as f64 - cc) / semi_cols;
                if dr * dr + dc * dc <= 1.0 {
                    mask[r * cols + c] = true;
                    voxels.push(r * cols + c);
                }
            }
        }
        Geometry { rows, cols, voxels, mask }
    }

    /// Every pixel of the grid in the mask.
    pub fn full(rows: usize, cols: usize) -> Self {
        Geometry {
            rows,
            cols,
            voxels: (0..rows * cols).collect(),
            mask: vec![true; rows * cols],
        }
    }

    pub fn n_voxels(&self) -> usize {
        self.voxels.len()
    }

    pub fn center(&self) -> (f64, f64) {
        center(self.rows, self.cols)
    }

    /// Full-grid image from masked values; zero outside the mask.
    pub fn to_image(&self, values: impl IntoIterator<Item = f64>) -> Vec<f64> {
        let mut img = vec![0.0; self.rows * self.cols];
        for (&k, v) in self.voxels.iter().zip(values) {
            img[k] = v;
        }
        img
    }

    pub fn from_image(&self, img: &[f64]) -> Vec<f64> {
        self.voxels.iter().map(|&k| img[k]).collect()
    }
}

fn center(rows: usize, cols: usize) -> (f64, f64) {
    ((rows as f64 - 1.0) / 2.0, (cols as f64 - 1.0) / 2.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomConfig {
    pub grid: (usize, usize),
    /// Number of spatial maps / time courses in the functional signal.
    pub n_components: usize,
    /// Semi-axes of the elliptical mask as fractions of the grid size.
    pub mask_semi_axes: (f64, f64),
    pub baseline_center: f64,
    pub baseline_edge: f64,
    pub signal_amplitude: f64,
    pub noise_amplitude: f64,
    pub ar_coefficient: f64,
    /// Spatial smoothing of the structured noise, in pixels.
    pub noise_fwhm: f64,
    /// Range of blob widths (Gaussian sigma, pixels) for the spatial maps.
    pub blob_sigma: (f64, f64),
}

impl Default for PhantomConfig {
    fn default() -> Self {
        PhantomConfig {
            grid: (64, 64),
            n_components: 6,
            mask_semi_axes: (0.48, 0.46),
            baseline_center: 1000.0,
            baseline_edge: 500.0,
            signal_amplitude: 10.0,
            noise_amplitude: 8.0,
            ar_coefficient: 0.3,
            noise_fwhm: 3.0,
            blob_sigma: (3.0, 7.0),
        }
    }
}

/// Synthetic scan: `B + A S + E` restricted to the mask.
#[derive(Debug, Clone)]
pub struct PhantomScan {
    pub geometry: Geometry,
    /// One row of the baseline B; every time point shares it.
    pub baseline: Vec<f64>,
    /// A: T×K time courses, each column centred.
    pub time_courses: DMatrix<f64>,
    /// S: K×V spatial maps.
    pub maps: DMatrix<f64>,
    /// X = amplitude · A S.
    pub signal: DMatrix<f64>,
    /// E: T×V structured noise.
    pub structured_noise: DMatrix<f64>,
}

impl PhantomScan {
    pub fn t(&self) -> usize {
        self.signal.nrows()
    }

    pub fn v(&self) -> usize {
        self.geometry.n_voxels()
    }

    /// B as a T×V matrix of identical rows.
    pub fn baseline_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.t(), self.v(), |_, j| self.baseline[j])
    }

    /// Voxel-averaged temporal variance of the signal.
    pub fn signal_variance(&self) -> f64 {
        mean_column_variance(&self.signal)
    }

    pub fn noise_variance(&self) -> f64 {
        mean_column_variance(&self.structured_noise)
    }

    /// Ratio of signal variance to structured-noise variance.
    pub fn baseline_snr(&self) -> f64 {
        self.signal_variance() / self.noise_variance()
    }
}

/// Average over columns of the unbiased temporal variance.
pub fn mean_column_variance(m: &DMatrix<f64>) -> f64 {
    let v = m.ncols();
    m.column_iter().map(|c| variance(c.as_slice())).sum::<f64>() / v as f64
}

pub fn make_phantom(seed: u64, t: usize, cfg: &PhantomConfig) -> Result<PhantomScan> {
    if t < 20 {
        return Err(Error::Config(format!("phantom needs at least 20 time points, got {t}")));
    }
    let (rows, cols) = cfg.grid;
    let geometry = Geometry::ellipse(
        rows,
        cols,
        cfg.mask_semi_axes.0 * rows as f64,
        cfg.mask_semi_axes.1 * cols as f64,
    );
    let v = geometry.n_voxels();
    let (cr, cc) = geometry.center();
    let (sr, sc) = (cfg.mask_semi_axes.0 * rows as f64, cfg.mask_semi_axes.1 * cols as f64);

    let baseline: Vec<f64> = geometry
        .voxels
        .iter()
        .map(|&k| {
            let (r, c) = ((k / cols) as f64, (k % cols) as f64);
            let rho2 = ((r - cr) / sr).powi(2) + ((c - cc) / sc).powi(2);
            cfg.baseline_center + (cfg.baseline_edge - cfg.baseline_center) * rho2
        })
        .collect();

    let mut map_rng = rng_for(seed, &[1]);
    let mut maps = DMatrix::zeros(cfg.n_components, v);
    for q in 0..cfg.n_components {
        let centre = geometry.voxels[map_rng.random_range(0..v)];
        let (br, bc) = ((centre / cols) as f64, (centre % cols) as f64);
        let sigma = map_rng.random_range(cfg.blob_sigma.0..=cfg.blob_sigma.1);
        for (j, &k) in geometry.voxels.iter().enumerate() {
            let (r, c) = ((k / cols) as f64, (k % cols) as f64);
            let d2 = (r - br).powi(2) + (c - bc).powi(2);
            maps[(q, j)] = (-d2 / (2.0 * sigma * sigma)).exp();
        }
    }

    let mut course_rng = rng_for(seed, &[2]);
    let mut time_courses = DMatrix::zeros(t, cfg.n_components);
    for q in 0..cfg.n_components {
        let series = ar1_series(&mut course_rng, t, cfg.ar_coefficient);
        let m = series.iter().sum::<f64>() / t as f64;
        for (i, x) in series.iter().enumerate() {
            time_courses[(i, q)] = x - m;
        }
    }
    let signal = (&time_courses * &maps) * cfg.signal_amplitude;

    let mut noise_rng = rng_for(seed, &[3]);
    let structured_noise = structured_noise(&mut noise_rng, t, &geometry, cfg);

    Ok(PhantomScan { geometry, baseline, time_courses, maps, signal, structured_noise })
}

/// Stationary unit-variance AR(1) series.
fn ar1_series(rng: &mut ChaCha8Rng, t: usize, phi: f64) -> Vec<f64> {
    let innov = (1.0 - phi * phi).sqrt();
    let mut out = Vec::with_capacity(t);
    let mut x: f64 = StandardNormal.sample(rng);
    out.push(x);
    for _ in 1..t {
        let e: f64 = StandardNormal.sample(rng);
        x = phi * x + innov * e;
        out.push(x);
    }
    out
}

/// White noise smoothed on the full grid, rescaled to unit variance, AR(1)
/// in time, masked and multiplied by the configured amplitude.
fn structured_noise(rng: &mut ChaCha8Rng, t: usize, geom: &Geometry, cfg: &PhantomConfig) -> DMatrix<f64> {
    let sigma = cfg.noise_fwhm / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt());
    let kernel = gaussian_kernel(sigma);
    // Interior variance of the smoothed field is (sum k^2)^2 for the separable kernel.
    let gain = kernel.iter().map(|k| k * k).sum::<f64>();
    let unit = 1.0 / gain;

    let phi = cfg.ar_coefficient;
    let innov = (1.0 - phi * phi).sqrt();
    let n_pix = geom.rows * geom.cols;
    let mut prev: Option<Vec<f64>> = None;
    let mut out = DMatrix::zeros(t, geom.n_voxels());
    for i in 0..t {
        let white: Vec<f64> = (0..n_pix).map(|_| StandardNormal.sample(rng)).collect();
        let mut field = smooth_separable(&white, geom.rows, geom.cols, &kernel);
        for x in &mut field {
            *x *= unit;
        }
        let current = match prev {
            None => field,
            Some(p) => p.iter().zip(&field).map(|(a, b)| phi * a + innov * b).collect(),
        };
        for (j, &k) in geom.voxels.iter().enumerate() {
            out[(i, j)] = cfg.noise_amplitude * current[k];
        }
        prev = Some(current);
    }
    out
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let half = (4.0 * sigma).ceil() as i64;
    let raw: Vec<f64> =
        (-half..=half).map(|d| (-(d * d) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|k| k / total).collect()
}

/// Separable convolution with zero padding.
fn smooth_separable(img: &[f64], rows: usize, cols: usize, kernel: &[f64]) -> Vec<f64> {
    let half = (kernel.len() / 2) as i64;
    let mut tmp = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            let mut acc = 0.0;
            for (o, k) in kernel.iter().enumerate() {
                let cc = c as i64 + o as i64 - half;
                if cc >= 0 && (cc as usize) < cols {
                    acc += k * img[r * cols + cc as usize];
                }
            }
            tmp[r * cols + c] = acc;
        }
    }
    let mut out = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            let mut acc = 0.0;
            for (o, k) in kernel.iter().enumerate() {
                let rr = r as i64 + o as i64 - half;
                if rr >= 0 && (rr as usize) < rows {
                    acc += k * tmp[rr as usize * cols + c];
                }
            }
            out[r * cols + c] = acc;
        }
    }
    out
}
