//! Artifact injectors. Each one edits the target volume(s) of a T×V scan in
//! place and leaves every other row untouched.

use nalgebra::DMatrix;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::phantom::Geometry;
use crate::error::{Error, Result};

/// k-space location altered by the banding artifact (origin at the DC term).
pub const BANDING_LOCATION: (usize, usize) = (15, 15);
/// Volumes covered by one ghosting event.
pub const GHOST_WINDOW: usize = 9;
/// Ghost translation per volume, in pixels.
pub const GHOST_STEP: usize = 2;
/// Largest tolerated imaginary part after the inverse transform.
const BANDING_IMAG_TOLERANCE: f64 = 1e-9;

fn check_row(scan: &DMatrix<f64>, t: usize) -> Result<()> {
    if t >= scan.nrows() {
        return Err(Error::Artifact(format!("volume {t} outside 0..{}", scan.nrows())));
    }
    Ok(())
}

fn write_row(scan: &mut DMatrix<f64>, t: usize, values: &[f64]) {
    for (j, &x) in values.iter().enumerate() {
        scan[(t, j)] = x;
    }
}

/// Multiplies volume `t` by `1 + pct`.
pub fn inject_spike(scan: &mut DMatrix<f64>, t: usize, pct: f64) -> Result<()> {
    check_row(scan, t)?;
    if !(0.0..=0.10).contains(&pct) {
        return Err(Error::Artifact(format!("spike increase {pct} outside [0, 0.10]")));
    }
    let mut row = scan.row_mut(t);
    row *= 1.0 + pct;
    Ok(())
}

/// Rotates volume `t` by `angle_deg` about the grid centre with bilinear
/// interpolation. Pixels outside the mask read as zero and the result is
/// masked again.
pub fn inject_motion(scan: &mut DMatrix<f64>, geom: &Geometry, t: usize, angle_deg: f64) -> Result<()> {
    check_row(scan, t)?;
    if !(0.0..=5.0).contains(&angle_deg) {
        return Err(Error::Artifact(format!("rotation {angle_deg} degrees outside [0, 5]")));
    }
    if angle_deg == 0.0 {
        return Ok(());
    }
    let img = geom.to_image(scan.row(t).iter().copied());
    let rotated = rotate_image(&img, geom.rows, geom.cols, angle_deg.to_radians());
    write_row(scan, t, &geom.from_image(&rotated));
    Ok(())
}

pub(crate) fn rotate_image(img: &[f64], rows: usize, cols: usize, theta: f64) -> Vec<f64> {
    let (cr, cc) = ((rows as f64 - 1.0) / 2.0, (cols as f64 - 1.0) / 2.0);
    let (s, c) = theta.sin_cos();
    let at = |r: i64, col: i64| -> f64 {
        if r < 0 || col < 0 || r as usize >= rows || col as usize >= cols {
            0.0
        } else {
            img[r as usize * cols + col as usize]
        }
    };
    let mut out = vec![0.0; rows * cols];
    for r in 0..rows {
        for col in 0..cols {
            // inverse map: output pixel comes from the source rotated by -theta
            let (dy, dx) = (r as f64 - cr, col as f64 - cc);
            let sy = c * dy + s * dx + cr;
            let sx = -s * dy + c * dx + cc;
            let (y0, x0) = (sy.floor(), sx.floor());
            let (fy, fx) = (sy - y0, sx - x0);
            let (y0, x0) = (y0 as i64, x0 as i64);
            out[r * cols + col] = (1.0 - fy) * (1.0 - fx) * at(y0, x0)
                + (1.0 - fy) * fx * at(y0, x0 + 1)
                + fy * (1.0 - fx) * at(y0 + 1, x0)
                + fy * fx * at(y0 + 1, x0 + 1);
        }
    }
    out
}

/// Scales the k-space coefficient at [`BANDING_LOCATION`] and its
/// conjugate-symmetric partner by `factor`, keeping the volume real.
pub fn inject_banding(scan: &mut DMatrix<f64>, geom: &Geometry, t: usize, factor: f64) -> Result<()> {
    check_row(scan, t)?;
    if !(1.0..=200.0).contains(&factor) {
        return Err(Error::Artifact(format!("banding factor {factor} outside [1, 200]")));
    }
    let img = geom.to_image(scan.row(t).iter().copied());
    let banded = band_image(&img, geom.rows, geom.cols, BANDING_LOCATION, factor)?;
    write_row(scan, t, &geom.from_image(&banded));
    Ok(())
}

pub(crate) fn band_image(
    img: &[f64],
    rows: usize,
    cols: usize,
    location: (usize, usize),
    factor: f64,
) -> Result<Vec<f64>> {
    let mut buf: Vec<Complex<f64>> = img.iter().map(|&x| Complex::new(x, 0.0)).collect();
    fft2(&mut buf, rows, cols, false);
    let (kr, kc) = (location.0 % rows, location.1 % cols);
    let (pr, pc) = ((rows - kr) % rows, (cols - kc) % cols);
    buf[kr * cols + kc] *= factor;
    if (pr, pc) != (kr, kc) {
        buf[pr * cols + pc] *= factor;
    }
    fft2(&mut buf, rows, cols, true);
    let norm = 1.0 / (rows * cols) as f64;
    let mut out = Vec::with_capacity(buf.len());
    let mut max_imag: f64 = 0.0;
    for z in &buf {
        max_imag = max_imag.max((z.im * norm).abs());
        out.push(z.re * norm);
    }
    if max_imag >= BANDING_IMAG_TOLERANCE {
        return Err(Error::Artifact(format!("inverse transform left imaginary part {max_imag:e}")));
    }
    Ok(out)
}

/// Unnormalized 2-D DFT over a row-major grid.
fn fft2(buf: &mut [Complex<f64>], rows: usize, cols: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let (row_fft, col_fft) = if inverse {
        (planner.plan_fft_inverse(cols), planner.plan_fft_inverse(rows))
    } else {
        (planner.plan_fft_forward(cols), planner.plan_fft_forward(rows))
    };
    for row in buf.chunks_exact_mut(cols) {
        row_fft.process(row);
    }
    let mut column = vec![Complex::new(0.0, 0.0); rows];
    for c in 0..cols {
        for r in 0..rows {
            column[r] = buf[r * cols + c];
        }
        col_fft.process(&mut column);
        for r in 0..rows {
            buf[r * cols + c] = column[r];
        }
    }
}

/// Adds a ghost of `source` (in-mask values, usually the baseline anatomy)
/// to volumes `t_start .. t_start + 9`. The ghost is the source shifted by
/// half the grid along the rows and a further 2 pixels per volume, wrapped
/// around the grid, masked, and scaled so its in-mask mean is
/// `intensity_ratio` times the in-mask mean of the volume it lands on.
pub fn inject_ghosting(
    scan: &mut DMatrix<f64>,
    geom: &Geometry,
    source: &[f64],
    t_start: usize,
    intensity_ratio: f64,
) -> Result<()> {
    if t_start + GHOST_WINDOW > scan.nrows() {
        return Err(Error::Artifact(format!(
            "ghost window {t_start}..{} exceeds {} volumes",
            t_start + GHOST_WINDOW,
            scan.nrows()
        )));
    }
    if !(0.0..=0.32).contains(&intensity_ratio) {
        return Err(Error::Artifact(format!("ghost ratio {intensity_ratio} outside [0, 0.32]")));
    }
    if intensity_ratio == 0.0 {
        return Ok(());
    }
    let img = geom.to_image(source.iter().copied());
    for k in 0..GHOST_WINDOW {
        let t = t_start + k;
        let shift = geom.rows / 2 + GHOST_STEP * k;
        let ghost = geom.from_image(&shift_rows(&img, geom.rows, geom.cols, shift));
        let ghost_mean = ghost.iter().sum::<f64>() / ghost.len() as f64;
        if ghost_mean.abs() <= f64::MIN_POSITIVE {
            return Err(Error::Artifact("ghost does not overlap the mask".into()));
        }
        let row = scan.row(t);
        let scan_mean = row.iter().sum::<f64>() / row.len() as f64;
        let scale = intensity_ratio * scan_mean / ghost_mean;
        for (j, g) in ghost.iter().enumerate() {
            scan[(t, j)] += scale * g;
        }
    }
    Ok(())
}

fn shift_rows(img: &[f64], rows: usize, cols: usize, shift: usize) -> Vec<f64> {
    let mut out = vec![0.0; rows * cols];
    for r in 0..rows {
        let dest = (r + shift) % rows;
        out[dest * cols..(dest + 1) * cols].copy_from_slice(&img[r * cols..(r + 1) * cols]);
    }
    out
}
