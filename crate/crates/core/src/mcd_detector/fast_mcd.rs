//! Minimum covariance determinant by exhaustive search or FastMCD.

use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernels::{gram, solve_lower_transposed_right};
use crate::error::{Error, Result};
use crate::stats::cmp_by_value_then_index;

static CSTEP_CHECKS: AtomicU64 = AtomicU64::new(0);
static CSTEP_VIOLATIONS: AtomicU64 = AtomicU64::new(0);

/// Relative slack on log-determinants when checking that a C-step did not
/// increase the determinant; covers rounding only.
const CSTEP_LOGDET_SLACK: f64 = 1e-10;

/// Pivot floor for declaring a scatter matrix singular, relative to its
/// largest diagonal entry.
const SINGULAR_PIVOT_RATIO: f64 = 1e-12;

/// Number of h-to-h concentration steps checked for monotonicity in this process.
pub fn cstep_checks() -> u64 {
    CSTEP_CHECKS.load(Ordering::Relaxed)
}

/// Number of concentration steps that increased the determinant. Always zero
/// unless something is badly wrong.
pub fn cstep_violations() -> u64 {
    CSTEP_VIOLATIONS.load(Ordering::Relaxed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McdOptions {
    pub n_starts: usize,
    pub initial_csteps: usize,
    pub n_best: usize,
    pub max_csteps: usize,
    /// Convergence threshold on the relative determinant change.
    pub tolerance: f64,
    /// Enumerate all h-subsets when there are at most this many.
    pub exhaustive_limit: u64,
}

impl Default for McdOptions {
    fn default() -> Self {
        McdOptions {
            n_starts: 500,
            initial_csteps: 2,
            n_best: 10,
            max_csteps: 100,
            tolerance: 1e-12,
            exhaustive_limit: 10_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct McdFit {
    /// Selected observations (N*), ascending.
    pub subset: Vec<usize>,
    /// The remaining observations (N⁻), ascending.
    pub complement: Vec<usize>,
    pub location: DVector<f64>,
    /// Covariance of the subset with divisor h.
    pub scatter: DMatrix<f64>,
    pub log_det: f64,
    pub det: f64,
    pub h: usize,
    pub p: usize,
    pub exhaustive: bool,
}

impl McdFit {
    pub fn n(&self) -> usize {
        self.subset.len() + self.complement.len()
    }

    pub fn in_subset(&self) -> Vec<bool> {
        let mut mask = vec![false; self.n()];
        for &i in &self.subset {
            mask[i] = true;
        }
        mask
    }
}

/// `⌊(n + p + 1) / 2⌋`, the subset size with maximal breakdown point.
pub fn default_h(n: usize, p: usize) -> usize {
    (n + p + 1) / 2
}

/// MCD of the rows of `x` (n×p) with the default search settings.
pub fn fast_mcd(x: &DMatrix<f64>, h: usize, seed: u64) -> Result<McdFit> {
    fast_mcd_with(x, h, seed, &McdOptions::default())
}

pub fn fast_mcd_with(x: &DMatrix<f64>, h: usize, seed: u64, opts: &McdOptions) -> Result<McdFit> {
    let (n, p) = x.shape();
    if p == 0 {
        return Err(Error::Dimension("MCD needs at least one variable".into()));
    }
    if n <= p + 1 {
        return Err(Error::Dimension(format!("MCD needs n > p + 1, got n = {n}, p = {p}")));
    }
    let h_min = default_h(n, p);
    if h < h_min || h >= n {
        return Err(Error::Config(format!("subset size h = {h} outside {h_min}..={}", n - 1)));
    }

    let engine = Engine::new(x, h);
    let exhaustive = binomial_at_most(n, h, opts.exhaustive_limit);
    let subset = if exhaustive { engine.exhaustive()? } else { engine.search(seed, opts)? };

    let fit = engine.fit(&subset).ok_or(Error::ExactFit { h })?;
    let scatter = engine.scatter(&subset);
    let mut in_subset = vec![false; n];
    for &i in &subset {
        in_subset[i] = true;
    }
    let complement = (0..n).filter(|&i| !in_subset[i]).collect();
    Ok(McdFit {
        subset,
        complement,
        location: fit.mean,
        scatter,
        log_det: fit.log_det,
        det: fit.log_det.exp(),
        h,
        p,
        exhaustive,
    })
}

/// Whether C(n, k) <= limit, computed without overflow.
fn binomial_at_most(n: usize, k: usize, limit: u64) -> bool {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > limit as u128 {
            return false;
        }
    }
    true
}

struct SubsetFit {
    mean: DVector<f64>,
    log_det: f64,
    /// Cholesky factor of the covariance.
    l: DMatrix<f64>,
}

struct Candidate {
    subset: Vec<usize>,
    fit: SubsetFit,
}

struct Engine {
    /// Observations as rows (n×p) and as columns (p×n).
    x: DMatrix<f64>,
    xt: DMatrix<f64>,
    n: usize,
    p: usize,
    h: usize,
}

impl Engine {
    fn new(x: &DMatrix<f64>, h: usize) -> Self {
        let (n, p) = x.shape();
        Engine { x: x.clone(), xt: x.transpose(), n, p, h }
    }

    fn gather_centered(&self, subset: &[usize]) -> (DMatrix<f64>, DVector<f64>) {
        let p = self.p;
        let src = self.xt.as_slice();
        let mut buf = Vec::with_capacity(p * subset.len());
        for &i in subset {
            buf.extend_from_slice(&src[i * p..(i + 1) * p]);
        }
        let mut mean = vec![0.0; p];
        for col in buf.chunks_exact(p) {
            for (m, v) in mean.iter_mut().zip(col) {
                *m += v;
            }
        }
        let k = subset.len() as f64;
        for m in &mut mean {
            *m /= k;
        }
        for col in buf.chunks_exact_mut(p) {
            for (v, m) in col.iter_mut().zip(&mean) {
                *v -= m;
            }
        }
        (DMatrix::from_vec(p, subset.len(), buf), DVector::from_vec(mean))
    }

    fn scatter(&self, subset: &[usize]) -> DMatrix<f64> {
        let (centered, _) = self.gather_centered(subset);
        gram(&centered) / subset.len() as f64
    }

    /// Mean and log-determinant of the covariance (divisor |subset|), or
    /// `None` when that covariance is numerically singular.
    fn fit(&self, subset: &[usize]) -> Option<SubsetFit> {
        let (centered, mean) = self.gather_centered(subset);
        let s = gram(&centered) / subset.len() as f64;
        let max_diag = s.diagonal().max();
        if !(max_diag > 0.0) {
            return None;
        }
        let l = Cholesky::new(s)?.unpack();
        let mut log_det = 0.0;
        for i in 0..self.p {
            let pivot = l[(i, i)];
            if !(pivot * pivot > SINGULAR_PIVOT_RATIO * max_diag) {
                return None;
            }
            log_det += 2.0 * pivot.ln();
        }
        Some(SubsetFit { mean, log_det, l })
    }

    fn fit_h(&self, subset: Vec<usize>) -> Result<Candidate> {
        let fit = self.fit(&subset).ok_or(Error::ExactFit { h: self.h })?;
        Ok(Candidate { subset, fit })
    }

    /// Squared Mahalanobis distances of all observations under `fit`.
    fn distances(&self, fit: &SubsetFit) -> Vec<f64> {
        let n = self.n;
        let mut centered = Vec::with_capacity(n * self.p);
        for (col, m) in self.x.as_slice().chunks_exact(n).zip(fit.mean.iter()) {
            centered.extend(col.iter().map(|v| v - m));
        }
        let mut z = DMatrix::from_vec(n, self.p, centered);
        solve_lower_transposed_right(&fit.l, &mut z);
        let mut d = vec![0.0; n];
        for col in z.as_slice().chunks_exact(n) {
            for (acc, v) in d.iter_mut().zip(col) {
                *acc += v * v;
            }
        }
        d
    }

    fn smallest_h(&self, d: &[f64]) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.n).collect();
        idx.select_nth_unstable_by(self.h - 1, |&a, &b| cmp_by_value_then_index(d, a, b));
        idx.truncate(self.h);
        idx.sort_unstable();
        idx
    }

    /// One concentration step from an h-subset, recording whether the
    /// determinant went up.
    fn cstep(&self, current: &Candidate) -> Result<Candidate> {
        let next = self.fit_h(self.smallest_h(&self.distances(&current.fit)))?;
        CSTEP_CHECKS.fetch_add(1, Ordering::Relaxed);
        let (before, after) = (current.fit.log_det, next.fit.log_det);
        let slack = CSTEP_LOGDET_SLACK * (1.0 + before.abs());
        if after > before + slack {
            CSTEP_VIOLATIONS.fetch_add(1, Ordering::Relaxed);
            debug_assert!(false, "C-step increased log det from {before} to {after}");
        }
        Ok(next)
    }

    fn exhaustive(&self) -> Result<Vec<usize>> {
        let mut combo: Vec<usize> = (0..self.h).collect();
        let mut best: Option<(Vec<usize>, f64)> = None;
        loop {
            let fit = self.fit(&combo).ok_or(Error::ExactFit { h: self.h })?;
            if best.as_ref().map_or(true, |b| fit.log_det < b.1) {
                best = Some((combo.clone(), fit.log_det));
            }
            if !next_combination(&mut combo, self.n) {
                break;
            }
        }
        Ok(best.expect("at least one subset").0)
    }

    /// Initial h-subset grown from a random (p+1)-subset; points are added
    /// one at a time while the elemental covariance is singular.
    fn initial_subset(&self, rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
        let mut order: Vec<usize> = (0..self.n).collect();
        order.shuffle(rng);
        let mut size = self.p + 1;
        loop {
            if let Some(fit) = self.fit(&order[..size]) {
                return Ok(self.smallest_h(&self.distances(&fit)));
            }
            size += 1;
            if size > self.n {
                return Err(Error::ExactFit { h: self.h });
            }
        }
    }

    fn search(&self, seed: u64, opts: &McdOptions) -> Result<Vec<usize>> {
        let starts: Vec<Candidate> = (0..opts.n_starts)
            .into_par_iter()
            .map(|start| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(start as u64);
                let mut cand = self.fit_h(self.initial_subset(&mut rng)?)?;
                for _ in 0..opts.initial_csteps {
                    cand = self.cstep(&cand)?;
                }
                Ok(cand)
            })
            .collect::<Result<_>>()?;

        let order = |a: &Candidate, b: &Candidate| {
            a.fit.log_det.total_cmp(&b.fit.log_det).then_with(|| a.subset.cmp(&b.subset))
        };
        let mut ranked = starts;
        ranked.sort_by(order);
        ranked.dedup_by(|a, b| a.subset == b.subset);
        ranked.truncate(opts.n_best.max(1));

        let refined: Vec<Candidate> = ranked
            .into_par_iter()
            .map(|mut cand| {
                for _ in 0..opts.max_csteps {
                    let next = self.cstep(&cand)?;
                    let converged = next.subset == cand.subset
                        || (cand.fit.log_det - next.fit.log_det) < opts.tolerance;
                    cand = next;
                    if converged {
                        break;
                    }
                }
                Ok(cand)
            })
            .collect::<Result<_>>()?;

        let best = refined.into_iter().min_by(order).expect("at least one candidate");
        Ok(best.subset)
    }
}

/// Advances `combo` to the next k-combination of 0..n in lexicographic order.
fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let k = combo.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if combo[i] < n - k + i {
            combo[i] += 1;
            for j in i + 1..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
