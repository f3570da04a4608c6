//! Left singular subspace of a wide matrix through its T×T Gram matrix.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix_io::DataMatrix;

/// Columns per block when accumulating `Y Yᵗ`. Fixed so the summation order,
/// and therefore the result, does not depend on the thread count.
const GRAM_BLOCK_COLS: usize = 2048;

/// Eigen-decomposition of `Y Yᵗ`, eigenvalues in nonincreasing order.
#[derive(Debug, Clone)]
pub struct GramDecomposition {
    /// T×T orthogonal matrix of eigenvectors (left singular vectors of Y).
    pub u: DMatrix<f64>,
    /// Nonnegative eigenvalues (squared singular values), nonincreasing.
    pub eigenvalues: Vec<f64>,
}

/// The retained principal directions.
#[derive(Debug, Clone)]
pub struct ReducedBasis {
    /// T×Q, orthonormal columns.
    pub u: DMatrix<f64>,
    /// Singular values of the retained components, nonincreasing.
    pub d: Vec<f64>,
    pub q: usize,
    pub eigenvalues_full: Vec<f64>,
}

impl ReducedBasis {
    pub fn t(&self) -> usize {
        self.u.nrows()
    }

    /// Principal component scores `U D`.
    pub fn scores(&self) -> DMatrix<f64> {
        let mut ud = self.u.clone();
        for (mut col, &d) in ud.column_iter_mut().zip(&self.d) {
            col *= d;
        }
        ud
    }
}

/// Inclusive clamp range for the model order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderBounds {
    pub lo: usize,
    pub hi: usize,
}

impl Default for OrderBounds {
    fn default() -> Self {
        OrderBounds { lo: 15, hi: 50 }
    }
}

impl OrderBounds {
    pub fn validate(&self) -> Result<()> {
        if self.lo == 0 || self.lo > self.hi {
            return Err(Error::Config(format!(
                "model order bounds must satisfy 1 <= lo <= hi, got ({}, {})",
                self.lo, self.hi
            )));
        }
        Ok(())
    }
}

/// `Y Yᵗ`, accumulated over fixed column blocks in block order.
pub fn gram_matrix(y: &DMatrix<f64>) -> DMatrix<f64> {
    let (t, v) = y.shape();
    let blocks: Vec<(usize, usize)> = (0..v)
        .step_by(GRAM_BLOCK_COLS)
        .map(|start| (start, GRAM_BLOCK_COLS.min(v - start)))
        .collect();
    let partials: Vec<DMatrix<f64>> = blocks
        .par_iter()
        .map(|&(start, len)| {
            let block = y.columns(start, len);
            block * block.transpose()
        })
        .collect();
    let mut gram = DMatrix::zeros(t, t);
    for p in &partials {
        gram += p;
    }
    // exact symmetry
    for i in 0..t {
        for j in 0..i {
            let s = 0.5 * (gram[(i, j)] + gram[(j, i)]);
            gram[(i, j)] = s;
            gram[(j, i)] = s;
        }
    }
    gram
}

/// Eigen-decomposition of `Y Yᵗ` in place of an SVD of the wide matrix.
///
/// Eigenvectors are sign-normalized so that each has its largest-magnitude
/// entry positive, which makes the output reproducible.
pub fn gram_svd(y: &DataMatrix) -> Result<GramDecomposition> {
    let gram = gram_matrix(y.values());
    let t = gram.nrows();
    let eig = SymmetricEigen::try_new(gram, f64::EPSILON, 1000 * t.max(1))
        .ok_or(Error::EigenNonConvergence)?;

    let mut order: Vec<usize> = (0..t).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let mut u = DMatrix::zeros(t, t);
    let mut eigenvalues = Vec::with_capacity(t);
    for (k, &src) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(src);
        let pivot = col
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(&a.0)))
            .map(|(_, &x)| x)
            .unwrap_or(1.0);
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        u.column_mut(k).copy_from(&(col * sign));
        eigenvalues.push(eig.eigenvalues[src].max(0.0));
    }
    Ok(GramDecomposition { u, eigenvalues })
}

/// Number of eigenvalues strictly above the mean of all T eigenvalues,
/// clamped to `bounds` and then capped at T - 1.
pub fn select_model_order(eigenvalues: &[f64], bounds: OrderBounds) -> Result<usize> {
    bounds.validate()?;
    let t = eigenvalues.len();
    if t <= 2 {
        return Err(Error::Dimension(format!("cannot reduce {t} time points")));
    }
    let mean = eigenvalues.iter().sum::<f64>() / t as f64;
    let above = eigenvalues.iter().filter(|&&l| l > mean).count();
    Ok(above.clamp(bounds.lo, bounds.hi).min(t - 1))
}

/// Keeps the leading `q` components.
pub fn reduce(decomp: &GramDecomposition, q: usize) -> Result<ReducedBasis> {
    let t = decomp.eigenvalues.len();
    if q == 0 || q >= t {
        return Err(Error::Dimension(format!("model order {q} outside 1..={}", t.saturating_sub(1))));
    }
    Ok(slice_basis(decomp, q))
}

/// All T components. Every leverage equals one for this basis; it exists for
/// diagnostics and checks, not for detection.
pub fn full_basis(decomp: &GramDecomposition) -> ReducedBasis {
    slice_basis(decomp, decomp.eigenvalues.len())
}

fn slice_basis(decomp: &GramDecomposition, q: usize) -> ReducedBasis {
    ReducedBasis {
        u: decomp.u.columns(0, q).into_owned(),
        d: decomp.eigenvalues[..q].iter().map(|l| l.sqrt()).collect(),
        q,
        eigenvalues_full: decomp.eigenvalues.clone(),
    }
}
