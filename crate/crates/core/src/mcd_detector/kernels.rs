//! Small dense kernels for the concentration steps: strided products
//! without materialized transposes and a blocked triangular solve.

use nalgebra::DMatrix;

/// Rectangular window into a column-major buffer.
#[derive(Debug, Clone, Copy)]
struct Block {
    offset: usize,
    rows: usize,
    cols: usize,
    row_stride: usize,
    col_stride: usize,
}

impl Block {
    fn of(m: &DMatrix<f64>) -> Self {
        Block { offset: 0, rows: m.nrows(), cols: m.ncols(), row_stride: 1, col_stride: m.nrows() }
    }

    fn sub(self, r: usize, c: usize, rows: usize, cols: usize) -> Self {
        debug_assert!(r + rows <= self.rows && c + cols <= self.cols);
        Block { offset: self.offset + r * self.row_stride + c * self.col_stride, rows, cols, ..self }
    }

    fn t(self) -> Self {
        Block {
            rows: self.cols,
            cols: self.rows,
            row_stride: self.col_stride,
            col_stride: self.row_stride,
            ..self
        }
    }

    fn fits(&self, len: usize) -> bool {
        self.rows == 0
            || self.cols == 0
            || self.offset + (self.rows - 1) * self.row_stride + (self.cols - 1) * self.col_stride < len
    }
}

/// `c = alpha·a·b + beta·c` on windows. `c` must not alias `a` or `b`.
fn gemm(alpha: f64, a: &[f64], ab: Block, b: &[f64], bb: Block, beta: f64, c: &mut [f64], cb: Block) {
    assert!(ab.rows == cb.rows && bb.cols == cb.cols && ab.cols == bb.rows);
    assert!(ab.fits(a.len()) && bb.fits(b.len()) && cb.fits(c.len()));
    if cb.rows == 0 || cb.cols == 0 {
        return;
    }
    // SAFETY: every window lies inside its slice (checked above), `c` is a
    // unique borrow, and the strides describe the slices' column-major layout.
    unsafe {
        matrixmultiply::dgemm(
            cb.rows,
            ab.cols,
            cb.cols,
            alpha,
            a.as_ptr().add(ab.offset),
            ab.row_stride as isize,
            ab.col_stride as isize,
            b.as_ptr().add(bb.offset),
            bb.row_stride as isize,
            bb.col_stride as isize,
            beta,
            c.as_mut_ptr().add(cb.offset),
            cb.row_stride as isize,
            cb.col_stride as isize,
        );
    }
}

/// `c·cᵀ` for `c` (p×h). The two diagonal blocks and the lower
/// off-diagonal block are multiplied; the upper block is mirrored.
pub(super) fn gram(c: &DMatrix<f64>) -> DMatrix<f64> {
    gram_split(c)
}
pub(super) fn gram_split(c: &DMatrix<f64>) -> DMatrix<f64> {
    let p = c.nrows();
    let mut s = DMatrix::zeros(p, p);
    let (cb, sb) = (Block::of(c), Block::of(&s));
    let (top, h) = ((p / 2 + 4) / 8 * 8, c.ncols());
    let upper = cb.sub(0, 0, top, h);
    let lower = cb.sub(top, 0, p - top, h);
    let out = s.as_mut_slice();
    for (a, b, dst) in [
        (upper, upper, sb.sub(0, 0, top, top)),
        (lower, upper, sb.sub(top, 0, p - top, top)),
        (lower, lower, sb.sub(top, top, p - top, p - top)),
    ] {
        gemm(1.0, c.as_slice(), a, c.as_slice(), b.t(), 0.0, out, dst);
    }
    for j in top..p {
        for i in 0..top {
            s[(i, j)] = s[(j, i)];
        }
    }
    s
}

/// Column block width of the triangular solve.
const SOLVE_BLOCK: usize = 8;

/// Solves `z·lᵀ = b` in place, where `z` (n×p) holds `b` on entry and `l` is
/// lower triangular with a nonzero diagonal. Row i of the result is
/// `l⁻¹·bᵢ`.
pub(super) fn solve_lower_transposed_right(l: &DMatrix<f64>, z: &mut DMatrix<f64>) {
    let (n, p) = z.shape();
    assert_eq!(l.shape(), (p, p));
    let lb = Block::of(l);
    let buf = z.as_mut_slice();
    for kb in (0..p).step_by(SOLVE_BLOCK) {
        let width = SOLVE_BLOCK.min(p - kb);
        let (done, rest) = buf.split_at_mut(kb * n);
        if kb > 0 {
            let solved = Block { offset: 0, rows: n, cols: kb, row_stride: 1, col_stride: n };
            let target = Block { offset: 0, rows: n, cols: width, row_stride: 1, col_stride: n };
            gemm(-1.0, done, solved, l.as_slice(), lb.sub(kb, 0, width, kb).t(), 1.0, rest, target);
        }
        for j in kb..kb + width {
            let (left, right) = rest.split_at_mut((j - kb) * n);
            let col_j = &mut right[..n];
            for k in kb..j {
                let f = l[(j, k)];
                let col_k = &left[(k - kb) * n..(k - kb + 1) * n];
                for (x, y) in col_j.iter_mut().zip(col_k) {
                    *x -= f * y;
                }
            }
            let recip = 1.0 / l[(j, j)];
            for x in col_j.iter_mut() {
                *x *= recip;
            }
        }
    }
}
