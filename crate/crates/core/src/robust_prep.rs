//! Robust column standardization: center on the median, scale by the MAD.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix_io::DataMatrix;
use crate::stats::{central_pair, median_in_place};

/// Gaussian consistency constant for the median absolute deviation.
pub const MAD_CONSISTENCY: f64 = 1.4826;

/// Per-column location and scale used by [`robust_scale`], indexed by the
/// column numbering of the input matrix. Dropped columns carry a zero scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRecord {
    pub medians: Vec<f64>,
    pub scales: Vec<f64>,
    pub zero_mad_cols: Vec<usize>,
}

struct ColumnScaling {
    median: f64,
    scale: f64,
    values: Option<Vec<f64>>,
}

/// Transforms every column to `(y - median) / (1.4826 * MAD)`.
///
/// Columns with zero MAD are removed and listed both in the record and in the
/// returned matrix's dropped columns.
pub fn robust_scale(y: &DataMatrix) -> Result<(DataMatrix, ScalingRecord)> {
    let values = y.values();
    let (t, v) = values.shape();
    if t < 2 {
        return Err(Error::Dimension(format!("need at least 2 rows, got {t}")));
    }

    let columns: Vec<ColumnScaling> =
        (0..v).into_par_iter().map(|j| scale_column(values.column(j).as_slice())).collect();

    let mut record = ScalingRecord {
        medians: Vec::with_capacity(v),
        scales: Vec::with_capacity(v),
        zero_mad_cols: Vec::new(),
    };
    let mut kept_local = Vec::with_capacity(v);
    for (j, col) in columns.iter().enumerate() {
        record.medians.push(col.median);
        if col.values.is_some() {
            record.scales.push(col.scale);
            kept_local.push(j);
        } else {
            record.scales.push(0.0);
            record.zero_mad_cols.push(y.kept_cols()[j]);
        }
    }
    if kept_local.is_empty() {
        return Err(Error::DegenerateColumns(v));
    }

    let mut out = DMatrix::zeros(t, kept_local.len());
    for (k, &j) in kept_local.iter().enumerate() {
        let scaled = columns[j].values.as_ref().expect("kept column has values");
        out.column_mut(k).copy_from_slice(scaled);
    }
    let kept_source: Vec<usize> = kept_local.iter().map(|&j| y.kept_cols()[j]).collect();
    let scaled = DataMatrix::with_kept_columns(out, kept_source, y.source_cols())?;
    Ok((scaled, record))
}

fn scale_column(col: &[f64]) -> ColumnScaling {
    let mut buf = col.to_vec();
    let (lower, upper) = central_pair(&mut buf).expect("column is nonempty");
    let median = 0.5 * (lower + upper);
    for (b, &x) in buf.iter_mut().zip(col) {
        *b = (x - median).abs();
    }
    let mad = median_in_place(&mut buf).expect("column is nonempty");
    if mad <= 0.0 {
        return ColumnScaling { median, scale: 0.0, values: None };
    }
    let scale = MAD_CONSISTENCY * mad;
    let mut values: Vec<f64> = col.iter().map(|&x| (x - median) / scale).collect();

    // With an even number of rows the output median is the mean of two
    // rounded values. Mirror the lower central value onto the upper one so
    // that mean is exactly zero; the order of the column is unchanged.
    if lower < upper {
        let low_out = (lower - median) / scale;
        let high_out = -low_out;
        for (out, &x) in values.iter_mut().zip(col) {
            if x == upper {
                *out = high_out;
            } else if x > upper && *out < high_out {
                *out = high_out;
            }
        }
    }
    ColumnScaling { median, scale, values: Some(values) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::median;

    fn matrix(cols: &[&[f64]]) -> DataMatrix {
        let t = cols[0].len();
        let mut m = DMatrix::zeros(t, cols.len());
        for (j, c) in cols.iter().enumerate() {
            m.column_mut(j).copy_from_slice(c);
        }
        DataMatrix::new(m).unwrap()
    }

    #[test]
    fn hand_computed_column() {
        let y = matrix(&[&[1.0, 2.0, 3.0, 4.0, 100.0]]);
        let (scaled, rec) = robust_scale(&y).unwrap();
        assert_eq!(rec.medians[0], 3.0);
        // |x - 3| = 2,1,0,1,97 -> MAD 1
        assert_eq!(rec.scales[0], 1.4826);
        let expected = 97.0 / 1.4826;
        assert!((scaled.values()[(4, 0)] - expected).abs() < 1e-12);
        assert!((expected - 65.4256).abs() < 1e-4);
    }

    #[test]
    fn constant_column_is_dropped() {
        let y = matrix(&[&[1.0, 5.0, 2.0, 8.0], &[7.0, 7.0, 7.0, 7.0], &[0.0, 1.0, 0.5, 2.0]]);
        let (scaled, rec) = robust_scale(&y).unwrap();
        assert_eq!(rec.zero_mad_cols, vec![1]);
        assert_eq!(scaled.cols(), 2);
        assert_eq!(scaled.dropped_cols(), vec![1]);
        assert_eq!(scaled.kept_cols(), &[0, 2]);
        assert_eq!(rec.scales[1], 0.0);
    }

    #[test]
    fn all_columns_degenerate() {
        let y = matrix(&[&[2.0, 2.0, 2.0], &[1.0, 1.0, 1.0]]);
        assert!(matches!(robust_scale(&y), Err(Error::DegenerateColumns(2))));
    }

    #[test]
    fn majority_ties_give_zero_mad() {
        // median 0, |x| = 0,0,0,5 -> MAD 0
        let y = matrix(&[&[0.0, 0.0, 0.0, 5.0], &[1.0, 2.0, 3.0, 4.0]]);
        let (_, rec) = robust_scale(&y).unwrap();
        assert_eq!(rec.zero_mad_cols, vec![0]);
    }

    #[test]
    fn even_length_medians_are_exactly_zero() {
        let y = matrix(&[
            &[0.1, 0.7, 0.30000000000000004, 1e9, -3.3, 0.2],
            &[1.0 / 3.0, 2.0 / 3.0, 0.1, 0.2, 0.3, 0.4],
        ]);
        let (scaled, _) = robust_scale(&y).unwrap();
        for j in 0..scaled.cols() {
            let col: Vec<f64> = scaled.values().column(j).iter().copied().collect();
            assert_eq!(median(&col), Some(0.0));
        }
    }
}
