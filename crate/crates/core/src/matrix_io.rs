//! Observation-by-variable matrices and their on-disk formats.
//!
//! The flat-binary layout is a 16-byte little-endian header followed by the
//! values in row-major order:
//!
//! | offset | size | field                      |
//! |--------|------|----------------------------|
//! | 0      | 4    | magic `HDOM`               |
//! | 4      | 2    | format version (`u16`, 1)  |
//! | 6      | 4    | row count T (`u32`)        |
//! | 10     | 4    | column count V (`u32`)     |
//! | 14     | 2    | reserved, written as zero  |
//! | 16     | 8·T·V| `f64` payload, row-major   |

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"HDOM";
pub const FORMAT_VERSION: u16 = 1;
pub const HEADER_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Csv,
    FlatBinary,
}

impl MatrixFormat {
    /// `.csv` (any case) selects CSV; everything else is flat-binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => MatrixFormat::Csv,
            _ => MatrixFormat::FlatBinary,
        }
    }
}

/// A T×V matrix of time points (rows) by variables (columns).
///
/// Columns removed during preprocessing are remembered by their index in the
/// original matrix so reports can refer back to the source data.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: DMatrix<f64>,
    kept_cols: Vec<usize>,
    source_cols: usize,
}

impl DataMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        validate(&values)?;
        let v = values.ncols();
        Ok(DataMatrix { values, kept_cols: (0..v).collect(), source_cols: v })
    }

    pub fn from_row_slice(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} values supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(rows, cols, data))
    }

    /// Builds a matrix that keeps only `kept_cols` of a `source_cols`-wide original.
    pub(crate) fn with_kept_columns(
        values: DMatrix<f64>,
        kept_cols: Vec<usize>,
        source_cols: usize,
    ) -> Result<Self> {
        debug_assert_eq!(values.ncols(), kept_cols.len());
        validate(&values)?;
        Ok(DataMatrix { values, kept_cols, source_cols })
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }

    /// Number of time points T.
    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    /// Number of retained variables.
    pub fn cols(&self) -> usize {
        self.values.ncols()
    }

    /// Column count of the matrix this one was derived from.
    pub fn source_cols(&self) -> usize {
        self.source_cols
    }

    /// Original indices of the retained columns, ascending.
    pub fn kept_cols(&self) -> &[usize] {
        &self.kept_cols
    }

    /// Original indices of the columns excluded from analysis, ascending.
    pub fn dropped_cols(&self) -> Vec<usize> {
        let mut kept = self.kept_cols.iter().peekable();
        let mut dropped = Vec::with_capacity(self.source_cols - self.kept_cols.len());
        for j in 0..self.source_cols {
            if kept.peek() == Some(&&j) {
                kept.next();
            } else {
                dropped.push(j);
            }
        }
        dropped
    }
}

fn validate(values: &DMatrix<f64>) -> Result<()> {
    let (t, v) = values.shape();
    if t < 2 {
        return Err(Error::Dimension(format!("need at least 2 rows, got {t}")));
    }
    if v < 1 {
        return Err(Error::Dimension("need at least 1 column".into()));
    }
    for col in 0..v {
        for row in 0..t {
            if !values[(row, col)].is_finite() {
                return Err(Error::NonFinite { row, col });
            }
        }
    }
    Ok(())
}

pub fn load_matrix(path: &Path, format: MatrixFormat) -> Result<DataMatrix> {
    match format {
        MatrixFormat::FlatBinary => {
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            decode_flat_binary(&bytes)
        }
        MatrixFormat::Csv => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            parse_csv(&text)
        }
    }
}

pub fn save_matrix(matrix: &DMatrix<f64>, path: &Path, format: MatrixFormat) -> Result<()> {
    let bytes = match format {
        MatrixFormat::FlatBinary => encode_flat_binary(matrix)?,
        MatrixFormat::Csv => format_csv(matrix).into_bytes(),
    };
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&bytes).map_err(|e| Error::io(path, e))
}

pub fn encode_flat_binary(matrix: &DMatrix<f64>) -> Result<Vec<u8>> {
    let (t, v) = matrix.shape();
    let t32 = u32::try_from(t).map_err(|_| Error::Dimension(format!("{t} rows exceed u32")))?;
    let v32 = u32::try_from(v).map_err(|_| Error::Dimension(format!("{v} columns exceed u32")))?;
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * t * v);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&t32.to_le_bytes());
    out.extend_from_slice(&v32.to_le_bytes());
    out.extend_from_slice(&[0u8; 2]);
    for row in 0..t {
        for col in 0..v {
            out.extend_from_slice(&matrix[(row, col)].to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_flat_binary(bytes: &[u8]) -> Result<DataMatrix> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!(
            "file is {} bytes, shorter than the {HEADER_LEN}-byte header",
            bytes.len()
        )));
    }
    if &bytes[0..4] != MAGIC {
        return Err(Error::Format("bad magic, expected HDOM".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported format version {version}")));
    }
    let t = u32::from_le_bytes(bytes[6..10].try_into().expect("4-byte slice")) as usize;
    let v = u32::from_le_bytes(bytes[10..14].try_into().expect("4-byte slice")) as usize;
    if t == 0 || v == 0 {
        return Err(Error::Dimension(format!("header declares a {t}x{v} matrix")));
    }
    let payload = &bytes[HEADER_LEN..];
    let expected = t
        .checked_mul(v)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| Error::Dimension(format!("{t}x{v} overflows the address space")))?;
    if payload.len() != expected {
        return Err(Error::Dimension(format!(
            "header declares {t}x{v} ({expected} payload bytes) but file has {}",
            payload.len()
        )));
    }
    let mut values = DMatrix::zeros(t, v);
    for (k, chunk) in payload.chunks_exact(8).enumerate() {
        let x = f64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
        let (row, col) = (k / v, k % v);
        if !x.is_finite() {
            return Err(Error::NonFinite { row, col });
        }
        values[(row, col)] = x;
    }
    DataMatrix::new(values)
}

pub fn parse_csv(text: &str) -> Result<DataMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Format(format!("csv: {e}")))?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        match cols {
            None => cols = Some(record.len()),
            Some(c) if c != record.len() => {
                return Err(Error::Dimension(format!(
                    "row {rows} has {} fields, expected {c}",
                    record.len()
                )))
            }
            Some(_) => {}
        }
        for (col, field) in record.iter().enumerate() {
            let x: f64 = field.parse().map_err(|_| {
                Error::Format(format!("row {rows}, column {col}: cannot parse {field:?}"))
            })?;
            if !x.is_finite() {
                return Err(Error::NonFinite { row: rows, col });
            }
            data.push(x);
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| Error::Dimension("empty csv".into()))?;
    DataMatrix::from_row_slice(rows, cols, &data)
}

/// Shortest round-trip decimal representation, one row per line.
pub fn format_csv(matrix: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for row in matrix.row_iter() {
        let line: Vec<String> = row.iter().map(|x| format!("{x:?}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}
