//! Binary and real-valued matrices plus the dense-text file format.
//!
//! The on-disk layout is one entity per line, comma-separated values, no
//! trailing separator. Up to two leading `#` lines carry labels: the first
//! holds column labels, the second row labels.
//!
//! ```
//! use linkinit::BinaryMatrix;
//!
//! let m = BinaryMatrix::parse("# a,b,c\n1,0,1\n0,1,1\n").unwrap();
//! assert_eq!((m.rows(), m.cols()), (2, 3));
//! assert_eq!(m.count_ones(), 4);
//! assert_eq!(m.col_labels().unwrap()[2], "c");
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Row-major n×m matrix of 0/1 entries.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMatrix {
    rows: usize,
    cols: usize,
    bits: Vec<u8>,
    row_labels: Option<Vec<String>>,
    col_labels: Option<Vec<String>>,
}

impl BinaryMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            bits: vec![0; rows * cols],
            row_labels: None,
            col_labels: None,
        }
    }

    pub fn ones(rows: usize, cols: usize) -> Self {
        Self {
            bits: vec![1; rows * cols],
            ..Self::zeros(rows, cols)
        }
    }

    /// Builds a matrix from nested rows. Every inner vector must have the same
    /// length and hold only 0 or 1.
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.as_ref().len());
        let mut bits = Vec::with_capacity(n * m);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != m {
                return Err(Error::Dimension(format!(
                    "row {i} has {} entries, expected {m}",
                    row.len()
                )));
            }
            for (u, &b) in row.iter().enumerate() {
                if b > 1 {
                    return Err(Error::Dimension(format!("entry ({i},{u}) = {b} is not binary")));
                }
                bits.push(b);
            }
        }
        Ok(Self {
            rows: n,
            cols: m,
            bits,
            row_labels: None,
            col_labels: None,
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut out = Self::zeros(rows, cols);
        for i in 0..rows {
            for u in 0..cols {
                out.bits[i * cols + u] = f(i, u) as u8;
            }
        }
        out
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        debug_assert!(row < self.rows && col < self.cols);
        self.bits[row * self.cols + col] != 0
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        debug_assert!(row < self.rows && col < self.cols);
        self.bits[row * self.cols + col] = value as u8;
    }

    /// Flips one entry and returns its new value.
    #[inline]
    pub fn toggle(&mut self, row: usize, col: usize) -> bool {
        let b = &mut self.bits[row * self.cols + col];
        *b ^= 1;
        *b != 0
    }

    pub fn row(&self, row: usize) -> &[u8] {
        &self.bits[row * self.cols..(row + 1) * self.cols]
    }

    /// Row-major 0/1 bytes.
    pub fn as_bytes(&self) -> &[u8] {
        &self.bits
    }

    /// Number of 1-entries.
    pub fn count_ones(&self) -> usize {
        self.bits.iter().map(|&b| b as usize).sum()
    }

    pub fn complement(&self) -> Self {
        Self {
            bits: self.bits.iter().map(|&b| b ^ 1).collect(),
            ..self.clone()
        }
    }

    /// True when every 1-entry of `self` is also a 1-entry of `other`.
    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.shape() == other.shape()
            && self.bits.iter().zip(&other.bits).all(|(&a, &b)| a <= b)
    }

    /// Entries set in `self` but not in `other`.
    pub fn difference(&self, other: &Self) -> Result<Self> {
        check_same_shape(self, other)?;
        Ok(Self {
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(&a, &b)| a & (b ^ 1))
                .collect(),
            ..self.clone()
        })
    }

    pub fn row_labels(&self) -> Option<&[String]> {
        self.row_labels.as_deref()
    }

    pub fn col_labels(&self) -> Option<&[String]> {
        self.col_labels.as_deref()
    }

    pub fn with_row_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.rows {
            return Err(Error::Dimension(format!(
                "{} row labels for {} rows",
                labels.len(),
                self.rows
            )));
        }
        self.row_labels = Some(labels);
        Ok(self)
    }

    pub fn with_col_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.cols {
            return Err(Error::Dimension(format!(
                "{} column labels for {} columns",
                labels.len(),
                self.cols
            )));
        }
        self.col_labels = Some(labels);
        Ok(self)
    }

    /// Parses the dense-text format.
    pub fn parse(text: &str) -> Result<Self> {
        let raw = parse_dense(text, |tok| match tok {
            "0" => Some(0u8),
            "1" => Some(1u8),
            _ => None,
        })?;
        let mut out = Self {
            rows: raw.rows,
            cols: raw.cols,
            bits: raw.values,
            row_labels: None,
            col_labels: None,
        };
        if let Some(labels) = raw.col_labels {
            out = out.with_col_labels(labels)?;
        }
        if let Some(labels) = raw.row_labels {
            out = out.with_row_labels(labels)?;
        }
        Ok(out)
    }

    pub fn to_text(&self) -> String {
        let mut s = header(self.row_labels(), self.col_labels());
        for i in 0..self.rows {
            for (u, &b) in self.row(i).iter().enumerate() {
                if u > 0 {
                    s.push(',');
                }
                s.push(if b != 0 { '1' } else { '0' });
            }
            s.push('\n');
        }
        s
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn to_real(&self) -> RealMatrix {
        RealMatrix {
            rows: self.rows,
            cols: self.cols,
            values: self.bits.iter().map(|&b| b as f64).collect(),
            row_labels: self.row_labels.clone(),
            col_labels: self.col_labels.clone(),
        }
    }
}

/// Reads a dense-text 0/1 matrix from disk.
pub fn load_matrix(path: impl AsRef<Path>) -> Result<BinaryMatrix> {
    BinaryMatrix::load(path)
}

/// Row-major n×m matrix of reals (posterior means, similarities, correlations).
#[derive(Debug, Clone, PartialEq)]
pub struct RealMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    row_labels: Option<Vec<String>>,
    col_labels: Option<Vec<String>>,
}

impl RealMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_vec(rows, cols, vec![0.0; rows * cols])
    }

    pub fn from_vec(rows: usize, cols: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), rows * cols, "value count must equal rows * cols");
        Self {
            rows,
            cols,
            values,
            row_labels: None,
            col_labels: None,
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for u in 0..cols {
                values.push(f(i, u));
            }
        }
        Self::from_vec(rows, cols, values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.values[row * self.cols + col] = value;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row_labels(&self) -> Option<&[String]> {
        self.row_labels.as_deref()
    }

    pub fn col_labels(&self) -> Option<&[String]> {
        self.col_labels.as_deref()
    }

    pub fn with_labels(mut self, rows: Option<Vec<String>>, cols: Option<Vec<String>>) -> Self {
        if let Some(r) = &rows {
            assert_eq!(r.len(), self.rows);
        }
        if let Some(c) = &cols {
            assert_eq!(c.len(), self.cols);
        }
        self.row_labels = rows;
        self.col_labels = cols;
        self
    }

    pub fn parse(text: &str) -> Result<Self> {
        let raw = parse_dense(text, |tok| tok.parse::<f64>().ok().filter(|v| v.is_finite()))?;
        let out = Self::from_vec(raw.rows, raw.cols, raw.values);
        check_labels(&raw.row_labels, out.rows, "row")?;
        check_labels(&raw.col_labels, out.cols, "column")?;
        Ok(out.with_labels(raw.row_labels, raw.col_labels))
    }

    /// Dense-text rendering; values use the shortest decimal that round-trips.
    pub fn to_text(&self) -> String {
        let mut s = header(self.row_labels(), self.col_labels());
        for i in 0..self.rows {
            for u in 0..self.cols {
                if u > 0 {
                    s.push(',');
                }
                write!(s, "{}", self.get(i, u)).unwrap();
            }
            s.push('\n');
        }
        s
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    /// Plain (P2) graymap with 8-bit depth, pixel = round(255 · entry)
    /// clamped to [0, 255]. Lines are wrapped to at most 70 characters.
    pub fn to_pgm(&self) -> String {
        let mut s = format!("P2\n{} {}\n255\n", self.cols, self.rows);
        for i in 0..self.rows {
            let mut line = String::new();
            for u in 0..self.cols {
                let px = (255.0 * self.get(i, u)).round().clamp(0.0, 255.0) as u8;
                let tok = px.to_string();
                if !line.is_empty() && line.len() + 1 + tok.len() > 70 {
                    s.push_str(&line);
                    s.push('\n');
                    line.clear();
                }
                if !line.is_empty() {
                    line.push(' ');
                }
                line.push_str(&tok);
            }
            s.push_str(&line);
            s.push('\n');
        }
        s
    }
}

/// Time-ordered observations `M_1 ⊆ M_2 ⊆ … ⊆ M_T` of identical shape.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSequence {
    matrices: Vec<BinaryMatrix>,
}

impl ObservationSequence {
    /// Builds a sequence after checking shapes and monotone growth.
    pub fn new(matrices: Vec<BinaryMatrix>) -> Result<Self> {
        let seq = Self { matrices };
        validate_sequence(&seq.matrices)?;
        Ok(seq)
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn get(&self, t: usize) -> &BinaryMatrix {
        &self.matrices[t]
    }

    pub fn last(&self) -> &BinaryMatrix {
        self.matrices.last().expect("sequence is non-empty")
    }

    pub fn shape(&self) -> (usize, usize) {
        self.matrices[0].shape()
    }

    pub fn matrices(&self) -> &[BinaryMatrix] {
        &self.matrices
    }

    pub fn into_inner(self) -> Vec<BinaryMatrix> {
        self.matrices
    }
}

/// Checks that all matrices share one shape and that `M_t ⊆ M_{t+1}`.
///
/// Reports the first violating cell in (t, row, column) order.
pub fn validate_sequence(matrices: &[BinaryMatrix]) -> Result<()> {
    let first = matrices
        .first()
        .ok_or_else(|| Error::Dimension("sequence must hold at least one matrix".into()))?;
    for (t, m) in matrices.iter().enumerate().skip(1) {
        if m.shape() != first.shape() {
            return Err(Error::Dimension(format!(
                "M_{} is {}x{}, M_1 is {}x{}",
                t + 1,
                m.rows(),
                m.cols(),
                first.rows(),
                first.cols()
            )));
        }
    }
    for (t, pair) in matrices.windows(2).enumerate() {
        let (prev, next) = (&pair[0], &pair[1]);
        if let Some(k) = prev
            .bits
            .iter()
            .zip(&next.bits)
            .position(|(&a, &b)| a > b)
        {
            return Err(Error::Monotonicity {
                t: t + 1,
                row: k / prev.cols,
                col: k % prev.cols,
            });
        }
    }
    Ok(())
}

pub(crate) fn check_same_shape(a: &BinaryMatrix, b: &BinaryMatrix) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::Dimension(format!(
            "{}x{} vs {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    Ok(())
}

fn check_labels(labels: &Option<Vec<String>>, expected: usize, what: &str) -> Result<()> {
    match labels {
        Some(l) if l.len() != expected => Err(Error::Dimension(format!(
            "{} {what} labels for {expected} {what}s",
            l.len()
        ))),
        _ => Ok(()),
    }
}

fn header(rows: Option<&[String]>, cols: Option<&[String]>) -> String {
    let mut s = String::new();
    if cols.is_some() || rows.is_some() {
        s.push('#');
        if let Some(c) = cols {
            s.push(' ');
            s.push_str(&c.join(","));
        }
        s.push('\n');
    }
    if let Some(r) = rows {
        s.push_str("# ");
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

struct RawDense<T> {
    rows: usize,
    cols: usize,
    values: Vec<T>,
    row_labels: Option<Vec<String>>,
    col_labels: Option<Vec<String>>,
}

fn parse_dense<T>(text: &str, parse_tok: impl Fn(&str) -> Option<T>) -> Result<RawDense<T>> {
    let mut headers: Vec<Option<Vec<String>>> = Vec::new();
    let mut values = Vec::new();
    let mut rows = 0;
    let mut cols = 0;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.strip_suffix('\r').unwrap_or(line);
        if let Some(rest) = line.strip_prefix('#') {
            if rows > 0 {
                return Err(Error::parse(lineno, None, "label line after data"));
            }
            if headers.len() == 2 {
                return Err(Error::parse(lineno, None, "more than two label lines"));
            }
            let rest = rest.trim();
            headers.push(if rest.is_empty() {
                None
            } else {
                Some(rest.split(',').map(|l| l.trim().to_string()).collect())
            });
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let mut count = 0;
        for (c, tok) in line.split(',').enumerate() {
            let tok = tok.trim();
            let v = parse_tok(tok).ok_or_else(|| {
                Error::parse(lineno, Some(c + 1), format!("invalid token {tok:?}"))
            })?;
            values.push(v);
            count += 1;
        }
        if rows == 0 {
            cols = count;
        } else if count != cols {
            return Err(Error::parse(
                lineno,
                None,
                format!("row has {count} entries, expected {cols}"),
            ));
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::EmptyInput);
    }
    let mut headers = headers.into_iter();
    let col_labels = headers.next().flatten();
    let row_labels = headers.next().flatten();
    Ok(RawDense {
        rows,
        cols,
        values,
        row_labels,
        col_labels,
    })
}
