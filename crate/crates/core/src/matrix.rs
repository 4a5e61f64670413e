//! Dense real symmetric matrices with exact symmetry.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Zero-based entry position `(row, column)`.
pub type Position = (usize, usize);

/// Dense `n × n` real symmetric matrix, row-major.
///
/// Every mutation writes both `(i, j)` and `(j, i)`, so the stored array is
/// symmetric bit-for-bit. Entries are always finite.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        m
    }

    /// Builds the matrix from its upper triangle: `f(i, j)` is called for
    /// `i <= j` only and mirrored.
    pub fn from_upper_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                m.data[i * n + j] = v;
                m.data[j * n + i] = v;
            }
        }
        m
    }

    /// Checked construction from rows; rejects ragged, asymmetric or
    /// non-finite input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: row.len() });
            }
            data.extend_from_slice(row);
        }
        Self::from_row_major(n, data)
    }

    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, got: data.len() });
        }
        for i in 0..n {
            for j in 0..n {
                let v = data[i * n + j];
                if !v.is_finite() {
                    return Err(Error::NonFinite { i, j });
                }
                if v.to_bits() != data[j * n + i].to_bits() {
                    return Err(Error::NotSymmetric { i, j });
                }
            }
        }
        Ok(Self { n, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Sets `(i, j)` and `(j, i)`.
    ///
    /// # Panics
    /// If `value` is not finite or an index is out of range.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        assert!(value.is_finite(), "non-finite entry at ({i}, {j})");
        let n = self.n;
        self.data[i * n + j] = value;
        self.data[j * n + i] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Entrywise maximum `‖X‖_ℓ∞ = max |X_ij|`.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: other.n });
        }
        Ok(())
    }

    /// `a·self + b·other`, computed on the upper triangle and mirrored.
    pub fn lincomb(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        self.check_same_dim(other)?;
        Ok(Self::from_upper_fn(self.n, |i, j| a * self.get(i, j) + b * other.get(i, j)))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.lincomb(1.0, other, -1.0)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::from_upper_fn(self.n, |i, j| factor * self.get(i, j))
    }

    /// Frobenius inner product `Σ_ij A_ij B_ij`.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check_same_dim(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    pub fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.data)
    }

    /// Plain-text form: a line with `n`, then `n` rows of `n`
    /// space-separated values at 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{}", self.n);
        for i in 0..self.n {
            let row: Vec<String> = self.row(i).iter().map(|v| format!("{v:.16e}")).collect();
            let _ = writeln!(s, "{}", row.join(" "));
        }
        s
    }

    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.to_text().as_bytes())?;
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate().filter_map(|(k, l)| match l {
            Ok(l) if l.trim().is_empty() => None,
            other => Some((k + 1, other)),
        });
        let (lineno, first) = lines.next().ok_or(Error::Parse { line: 1, msg: "empty input".into() })?;
        let first = first?;
        let n: usize = first
            .trim()
            .parse()
            .map_err(|_| Error::Parse { line: lineno, msg: format!("bad dimension {first:?}") })?;
        let mut rows = Vec::with_capacity(n);
        for _ in 0..n {
            let (lineno, line) = lines
                .next()
                .ok_or(Error::Parse { line: lineno + rows.len() + 1, msg: "missing row".into() })?;
            let line = line?;
            let row = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse { line: lineno, msg: e.to_string() })?;
            if row.len() != n {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("expected {n} values, found {}", row.len()),
                });
            }
            rows.push(row);
        }
        Self::from_rows(&rows)
    }

    pub fn from_text(s: &str) -> Result<Self> {
        Self::read_text(s.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_asymmetric_and_nonfinite() {
        let err = SymmetricMatrix::from_rows(&[vec![0.0, 1.0], vec![2.0, 0.0]]).unwrap_err();
        assert!(matches!(err, Error::NotSymmetric { .. }));
        let err = SymmetricMatrix::from_rows(&[vec![f64::NAN]]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
        let err = SymmetricMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0]]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn text_round_trip_is_lossless() {
        let m = SymmetricMatrix::from_upper_fn(3, |i, j| (i as f64 + 0.1) / (j as f64 + 3.7) - 1e-300);
        let back = SymmetricMatrix::from_text(&m.to_text()).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn text_parse_errors_carry_lines() {
        let err = SymmetricMatrix::from_text("2\n1 2\n3\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
        let err = SymmetricMatrix::from_text("x\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn lincomb_and_norms() {
        let a = SymmetricMatrix::from_diagonal(&[2.0, 0.0]);
        let b = SymmetricMatrix::from_diagonal(&[0.0, 2.0]);
        let mid = a.lincomb(0.5, &b, 0.5).unwrap();
        assert_eq!(mid, SymmetricMatrix::identity(2));
        assert_eq!(a.max_abs(), 2.0);
        assert_eq!(a.inner(&b).unwrap(), 0.0);
    }
}
