//! Dense row-major matrices, regression instances and the factorizations
//! the sensitivity bounds are built from.

mod decomp;
mod norms;

pub use decomp::{cholesky_solve, qr_thin, solve_upper, svd, upper_inverse, Cholesky, SvdResult};
pub use norms::{entrywise_p_norm, induced_norm_upper, statistical_dimension, vector_p_norm};

use serde::{Deserialize, Serialize};

use crate::error::{CoresetError, Result};

/// Dense real matrix stored in row-major order.
///
/// Every constructor rejects empty shapes and non-finite entries, so any
/// `DenseMatrix` that reaches an operation is finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix", into = "RawMatrix")]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl TryFrom<RawMatrix> for DenseMatrix {
    type Error = CoresetError;

    fn try_from(raw: RawMatrix) -> Result<Self> {
        DenseMatrix::from_row_major(raw.rows, raw.cols, raw.data)
    }
}

impl From<DenseMatrix> for RawMatrix {
    fn from(m: DenseMatrix) -> Self {
        RawMatrix {
            rows: m.rows,
            cols: m.cols,
            data: m.data,
        }
    }
}

impl DenseMatrix {
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(CoresetError::shape(format!(
                "matrix must be non-empty, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(CoresetError::shape(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(CoresetError::NonFinite {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(CoresetError::shape("ragged rows"));
        }
        Self::from_row_major(n, d, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "empty matrix");
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        let mut m = Self::zeros(diag.len().max(1), diag.len().max(1));
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = v;
        }
        Self::from_row_major(m.rows, m.cols, m.data)
    }

    pub(crate) fn from_row_major_unchecked(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        DenseMatrix { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = vec![0.0; self.data.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        DenseMatrix::from_row_major_unchecked(self.cols, self.rows, t)
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(CoresetError::shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = vec![0.0; self.rows * other.cols];
        for i in 0..self.rows {
            let out_row = &mut out[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(DenseMatrix::from_row_major_unchecked(
            self.rows, other.cols, out,
        ))
    }

    /// `self · x`
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(CoresetError::shape(format!(
                "vector of length {} against {} columns",
                x.len(),
                self.cols
            )));
        }
        Ok(self.row_iter().map(|r| dot(r, x)).collect())
    }

    /// `selfᵀ · y`
    pub fn t_matvec(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.rows {
            return Err(CoresetError::shape(format!(
                "vector of length {} against {} rows",
                y.len(),
                self.rows
            )));
        }
        let mut out = vec![0.0; self.cols];
        for (r, &yi) in self.row_iter().zip(y) {
            axpy(yi, r, &mut out);
        }
        Ok(out)
    }

    /// `selfᵀ · self`, accumulated row by row.
    pub fn gram(&self) -> DenseMatrix {
        let d = self.cols;
        let mut g = vec![0.0; d * d];
        for r in self.row_iter() {
            for (a, &ra) in r.iter().enumerate() {
                if ra == 0.0 {
                    continue;
                }
                let g_row = &mut g[a * d..(a + 1) * d];
                for (gb, &rb) in g_row[a..].iter_mut().zip(&r[a..]) {
                    *gb += ra * rb;
                }
            }
        }
        for a in 0..d {
            for b in 0..a {
                g[a * d + b] = g[b * d + a];
            }
        }
        DenseMatrix::from_row_major_unchecked(d, d, g)
    }

    pub fn select_rows(&self, indices: &[usize]) -> Result<DenseMatrix> {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            if i >= self.rows {
                return Err(CoresetError::shape(format!(
                    "row index {i} out of range for {} rows",
                    self.rows
                )));
            }
            data.extend_from_slice(self.row(i));
        }
        DenseMatrix::from_row_major(indices.len(), self.cols, data)
    }

    /// Column block `[start, end)`.
    pub fn columns(&self, start: usize, end: usize) -> Result<DenseMatrix> {
        if start >= end || end > self.cols {
            return Err(CoresetError::shape(format!(
                "column range {start}..{end} invalid for {} columns",
                self.cols
            )));
        }
        let data = self
            .row_iter()
            .flat_map(|r| r[start..end].iter().copied())
            .collect();
        Ok(DenseMatrix::from_row_major_unchecked(
            self.rows,
            end - start,
            data,
        ))
    }

    /// Horizontal concatenation `[self other]`.
    pub fn hstack(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.rows != other.rows {
            return Err(CoresetError::shape("hstack row mismatch"));
        }
        let cols = self.cols + other.cols;
        let mut data = Vec::with_capacity(self.rows * cols);
        for (a, b) in self.row_iter().zip(other.row_iter()) {
            data.extend_from_slice(a);
            data.extend_from_slice(b);
        }
        Ok(DenseMatrix::from_row_major_unchecked(self.rows, cols, data))
    }

    /// Vertical concatenation.
    pub fn vstack(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.cols {
            return Err(CoresetError::shape("vstack column mismatch"));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(DenseMatrix::from_row_major_unchecked(
            self.rows + other.rows,
            self.cols,
            data,
        ))
    }

    pub fn scale_rows(&self, factors: &[f64]) -> Result<DenseMatrix> {
        if factors.len() != self.rows {
            return Err(CoresetError::shape("row scaling length mismatch"));
        }
        let data = self
            .row_iter()
            .zip(factors)
            .flat_map(|(r, &f)| r.iter().map(move |v| v * f))
            .collect();
        DenseMatrix::from_row_major(self.rows, self.cols, data)
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.shape() != other.shape() {
            return Err(CoresetError::shape("subtraction shape mismatch"));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(DenseMatrix::from_row_major_unchecked(
            self.rows, self.cols, data,
        ))
    }

    pub fn frobenius(&self) -> f64 {
        norm2(&self.data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Design matrix `A` (n×d) with response `b` (length n).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionInstance {
    pub design: DenseMatrix,
    pub response: Vec<f64>,
}

impl RegressionInstance {
    pub fn new(design: DenseMatrix, response: Vec<f64>) -> Result<Self> {
        if response.len() != design.rows() {
            return Err(CoresetError::shape(format!(
                "response length {} does not match {} rows",
                response.len(),
                design.rows()
            )));
        }
        if let Some(i) = response.iter().position(|v| !v.is_finite()) {
            return Err(CoresetError::NonFinite {
                row: i,
                col: design.cols(),
            });
        }
        Ok(RegressionInstance { design, response })
    }

    pub fn n(&self) -> usize {
        self.design.rows()
    }

    pub fn d(&self) -> usize {
        self.design.cols()
    }

    /// Errors unless `n ≥ d`.
    pub fn require_tall(&self) -> Result<()> {
        if self.n() < self.d() {
            return Err(CoresetError::shape(format!(
                "instance must be tall, got n={} < d={}",
                self.n(),
                self.d()
            )));
        }
        Ok(())
    }

    /// `A′ = [A b]`.
    pub fn augmented(&self) -> DenseMatrix {
        augment(self)
    }

    /// Split an augmented matrix back into design and response.
    pub fn from_augmented(aprime: &DenseMatrix) -> Result<Self> {
        if aprime.cols() < 2 {
            return Err(CoresetError::shape(
                "augmented matrix needs at least two columns",
            ));
        }
        let d = aprime.cols() - 1;
        let design = aprime.columns(0, d)?;
        let response = aprime.column(d);
        Self::new(design, response)
    }

    /// Residual `Ax − b`.
    pub fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut r = self.design.matvec(x)?;
        for (ri, bi) in r.iter_mut().zip(&self.response) {
            *ri -= bi;
        }
        Ok(r)
    }
}

/// Concatenate `A` and `b` column-wise into `[A b]`.
pub fn augment(instance: &RegressionInstance) -> DenseMatrix {
    let (n, d) = instance.design.shape();
    let mut data = Vec::with_capacity(n * (d + 1));
    for (row, &b) in instance.design.row_iter().zip(&instance.response) {
        data.extend_from_slice(row);
        data.push(b);
    }
    DenseMatrix::from_row_major_unchecked(n, d + 1, data)
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
pub fn norm2(v: &[f64]) -> f64 {
    // scaled accumulation keeps tiny and huge entries from under/overflowing
    let scale = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    scale * v.iter().map(|x| (x / scale).powi(2)).sum::<f64>().sqrt()
}
