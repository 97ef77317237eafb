use serde::{Deserialize, Serialize};

use super::{dot, norm2, DenseMatrix};
use crate::error::{CoresetError, Result};

/// Thin singular value decomposition `M = left · diag(σ) · rightᵀ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvdResult {
    pub left: DenseMatrix,
    pub singular_values: Vec<f64>,
    pub right: DenseMatrix,
}

impl SvdResult {
    pub fn sigma_max(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }

    pub fn sigma_min(&self) -> f64 {
        self.singular_values.last().copied().unwrap_or(0.0)
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        let scaled = self
            .left
            .scale_cols(&self.singular_values)
            .expect("left has one column per singular value");
        scaled
            .matmul(&self.right.transpose())
            .expect("thin svd shapes agree")
    }
}

impl DenseMatrix {
    fn scale_cols(&self, factors: &[f64]) -> Result<DenseMatrix> {
        if factors.len() != self.cols() {
            return Err(CoresetError::shape("column scaling length mismatch"));
        }
        let data = self
            .row_iter()
            .flat_map(|r| r.iter().zip(factors).map(|(v, f)| v * f))
            .collect();
        Ok(DenseMatrix::from_row_major_unchecked(
            self.rows(),
            self.cols(),
            data,
        ))
    }
}

/// Householder thin QR of a tall matrix: `M = Q·R`, `Q` n×d with orthonormal
/// columns and `R` d×d upper triangular with a nonnegative diagonal.
pub fn qr_thin(m: &DenseMatrix) -> Result<(DenseMatrix, DenseMatrix)> {
    let (n, d) = m.shape();
    if n < d {
        return Err(CoresetError::shape(format!(
            "thin QR needs rows >= cols, got {n}x{d}"
        )));
    }
    // column-major working copy
    let mut cols: Vec<Vec<f64>> = (0..d).map(|j| m.column(j)).collect();
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(d);
    for k in 0..d {
        let x = &cols[k][k..];
        let alpha = norm2(x);
        let mut v = x.to_vec();
        if alpha == 0.0 {
            reflectors.push(Vec::new());
            continue;
        }
        let sign = if v[0] >= 0.0 { 1.0 } else { -1.0 };
        v[0] += sign * alpha;
        let vnorm = norm2(&v);
        for vi in v.iter_mut() {
            *vi /= vnorm;
        }
        for col in cols.iter_mut().skip(k) {
            let tail = &mut col[k..];
            let proj = 2.0 * dot(&v, tail);
            for (t, vi) in tail.iter_mut().zip(&v) {
                *t -= proj * vi;
            }
        }
        reflectors.push(v);
    }

    let mut r = DenseMatrix::zeros(d, d);
    for (j, col) in cols.iter().enumerate() {
        for i in 0..=j {
            r[(i, j)] = col[i];
        }
    }

    // Q = H_0 H_1 ... H_{d-1} applied to the first d unit vectors
    let mut q_cols: Vec<Vec<f64>> = (0..d)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();
    for (k, v) in reflectors.iter().enumerate().rev() {
        if v.is_empty() {
            continue;
        }
        for col in q_cols.iter_mut() {
            let tail = &mut col[k..];
            let proj = 2.0 * dot(v, tail);
            for (t, vi) in tail.iter_mut().zip(v) {
                *t -= proj * vi;
            }
        }
    }

    for i in 0..d {
        if r[(i, i)] < 0.0 {
            for j in i..d {
                r[(i, j)] = -r[(i, j)];
            }
            for x in q_cols[i].iter_mut() {
                *x = -*x;
            }
        }
    }

    let mut q = DenseMatrix::zeros(n, d);
    for (j, col) in q_cols.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            q[(i, j)] = v;
        }
    }
    Ok((q, r))
}

const JACOBI_TOL: f64 = 1e-15;
const JACOBI_MAX_SWEEPS: usize = 80;

/// Thin SVD of a tall matrix: Householder QR followed by one-sided Jacobi
/// rotations on the triangular factor.
pub fn svd(m: &DenseMatrix) -> Result<SvdResult> {
    let (n, d) = m.shape();
    if n < d {
        return Err(CoresetError::shape(format!(
            "svd needs rows >= cols, got {n}x{d}"
        )));
    }
    let (q, r) = qr_thin(m)?;

    // columns of W = R·V are driven to mutual orthogonality
    let mut w: Vec<Vec<f64>> = (0..d).map(|j| r.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..d)
        .map(|j| {
            let mut e = vec![0.0; d];
            e[j] = 1.0;
            e
        })
        .collect();

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..d {
            for j in (i + 1)..d {
                let a = dot(&w[i], &w[i]);
                let b = dot(&w[j], &w[j]);
                let g = dot(&w[i], &w[j]);
                if g == 0.0 || g.abs() <= JACOBI_TOL * (a * b).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (b - a) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut w, i, j, c, s);
                rotate(&mut v, i, j, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let sigmas: Vec<f64> = w.iter().map(|c| norm2(c)).collect();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| sigmas[b].total_cmp(&sigmas[a]));

    // below this the left vector w/σ is rounding noise and is completed instead
    let negligible = sigmas[order[0]] * d as f64 * f64::EPSILON;
    let mut u_small: Vec<Vec<f64>> = Vec::with_capacity(d);
    let mut singular_values = Vec::with_capacity(d);
    for &k in &order {
        let s = sigmas[k];
        singular_values.push(s);
        if s > negligible {
            u_small.push(w[k].iter().map(|x| x / s).collect());
        } else {
            u_small.push(Vec::new());
        }
    }
    complete_orthonormal(&mut u_small, d);

    let mut u_r = DenseMatrix::zeros(d, d);
    let mut right = DenseMatrix::zeros(d, d);
    for (col, &k) in order.iter().enumerate() {
        for row in 0..d {
            u_r[(row, col)] = u_small[col][row];
            right[(row, col)] = v[k][row];
        }
    }
    let left = q.matmul(&u_r)?;
    Ok(SvdResult {
        left,
        singular_values,
        right,
    })
}

fn rotate(cols: &mut [Vec<f64>], i: usize, j: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(j);
    let (ci, cj) = (&mut lo[i], &mut hi[0]);
    for (x, y) in ci.iter_mut().zip(cj.iter_mut()) {
        let xi = *x;
        let yj = *y;
        *x = c * xi - s * yj;
        *y = s * xi + c * yj;
    }
}

/// Fill empty slots with unit vectors orthogonal to the filled ones.
fn complete_orthonormal(vectors: &mut [Vec<f64>], dim: usize) {
    let mut candidate = 0;
    for slot in 0..vectors.len() {
        if !vectors[slot].is_empty() {
            continue;
        }
        while candidate < dim {
            let mut e = vec![0.0; dim];
            e[candidate] = 1.0;
            candidate += 1;
            for _ in 0..2 {
                for other in vectors.iter().filter(|o| !o.is_empty()) {
                    let p = dot(&e, other);
                    for (x, o) in e.iter_mut().zip(other) {
                        *x -= p * o;
                    }
                }
            }
            let nrm = norm2(&e);
            if nrm > 1e-8 {
                vectors[slot] = e.into_iter().map(|x| x / nrm).collect();
                break;
            }
        }
    }
}

/// Solve `R x = b` for upper triangular `R`.
pub fn solve_upper(r: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let d = r.rows();
    if r.cols() != d || b.len() != d {
        return Err(CoresetError::shape("triangular solve shape mismatch"));
    }
    let mut x = b.to_vec();
    for i in (0..d).rev() {
        let diag = r[(i, i)];
        if diag == 0.0 {
            return Err(CoresetError::RankDeficiency(format!(
                "zero pivot at {i} in triangular solve"
            )));
        }
        let s: f64 = ((i + 1)..d).map(|j| r[(i, j)] * x[j]).sum();
        x[i] = (x[i] - s) / diag;
    }
    Ok(x)
}

/// Inverse of an upper triangular matrix.
pub fn upper_inverse(r: &DenseMatrix) -> Result<DenseMatrix> {
    let d = r.rows();
    let mut inv = DenseMatrix::zeros(d, d);
    for j in 0..d {
        let mut e = vec![0.0; d];
        e[j] = 1.0;
        let col = solve_upper(r, &e)?;
        for (i, v) in col.into_iter().enumerate() {
            inv[(i, j)] = v;
        }
    }
    Ok(inv)
}

/// Cholesky factor of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    lower: DenseMatrix,
}

impl Cholesky {
    pub fn new(a: &DenseMatrix) -> Result<Self> {
        let d = a.rows();
        if a.cols() != d {
            return Err(CoresetError::shape("cholesky needs a square matrix"));
        }
        let mut l = DenseMatrix::zeros(d, d);
        for j in 0..d {
            let mut diag = a[(j, j)];
            for k in 0..j {
                diag -= l[(j, k)] * l[(j, k)];
            }
            if diag <= 0.0 || !diag.is_finite() {
                return Err(CoresetError::RankDeficiency(format!(
                    "matrix not positive definite at pivot {j}"
                )));
            }
            let ljj = diag.sqrt();
            l[(j, j)] = ljj;
            for i in (j + 1)..d {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / ljj;
            }
        }
        Ok(Cholesky { lower: l })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let l = &self.lower;
        let d = l.rows();
        let mut y = b.to_vec();
        for i in 0..d {
            let s: f64 = (0..i).map(|k| l[(i, k)] * y[k]).sum();
            y[i] = (y[i] - s) / l[(i, i)];
        }
        for i in (0..d).rev() {
            let s: f64 = ((i + 1)..d).map(|k| l[(k, i)] * y[k]).sum();
            y[i] = (y[i] - s) / l[(i, i)];
        }
        y
    }
}

pub fn cholesky_solve(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    Ok(Cholesky::new(a)?.solve(b))
}
