use super::{svd, DenseMatrix};
use crate::error::{CoresetError, Result};

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0) {
        return Err(CoresetError::invalid(format!(
            "norm exponent p={p} must be >= 1"
        )));
    }
    Ok(())
}

/// `‖v‖_p` of a vector; `p = ∞` gives the max-abs norm.
pub fn vector_p_norm(v: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return v.iter().fold(0.0, |m, x| m.max(x.abs()));
    }
    if p == 2.0 {
        return super::norm2(v);
    }
    if p == 1.0 {
        return v.iter().map(|x| x.abs()).sum();
    }
    let scale = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    scale
        * v.iter()
            .map(|x| (x.abs() / scale).powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
}

/// Entrywise norm `(Σᵢⱼ |mᵢⱼ|^p)^(1/p)`.
pub fn entrywise_p_norm(m: &DenseMatrix, p: f64) -> Result<f64> {
    check_p(p)?;
    Ok(vector_p_norm(m.as_slice(), p))
}

fn max_column_abs_sum(m: &DenseMatrix) -> f64 {
    let mut sums = vec![0.0; m.cols()];
    for row in m.row_iter() {
        for (s, v) in sums.iter_mut().zip(row) {
            *s += v.abs();
        }
    }
    sums.into_iter().fold(0.0, f64::max)
}

fn max_row_abs_sum(m: &DenseMatrix) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn spectral_norm(m: &DenseMatrix) -> Result<f64> {
    if m.rows() >= m.cols() {
        Ok(svd(m)?.sigma_max())
    } else {
        Ok(svd(&m.transpose())?.sigma_max())
    }
}

/// Induced operator norm `sup ‖Mx‖_p / ‖x‖_p`.
///
/// Exact for `p ∈ {1, 2, ∞}`. For any other `p` this returns the
/// Riesz–Thorin bound `‖M‖₍₁₎^(1/p) · ‖M‖₍∞₎^(1−1/p)`, which is never below
/// the true value.
pub fn induced_norm_upper(m: &DenseMatrix, p: f64) -> Result<f64> {
    check_p(p)?;
    if p == 1.0 {
        Ok(max_column_abs_sum(m))
    } else if p == 2.0 {
        spectral_norm(m)
    } else if p.is_infinite() {
        Ok(max_row_abs_sum(m))
    } else {
        let one = max_column_abs_sum(m);
        let inf = max_row_abs_sum(m);
        Ok(one.powf(1.0 / p) * inf.powf(1.0 - 1.0 / p))
    }
}

/// `sd_λ = Σⱼ 1 / (1 + λ/σⱼ²)`.
pub fn statistical_dimension(singular_values: &[f64], lambda: f64) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(CoresetError::invalid(format!(
            "lambda={lambda} must be >= 0"
        )));
    }
    if singular_values.is_empty() {
        return Err(CoresetError::shape("empty spectrum"));
    }
    if let Some(s) = singular_values.iter().find(|s| !(**s > 0.0)) {
        return Err(CoresetError::RankDeficiency(format!(
            "singular value {s} is not positive"
        )));
    }
    Ok(singular_values
        .iter()
        .map(|s| s * s / (s * s + lambda))
        .sum())
}
