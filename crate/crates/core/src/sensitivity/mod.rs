//! Per-row sensitivity upper bounds, ridge leverage scores and the uniform
//! baseline.
//!
//! For the `ℓp + ℓp` objective on `A′ = [A b] = U·V` with `U` an
//! `(α, β, p)` well-conditioned basis, row `i` satisfies
//!
//! ```text
//! sᵢ ≤ β^p ‖uᵢ‖_p^p / (1 + λ / ‖A′‖₍p₎^p) + 1/n
//! ```
//!
//! so the total is at most `(αβ)^p / (1 + λ/‖A′‖₍p₎^p) + 1`, shrinking as
//! `λ` grows.

mod oracle;

pub use oracle::{brute_force_multiresponse_sensitivity, brute_force_sensitivity};

use serde::{Deserialize, Serialize};

use crate::conditioning::WellConditionedBasis;
use crate::error::{CoresetError, Result};
use crate::matrix::{induced_norm_upper, svd, DenseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    LpLpBound,
    RladBound,
    MultiresponseRladBound,
    RidgeLeverage,
    Uniform,
    BruteForce,
    /// Full data with unit weights.
    Identity,
    /// Hand-assembled coreset.
    Manual,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::LpLpBound => "lp_lp_bound",
            Scheme::RladBound => "rlad_bound",
            Scheme::MultiresponseRladBound => "multiresponse_rlad_bound",
            Scheme::RidgeLeverage => "ridge_leverage",
            Scheme::Uniform => "uniform",
            Scheme::BruteForce => "brute_force",
            Scheme::Identity => "identity",
            Scheme::Manual => "manual",
        }
    }
}

/// Per-row sensitivity values and their sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityScores {
    pub values: Vec<f64>,
    pub total: f64,
    pub scheme: Scheme,
    pub lambda: f64,
    pub p: f64,
}

impl SensitivityScores {
    /// Bound-type schemes must be strictly positive; leverage and oracle
    /// values may be zero on all-zero rows.
    pub fn new(values: Vec<f64>, scheme: Scheme, lambda: f64, p: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(CoresetError::InvalidScores("no scores".into()));
        }
        let strict = !matches!(scheme, Scheme::RidgeLeverage | Scheme::BruteForce);
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() || v < 0.0 || (strict && v == 0.0) {
                return Err(CoresetError::InvalidScores(format!(
                    "score {v} at row {i} is not valid for scheme {}",
                    scheme.name()
                )));
            }
        }
        let total = values.iter().sum();
        Ok(SensitivityScores {
            values,
            total,
            scheme,
            lambda,
            p,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Sampling probabilities `sᵢ / S`.
    pub fn probabilities(&self) -> Vec<f64> {
        self.values.iter().map(|v| v / self.total).collect()
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(CoresetError::invalid(format!(
            "lambda={lambda} must be finite and >= 0"
        )));
    }
    Ok(())
}

fn bound_values(
    basis: &WellConditionedBasis,
    lambda: f64,
    induced_power: f64,
    n: usize,
) -> Vec<f64> {
    let shrink = 1.0 + lambda / induced_power;
    let beta_p = basis.beta.powf(basis.p);
    let floor = 1.0 / n as f64;
    basis
        .row_p_powers()
        .into_iter()
        .map(|u| beta_p * u / shrink + floor)
        .collect()
}

/// Sensitivity bounds for `‖Ax − b‖_p^p + λ‖x‖_p^p` from a well-conditioned
/// basis of `A′` and (an upper bound on) `‖A′‖₍p₎`.
pub fn lp_lp_sensitivity_bounds(
    basis: &WellConditionedBasis,
    lambda: f64,
    induced_p_norm_aprime: f64,
    n: usize,
) -> Result<SensitivityScores> {
    check_lambda(lambda)?;
    if !(induced_p_norm_aprime > 0.0) {
        return Err(CoresetError::invalid("induced norm of A′ must be positive"));
    }
    if n != basis.n() {
        return Err(CoresetError::shape(format!(
            "n={n} does not match basis with {} rows",
            basis.n()
        )));
    }
    let p = basis.p;
    let values = bound_values(basis, lambda, induced_p_norm_aprime.powf(p), n);
    let scores = SensitivityScores::new(values, Scheme::LpLpBound, lambda, p)?;
    debug_assert!(
        scores.total
            <= (basis.alpha * basis.beta).powf(p) / (1.0 + lambda / induced_p_norm_aprime.powf(p))
                * (1.0 + 1e-12)
                + 1.0
                + 1e-12
    );
    Ok(scores)
}

/// Bounds for `‖Ax − b‖₁ + λ‖x‖₁`, using the exact `‖A′‖₍₁₎` (max absolute
/// column sum).
pub fn rlad_sensitivity_bounds(
    basis: &WellConditionedBasis,
    lambda: f64,
    aprime: &DenseMatrix,
) -> Result<SensitivityScores> {
    if basis.p != 1.0 {
        return Err(CoresetError::SchemeMismatch {
            expected: "basis with p = 1".into(),
            found: format!("p = {}", basis.p),
        });
    }
    let induced = induced_norm_upper(aprime, 1.0)?;
    let mut scores = lp_lp_sensitivity_bounds(basis, lambda, induced, aprime.rows())?;
    scores.scheme = Scheme::RladBound;
    Ok(scores)
}

/// Multiresponse bounds together with both candidate induced norms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiresponseSensitivity {
    pub scores: SensitivityScores,
    /// `‖A‖₍₁₎` over the design block; this is the norm the bound uses.
    pub design_induced_norm: f64,
    /// `‖Â‖₍₁₎` over `[A −B]`, reported for comparison.
    pub augmented_induced_norm: f64,
}

/// Bounds for `‖AX − B‖₁ + λ‖X‖₁` from a `p = 1` basis of `Â = [A −B]`.
///
/// The shrinkage denominator uses `‖A‖₍₁₎` over the first `d` columns of
/// `Â`; `‖Â‖₍₁₎` is carried alongside.
pub fn multiresponse_rlad_sensitivity_bounds(
    basis_of_ahat: &WellConditionedBasis,
    lambda: f64,
    ahat: &DenseMatrix,
    k: usize,
) -> Result<MultiresponseSensitivity> {
    check_lambda(lambda)?;
    if k < 1 {
        return Err(CoresetError::invalid("need at least one response column"));
    }
    if basis_of_ahat.p != 1.0 {
        return Err(CoresetError::SchemeMismatch {
            expected: "basis with p = 1".into(),
            found: format!("p = {}", basis_of_ahat.p),
        });
    }
    let cols = ahat.cols();
    if k >= cols {
        return Err(CoresetError::shape(format!(
            "k={k} leaves no design columns in a matrix with {cols} columns"
        )));
    }
    if ahat.rows() != basis_of_ahat.n() {
        return Err(CoresetError::shape("basis and matrix row counts differ"));
    }
    let design = ahat.columns(0, cols - k)?;
    let design_induced_norm = induced_norm_upper(&design, 1.0)?;
    let augmented_induced_norm = induced_norm_upper(ahat, 1.0)?;
    if !(design_induced_norm > 0.0) {
        return Err(CoresetError::invalid("design block is identically zero"));
    }
    let values = bound_values(basis_of_ahat, lambda, design_induced_norm, ahat.rows());
    let scores = SensitivityScores::new(values, Scheme::MultiresponseRladBound, lambda, 1.0)?;
    Ok(MultiresponseSensitivity {
        scores,
        design_induced_norm,
        augmented_induced_norm,
    })
}

/// Ridge leverage scores `a′ᵢᵀ(A′ᵀA′ + λI)⁻¹a′ᵢ`, via the thin SVD of `A′`.
pub fn ridge_leverage_scores(aprime: &DenseMatrix, lambda: f64) -> Result<SensitivityScores> {
    check_lambda(lambda)?;
    let dec = svd(aprime)?;
    let smax = dec.sigma_max();
    if lambda == 0.0 && !(dec.sigma_min() > 1e-12 * smax * aprime.cols() as f64) {
        return Err(CoresetError::RankDeficiency(
            "ordinary leverage scores need a full-rank matrix".into(),
        ));
    }
    let shrink: Vec<f64> = dec
        .singular_values
        .iter()
        .map(|s| {
            if *s == 0.0 {
                0.0
            } else {
                s * s / (s * s + lambda)
            }
        })
        .collect();
    let values = dec
        .left
        .row_iter()
        .map(|u| u.iter().zip(&shrink).map(|(x, f)| x * x * f).sum())
        .collect();
    SensitivityScores::new(values, Scheme::RidgeLeverage, lambda, 2.0)
}

/// The uniform baseline `1/n`.
pub fn uniform_scores(n: usize) -> Result<SensitivityScores> {
    if n == 0 {
        return Err(CoresetError::invalid("n must be >= 1"));
    }
    let mut s = SensitivityScores::new(vec![1.0 / n as f64; n], Scheme::Uniform, 0.0, 0.0)?;
    s.total = 1.0;
    Ok(s)
}
