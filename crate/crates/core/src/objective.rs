//! The regularized regression objective `‖Ax − b‖_p^r + λ‖x‖_q^s`.

use serde::{Deserialize, Serialize};

use crate::error::{CoresetError, Result};
use crate::matrix::{vector_p_norm, RegressionInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `‖Ax − b‖_p^p + λ‖x‖_p^p`
    LpLp,
    Ridge,
    Lasso,
    ModifiedLasso,
    Rlad,
    MultiresponseRlad,
    /// Any other exponent combination.
    General,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::LpLp => "lp_lp",
            Family::Ridge => "ridge",
            Family::Lasso => "lasso",
            Family::ModifiedLasso => "modified_lasso",
            Family::Rlad => "rlad",
            Family::MultiresponseRlad => "multiresponse_rlad",
            Family::General => "general",
        }
    }

    /// Fixed `(p, q, r, s)` for families that pin all four exponents.
    fn exponents(self) -> Option<(f64, f64, f64, f64)> {
        match self {
            Family::Ridge => Some((2.0, 2.0, 2.0, 2.0)),
            Family::Lasso => Some((2.0, 1.0, 2.0, 1.0)),
            Family::ModifiedLasso => Some((2.0, 1.0, 2.0, 2.0)),
            Family::Rlad | Family::MultiresponseRlad => Some((1.0, 1.0, 1.0, 1.0)),
            Family::LpLp | Family::General => None,
        }
    }
}

impl std::str::FromStr for Family {
    type Err = CoresetError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.replace('-', "_").as_str() {
            "lp_lp" => Family::LpLp,
            "ridge" => Family::Ridge,
            "lasso" => Family::Lasso,
            "modified_lasso" => Family::ModifiedLasso,
            "rlad" => Family::Rlad,
            "multiresponse_rlad" => Family::MultiresponseRlad,
            "general" => Family::General,
            other => return Err(CoresetError::invalid(format!("unknown family '{other}'"))),
        })
    }
}

/// Exponents and regularization weight of `‖Ax − b‖_p^r + λ‖x‖_q^s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub s: f64,
    pub lambda: f64,
    pub family: Family,
}

impl ObjectiveSpec {
    pub fn new(p: f64, q: f64, r: f64, s: f64, lambda: f64, family: Family) -> Result<Self> {
        let spec = ObjectiveSpec {
            p,
            q,
            r,
            s,
            lambda,
            family,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p >= 1.0) || !(self.q >= 1.0) {
            return Err(CoresetError::invalid(format!(
                "norm exponents must be >= 1, got p={} q={}",
                self.p, self.q
            )));
        }
        if !(self.r > 0.0) || !(self.s > 0.0) {
            return Err(CoresetError::invalid("powers r and s must be positive"));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(CoresetError::invalid(format!(
                "lambda={} must be finite and >= 0",
                self.lambda
            )));
        }
        let consistent = match self.family.exponents() {
            Some(e) => e == (self.p, self.q, self.r, self.s),
            None if self.family == Family::LpLp => {
                self.q == self.p && self.r == self.p && self.s == self.p
            }
            None => true,
        };
        if !consistent {
            return Err(CoresetError::invalid(format!(
                "exponents ({}, {}, {}, {}) inconsistent with family {}",
                self.p,
                self.q,
                self.r,
                self.s,
                self.family.name()
            )));
        }
        Ok(())
    }

    pub fn for_family(family: Family, lambda: f64) -> Result<Self> {
        match family.exponents() {
            Some((p, q, r, s)) => Self::new(p, q, r, s, lambda, family),
            None => Err(CoresetError::invalid(format!(
                "family {} needs explicit exponents",
                family.name()
            ))),
        }
    }

    /// [`ObjectiveSpec::for_family`], taking the exponent from `p` for [`Family::LpLp`].
    pub fn with_exponent(family: Family, p: f64, lambda: f64) -> Result<Self> {
        match family {
            Family::LpLp => Self::lp_lp(p, lambda),
            f => Self::for_family(f, lambda),
        }
    }

    pub fn ridge(lambda: f64) -> Result<Self> {
        Self::for_family(Family::Ridge, lambda)
    }

    pub fn lasso(lambda: f64) -> Result<Self> {
        Self::for_family(Family::Lasso, lambda)
    }

    pub fn modified_lasso(lambda: f64) -> Result<Self> {
        Self::for_family(Family::ModifiedLasso, lambda)
    }

    pub fn rlad(lambda: f64) -> Result<Self> {
        Self::for_family(Family::Rlad, lambda)
    }

    pub fn lp_lp(p: f64, lambda: f64) -> Result<Self> {
        Self::new(p, p, p, p, lambda, Family::LpLp)
    }

    /// `‖Ax − b‖_p^r` given the residual.
    pub fn loss_from_residual(&self, residual: &[f64]) -> f64 {
        power_of_norm(residual, self.p, self.r)
    }

    /// `λ‖x‖_q^s`.
    pub fn regularizer(&self, x: &[f64]) -> f64 {
        if self.lambda == 0.0 {
            return 0.0;
        }
        self.lambda * power_of_norm(x, self.q, self.s)
    }

    pub fn evaluate(&self, instance: &RegressionInstance, x: &[f64]) -> Result<f64> {
        let residual = instance.residual(x)?;
        Ok(self.loss_from_residual(&residual) + self.regularizer(x))
    }
}

/// `‖v‖_p^r`, computed as `Σ|vᵢ|^p` directly when `r = p`.
pub(crate) fn power_of_norm(v: &[f64], p: f64, r: f64) -> f64 {
    if r == p {
        if p == 1.0 {
            v.iter().map(|x| x.abs()).sum()
        } else if p == 2.0 {
            v.iter().map(|x| x * x).sum()
        } else {
            v.iter().map(|x| x.abs().powf(p)).sum()
        }
    } else {
        vector_p_norm(v, p).powf(r)
    }
}
