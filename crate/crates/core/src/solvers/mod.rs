//! Solvers for every objective family, on full data or on coresets.

mod admm;
mod irls;
mod proximal;
mod ridge;

pub use admm::{solve_multiresponse_rlad, solve_rlad, MultiresponseResult};
pub use irls::{solve_lp_lp, IRLS_SMOOTHING};
pub use proximal::{prox_squared_l1, soft_threshold, solve_lasso, solve_modified_lasso};
pub use ridge::solve_ridge;

use serde::{Deserialize, Serialize};

use crate::error::{CoresetError, Result};
use crate::matrix::RegressionInstance;
use crate::objective::{Family, ObjectiveSpec};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 200_000;
/// Default cut-off below which a coordinate counts as zero.
pub const SPARSITY_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverResult {
    pub solution: Vec<f64>,
    pub objective_value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub optimality_residual: f64,
    /// Objective values recorded every few iterations, where the solver keeps them.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checkpoints: Vec<f64>,
}

/// `‖Ax − b‖_p^r + λ‖x‖_q^s`.
pub fn evaluate_objective(
    instance: &RegressionInstance,
    x: &[f64],
    spec: &ObjectiveSpec,
) -> Result<f64> {
    if x.len() != instance.d() {
        return Err(CoresetError::shape(format!(
            "solution of length {} for d={}",
            x.len(),
            instance.d()
        )));
    }
    spec.evaluate(instance, x)
}

/// Number of coordinates with `|xⱼ| < threshold`.
pub fn sparsity_count(x: &[f64], threshold: f64) -> usize {
    x.iter().filter(|v| v.abs() < threshold).count()
}

pub(crate) fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0) {
        return Err(CoresetError::invalid(format!("tol={tol} must be positive")));
    }
    Ok(())
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(CoresetError::invalid(format!(
            "lambda={lambda} must be finite and >= 0"
        )));
    }
    Ok(())
}

/// Dispatch on the objective family. `p` is only read for [`Family::LpLp`].
pub fn solve(
    instance: &RegressionInstance,
    spec: &ObjectiveSpec,
    tol: f64,
    max_iter: usize,
) -> Result<SolverResult> {
    spec.validate()?;
    match spec.family {
        Family::Ridge => solve_ridge(instance, spec.lambda),
        Family::Lasso => solve_lasso(instance, spec.lambda, tol, max_iter),
        Family::ModifiedLasso => solve_modified_lasso(instance, spec.lambda, tol, max_iter),
        Family::Rlad => solve_rlad(instance, spec.lambda, tol, max_iter),
        Family::LpLp => solve_lp_lp(instance, spec.p, spec.lambda, tol, max_iter),
        Family::MultiresponseRlad | Family::General => Err(CoresetError::invalid(format!(
            "no single-response solver for family {}",
            spec.family.name()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sparsity_examples() {
        assert_eq!(sparsity_count(&[0.0, 1e-7, 0.5], 1e-6), 2);
        assert_eq!(sparsity_count(&[0.0; 5], 1e-6), 5);
        assert_eq!(sparsity_count(&[1e-6, -1e-6], 1e-6), 0);
    }

    #[test]
    fn evaluate_shape_error() {
        let inst = RegressionInstance::new(crate::matrix::DenseMatrix::identity(2), vec![0.0, 0.0])
            .unwrap();
        assert!(matches!(
            evaluate_objective(&inst, &[1.0], &ObjectiveSpec::ridge(1.0).unwrap()),
            Err(CoresetError::Shape(_))
        ));
    }
}
