use super::{check_lambda, SolverResult};
use crate::error::{CoresetError, Result};
use crate::matrix::{norm2, svd, Cholesky, DenseMatrix, RegressionInstance};
use crate::objective::ObjectiveSpec;

/// Closed-form ridge solution `x = (AᵀA + λI)⁻¹Aᵀb`.
///
/// Tall designs go through the SVD, `x = V·diag(σ/(σ² + λ))·Uᵀb`; wide
/// ones (possible for small coresets) through a Cholesky solve, which then
/// needs `λ > 0`.
pub fn solve_ridge(instance: &RegressionInstance, lambda: f64) -> Result<SolverResult> {
    check_lambda(lambda)?;
    let a = &instance.design;
    let d = instance.d();
    let x = if instance.n() >= d {
        let dec = svd(a)?;
        let smax = dec.sigma_max();
        if lambda == 0.0 && !(dec.sigma_min() > 1e-13 * smax.max(f64::MIN_POSITIVE) * d as f64) {
            return Err(CoresetError::RankDeficiency(
                "unregularized least squares needs a full-rank design".into(),
            ));
        }
        let utb = dec.left.t_matvec(&instance.response)?;
        let coef: Vec<f64> = dec
            .singular_values
            .iter()
            .zip(&utb)
            .map(|(s, c)| {
                if *s == 0.0 {
                    0.0
                } else {
                    s * c / (s * s + lambda)
                }
            })
            .collect();
        dec.right.matvec(&coef)?
    } else {
        if lambda == 0.0 {
            return Err(CoresetError::RankDeficiency(
                "fewer rows than columns with lambda = 0".into(),
            ));
        }
        let mut g = a.gram();
        for j in 0..d {
            g[(j, j)] += lambda;
        }
        Cholesky::new(&g)?.solve(&a.t_matvec(&instance.response)?)
    };
    let residual = normal_equation_residual(a, &instance.response, lambda, &x)?;
    let objective_value = ObjectiveSpec::ridge(lambda)?.evaluate(instance, &x)?;
    Ok(SolverResult {
        solution: x,
        objective_value,
        iterations: 1,
        converged: true,
        optimality_residual: residual,
        checkpoints: Vec::new(),
    })
}

fn normal_equation_residual(a: &DenseMatrix, b: &[f64], lambda: f64, x: &[f64]) -> Result<f64> {
    let atb = a.t_matvec(b)?;
    let ax = a.matvec(x)?;
    let mut lhs = a.t_matvec(&ax)?;
    for (l, xi) in lhs.iter_mut().zip(x) {
        *l += lambda * xi;
    }
    let diff: Vec<f64> = lhs.iter().zip(&atb).map(|(l, r)| l - r).collect();
    Ok(norm2(&diff) / (1.0 + norm2(&atb)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_example() {
        let inst = RegressionInstance::new(DenseMatrix::identity(1), vec![2.0]).unwrap();
        let r = solve_ridge(&inst, 1.0).unwrap();
        assert!((r.solution[0] - 1.0).abs() < 1e-14);
        assert!(r.converged);
    }

    #[test]
    fn square_interpolation() {
        let a = DenseMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let inst = RegressionInstance::new(a, vec![3.0, 5.0]).unwrap();
        let r = solve_ridge(&inst, 0.0).unwrap();
        // 2x + y = 3, x + 3y = 5 → x = 0.8, y = 1.4
        assert!((r.solution[0] - 0.8).abs() < 1e-8);
        assert!((r.solution[1] - 1.4).abs() < 1e-8);
        assert!(r.optimality_residual < 1e-12);
    }

    #[test]
    fn huge_lambda_shrinks_to_zero() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 0.5], vec![0.3, 2.0], vec![1.0, 1.0]]).unwrap();
        let inst = RegressionInstance::new(a.clone(), vec![1.0, -2.0, 0.7]).unwrap();
        let r = solve_ridge(&inst, 1e12).unwrap();
        let atb = norm2(&a.t_matvec(&inst.response).unwrap());
        assert!(norm2(&r.solution) < 1e-9 * atb);
    }

    #[test]
    fn wide_design_uses_cholesky() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0, 3.0]]).unwrap();
        let inst = RegressionInstance::new(a, vec![1.0]).unwrap();
        let r = solve_ridge(&inst, 0.5).unwrap();
        assert!(r.optimality_residual < 1e-12);
        assert!(solve_ridge(&inst, 0.0).is_err());
    }

    #[test]
    fn rank_deficient_zero_lambda() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![2.0, 2.0], vec![3.0, 3.0]]).unwrap();
        let inst = RegressionInstance::new(a, vec![1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(
            solve_ridge(&inst, 0.0),
            Err(CoresetError::RankDeficiency(_))
        ));
        assert!(solve_ridge(&inst, 0.1).is_ok());
    }
}
