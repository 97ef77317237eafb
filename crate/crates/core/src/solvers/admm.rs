//! ADMM for regularized least absolute deviations,
//! `min ‖Ax − b‖₁ + λ‖x‖₁`, split as `z₁ = Ax − b`, `z₂ = x`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_lambda, check_tol, soft_threshold, SolverResult};
use crate::error::{CoresetError, Result};
use crate::matrix::{norm2, Cholesky, DenseMatrix, RegressionInstance};
use crate::objective::ObjectiveSpec;

const OVER_RELAXATION: f64 = 1.6;
const BALANCE_RATIO: f64 = 10.0;
const BALANCE_FACTOR: f64 = 2.0;
/// Residual balancing stops after this many iterations so the final phase
/// runs with a fixed penalty.
const BALANCE_UNTIL: usize = 5_000;
const CHECKPOINT_EVERY: usize = 50;

/// `min ‖Ax − b‖₁ + λ‖x‖₁`.
///
/// Columns are first scaled to unit norm, `Ã = A·D⁻¹` with `y = D·x`, so the
/// penalty becomes `Σ (λ/Dⱼ)|yⱼ|`. The y-update solves
/// `(ÃᵀÃ + I)y = Ãᵀ(b + z₁ − u₁) + z₂ − u₂`, whose matrix does not involve
/// the penalty `ρ`, so one Cholesky factorization serves every iteration even
/// while `ρ` adapts. The returned solution is `D⁻¹z₂`, which carries exact
/// zeros.
pub fn solve_rlad(
    instance: &RegressionInstance,
    lambda: f64,
    tol: f64,
    max_iter: usize,
) -> Result<SolverResult> {
    check_lambda(lambda)?;
    check_tol(tol)?;
    let b = &instance.response;
    let (n, d) = instance.design.shape();
    // zero columns keep unit scale
    let scale: Vec<f64> = (0..d)
        .map(|j| norm2(&instance.design.column(j)))
        .map(|c| if c > 0.0 { c } else { 1.0 })
        .collect();
    let mut scaled = instance.design.clone();
    for i in 0..n {
        for j in 0..d {
            scaled[(i, j)] /= scale[j];
        }
    }
    let a = &scaled;

    let mut system = a.gram();
    for j in 0..d {
        system[(j, j)] += 1.0;
    }
    let chol = Cholesky::new(&system)?;
    let spec = ObjectiveSpec::rlad(lambda)?;

    let mut rho = 1.0_f64;
    let mut z1: Vec<f64> = b.iter().map(|v| -v).collect();
    let mut z2 = vec![0.0; d];
    let mut u1 = vec![0.0; n];
    let mut u2 = vec![0.0; d];
    let b_norm = norm2(b);
    let primal_floor = ((n + d) as f64).sqrt();
    let dual_floor = (d as f64).sqrt();

    let unscale = |y: &[f64]| -> Vec<f64> { y.iter().zip(&scale).map(|(v, c)| v / c).collect() };
    let mut checkpoints = vec![spec.evaluate(instance, &z2)?];
    let mut residual = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;

    for k in 1..=max_iter {
        iterations = k;
        let target1: Vec<f64> = (0..n).map(|i| b[i] + z1[i] - u1[i]).collect();
        let mut rhs = a.t_matvec(&target1)?;
        for j in 0..d {
            rhs[j] += z2[j] - u2[j];
        }
        let x = chol.solve(&rhs);
        let ax = a.matvec(&x)?;

        let z1_old = std::mem::take(&mut z1);
        let z2_old = std::mem::take(&mut z2);
        let a_ = OVER_RELAXATION;
        // relaxed h = α·Mx + (1 − α)(z + c), with c = (b, 0)
        let h1: Vec<f64> = (0..n)
            .map(|i| a_ * ax[i] + (1.0 - a_) * (z1_old[i] + b[i]))
            .collect();
        let h2: Vec<f64> = (0..d).map(|j| a_ * x[j] + (1.0 - a_) * z2_old[j]).collect();
        z1 = (0..n)
            .map(|i| soft_threshold(h1[i] - b[i] + u1[i], 1.0 / rho))
            .collect();
        z2 = (0..d)
            .map(|j| soft_threshold(h2[j] + u2[j], lambda / (rho * scale[j])))
            .collect();
        for i in 0..n {
            u1[i] += h1[i] - z1[i] - b[i];
        }
        for j in 0..d {
            u2[j] += h2[j] - z2[j];
        }

        let r1: Vec<f64> = (0..n).map(|i| ax[i] - z1[i] - b[i]).collect();
        let r2: Vec<f64> = (0..d).map(|j| x[j] - z2[j]).collect();
        let primal = (norm2(&r1).powi(2) + norm2(&r2).powi(2)).sqrt();
        let dz1: Vec<f64> = (0..n).map(|i| z1[i] - z1_old[i]).collect();
        let mut dual_vec = a.t_matvec(&dz1)?;
        for j in 0..d {
            dual_vec[j] += z2[j] - z2_old[j];
        }
        let dual = rho * norm2(&dual_vec);

        let mx_norm = (norm2(&ax).powi(2) + norm2(&x).powi(2)).sqrt();
        let z_norm = (norm2(&z1).powi(2) + norm2(&z2).powi(2)).sqrt();
        let primal_scale = primal_floor + mx_norm.max(z_norm).max(b_norm);
        let mut mtu = a.t_matvec(&u1)?;
        for j in 0..d {
            mtu[j] += u2[j];
        }
        let dual_scale = dual_floor + rho * norm2(&mtu);
        let primal_rel = primal / primal_scale;
        let dual_rel = dual / dual_scale;
        residual = primal_rel.max(dual_rel);

        if k % CHECKPOINT_EVERY == 0 {
            checkpoints.push(spec.evaluate(instance, &unscale(&z2))?);
        }
        if residual < tol {
            converged = true;
            break;
        }
        if k <= BALANCE_UNTIL {
            if primal_rel > BALANCE_RATIO * dual_rel {
                rho *= BALANCE_FACTOR;
                u1.iter_mut()
                    .chain(u2.iter_mut())
                    .for_each(|u| *u /= BALANCE_FACTOR);
            } else if dual_rel > BALANCE_RATIO * primal_rel {
                rho /= BALANCE_FACTOR;
                u1.iter_mut()
                    .chain(u2.iter_mut())
                    .for_each(|u| *u *= BALANCE_FACTOR);
            }
        }
    }
    let solution = unscale(&z2);
    let objective_value = spec.evaluate(instance, &solution)?;
    Ok(SolverResult {
        solution,
        objective_value,
        iterations,
        converged,
        optimality_residual: residual,
        checkpoints,
    })
}

/// Solution of `min ‖AX − B‖₁ + λ‖X‖₁`, one RLAD problem per column of `B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiresponseResult {
    /// `d × k`.
    pub solution: DenseMatrix,
    pub objective_value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub optimality_residual: f64,
    pub columns: Vec<SolverResult>,
}

pub fn solve_multiresponse_rlad(
    a: &DenseMatrix,
    b: &DenseMatrix,
    lambda: f64,
    tol: f64,
    max_iter: usize,
) -> Result<MultiresponseResult> {
    let k = b.cols();
    if k == 0 {
        return Err(CoresetError::invalid(
            "response matrix needs at least one column",
        ));
    }
    if b.rows() != a.rows() {
        return Err(CoresetError::shape(format!(
            "A has {} rows but B has {}",
            a.rows(),
            b.rows()
        )));
    }
    let columns = (0..k)
        .into_par_iter()
        .map(|l| {
            let inst = RegressionInstance::new(a.clone(), b.column(l))?;
            solve_rlad(&inst, lambda, tol, max_iter)
        })
        .collect::<Result<Vec<_>>>()?;
    let d = a.cols();
    let mut solution = DenseMatrix::zeros(d, k);
    for (l, col) in columns.iter().enumerate() {
        for j in 0..d {
            solution[(j, l)] = col.solution[j];
        }
    }
    Ok(MultiresponseResult {
        solution,
        objective_value: columns.iter().map(|c| c.objective_value).sum(),
        iterations: columns.iter().map(|c| c.iterations).max().unwrap_or(0),
        converged: columns.iter().all(|c| c.converged),
        optimality_residual: columns
            .iter()
            .map(|c| c.optimality_residual)
            .fold(0.0, f64::max),
        columns,
    })
}
