//! FISTA for the lasso and the modified lasso `‖Ax − b‖₂² + λ‖x‖₁²`.
//!
//! The smooth part is handled through the Gram matrix `AᵀA`, so every
//! iteration costs `O(d²)` regardless of `n`. A step that would increase the
//! objective is rejected and the momentum restarted, which keeps the
//! accepted iterates monotone.

use super::{check_lambda, check_tol, SolverResult};
use crate::error::Result;
use crate::matrix::{dot, norm2, svd, DenseMatrix, RegressionInstance};
use crate::objective::ObjectiveSpec;

const CHECKPOINT_EVERY: usize = 10;
const DECREASE_WINDOW: usize = 10;

pub fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// `argmin_x ½‖x − v‖₂² + t‖x‖₁²`.
///
/// All surviving coordinates share one threshold `θ = 2t‖x‖₁`. Sorting
/// `|v|` in decreasing order, the active set is the longest prefix `K` with
/// `|v|_(k) > θ_K`, where `θ_K = 2t·Σ_K|vᵢ| / (1 + 2t|K|)`.
pub fn prox_squared_l1(v: &[f64], t: f64) -> Vec<f64> {
    assert!(t >= 0.0, "prox weight must be non-negative");
    if t == 0.0 {
        return v.to_vec();
    }
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let mut theta = 0.0;
    let mut prefix = 0.0;
    for (k, &m) in mags.iter().enumerate() {
        let candidate_sum = prefix + m;
        let candidate = 2.0 * t * candidate_sum / (1.0 + 2.0 * t * (k + 1) as f64);
        if m > candidate {
            prefix = candidate_sum;
            theta = candidate;
        } else {
            break;
        }
    }
    v.iter().map(|&x| soft_threshold(x, theta)).collect()
}

#[derive(Clone, Copy)]
enum Penalty {
    L1(f64),
    SquaredL1(f64),
}

impl Penalty {
    fn value(self, x: &[f64]) -> f64 {
        let l1: f64 = x.iter().map(|v| v.abs()).sum();
        match self {
            Penalty::L1(lambda) => lambda * l1,
            Penalty::SquaredL1(lambda) => lambda * l1 * l1,
        }
    }

    /// `pen(z) − pen(x)` from coordinatewise differences of `|·|`.
    fn difference(self, z: &[f64], x: &[f64]) -> f64 {
        let gap: f64 = z.iter().zip(x).map(|(a, b)| a.abs() - b.abs()).sum();
        match self {
            Penalty::L1(lambda) => lambda * gap,
            Penalty::SquaredL1(lambda) => {
                let total: f64 = z.iter().chain(x).map(|v| v.abs()).sum();
                lambda * gap * total
            }
        }
    }

    fn prox(self, v: &[f64], step: f64) -> Vec<f64> {
        match self {
            Penalty::L1(lambda) => v
                .iter()
                .map(|&x| soft_threshold(x, step * lambda))
                .collect(),
            Penalty::SquaredL1(lambda) => prox_squared_l1(v, step * lambda),
        }
    }

    /// Effective per-coordinate subgradient scale: `λ` for `λ‖x‖₁`,
    /// `2λ‖x‖₁` for `λ‖x‖₁²`.
    fn scale(self, x: &[f64]) -> f64 {
        match self {
            Penalty::L1(lambda) => lambda,
            Penalty::SquaredL1(lambda) => 2.0 * lambda * x.iter().map(|v| v.abs()).sum::<f64>(),
        }
    }
}

struct LeastSquares {
    gram: DenseMatrix,
    atb: Vec<f64>,
    btb: f64,
    lipschitz: f64,
}

impl LeastSquares {
    fn new(instance: &RegressionInstance) -> Result<Self> {
        let gram = instance.design.gram();
        let atb = instance.design.t_matvec(&instance.response)?;
        let btb = dot(&instance.response, &instance.response);
        let top = svd(&gram)?.sigma_max();
        let lipschitz = if top > 0.0 { 2.0 * top } else { 1.0 };
        Ok(LeastSquares {
            gram,
            atb,
            btb,
            lipschitz,
        })
    }

    fn gx(&self, x: &[f64]) -> Vec<f64> {
        self.gram.matvec(x).expect("gram is d×d")
    }

    /// `‖Ax − b‖²` expanded through the Gram matrix.
    fn value(&self, x: &[f64]) -> f64 {
        let gx = self.gx(x);
        (dot(x, &gx) - 2.0 * dot(x, &self.atb) + self.btb).max(0.0)
    }

    /// `‖Az − b‖² − ‖Ax − b‖² = (z − x)ᵀ(G(z + x) − 2Aᵀb)`; the error
    /// scales with `‖z − x‖` rather than with `‖b‖²`.
    fn difference(&self, z: &[f64], x: &[f64]) -> f64 {
        let sum: Vec<f64> = z.iter().zip(x).map(|(a, b)| a + b).collect();
        let g_sum = self.gx(&sum);
        z.iter()
            .zip(x)
            .zip(g_sum.iter().zip(&self.atb))
            .map(|((zi, xi), (gs, c))| (zi - xi) * (gs - 2.0 * c))
            .sum()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.gx(x)
            .iter()
            .zip(&self.atb)
            .map(|(g, c)| 2.0 * (g - c))
            .collect()
    }
}

/// `dist(0, ∂F(x)) / (1 + ‖Aᵀb‖₂)`.
fn subgradient_residual(ls: &LeastSquares, penalty: Penalty, x: &[f64]) -> f64 {
    let g = ls.gradient(x);
    let mu = penalty.scale(x);
    let dist: Vec<f64> = g
        .iter()
        .zip(x)
        .map(|(&gj, &xj)| {
            if xj > 0.0 {
                gj + mu
            } else if xj < 0.0 {
                gj - mu
            } else {
                (gj.abs() - mu).max(0.0)
            }
        })
        .collect();
    norm2(&dist) / (1.0 + norm2(&ls.atb))
}

fn fista(
    instance: &RegressionInstance,
    penalty: Penalty,
    spec: ObjectiveSpec,
    tol: f64,
    max_iter: usize,
) -> Result<SolverResult> {
    let ls = LeastSquares::new(instance)?;
    let d = instance.d();
    let step = 1.0 / ls.lipschitz;
    let mut x = vec![0.0; d];
    let mut y = x.clone();
    let mut t = 1.0_f64;
    let mut fx = ls.value(&x) + penalty.value(&x);
    let mut history = vec![fx];
    let mut checkpoints = vec![fx];
    let mut converged = false;
    let mut residual = subgradient_residual(&ls, penalty, &x);
    let mut iterations = 0;

    for k in 1..=max_iter {
        iterations = k;
        let grad = ls.gradient(&y);
        let forward: Vec<f64> = y.iter().zip(&grad).map(|(yi, gi)| yi - step * gi).collect();
        let z = penalty.prox(&forward, step);
        let change = ls.difference(&z, &x) + penalty.difference(&z, &x);
        if change > 0.0 {
            // restart: drop momentum and take a plain proximal step from x
            t = 1.0;
            y.clone_from(&x);
        } else {
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let momentum = (t - 1.0) / t_next;
            y = z
                .iter()
                .zip(&x)
                .map(|(zi, xi)| zi + momentum * (zi - xi))
                .collect();
            x = z;
            fx += change;
            t = t_next;
        }
        history.push(fx);
        if k % CHECKPOINT_EVERY == 0 {
            checkpoints.push(fx);
        }
        if k >= DECREASE_WINDOW {
            let old = history[k - DECREASE_WINDOW];
            let rel_decrease = (old - fx) / fx.abs().max(f64::MIN_POSITIVE);
            if rel_decrease < tol {
                residual = subgradient_residual(&ls, penalty, &x);
                if residual < tol {
                    converged = true;
                    break;
                }
            }
        }
    }
    if !converged {
        residual = subgradient_residual(&ls, penalty, &x);
    }
    let objective_value = spec.evaluate(instance, &x)?;
    Ok(SolverResult {
        solution: x,
        objective_value,
        iterations,
        converged,
        optimality_residual: residual,
        checkpoints,
    })
}

/// `min ‖Ax − b‖₂² + λ‖x‖₁` by FISTA with soft-thresholding.
pub fn solve_lasso(
    instance: &RegressionInstance,
    lambda: f64,
    tol: f64,
    max_iter: usize,
) -> Result<SolverResult> {
    check_lambda(lambda)?;
    check_tol(tol)?;
    fista(
        instance,
        Penalty::L1(lambda),
        ObjectiveSpec::lasso(lambda)?,
        tol,
        max_iter,
    )
}

/// `min ‖Ax − b‖₂² + λ‖x‖₁²` by FISTA with the exact squared-ℓ1 prox.
pub fn solve_modified_lasso(
    instance: &RegressionInstance,
    lambda: f64,
    tol: f64,
    max_iter: usize,
) -> Result<SolverResult> {
    check_lambda(lambda)?;
    check_tol(tol)?;
    fista(
        instance,
        Penalty::SquaredL1(lambda),
        ObjectiveSpec::modified_lasso(lambda)?,
        tol,
        max_iter,
    )
}
