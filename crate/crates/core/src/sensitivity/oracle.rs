//! Brute-force sensitivity by exhaustive evaluation over a fixed query grid.
//!
//! Every value returned here is a ratio actually attained at some query, so
//! it never exceeds the true supremum. Only usable for `d + 1 ≤ 3`.

use rayon::prelude::*;

use super::{Scheme, SensitivityScores};
use crate::error::{CoresetError, Result};
use crate::matrix::{dot, vector_p_norm, DenseMatrix, RegressionInstance};
use crate::objective::{power_of_norm, ObjectiveSpec};

const MIN_RESOLUTION: usize = 16;

fn sphere_directions(m: usize, res: usize) -> Vec<Vec<f64>> {
    use std::f64::consts::PI;
    match m {
        1 => vec![vec![1.0]],
        // ratios are even in x′, so half the circle suffices
        2 => (0..res)
            .map(|k| {
                let t = PI * k as f64 / res as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        _ => {
            let mut out = Vec::with_capacity(res * (res + 1));
            for a in 0..res {
                let theta = PI * a as f64 / res as f64;
                for b in 0..=res {
                    let phi = PI * b as f64 / res as f64;
                    out.push(vec![
                        phi.sin() * theta.cos(),
                        phi.sin() * theta.sin(),
                        phi.cos(),
                    ]);
                }
            }
            out
        }
    }
}

fn full_circle(d: usize, res: usize) -> Vec<Vec<f64>> {
    use std::f64::consts::PI;
    match d {
        1 => vec![vec![1.0], vec![-1.0]],
        _ => (0..2 * res)
            .map(|k| {
                let t = PI * k as f64 / res as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
    }
}

fn log_radii(levels: usize) -> Vec<f64> {
    match levels {
        0 => Vec::new(),
        1 => vec![1.0],
        _ => (0..levels)
            .map(|k| 10f64.powf(-3.0 + 6.0 * k as f64 / (levels - 1) as f64))
            .collect(),
    }
}

/// Per-row maxima of the sensitivity ratio
/// `(|a′ᵢᵀx′|^p + λ‖x′‖_q^s / n) / (Σⱼ|a′ⱼᵀx′|^p + λ‖x′‖_q^s)` over a
/// direction grid on the unit sphere of `ℝ^(d+1)` plus a log-radius sweep
/// over regression queries `x′ = (x, −1)`.
pub fn brute_force_sensitivity(
    instance: &RegressionInstance,
    spec: &ObjectiveSpec,
    grid_resolution: usize,
    radius_levels: usize,
) -> Result<SensitivityScores> {
    spec.validate()?;
    let m = instance.d() + 1;
    if m > 3 {
        return Err(CoresetError::DimensionTooLarge(m));
    }
    if grid_resolution < MIN_RESOLUTION {
        return Err(CoresetError::invalid(format!(
            "grid_resolution must be >= {MIN_RESOLUTION}"
        )));
    }
    if spec.r != spec.p {
        return Err(CoresetError::invalid(
            "brute-force sensitivity needs a row-separable loss (r = p)",
        ));
    }
    let aprime = instance.augmented();
    let n = aprime.rows();

    let mut queries = sphere_directions(m, grid_resolution);
    queries.push({
        let mut x = vec![0.0; m];
        x[m - 1] = -1.0;
        x
    });
    for w in full_circle(m - 1, grid_resolution) {
        for rho in log_radii(radius_levels) {
            let mut x: Vec<f64> = w.iter().map(|v| v * rho).collect();
            x.push(-1.0);
            queries.push(x);
        }
    }

    let p = spec.p;
    let best = queries
        .par_iter()
        .fold(
            || vec![0.0_f64; n],
            |mut best, x| {
                let terms: Vec<f64> = aprime
                    .row_iter()
                    .map(|row| power_of_norm(&[dot(row, x)], p, p))
                    .collect();
                let reg = spec.regularizer(x);
                let denom: f64 = terms.iter().sum::<f64>() + reg;
                if denom > 0.0 {
                    for (b, t) in best.iter_mut().zip(&terms) {
                        *b = b.max((t + reg / n as f64) / denom);
                    }
                }
                best
            },
        )
        .reduce(
            || vec![0.0_f64; n],
            |a, b| a.into_iter().zip(b).map(|(x, y)| x.max(y)).collect(),
        );
    SensitivityScores::new(best, Scheme::BruteForce, spec.lambda, p)
}

/// Brute-force multiresponse sensitivity over `X̂ = [X; I_k]` with every
/// entry of `X` drawn from a symmetric log-spaced grid of `levels` magnitudes.
pub fn brute_force_multiresponse_sensitivity(
    ahat: &DenseMatrix,
    k: usize,
    lambda: f64,
    levels: usize,
) -> Result<SensitivityScores> {
    let (n, cols) = ahat.shape();
    if k == 0 || k >= cols {
        return Err(CoresetError::invalid("k must be in [1, cols)"));
    }
    let d = cols - k;
    let unknowns = d * k;
    if unknowns > 6 {
        return Err(CoresetError::DimensionTooLarge(unknowns));
    }
    if levels == 0 {
        return Err(CoresetError::invalid("levels must be >= 1"));
    }
    let mut values = vec![0.0];
    for r in log_radii(levels) {
        values.push(r);
        values.push(-r);
    }
    let base = values.len();
    let total = base.pow(unknowns as u32);

    let best = (0..total)
        .into_par_iter()
        .fold(
            || vec![0.0_f64; n],
            |mut best, code| {
                // X stored column by column: x[l*d + j] = X[j, l]
                let mut c = code;
                let x: Vec<f64> = (0..unknowns)
                    .map(|_| {
                        let v = values[c % base];
                        c /= base;
                        v
                    })
                    .collect();
                let reg = lambda * (vector_p_norm(&x, 1.0) + k as f64);
                let terms: Vec<f64> = ahat
                    .row_iter()
                    .map(|row| {
                        (0..k)
                            .map(|l| (dot(&row[..d], &x[l * d..(l + 1) * d]) + row[d + l]).abs())
                            .sum()
                    })
                    .collect();
                let denom: f64 = terms.iter().sum::<f64>() + reg;
                if denom > 0.0 {
                    for (b, t) in best.iter_mut().zip(&terms) {
                        *b = b.max((t + reg / n as f64) / denom);
                    }
                }
                best
            },
        )
        .reduce(
            || vec![0.0_f64; n],
            |a, b| a.into_iter().zip(b).map(|(x, y)| x.max(y)).collect(),
        );
    SensitivityScores::new(best, Scheme::BruteForce, lambda, 1.0)
}
