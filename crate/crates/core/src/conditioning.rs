//! Well-conditioned bases `A′ = U·V` with `(α, β, p)` certificates.
//!
//! A basis `U` is `(α, β, p)` well conditioned when `‖U‖_p ≤ α` (entrywise)
//! and `‖z‖_q ≤ β‖Uz‖_p` for every `z`, with `q` the dual exponent of `p`.
//! Row `p`-norms of `U` then bound the per-row sensitivities of any
//! `ℓp`-type objective on `A′`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CoresetError, Result};
use crate::matrix::{entrywise_p_norm, qr_thin, upper_inverse, vector_p_norm, DenseMatrix};
use crate::rng::{normal_vec, p_stable, seeded, split_seed};

/// Sketch rows per basis column, times `ln m`.
pub const SKETCH_CONSTANT: f64 = 8.0;
/// Safety factor applied to the measured `‖U‖_p`.
pub const ALPHA_SAFETY: f64 = 1.01;
/// Safety factor applied to the empirical `β`.
pub const BETA_SAFETY: f64 = 1.25;
/// Directions sampled when certifying `β` during construction.
pub const DEFAULT_BETA_TRIALS: usize = 2000;

const MAX_RESEEDS: u64 = 3;
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    Orthonormal,
    PStableSketch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WellConditionedBasis {
    /// `U`, n×m.
    pub basis: DenseMatrix,
    /// `V`, m×m, with `A′ = U·V`.
    pub change_of_basis: DenseMatrix,
    pub alpha: f64,
    pub beta: f64,
    pub p: f64,
    pub construction: Construction,
    /// Number of sketch rows, for sketch-based constructions.
    pub sketch_rows: Option<usize>,
    pub seed: Option<u64>,
}

impl WellConditionedBasis {
    pub fn n(&self) -> usize {
        self.basis.rows()
    }

    pub fn m(&self) -> usize {
        self.basis.cols()
    }

    /// `‖uᵢ‖_p^p` for every row.
    pub fn row_p_powers(&self) -> Vec<f64> {
        let p = self.p;
        self.basis
            .row_iter()
            .map(|r| {
                if p == 1.0 {
                    r.iter().map(|v| v.abs()).sum()
                } else {
                    r.iter().map(|v| v.abs().powf(p)).sum()
                }
            })
            .collect()
    }

    /// Relative Frobenius error of `U·V` against `aprime`.
    pub fn factorization_error(&self, aprime: &DenseMatrix) -> Result<f64> {
        let prod = self.basis.matmul(&self.change_of_basis)?;
        Ok(prod.sub(aprime)?.frobenius() / aprime.frobenius().max(f64::MIN_POSITIVE))
    }
}

/// Dual exponent `q` with `1/p + 1/q = 1`.
pub fn dual_exponent(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else {
        p / (p - 1.0)
    }
}

fn check_rank(r: &DenseMatrix) -> bool {
    let diag: Vec<f64> = (0..r.rows()).map(|i| r[(i, i)].abs()).collect();
    let max = diag.iter().copied().fold(0.0, f64::max);
    max > 0.0 && diag.iter().all(|&v| v > RANK_TOL * max)
}

/// `(√m, 1, 2)` basis from a thin QR of `A′`.
pub fn orthonormal_basis(aprime: &DenseMatrix) -> Result<WellConditionedBasis> {
    let m = aprime.cols();
    let (q, r) = qr_thin(aprime)?;
    if !check_rank(&r) {
        return Err(CoresetError::RankDeficiency(
            "augmented matrix is not of full column rank".into(),
        ));
    }
    let measured = entrywise_p_norm(&q, 2.0)?;
    Ok(WellConditionedBasis {
        basis: q,
        change_of_basis: r,
        alpha: (m as f64).sqrt().max(measured),
        beta: 1.0,
        p: 2.0,
        construction: Construction::Orthonormal,
        sketch_rows: None,
        seed: None,
    })
}

/// Sketch rows used for a basis with `m` columns.
pub fn sketch_size(m: usize) -> usize {
    let mf = m as f64;
    // ln 1 = 0, so tiny m falls back to a square sketch plus one
    ((SKETCH_CONSTANT * mf * mf.ln()).ceil() as usize).max(m + 1)
}

fn sketch(aprime: &DenseMatrix, p: f64, rows: usize, seed: u64) -> DenseMatrix {
    let (n, m) = aprime.shape();
    let data: Vec<f64> = (0..rows)
        .into_par_iter()
        .flat_map_iter(|k| {
            let mut rng = seeded(split_seed(seed, &[k as u64]));
            let mut acc = vec![0.0; m];
            for i in 0..n {
                let s = if p <= 2.0 {
                    p_stable(&mut rng, p)
                } else {
                    crate::rng::standard_normal(&mut rng)
                };
                for (a, v) in acc.iter_mut().zip(aprime.row(i)) {
                    *a += s * v;
                }
            }
            acc
        })
        .collect();
    DenseMatrix::from_row_major_unchecked(rows, m, data)
}

/// Basis `U = A′·R⁻¹` where `R` is the triangular factor of a random
/// sketch `S·A′`.
///
/// For `p ∈ [1, 2]` the sketch has `p`-stable entries, for `p > 2` Gaussian
/// ones. `α` is the measured `‖U‖_p` times [`ALPHA_SAFETY`]; `β` is certified
/// empirically over [`DEFAULT_BETA_TRIALS`] directions times [`BETA_SAFETY`].
pub fn p_conditioned_basis(
    aprime: &DenseMatrix,
    p: f64,
    seed: u64,
) -> Result<WellConditionedBasis> {
    p_conditioned_basis_with(aprime, p, seed, DEFAULT_BETA_TRIALS)
}

pub fn p_conditioned_basis_with(
    aprime: &DenseMatrix,
    p: f64,
    seed: u64,
    beta_trials: usize,
) -> Result<WellConditionedBasis> {
    if !(1.0..=4.0).contains(&p) {
        return Err(CoresetError::invalid(format!("p={p} outside [1, 4]")));
    }
    let (n, m) = aprime.shape();
    if n < m {
        return Err(CoresetError::shape(format!("need n >= m, got {n}x{m}")));
    }
    let rows = sketch_size(m);
    for attempt in 0..=MAX_RESEEDS {
        let attempt_seed = split_seed(seed, &[attempt]);
        let sa = sketch(aprime, p, rows, attempt_seed);
        let (_, r) = qr_thin(&sa)?;
        if !check_rank(&r) {
            continue;
        }
        let u = aprime.matmul(&upper_inverse(&r)?)?;
        let alpha = entrywise_p_norm(&u, p)? * ALPHA_SAFETY;
        let mut basis = WellConditionedBasis {
            basis: u,
            change_of_basis: r,
            alpha,
            beta: f64::INFINITY,
            p,
            construction: Construction::PStableSketch,
            sketch_rows: Some(rows),
            seed: Some(attempt_seed),
        };
        let beta_hat = empirical_beta(&basis.basis, p, beta_trials, split_seed(seed, &[u64::MAX]));
        basis.beta = beta_hat * BETA_SAFETY;
        return Ok(basis);
    }
    Err(CoresetError::ConditioningFailure(format!(
        "sketch factor singular after {MAX_RESEEDS} reseeds"
    )))
}

/// Relative rounding allowance when comparing measured values to a certificate.
const CERTIFICATE_SLACK: f64 = 1e-12;

/// Outcome of an empirical check of a basis certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditioningReport {
    /// `max ‖z‖_q / ‖Uz‖_p` over sampled directions; a lower bound on the true `β`.
    pub empirical_beta: f64,
    /// `‖U‖_p`, the exact witness for `α`.
    pub alpha_witness: f64,
    pub recorded_alpha: f64,
    pub recorded_beta: f64,
    pub trials: usize,
    pub beta_violation: bool,
    pub alpha_violation: bool,
}

impl ConditioningReport {
    pub fn violation(&self) -> bool {
        self.beta_violation || self.alpha_violation
    }

    pub fn measured_alpha_beta(&self) -> f64 {
        self.alpha_witness * self.empirical_beta
    }
}

fn empirical_beta(u: &DenseMatrix, p: f64, trials: usize, seed: u64) -> f64 {
    let m = u.cols();
    let q = dual_exponent(p);
    let ratio = |z: &[f64]| -> f64 {
        let uz = u.matvec(z).expect("direction has m entries");
        let denom = vector_p_norm(&uz, p);
        if denom == 0.0 {
            f64::INFINITY
        } else {
            vector_p_norm(z, q) / denom
        }
    };
    let axes = (0..m)
        .into_par_iter()
        .map(|k| {
            let mut e = vec![0.0; m];
            e[k] = 1.0;
            ratio(&e)
        })
        .reduce(|| 0.0, f64::max);
    let random = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = seeded(split_seed(seed, &[t as u64]));
            ratio(&normal_vec(&mut rng, m))
        })
        .reduce(|| 0.0, f64::max);
    axes.max(random)
}

/// Sample `trials` random directions and compare the empirical `β` and the
/// exact `‖U‖_p` against the recorded certificate.
pub fn verify_conditioning(
    basis: &WellConditionedBasis,
    trials: usize,
    seed: u64,
) -> Result<ConditioningReport> {
    if trials == 0 {
        return Err(CoresetError::invalid("trials must be >= 1"));
    }
    let empirical = empirical_beta(&basis.basis, basis.p, trials, seed);
    let alpha_witness = entrywise_p_norm(&basis.basis, basis.p)?;
    Ok(ConditioningReport {
        empirical_beta: empirical,
        alpha_witness,
        recorded_alpha: basis.alpha,
        recorded_beta: basis.beta,
        trials,
        beta_violation: empirical > basis.beta * (1.0 + CERTIFICATE_SLACK),
        alpha_violation: alpha_witness > basis.alpha * (1.0 + CERTIFICATE_SLACK),
    })
}
