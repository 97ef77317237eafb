//! Turning a failed unregularized coreset into a failed regularized one.
//!
//! When the loss and regularizer have different powers (`r ≠ s`), scaling a
//! query `x` by `α` lets one term dominate the other. A coreset that misses
//! `‖Ax‖_p^r` by a factor `1 ± ε′` at some `x` therefore misses the
//! regularized objective by more than `(ε + ε′)/2` at `y = αx` for a suitable
//! `α`, so the regularizer cannot rescue a coreset that is too small for the
//! unregularized problem. With `r = s` no such scaling exists.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coreset::Coreset;
use crate::error::{CoresetError, Result};
use crate::matrix::{dot, qr_thin, svd, upper_inverse, DenseMatrix};
use crate::objective::{power_of_norm, ObjectiveSpec};
use crate::rng::{normal_vec, seeded, split_seed};

const OVERSHOOT_MARGIN: f64 = 1.01;
const UNDERSHOOT_MARGIN: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationDirection {
    /// The coreset overestimates: `‖A_c x‖ = (1 + ε′)‖Ax‖`.
    Overshoot,
    /// The coreset underestimates: `‖A_c x‖ = (1 − ε′)‖Ax‖`.
    Undershoot,
}

/// A query at which the homogeneous coreset ratio leaves `[1 − ε, 1 + ε]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnregularizedViolation {
    pub x: Vec<f64>,
    /// `‖A_c x‖_p^r / ‖Ax‖_p^r`.
    pub ratio: f64,
    /// `|ratio − 1|`.
    pub epsilon_prime: f64,
    pub direction: ViolationDirection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleWitness {
    pub base_x: Vec<f64>,
    pub alpha: f64,
    /// `α·base_x`.
    pub y: Vec<f64>,
    pub epsilon: f64,
    pub epsilon_prime: f64,
    pub direction: ViolationDirection,
    /// `(‖A_c y‖_p^r + λ‖y‖_q^s) / (‖Ay‖_p^r + λ‖y‖_q^s)`.
    pub regularized_ratio: f64,
    pub spec: ObjectiveSpec,
}

impl CounterexampleWitness {
    /// `1 ± (ε + ε′)/2`, the bound the regularized ratio must cross.
    pub fn band_edge(&self) -> f64 {
        let half = 0.5 * (self.epsilon + self.epsilon_prime);
        match self.direction {
            ViolationDirection::Overshoot => 1.0 + half,
            ViolationDirection::Undershoot => 1.0 - half,
        }
    }

    pub fn leaves_band(&self) -> bool {
        match self.direction {
            ViolationDirection::Overshoot => self.regularized_ratio > self.band_edge(),
            ViolationDirection::Undershoot => self.regularized_ratio < self.band_edge(),
        }
    }
}

fn check_coreset(aprime: &DenseMatrix, coreset: &Coreset) -> Result<()> {
    if coreset.n != aprime.rows() || coreset.rows.cols() != aprime.cols() {
        return Err(CoresetError::shape(format!(
            "coreset built over {}x{}, matrix is {}x{}",
            coreset.n,
            coreset.rows.cols(),
            aprime.rows(),
            aprime.cols()
        )));
    }
    Ok(())
}

/// `‖Ax‖_p^r`.
fn full_loss(aprime: &DenseMatrix, x: &[f64], p: f64, r: f64) -> f64 {
    power_of_norm(&aprime.matvec(x).expect("query length checked"), p, r)
}

/// `(Σⱼ wⱼ|aⱼᵀx|^p)^(r/p)`.
fn coreset_loss(aprime: &DenseMatrix, coreset: &Coreset, x: &[f64], p: f64, r: f64) -> f64 {
    let sum = coreset.weighted_power_sum(aprime, x, p);
    if r == p {
        sum
    } else {
        sum.powf(r / p)
    }
}

/// Right singular vectors of `m`, padding with zero rows when `m` is wide.
fn right_singular_vectors(m: &DenseMatrix) -> Vec<Vec<f64>> {
    let (rows, cols) = m.shape();
    let tall = if rows >= cols {
        m.clone()
    } else {
        m.vstack(&DenseMatrix::zeros(cols - rows, cols))
            .expect("same width")
    };
    match svd(&tall) {
        Ok(dec) => (0..cols).map(|k| dec.right.column(k)).collect(),
        Err(_) => Vec::new(),
    }
}

/// Candidate directions: coordinate axes, right singular vectors of `A′`,
/// the extreme directions `R⁻¹z` of `‖A_c x‖₂ / ‖Ax‖₂` (with `A′ = QR` and
/// `z` a right singular vector of `A_c R⁻¹`), and seeded Gaussian probes.
fn candidate_directions(
    aprime: &DenseMatrix,
    coreset: &Coreset,
    probes: usize,
    seed: u64,
) -> Vec<Vec<f64>> {
    let m = aprime.cols();
    let mut out: Vec<Vec<f64>> = (0..m)
        .map(|k| {
            let mut e = vec![0.0; m];
            e[k] = 1.0;
            e
        })
        .collect();
    out.extend(right_singular_vectors(aprime));
    if let Ok((_, r)) = qr_thin(aprime) {
        if let Ok(r_inv) = upper_inverse(&r) {
            if let Ok(whitened) = coreset.rows.matmul(&r_inv) {
                for z in right_singular_vectors(&whitened) {
                    out.push(r_inv.matvec(&z).expect("square"));
                }
            }
        }
    }
    out.extend((0..probes).map(|k| normal_vec(&mut seeded(split_seed(seed, &[k as u64])), m)));
    out
}

/// Search for a query where the ratio `‖A_c x‖_p^r / ‖Ax‖_p^r` leaves `[1 − ε, 1 + ε]`, returning the worst one.
pub fn find_unregularized_violation(
    aprime: &DenseMatrix,
    coreset: &Coreset,
    p: f64,
    r: f64,
    epsilon: f64,
    probes: usize,
    seed: u64,
) -> Result<Option<UnregularizedViolation>> {
    check_coreset(aprime, coreset)?;
    if probes == 0 {
        return Err(CoresetError::invalid("probes must be >= 1"));
    }
    if !(epsilon > 0.0) {
        return Err(CoresetError::invalid("epsilon must be positive"));
    }
    if !(p >= 1.0) || !(r > 0.0) {
        return Err(CoresetError::invalid("need p >= 1 and r > 0"));
    }
    let candidates = candidate_directions(aprime, coreset, probes, seed);
    // first index wins ties, which keeps the result schedule-independent
    let best = candidates
        .par_iter()
        .enumerate()
        .filter_map(|(k, x)| {
            let full = full_loss(aprime, x, p, r);
            if !(full > 0.0) {
                return None;
            }
            let ratio = coreset_loss(aprime, coreset, x, p, r) / full;
            Some((k, ratio, (ratio - 1.0).abs()))
        })
        .reduce_with(|a, b| {
            if b.2 > a.2 || (b.2 == a.2 && b.0 < a.0) {
                b
            } else {
                a
            }
        });
    Ok(best.and_then(|(k, ratio, dev)| {
        (dev > epsilon).then(|| UnregularizedViolation {
            x: candidates[k].clone(),
            ratio,
            epsilon_prime: dev,
            direction: if ratio > 1.0 {
                ViolationDirection::Overshoot
            } else {
                ViolationDirection::Undershoot
            },
        })
    }))
}

/// Scale `α` at which the regularized ratio at `αx` is pushed past
/// `1 ± (ε + ε′)/2`.
///
/// For `r > s` the loss dominates for large `α`: `α^(r−s)` must exceed
/// `B = ((ε′ + ε)/(ε′ − ε))·λ‖x‖_q^s / ‖Ax‖_p^r`, and `α = (1.01·B)^(1/(r−s))`.
/// For `r < s` it dominates for small `α`: `α^(s−r)` must stay below
/// `C = ((ε′ − ε)/(ε′ + ε))·‖Ax‖_p^r / (λ‖x‖_q^s)`, and
/// `α = (0.99·C)^(1/(s−r))`. Both directions of violation use the same
/// threshold; `direction` only fixes which side of the band is crossed.
#[allow(clippy::too_many_arguments)]
pub fn counterexample_alpha(
    x: &[f64],
    epsilon: f64,
    epsilon_prime: f64,
    lambda: f64,
    norm_ax_p_r: f64,
    norm_x_q_s: f64,
    r: f64,
    s: f64,
    direction: ViolationDirection,
) -> Result<f64> {
    if r == s {
        return Err(CoresetError::TheoremInapplicable(format!(
            "loss and regularizer share the power r = s = {r}"
        )));
    }
    if !(epsilon > 0.0) || !(epsilon_prime > epsilon) {
        return Err(CoresetError::invalid(format!(
            "need 0 < epsilon < epsilon_prime, got {epsilon} and {epsilon_prime}"
        )));
    }
    if direction == ViolationDirection::Undershoot && epsilon_prime > 1.0 {
        return Err(CoresetError::invalid(
            "an undershoot cannot exceed epsilon_prime = 1",
        ));
    }
    if x.iter().all(|v| *v == 0.0) {
        return Err(CoresetError::invalid("the violating query must be nonzero"));
    }
    if !(lambda >= 0.0) {
        return Err(CoresetError::invalid("lambda must be >= 0"));
    }
    if lambda == 0.0 {
        return Ok(1.0);
    }
    if !(norm_ax_p_r > 0.0) || !(norm_x_q_s > 0.0) {
        return Err(CoresetError::invalid("both norms must be positive"));
    }
    let alpha = if r > s {
        let b = (epsilon_prime + epsilon) / (epsilon_prime - epsilon) * lambda * norm_x_q_s
            / norm_ax_p_r;
        (OVERSHOOT_MARGIN * b).powf(1.0 / (r - s))
    } else {
        let c = (epsilon_prime - epsilon) / (epsilon_prime + epsilon) * norm_ax_p_r
            / (lambda * norm_x_q_s);
        (UNDERSHOOT_MARGIN * c).powf(1.0 / (s - r))
    };
    Ok(alpha)
}

/// `(‖A_c y‖_p^r + λ‖y‖_q^s) / (‖Ay‖_p^r + λ‖y‖_q^s)`.
pub fn regularized_ratio(
    aprime: &DenseMatrix,
    coreset: &Coreset,
    spec: &ObjectiveSpec,
    y: &[f64],
) -> Result<f64> {
    check_coreset(aprime, coreset)?;
    if y.len() != aprime.cols() {
        return Err(CoresetError::shape(format!(
            "query of length {} for {} columns",
            y.len(),
            aprime.cols()
        )));
    }
    let reg = spec.regularizer(y);
    let full = full_loss(aprime, y, spec.p, spec.r) + reg;
    let core = coreset_loss(aprime, coreset, y, spec.p, spec.r) + reg;
    Ok(core / full)
}

/// Default number of random probes used by [`demonstrate_violation`].
pub const DEFAULT_PROBES: usize = 256;

/// Find an unregularized violation and scale it into a regularized one.
///
/// Returns `None` when the probe search finds no unregularized violation.
pub fn demonstrate_violation(
    aprime: &DenseMatrix,
    coreset: &Coreset,
    spec: &ObjectiveSpec,
    epsilon: f64,
    seed: u64,
) -> Result<Option<CounterexampleWitness>> {
    spec.validate()?;
    if spec.r == spec.s {
        return Err(CoresetError::TheoremInapplicable(format!(
            "loss and regularizer share the power r = s = {}",
            spec.r
        )));
    }
    let Some(found) = find_unregularized_violation(
        aprime,
        coreset,
        spec.p,
        spec.r,
        epsilon,
        DEFAULT_PROBES,
        seed,
    )?
    else {
        return Ok(None);
    };
    let norm_ax = full_loss(aprime, &found.x, spec.p, spec.r);
    let norm_x = power_of_norm(&found.x, spec.q, spec.s);
    let alpha = counterexample_alpha(
        &found.x,
        epsilon,
        found.epsilon_prime,
        spec.lambda,
        norm_ax,
        norm_x,
        spec.r,
        spec.s,
        found.direction,
    )?;
    let y: Vec<f64> = found.x.iter().map(|v| alpha * v).collect();
    let ratio = regularized_ratio(aprime, coreset, spec, &y)?;
    let witness = CounterexampleWitness {
        base_x: found.x,
        alpha,
        y,
        epsilon,
        epsilon_prime: found.epsilon_prime,
        direction: found.direction,
        regularized_ratio: ratio,
        spec: *spec,
    };
    if !witness.leaves_band() {
        return Err(CoresetError::invalid(format!(
            "scaled query stayed inside the band: ratio {ratio}, edge {}",
            witness.band_edge()
        )));
    }
    Ok(Some(witness))
}

/// Ratios used to carry a subspace violation over to a regression query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpaceCheck {
    /// `u + v`.
    pub y: Vec<f64>,
    /// `‖S(Ay − b)‖_p / ‖Ay − b‖_p` with `b = Au`.
    pub ratio_at_y: f64,
    /// `‖SAv‖_p / ‖Av‖_p`.
    pub ratio_at_v: f64,
}

/// With `b = Au` in the column space, the residual at `y = u + v` is `Av`,
/// so any row-sampling operator `S` that distorts `‖Av‖` distorts the
/// regression loss at `y` by exactly the same factor.
pub fn column_space_check(
    design: &DenseMatrix,
    indices: &[usize],
    weights: &[f64],
    u: &[f64],
    v: &[f64],
    p: f64,
) -> Result<ColumnSpaceCheck> {
    if indices.len() != weights.len() || indices.is_empty() {
        return Err(CoresetError::invalid(
            "indices and weights must be non-empty and equal length",
        ));
    }
    if u.len() != design.cols() || v.len() != design.cols() {
        return Err(CoresetError::shape(
            "u and v must have one entry per column",
        ));
    }
    let sampled = |z: &[f64]| -> f64 {
        indices
            .iter()
            .zip(weights)
            .map(|(&i, &w)| w * dot(design.row(i), z).abs().powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    };
    let full =
        |z: &[f64]| -> Result<f64> { Ok(crate::matrix::vector_p_norm(&design.matvec(z)?, p)) };
    let b = design.matvec(u)?;
    let y: Vec<f64> = u.iter().zip(v).map(|(a, c)| a + c).collect();
    let resid: Vec<f64> = design
        .matvec(&y)?
        .iter()
        .zip(&b)
        .map(|(a, c)| a - c)
        .collect();
    let sampled_resid: f64 = indices
        .iter()
        .zip(weights)
        .map(|(&i, &w)| w * resid[i].abs().powf(p))
        .sum::<f64>()
        .powf(1.0 / p);
    let ratio_at_y = sampled_resid / crate::matrix::vector_p_norm(&resid, p);
    let ratio_at_v = sampled(v) / full(v)?;
    Ok(ColumnSpaceCheck {
        y,
        ratio_at_y,
        ratio_at_v,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::Family;
    use crate::sensitivity::Scheme;

    fn first_row_of_identity() -> (DenseMatrix, Coreset) {
        let a = DenseMatrix::identity(2);
        let c = Coreset::from_parts(&a, vec![0], vec![1.0], 2.0, 0, Scheme::Manual).unwrap();
        (a, c)
    }

    fn full_coreset(a: &DenseMatrix) -> Coreset {
        let n = a.rows();
        Coreset::from_parts(a, (0..n).collect(), vec![1.0; n], 2.0, 0, Scheme::Identity).unwrap()
    }

    #[test]
    fn single_row_undershoots_along_e2() {
        let (a, c) = first_row_of_identity();
        let v = find_unregularized_violation(&a, &c, 2.0, 2.0, 0.1, 16, 1)
            .unwrap()
            .unwrap();
        assert_eq!(v.direction, ViolationDirection::Undershoot);
        assert!((v.epsilon_prime - 1.0).abs() < 1e-12);
        assert!(v.x[0].abs() < 1e-12);
    }

    #[test]
    fn identity_coreset_has_no_violation() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![0.5, -1.0], vec![3.0, 0.2]]).unwrap();
        let c = full_coreset(&a);
        assert!(find_unregularized_violation(&a, &c, 2.0, 2.0, 0.01, 64, 3)
            .unwrap()
            .is_none());
        let spec = ObjectiveSpec::lasso(1.0).unwrap();
        assert!(demonstrate_violation(&a, &c, &spec, 0.01, 3)
            .unwrap()
            .is_none());
    }

    #[test]
    fn alpha_examples() {
        let x = [1.0];
        let a = counterexample_alpha(
            &x,
            0.1,
            0.3,
            1.0,
            1.0,
            1.0,
            2.0,
            1.0,
            ViolationDirection::Overshoot,
        )
        .unwrap();
        assert!((a - 2.02).abs() < 1e-12);
        assert!(matches!(
            counterexample_alpha(
                &x,
                0.1,
                0.3,
                1.0,
                1.0,
                1.0,
                2.0,
                2.0,
                ViolationDirection::Overshoot
            ),
            Err(CoresetError::TheoremInapplicable(_))
        ));
        assert_eq!(
            counterexample_alpha(
                &x,
                0.1,
                0.3,
                0.0,
                1.0,
                1.0,
                2.0,
                1.0,
                ViolationDirection::Undershoot
            )
            .unwrap(),
            1.0
        );
    }

    #[test]
    fn alpha_scales_with_lambda() {
        let x = [1.0];
        for (r, s) in [(2.0, 1.0), (3.0, 1.0), (2.0, 0.5)] {
            let a1 = counterexample_alpha(
                &x,
                0.1,
                0.4,
                0.7,
                2.0,
                3.0,
                r,
                s,
                ViolationDirection::Overshoot,
            )
            .unwrap();
            let a2 = counterexample_alpha(
                &x,
                0.1,
                0.4,
                1.4,
                2.0,
                3.0,
                r,
                s,
                ViolationDirection::Overshoot,
            )
            .unwrap();
            assert!((a2 / a1 - 2f64.powf(1.0 / (r - s))).abs() < 1e-12);
        }
    }

    #[test]
    fn witness_on_hand_instance() {
        let (a, c) = first_row_of_identity();
        let spec = ObjectiveSpec::lasso(1.0).unwrap();
        let w = demonstrate_violation(&a, &c, &spec, 0.1, 5)
            .unwrap()
            .unwrap();
        assert_eq!(w.direction, ViolationDirection::Undershoot);
        assert!(w.regularized_ratio < 1.0 - 0.5 * (w.epsilon + w.epsilon_prime));
        // closed form at y = α·e₂: α / (α² + α)
        assert!((w.regularized_ratio - 1.0 / (w.alpha + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn r_below_s_uses_small_alpha() {
        let (a, c) = first_row_of_identity();
        let spec = ObjectiveSpec::new(2.0, 2.0, 1.0, 2.0, 3.0, Family::General).unwrap();
        let w = demonstrate_violation(&a, &c, &spec, 0.1, 5)
            .unwrap()
            .unwrap();
        assert!(w.leaves_band());
        assert!(w.alpha < 1.0);
    }

    #[test]
    fn equal_powers_are_rejected() {
        let (a, c) = first_row_of_identity();
        assert!(matches!(
            demonstrate_violation(&a, &c, &ObjectiveSpec::ridge(1.0).unwrap(), 0.1, 0),
            Err(CoresetError::TheoremInapplicable(_))
        ));
    }

    #[test]
    fn column_space_transfer() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let check =
            column_space_check(&a, &[0, 2], &[1.0, 2.0], &[0.3, -0.7], &[0.0, 1.0], 2.0).unwrap();
        assert!((check.ratio_at_y - check.ratio_at_v).abs() < 1e-10);
        assert!((check.y[1] - 0.3).abs() < 1e-15);
    }
}
