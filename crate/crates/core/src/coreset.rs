//! Importance-sampled coresets and their empirical verification.
//!
//! Row `i` is drawn i.i.d. with probability `sᵢ/S` and carries weight
//! `S/(r·sᵢ)`, which makes the weighted loss an unbiased estimate of the
//! full loss for every query.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CoresetError, Result};
use crate::matrix::{dot, DenseMatrix, RegressionInstance};
use crate::objective::{power_of_norm, Family, ObjectiveSpec};
use crate::rng::seeded;
use crate::sensitivity::{Scheme, SensitivityScores};

/// Default constant in front of the sample-size bound.
pub const DEFAULT_SIZE_CONSTANT: f64 = 0.5;

/// `⌈c · S/ε² · (d·ln(1/ε) + ln(1/δ))⌉`, at least 1.
pub fn sample_size(total: f64, epsilon: f64, delta: f64, d: usize, constant: f64) -> Result<usize> {
    if !(total > 0.0) || !total.is_finite() {
        return Err(CoresetError::invalid(format!(
            "total sensitivity {total} must be positive"
        )));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(CoresetError::invalid(format!(
            "epsilon={epsilon} must lie in (0, 1)"
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(CoresetError::invalid(format!(
            "delta={delta} must lie in (0, 1)"
        )));
    }
    if !(constant > 0.0) || !constant.is_finite() {
        return Err(CoresetError::invalid(format!(
            "constant={constant} must be positive"
        )));
    }
    let r = constant * total / (epsilon * epsilon)
        * (d as f64 * (1.0 / epsilon).ln() + (1.0 / delta).ln());
    Ok((r.ceil() as usize).max(1))
}

/// A weighted row sample of an augmented matrix `A′ = [A b]`.
///
/// `rows` holds the sampled rows pre-scaled by `weight^(1/p)`, so that
/// `|scaled_rowᵀx′|^p = weight · |rowᵀx′|^p` and the coreset can be handed
/// to a solver as an ordinary instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CoresetDocument", into = "CoresetDocument")]
pub struct Coreset {
    pub rows: DenseMatrix,
    pub weights: Vec<f64>,
    pub source_indices: Vec<usize>,
    pub seed: u64,
    pub scheme: Scheme,
    /// Exponent used for the row pre-scaling.
    pub p: f64,
    /// Rows of the source matrix.
    pub n: usize,
}

/// JSON interchange form of a [`Coreset`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoresetDocument {
    pub n: usize,
    pub d: usize,
    pub r: usize,
    pub seed: u64,
    pub scheme: Scheme,
    pub p: f64,
    pub source_indices: Vec<usize>,
    pub weights: Vec<f64>,
    /// Row-major, pre-scaled, `r × (d+1)`.
    pub rows: Vec<f64>,
}

impl From<Coreset> for CoresetDocument {
    fn from(c: Coreset) -> Self {
        CoresetDocument {
            n: c.n,
            d: c.d(),
            r: c.len(),
            seed: c.seed,
            scheme: c.scheme,
            p: c.p,
            source_indices: c.source_indices,
            weights: c.weights,
            rows: c.rows.as_slice().to_vec(),
        }
    }
}

impl TryFrom<CoresetDocument> for Coreset {
    type Error = CoresetError;

    fn try_from(doc: CoresetDocument) -> Result<Self> {
        if doc.weights.len() != doc.r || doc.source_indices.len() != doc.r {
            return Err(CoresetError::Schema(
                "coreset arrays disagree with r".into(),
            ));
        }
        if doc.weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(CoresetError::Schema(
                "coreset weights must be positive".into(),
            ));
        }
        if doc.source_indices.iter().any(|&i| i >= doc.n) {
            return Err(CoresetError::Schema("source index out of range".into()));
        }
        if !(doc.p >= 1.0) {
            return Err(CoresetError::Schema(
                "row scaling exponent must be >= 1".into(),
            ));
        }
        let rows = DenseMatrix::from_row_major(doc.r, doc.d + 1, doc.rows)?;
        Ok(Coreset {
            rows,
            weights: doc.weights,
            source_indices: doc.source_indices,
            seed: doc.seed,
            scheme: doc.scheme,
            p: doc.p,
            n: doc.n,
        })
    }
}

impl Coreset {
    /// Assemble a coreset from explicit indices and weights over `aprime`.
    pub fn from_parts(
        aprime: &DenseMatrix,
        source_indices: Vec<usize>,
        weights: Vec<f64>,
        p: f64,
        seed: u64,
        scheme: Scheme,
    ) -> Result<Self> {
        if source_indices.is_empty() || source_indices.len() != weights.len() {
            return Err(CoresetError::invalid(
                "indices and weights must be non-empty and equal length",
            ));
        }
        if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(CoresetError::invalid("weights must be positive and finite"));
        }
        if !(p >= 1.0) {
            return Err(CoresetError::invalid(format!("p={p} must be >= 1")));
        }
        let picked = aprime.select_rows(&source_indices)?;
        let scale: Vec<f64> = weights.iter().map(|w| w.powf(1.0 / p)).collect();
        Ok(Coreset {
            rows: picked.scale_rows(&scale)?,
            weights,
            source_indices,
            seed,
            scheme,
            p,
            n: aprime.rows(),
        })
    }

    /// Every row once with unit weight.
    pub fn identity(instance: &RegressionInstance, p: f64) -> Result<Self> {
        let n = instance.n();
        Self::from_parts(
            &instance.augmented(),
            (0..n).collect(),
            vec![1.0; n],
            p,
            0,
            Scheme::Identity,
        )
    }

    /// Number of draws.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn d(&self) -> usize {
        self.rows.cols() - 1
    }

    pub fn distinct_rows(&self) -> usize {
        let mut idx = self.source_indices.clone();
        idx.sort_unstable();
        idx.dedup();
        idx.len()
    }

    /// The pre-scaled rows split back into `(A_c, b_c)`.
    pub fn as_instance(&self) -> Result<RegressionInstance> {
        RegressionInstance::from_augmented(&self.rows)
    }

    /// `Σⱼ wⱼ |a′_{src j}ᵀ x′|^p` evaluated against the source matrix.
    pub fn weighted_power_sum(&self, aprime: &DenseMatrix, xprime: &[f64], p: f64) -> f64 {
        self.source_indices
            .iter()
            .zip(&self.weights)
            .map(|(&i, &w)| w * power_of_norm(&[dot(aprime.row(i), xprime)], p, p))
            .sum()
    }

    fn check_against(&self, instance: &RegressionInstance) -> Result<()> {
        if self.n != instance.n() || self.d() != instance.d() {
            return Err(CoresetError::shape(format!(
                "coreset built for {}x{} data, instance is {}x{}",
                self.n,
                self.d(),
                instance.n(),
                instance.d()
            )));
        }
        Ok(())
    }
}

/// Draw `r` rows i.i.d. with probability `sᵢ/S` and weight them by `S/(r·sᵢ)`.
pub fn build_coreset(
    instance: &RegressionInstance,
    scores: &SensitivityScores,
    r: usize,
    p: f64,
    seed: u64,
) -> Result<Coreset> {
    let n = instance.n();
    if scores.len() != n {
        return Err(CoresetError::shape(format!(
            "{} scores for {n} rows",
            scores.len()
        )));
    }
    if r == 0 {
        return Err(CoresetError::invalid("coreset size must be >= 1"));
    }
    if let Some((i, v)) = scores
        .values
        .iter()
        .enumerate()
        .find(|(_, v)| !(**v > 0.0) || !v.is_finite())
    {
        return Err(CoresetError::InvalidScores(format!(
            "score {v} at row {i} is not positive"
        )));
    }
    let total = scores.total;
    let mut cumulative = Vec::with_capacity(n);
    let mut acc = 0.0;
    for v in &scores.values {
        acc += v;
        cumulative.push(acc);
    }
    let mut rng = seeded(seed);
    let mut indices = Vec::with_capacity(r);
    let mut weights = Vec::with_capacity(r);
    for _ in 0..r {
        let u: f64 = rng.random::<f64>() * acc;
        let i = cumulative.partition_point(|&c| c <= u).min(n - 1);
        indices.push(i);
        weights.push(total / (r as f64 * scores.values[i]));
    }
    Coreset::from_parts(
        &instance.augmented(),
        indices,
        weights,
        p,
        seed,
        scores.scheme,
    )
}

/// Result of checking `|F_c(x) − F(x)| ≤ ε·F(x)` on a set of queries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoresetVerificationReport {
    pub max_relative_deviation: f64,
    pub worst_query_index: usize,
    pub queries_checked: usize,
    /// Queries with `F(x) = 0`, skipped.
    pub degenerate_queries: usize,
    pub epsilon: f64,
    pub passed: bool,
    /// Per-query deviation, `None` where the query was degenerate.
    pub deviations: Vec<Option<f64>>,
}

fn relative_deviations(
    instance: &RegressionInstance,
    coreset: &Coreset,
    spec: &ObjectiveSpec,
    queries: &[Vec<f64>],
) -> Result<Vec<Option<f64>>> {
    coreset.check_against(instance)?;
    let d = instance.d();
    if let Some(q) = queries.iter().find(|q| q.len() != d) {
        return Err(CoresetError::shape(format!(
            "query of length {} for d={d}",
            q.len()
        )));
    }
    let aprime = instance.augmented();
    Ok(queries
        .par_iter()
        .map(|x| {
            let mut xp = x.clone();
            xp.push(-1.0);
            let full_loss = power_of_norm(
                &aprime.matvec(&xp).expect("query length checked"),
                spec.p,
                spec.r,
            );
            let reg = spec.regularizer(x);
            let full = full_loss + reg;
            let sum = coreset.weighted_power_sum(&aprime, &xp, spec.p);
            let core_loss = if spec.r == spec.p {
                sum
            } else {
                sum.powf(spec.r / spec.p)
            };
            let core = core_loss + reg;
            if full > 0.0 {
                Some((core - full).abs() / full)
            } else {
                None
            }
        })
        .collect())
}

fn report_from(deviations: Vec<Option<f64>>, epsilon: f64) -> CoresetVerificationReport {
    let mut worst = 0;
    let mut max = 0.0;
    let mut degenerate = 0;
    for (k, d) in deviations.iter().enumerate() {
        match d {
            Some(v) if *v > max => {
                max = *v;
                worst = k;
            }
            Some(_) => {}
            None => degenerate += 1,
        }
    }
    CoresetVerificationReport {
        max_relative_deviation: max,
        worst_query_index: worst,
        queries_checked: deviations.len() - degenerate,
        degenerate_queries: degenerate,
        epsilon,
        passed: max <= epsilon,
        deviations,
    }
}

/// Compare full and coreset objectives (same regularizer) over `queries`.
pub fn verify_coreset(
    instance: &RegressionInstance,
    coreset: &Coreset,
    spec: &ObjectiveSpec,
    queries: &[Vec<f64>],
    epsilon: f64,
) -> Result<CoresetVerificationReport> {
    spec.validate()?;
    if queries.is_empty() {
        return Err(CoresetError::invalid("at least one query is required"));
    }
    if !(epsilon > 0.0) {
        return Err(CoresetError::invalid("epsilon must be positive"));
    }
    let dev = relative_deviations(instance, coreset, spec, queries)?;
    Ok(report_from(dev, epsilon))
}

/// Paired reports for the `p`-regularized and `q`-regularized objectives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferReport {
    pub p_report: CoresetVerificationReport,
    pub q_report: CoresetVerificationReport,
    /// Queries within `ε` under the `p` regularizer but not under `q`.
    pub exceptions: Vec<usize>,
}

impl TransferReport {
    pub fn implication_holds(&self) -> bool {
        self.exceptions.is_empty()
    }
}

/// Check that every query within `ε` for `‖Ax−b‖_p^p + λ‖x‖_p^p` is also
/// within `ε` for `‖Ax−b‖_p^p + λ‖x‖_q^p`, `q ≤ p`.
pub fn transfer_check(
    instance: &RegressionInstance,
    coreset: &Coreset,
    p: f64,
    q: f64,
    lambda: f64,
    queries: &[Vec<f64>],
    epsilon: f64,
) -> Result<TransferReport> {
    if !(q >= 1.0 && p >= 1.0) {
        return Err(CoresetError::invalid("p and q must be >= 1"));
    }
    if q > p {
        return Err(CoresetError::invalid(format!(
            "q={q} must not exceed p={p}"
        )));
    }
    let family_for = |q: f64| {
        if p == 2.0 && q == 2.0 {
            Family::Ridge
        } else if p == 2.0 && q == 1.0 {
            Family::ModifiedLasso
        } else if q == p {
            Family::LpLp
        } else {
            Family::General
        }
    };
    let spec_p = ObjectiveSpec::new(p, p, p, p, lambda, family_for(p))?;
    let spec_q = ObjectiveSpec::new(p, q, p, p, lambda, family_for(q))?;
    let p_report = verify_coreset(instance, coreset, &spec_p, queries, epsilon)?;
    let q_report = verify_coreset(instance, coreset, &spec_q, queries, epsilon)?;
    let exceptions = p_report
        .deviations
        .iter()
        .zip(&q_report.deviations)
        .enumerate()
        .filter_map(|(k, pair)| match pair {
            (Some(dp), Some(dq)) if *dp <= epsilon && *dq > epsilon => Some(k),
            _ => None,
        })
        .collect();
    Ok(TransferReport {
        p_report,
        q_report,
        exceptions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensitivity::uniform_scores;

    fn small() -> RegressionInstance {
        RegressionInstance::new(
            DenseMatrix::from_rows(&[
                vec![1.0, 0.0],
                vec![0.0, 2.0],
                vec![1.0, 1.0],
                vec![3.0, -1.0],
            ])
            .unwrap(),
            vec![1.0, 2.0, 0.5, -1.0],
        )
        .unwrap()
    }

    #[test]
    fn sample_size_formula() {
        assert_eq!(sample_size(2.0, 0.5, 0.5, 1, 1.0).unwrap(), 12);
        let a = sample_size(5.0, 0.2, 0.1, 3, 1.0).unwrap() as f64;
        let b = sample_size(5.0, 0.1, 0.1, 3, 1.0).unwrap() as f64;
        assert!(b > 4.0 * a);
        assert!(sample_size(2.0, 0.5, 0.5, 1, 0.0).is_err());
        assert!(sample_size(2.0, 1.0, 0.5, 1, 1.0).is_err());
        assert!(sample_size(2.0, 0.5, 0.0, 1, 1.0).is_err());
        assert_eq!(sample_size(1e-9, 0.9, 0.9, 1, 1.0).unwrap(), 1);
    }

    #[test]
    fn uniform_full_size_weights_are_one() {
        let inst = small();
        let c = build_coreset(&inst, &uniform_scores(4).unwrap(), 4, 2.0, 3).unwrap();
        assert!(c.weights.iter().all(|w| (w - 1.0).abs() < 1e-15));
    }

    #[test]
    fn deterministic_given_seed() {
        let inst = small();
        let s = SensitivityScores::new(vec![0.1, 0.5, 0.2, 0.9], Scheme::Manual, 0.0, 2.0).unwrap();
        let a = build_coreset(&inst, &s, 10, 2.0, 77).unwrap();
        let b = build_coreset(&inst, &s, 10, 2.0, 77).unwrap();
        assert_eq!(a, b);
        for (w, &i) in a.weights.iter().zip(&a.source_indices) {
            assert!((w * 10.0 * s.values[i] - s.total).abs() <= 1e-12 * s.total);
        }
    }

    #[test]
    fn zero_score_rejected() {
        let inst = small();
        let s = SensitivityScores::new(vec![0.0, 0.5, 0.2, 0.9], Scheme::RidgeLeverage, 0.0, 2.0)
            .unwrap();
        assert!(matches!(
            build_coreset(&inst, &s, 3, 2.0, 1),
            Err(CoresetError::InvalidScores(_))
        ));
    }

    #[test]
    fn identity_coreset_has_zero_deviation() {
        let inst = small();
        let c = Coreset::identity(&inst, 2.0).unwrap();
        let queries = vec![vec![0.3, -0.2], vec![1.0, 1.0], vec![-2.0, 0.5]];
        for spec in [
            ObjectiveSpec::ridge(0.5).unwrap(),
            ObjectiveSpec::lasso(1.0).unwrap(),
            ObjectiveSpec::rlad(2.0).unwrap(),
            ObjectiveSpec::lp_lp(3.0, 0.1).unwrap(),
        ] {
            let rep = verify_coreset(&inst, &c, &spec, &queries, 1e-12).unwrap();
            assert_eq!(rep.max_relative_deviation, 0.0);
            assert!(rep.passed);
        }
    }

    #[test]
    fn duplicated_row_collapses() {
        let inst = RegressionInstance::new(
            DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![1.0, 2.0]]).unwrap(),
            vec![3.0, 3.0],
        )
        .unwrap();
        let c = Coreset::from_parts(
            &inst.augmented(),
            vec![0],
            vec![2.0],
            2.0,
            0,
            Scheme::Manual,
        )
        .unwrap();
        let queries = vec![vec![0.0, 0.0], vec![1.0, -1.0], vec![5.0, 2.0]];
        let rep = verify_coreset(
            &inst,
            &c,
            &ObjectiveSpec::ridge(0.0).unwrap(),
            &queries,
            1e-9,
        )
        .unwrap();
        assert!(rep.max_relative_deviation < 1e-15);
    }

    #[test]
    fn degenerate_queries_are_skipped() {
        let inst = RegressionInstance::new(DenseMatrix::identity(2), vec![1.0, 1.0]).unwrap();
        let c = Coreset::identity(&inst, 2.0).unwrap();
        let rep = verify_coreset(
            &inst,
            &c,
            &ObjectiveSpec::ridge(0.0).unwrap(),
            &[vec![1.0, 1.0], vec![0.0, 0.0]],
            0.1,
        )
        .unwrap();
        assert_eq!(rep.degenerate_queries, 1);
        assert_eq!(rep.queries_checked, 1);
        assert!(rep.deviations[0].is_none());
    }

    #[test]
    fn scaled_rows_match_weighted_loss() {
        let inst = small();
        let s = SensitivityScores::new(vec![0.3, 0.5, 0.2, 0.9], Scheme::Manual, 0.0, 2.0).unwrap();
        let c = build_coreset(&inst, &s, 6, 2.0, 5).unwrap();
        let core_inst = c.as_instance().unwrap();
        let x = [0.4, -0.7];
        let via_rows: f64 = core_inst.residual(&x).unwrap().iter().map(|r| r * r).sum();
        let via_weights = c.weighted_power_sum(&inst.augmented(), &[0.4, -0.7, -1.0], 2.0);
        assert!((via_rows - via_weights).abs() < 1e-12);
    }

    #[test]
    fn transfer_equal_exponents_identical() {
        let inst = small();
        let s = SensitivityScores::new(vec![0.3, 0.5, 0.2, 0.9], Scheme::Manual, 0.0, 2.0).unwrap();
        let c = build_coreset(&inst, &s, 6, 2.0, 5).unwrap();
        let queries = vec![vec![0.1, 0.2], vec![-1.0, 3.0]];
        let t = transfer_check(&inst, &c, 2.0, 2.0, 0.7, &queries, 0.3).unwrap();
        assert_eq!(t.p_report.deviations, t.q_report.deviations);
        let t0 = transfer_check(&inst, &c, 2.0, 1.0, 0.0, &queries, 0.3).unwrap();
        assert_eq!(t0.p_report.deviations, t0.q_report.deviations);
        assert!(transfer_check(&inst, &c, 1.0, 2.0, 0.7, &queries, 0.3).is_err());
    }

    #[test]
    fn json_round_trip() {
        let inst = small();
        let c = build_coreset(&inst, &uniform_scores(4).unwrap(), 3, 1.0, 8).unwrap();
        let text = serde_json::to_string(&c).unwrap();
        let back: Coreset = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        for key in [
            "n",
            "d",
            "r",
            "seed",
            "scheme",
            "source_indices",
            "weights",
            "rows",
        ] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }
}
