//! Relative-error and sparsity experiments on synthetic or CSV data.
//!
//! Every trial draws its coreset from its own seed,
//! `split_seed(master_seed, [scheme, size, lambda, trial])` over the indices
//! into the config grids, so results do not depend on scheduling.

mod data;
mod report;

pub use data::{generate_ng_matrix, generate_response, load_csv};
pub use report::{config_digest, emit_report, format_significant, median, DataTable, ReportFormat};

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conditioning::{orthonormal_basis, p_conditioned_basis};
use crate::coreset::{build_coreset, Coreset};
use crate::error::{CoresetError, Result};
use crate::matrix::{induced_norm_upper, DenseMatrix, RegressionInstance};
use crate::objective::{Family, ObjectiveSpec};
use crate::rng::{normal_vec, seeded, split_seed, SEED_SCHEME};
use crate::sensitivity::{
    lp_lp_sensitivity_bounds, ridge_leverage_scores, rlad_sensitivity_bounds, uniform_scores,
    SensitivityScores,
};
use crate::solvers::{
    self, solve_lasso, solve_modified_lasso, solve_ridge, sparsity_count, SPARSITY_THRESHOLD,
};

/// Seed-path prefix for the data stream; trial paths start with a scheme index.
const DATA_STREAM: u64 = 0xDA7A;
const SCORE_STREAM: u64 = 0x5C0E;

/// How coreset rows are sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingScheme {
    Uniform,
    /// Ordinary leverage scores of `A′`.
    Leverage,
    /// Ridge leverage scores of `A′` at the cell's `λ`.
    RidgeLeverage,
    /// `ℓp + ℓp` sensitivity bounds from a well-conditioned basis.
    LpLp,
    /// `ℓ1 + ℓ1` sensitivity bounds.
    Rlad,
    /// The full data with unit weights, regardless of sample size.
    Identity,
}

impl SamplingScheme {
    pub fn name(self) -> &'static str {
        match self {
            SamplingScheme::Uniform => "uniform",
            SamplingScheme::Leverage => "leverage",
            SamplingScheme::RidgeLeverage => "ridge-leverage",
            SamplingScheme::LpLp => "lp-lp",
            SamplingScheme::Rlad => "rlad",
            SamplingScheme::Identity => "identity",
        }
    }
}

impl std::str::FromStr for SamplingScheme {
    type Err = CoresetError;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('_', "-").as_str() {
            "uniform" => Ok(SamplingScheme::Uniform),
            "leverage" => Ok(SamplingScheme::Leverage),
            "ridge-leverage" => Ok(SamplingScheme::RidgeLeverage),
            "lp-lp" => Ok(SamplingScheme::LpLp),
            "rlad" => Ok(SamplingScheme::Rlad),
            "identity" => Ok(SamplingScheme::Identity),
            other => Err(CoresetError::invalid(format!(
                "unknown sampling scheme {other:?}"
            ))),
        }
    }
}

/// A CSV file to use instead of the synthetic matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSource {
    pub path: PathBuf,
    pub target: String,
    #[serde(default = "default_true")]
    pub normalize: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "defaults::n")]
    pub n: usize,
    #[serde(default = "defaults::d")]
    pub d: usize,
    #[serde(default = "defaults::ng_alpha")]
    pub ng_alpha: f64,
    #[serde(default = "defaults::noise_scale")]
    pub noise_scale: f64,
    pub lambda_grid: Vec<f64>,
    #[serde(default)]
    pub sample_sizes: Vec<usize>,
    #[serde(default = "defaults::trials_per_cell")]
    pub trials_per_cell: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "defaults::objective_family")]
    pub objective_family: Family,
    /// Loss and regularizer exponent for the `lp_lp` family.
    #[serde(default = "defaults::p")]
    pub p: f64,
    #[serde(default)]
    pub schemes: Vec<SamplingScheme>,
    /// Solver tolerance; `None` picks [`ExperimentConfig::tolerance`]'s default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default = "defaults::max_iter")]
    pub max_iter: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<CsvSource>,
}

mod defaults {
    use crate::objective::Family;

    pub fn n() -> usize {
        20_000
    }
    pub fn d() -> usize {
        30
    }
    pub fn ng_alpha() -> f64 {
        0.00065
    }
    pub fn noise_scale() -> f64 {
        1e-5
    }
    pub fn trials_per_cell() -> usize {
        5
    }
    pub fn objective_family() -> Family {
        Family::ModifiedLasso
    }
    pub fn p() -> f64 {
        2.0
    }
    pub fn max_iter() -> usize {
        crate::solvers::DEFAULT_MAX_ITER
    }
}

impl ExperimentConfig {
    /// Synthetic-data config with the defaults above.
    pub fn new(
        lambda_grid: Vec<f64>,
        sample_sizes: Vec<usize>,
        schemes: Vec<SamplingScheme>,
    ) -> Self {
        ExperimentConfig {
            n: defaults::n(),
            d: defaults::d(),
            ng_alpha: defaults::ng_alpha(),
            noise_scale: defaults::noise_scale(),
            lambda_grid,
            sample_sizes,
            trials_per_cell: defaults::trials_per_cell(),
            master_seed: 0,
            objective_family: defaults::objective_family(),
            p: defaults::p(),
            schemes,
            tol: None,
            max_iter: defaults::max_iter(),
            data: None,
        }
    }

    /// The configured tolerance, or 1e-6 for the first-order ADMM and IRLS
    /// families and 1e-9 otherwise.
    pub fn tolerance(&self) -> f64 {
        self.tol.unwrap_or(match self.objective_family {
            Family::Rlad | Family::LpLp => 1e-6,
            _ => 1e-9,
        })
    }

    /// This config with every defaulted field written out.
    pub fn effective(&self) -> Self {
        ExperimentConfig {
            tol: Some(self.tolerance()),
            ..self.clone()
        }
    }

    fn validate_common(&self) -> Result<()> {
        if self.lambda_grid.is_empty() {
            return Err(CoresetError::invalid("lambda_grid must not be empty"));
        }
        if let Some(l) = self
            .lambda_grid
            .iter()
            .find(|l| !(**l >= 0.0) || !l.is_finite())
        {
            return Err(CoresetError::invalid(format!(
                "lambda={l} must be finite and >= 0"
            )));
        }
        if !(self.tolerance() > 0.0) {
            return Err(CoresetError::invalid("tol must be positive"));
        }
        if self.data.is_none() {
            if self.d == 0 || !self.d.is_multiple_of(2) {
                return Err(CoresetError::invalid(format!(
                    "d={} must be even and positive",
                    self.d
                )));
            }
            if self.n <= self.d {
                return Err(CoresetError::invalid("n must exceed d"));
            }
            if !(self.noise_scale >= 0.0) {
                return Err(CoresetError::invalid("noise_scale must be >= 0"));
            }
        }
        Ok(())
    }

    /// Checks for the relative-error experiment.
    pub fn validate(&self) -> Result<()> {
        self.validate_common()?;
        if self.trials_per_cell == 0 || self.trials_per_cell.is_multiple_of(2) {
            return Err(CoresetError::invalid(format!(
                "trials_per_cell={} must be odd",
                self.trials_per_cell
            )));
        }
        if self.sample_sizes.is_empty() || self.sample_sizes.contains(&0) {
            return Err(CoresetError::invalid(
                "sample_sizes must be non-empty and positive",
            ));
        }
        if self.schemes.is_empty() {
            return Err(CoresetError::invalid("schemes must not be empty"));
        }
        self.spec(0.0)?;
        Ok(())
    }

    pub fn spec(&self, lambda: f64) -> Result<ObjectiveSpec> {
        match self.objective_family {
            Family::MultiresponseRlad | Family::General => Err(CoresetError::invalid(format!(
                "family {} is not supported by the experiment harness",
                self.objective_family.name()
            ))),
            f => ObjectiveSpec::with_exponent(f, self.p, lambda),
        }
    }

    /// The regression instance the experiment runs on.
    pub fn instance(&self) -> Result<RegressionInstance> {
        if let Some(src) = &self.data {
            return load_csv(&src.path, &src.target, src.normalize);
        }
        Ok(ng_instance(
            self.n,
            self.d,
            self.ng_alpha,
            self.noise_scale,
            self.master_seed,
        )?
        .0)
    }
}

/// The synthetic NG instance for `master_seed` and its `x_true ~ N(0, I)`.
pub fn ng_instance(
    n: usize,
    d: usize,
    alpha: f64,
    noise_scale: f64,
    master_seed: u64,
) -> Result<(RegressionInstance, Vec<f64>)> {
    let a = generate_ng_matrix(n, d, alpha, split_seed(master_seed, &[DATA_STREAM, 0]))?;
    let x_true = normal_vec(&mut seeded(split_seed(master_seed, &[DATA_STREAM, 1])), d);
    let b = generate_response(
        &a,
        &x_true,
        noise_scale,
        split_seed(master_seed, &[DATA_STREAM, 2]),
    )?;
    Ok((RegressionInstance::new(a, b)?, x_true))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub scheme: SamplingScheme,
    pub sample_size: usize,
    pub lambda: f64,
    /// `|V1 − V2| / V1`.
    pub relative_error: f64,
    pub seed: u64,
    pub solver_converged: bool,
    /// Full-data objective at the full-data solution.
    pub v1: f64,
    /// Full-data objective at the coreset solution.
    pub v2: f64,
}

/// Sampling scores for `scheme` on `A′`; `None` for [`SamplingScheme::Identity`].
/// `seed` drives the sketch behind the well-conditioned bases.
pub fn sampling_scores(
    scheme: SamplingScheme,
    aprime: &DenseMatrix,
    spec: &ObjectiveSpec,
    seed: u64,
) -> Result<Option<SensitivityScores>> {
    let lambda = spec.lambda;
    let scores = match scheme {
        SamplingScheme::Identity => return Ok(None),
        SamplingScheme::Uniform => uniform_scores(aprime.rows())?,
        SamplingScheme::Leverage => ridge_leverage_scores(aprime, 0.0)?,
        SamplingScheme::RidgeLeverage => ridge_leverage_scores(aprime, lambda)?,
        SamplingScheme::Rlad => {
            rlad_sensitivity_bounds(&p_conditioned_basis(aprime, 1.0, seed)?, lambda, aprime)?
        }
        SamplingScheme::LpLp => {
            let basis = if spec.p == 2.0 {
                orthonormal_basis(aprime)?
            } else {
                p_conditioned_basis(aprime, spec.p, seed)?
            };
            lp_lp_sensitivity_bounds(
                &basis,
                lambda,
                induced_norm_upper(aprime, spec.p)?,
                aprime.rows(),
            )?
        }
    };
    Ok(Some(scores))
}

/// Full-data solve whose objective is the experiment's `V1`.
fn full_solution(
    instance: &RegressionInstance,
    spec: &ObjectiveSpec,
    config: &ExperimentConfig,
) -> Result<f64> {
    let full = solvers::solve(instance, spec, config.tolerance(), config.max_iter)?;
    if !full.converged {
        return Err(CoresetError::NonConvergence(format!(
            "full-data {} solve at lambda={} stopped after {} iterations",
            spec.family.name(),
            spec.lambda,
            full.iterations
        )));
    }
    if !(full.objective_value > 0.0) {
        return Err(CoresetError::DegenerateSignal(
            "full-data optimum is zero, so relative error is undefined".into(),
        ));
    }
    Ok(full.objective_value)
}

/// Run every `(scheme, λ, size, trial)` combination, in that nesting order.
pub fn run_trials(config: &ExperimentConfig) -> Result<Vec<TrialReport>> {
    config.validate()?;
    let instance = config.instance()?;
    let aprime = instance.augmented();

    let specs = config
        .lambda_grid
        .iter()
        .map(|&l| config.spec(l))
        .collect::<Result<Vec<_>>>()?;
    let v1 = specs
        .par_iter()
        .map(|spec| full_solution(&instance, spec, config))
        .collect::<Result<Vec<_>>>()?;

    let score_keys: Vec<(usize, usize)> = (0..config.schemes.len())
        .flat_map(|s| (0..specs.len()).map(move |l| (s, l)))
        .collect();
    let scores = score_keys
        .par_iter()
        .map(|&(s, l)| {
            let seed = split_seed(config.master_seed, &[SCORE_STREAM, s as u64, l as u64]);
            sampling_scores(config.schemes[s], &aprime, &specs[l], seed)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut tasks = Vec::new();
    for s in 0..config.schemes.len() {
        for l in 0..specs.len() {
            for z in 0..config.sample_sizes.len() {
                for t in 0..config.trials_per_cell {
                    tasks.push((s, l, z, t));
                }
            }
        }
    }
    tasks
        .par_iter()
        .map(|&(s, l, z, t)| {
            let spec = &specs[l];
            let size = config.sample_sizes[z];
            let seed = split_seed(
                config.master_seed,
                &[s as u64, z as u64, l as u64, t as u64],
            );
            let coreset = match &scores[s * specs.len() + l] {
                Some(sc) => build_coreset(&instance, sc, size, spec.p, seed)?,
                None => Coreset::identity(&instance, spec.p)?,
            };
            let sub = coreset.as_instance()?;
            let fit = solvers::solve(&sub, spec, config.tolerance(), config.max_iter)?;
            let v2 = spec.evaluate(&instance, &fit.solution)?;
            Ok(TrialReport {
                scheme: config.schemes[s],
                sample_size: size,
                lambda: spec.lambda,
                relative_error: (v1[l] - v2).abs() / v1[l],
                seed,
                solver_converged: fit.converged,
                v1: v1[l],
                v2,
            })
        })
        .collect()
}

fn lambda_label(l: f64) -> String {
    format!("lambda={l}")
}

/// Median relative error per cell.
///
/// With a single `λ` the table is schemes × sizes; with a single size it is
/// schemes × `λ`; otherwise rows are `(scheme, λ)` pairs and columns sizes.
/// Trials whose coreset solve did not converge stay in the median and are
/// listed in `flagged`; a cell where most trials failed is an error.
pub fn run_relative_error_experiment(config: &ExperimentConfig) -> Result<DataTable> {
    let reports = run_trials(config)?;
    let (ns, nl, nz, nt) = (
        config.schemes.len(),
        config.lambda_grid.len(),
        config.sample_sizes.len(),
        config.trials_per_cell,
    );
    let at = |s: usize, l: usize, z: usize| {
        &reports[((s * nl + l) * nz + z) * nt..((s * nl + l) * nz + z + 1) * nt]
    };

    let mut flagged = Vec::new();
    for r in reports.iter().filter(|r| !r.solver_converged) {
        flagged.push(format!(
            "{} size={} lambda={} seed={}: solver stopped before converging",
            r.scheme.name(),
            r.sample_size,
            r.lambda,
            r.seed
        ));
    }
    for s in 0..ns {
        for l in 0..nl {
            for z in 0..nz {
                let bad = at(s, l, z).iter().filter(|r| !r.solver_converged).count();
                if 2 * bad > nt {
                    return Err(CoresetError::NonConvergence(format!(
                        "{bad} of {nt} trials failed for {} size={} lambda={}",
                        config.schemes[s].name(),
                        config.sample_sizes[z],
                        config.lambda_grid[l]
                    )));
                }
            }
        }
    }

    let size_labels: Vec<String> = config.sample_sizes.iter().map(|z| z.to_string()).collect();
    let lambda_labels: Vec<String> = config
        .lambda_grid
        .iter()
        .map(|l| lambda_label(*l))
        .collect();
    // (row label, column label, cell) in row-major order
    type Row = (String, Vec<(String, (usize, usize, usize))>);
    let mut layout: Vec<Row> = Vec::new();
    for s in 0..ns {
        let name = config.schemes[s].name();
        if nl == 1 {
            layout.push((
                name.to_owned(),
                (0..nz)
                    .map(|z| (size_labels[z].clone(), (s, 0, z)))
                    .collect(),
            ));
        } else if nz == 1 {
            layout.push((
                name.to_owned(),
                (0..nl)
                    .map(|l| (lambda_labels[l].clone(), (s, l, 0)))
                    .collect(),
            ));
        } else {
            for (l, lambda) in lambda_labels.iter().enumerate() {
                layout.push((
                    format!("{name} {lambda}"),
                    (0..nz)
                        .map(|z| (size_labels[z].clone(), (s, l, z)))
                        .collect(),
                ));
            }
        }
    }
    let cols = layout[0].1.iter().map(|(c, _)| c.clone()).collect();
    let mut rows = Vec::new();
    let mut cells = Vec::new();
    let mut trials = Vec::new();
    for (label, entries) in layout {
        rows.push(label);
        let lists: Vec<Vec<f64>> = entries
            .iter()
            .map(|(_, (s, l, z))| at(*s, *l, *z).iter().map(|r| r.relative_error).collect())
            .collect();
        cells.push(lists.iter().map(|v| median(v)).collect());
        trials.push(lists);
    }
    Ok(DataTable {
        rows,
        cols,
        cells,
        trials,
        config_digest: config_digest(&config.effective()),
        seed_scheme: seed_scheme_description(),
        config: serde_json::to_value(config.effective()).expect("configs serialize"),
        flagged,
    })
}

fn seed_scheme_description() -> String {
    format!("{SEED_SCHEME}; trial path = [scheme, size, lambda, trial]")
}

/// Number of coordinates below the sparsity threshold for lasso, modified
/// lasso and ridge on the full data, one column per `λ`.
pub fn run_sparsity_experiment(config: &ExperimentConfig) -> Result<DataTable> {
    config.validate_common()?;
    let instance = config.instance()?;
    let methods = ["lasso", "modified_lasso", "ridge"];
    let tasks: Vec<(usize, f64)> = (0..methods.len())
        .flat_map(|m| config.lambda_grid.iter().map(move |&l| (m, l)))
        .collect();
    let fits = tasks
        .par_iter()
        .map(|&(m, l)| match m {
            0 => solve_lasso(&instance, l, config.tolerance(), config.max_iter),
            1 => solve_modified_lasso(&instance, l, config.tolerance(), config.max_iter),
            _ => solve_ridge(&instance, l),
        })
        .collect::<Result<Vec<_>>>()?;
    let nl = config.lambda_grid.len();
    let mut flagged = Vec::new();
    let mut cells = Vec::new();
    let mut trials = Vec::new();
    for (m, name) in methods.iter().enumerate() {
        let row: Vec<f64> = (0..nl)
            .map(|l| {
                let fit = &fits[m * nl + l];
                if !fit.converged {
                    flagged.push(format!(
                        "{name} lambda={}: solver stopped before converging",
                        config.lambda_grid[l]
                    ));
                }
                sparsity_count(&fit.solution, SPARSITY_THRESHOLD) as f64
            })
            .collect();
        trials.push(row.iter().map(|v| vec![*v]).collect());
        cells.push(row);
    }
    Ok(DataTable {
        rows: methods.iter().map(|s| s.to_string()).collect(),
        cols: config
            .lambda_grid
            .iter()
            .map(|l| lambda_label(*l))
            .collect(),
        cells,
        trials,
        config_digest: config_digest(&config.effective()),
        seed_scheme: seed_scheme_description(),
        config: serde_json::to_value(config.effective()).expect("configs serialize"),
        flagged,
    })
}
