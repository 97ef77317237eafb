//! Acceptance suite. Prints one `PASS` or `FAIL` line per criterion.
//!
//! The process exits 0 regardless so that the report is always produced;
//! set `ACCEPTANCE_STRICT=1` to exit 1 when any criterion fails.

use std::time::Instant;

use rand::Rng;
use regcoreset::conditioning::{orthonormal_basis, p_conditioned_basis};
use regcoreset::coreset::{
    build_coreset, sample_size, transfer_check, verify_coreset, Coreset, DEFAULT_SIZE_CONSTANT,
};
use regcoreset::error::CoresetError;
use regcoreset::experiments::{
    emit_report, ng_instance, run_relative_error_experiment, run_sparsity_experiment, DataTable,
    ExperimentConfig, ReportFormat, SamplingScheme,
};
use regcoreset::lowerbound::{demonstrate_violation, ViolationDirection};
use regcoreset::matrix::{
    induced_norm_upper, statistical_dimension, svd, Cholesky, DenseMatrix, RegressionInstance,
};
use regcoreset::objective::{Family, ObjectiveSpec};
use regcoreset::rng::{normal_vec, seeded, split_seed};
use regcoreset::sensitivity::{
    brute_force_sensitivity, lp_lp_sensitivity_bounds, ridge_leverage_scores,
    rlad_sensitivity_bounds, Scheme,
};
use regcoreset::solvers::{
    prox_squared_l1, solve_lasso, solve_lp_lp, solve_modified_lasso, solve_ridge, solve_rlad,
};

const MASTER_SEED: u64 = 0;
const N: usize = 20_000;
const D: usize = 30;
const ALPHA: f64 = 0.00065;
const SIZES: [usize; 5] = [30, 50, 100, 150, 200];
const TRIALS: usize = 5;
const PARALLEL_THREADS: usize = 4;

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Outcome {
            passed,
            detail: detail.into(),
        }
    }
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool")
        .install(f)
}

fn ng_config(
    family: Family,
    lambdas: Vec<f64>,
    sizes: Vec<usize>,
    schemes: Vec<SamplingScheme>,
) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(lambdas, sizes, schemes);
    c.n = N;
    c.d = D;
    c.ng_alpha = ALPHA;
    c.trials_per_cell = TRIALS;
    c.objective_family = family;
    c.master_seed = MASTER_SEED;
    c
}

fn table1_config() -> ExperimentConfig {
    ng_config(
        Family::ModifiedLasso,
        vec![0.5],
        SIZES.to_vec(),
        vec![SamplingScheme::RidgeLeverage, SamplingScheme::Uniform],
    )
}

fn table2_config() -> ExperimentConfig {
    ng_config(
        Family::ModifiedLasso,
        vec![0.1, 0.5, 1.0, 5.0],
        vec![200],
        vec![SamplingScheme::Uniform],
    )
}

fn table3_config() -> ExperimentConfig {
    ng_config(
        Family::Rlad,
        vec![0.5],
        SIZES.to_vec(),
        vec![SamplingScheme::Rlad, SamplingScheme::Uniform],
    )
}

fn fmt_row(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x:.4}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn criterion_1(t: &DataTable) -> Outcome {
    let lev = &t.cells[t.row_index("ridge-leverage").unwrap()];
    let uni = &t.cells[t.row_index("uniform").unwrap()];
    let small = lev.iter().all(|&e| e < 0.1);
    let ratio = lev.iter().zip(uni).all(|(l, u)| *u > 5.0 * l);
    let shrinks = lev[SIZES.len() - 1] <= lev[0];
    let worst_ratio = lev
        .iter()
        .zip(uni)
        .map(|(l, u)| u / l)
        .fold(f64::INFINITY, f64::min);
    Outcome::new(
        small && ratio && shrinks,
        format!(
            "leverage [{}] uniform [{}]; leverage < 0.1: {small}, uniform > 5x: {ratio} (min ratio {worst_ratio:.2}), 200 <= 30: {shrinks}",
            fmt_row(lev),
            fmt_row(uni)
        ),
    )
}

fn criterion_2(t: &DataTable) -> Outcome {
    let uni = &t.cells[t.row_index("uniform").unwrap()];
    let decreasing = uni.windows(2).all(|w| w[1] < w[0]);
    Outcome::new(
        decreasing,
        format!("uniform along lambda 0.1, 0.5, 1, 5: [{}]", fmt_row(uni)),
    )
}

fn criterion_3(t: &DataTable) -> Outcome {
    let sens = &t.cells[t.row_index("rlad").unwrap()];
    let uni = &t.cells[t.row_index("uniform").unwrap()];
    let at30 = sens[0] < 1.0;
    let at200 = sens[SIZES.len() - 1] < 0.5;
    let ratio = sens.iter().zip(uni).all(|(s, u)| *u > 10.0 * s);
    let worst_ratio = sens
        .iter()
        .zip(uni)
        .map(|(s, u)| u / s)
        .fold(f64::INFINITY, f64::min);
    Outcome::new(
        at30 && at200 && ratio,
        format!(
            "sensitivity [{}] uniform [{}]; < 1 at 30: {at30}, < 0.5 at 200: {at200}, uniform > 10x: {ratio} (min ratio {worst_ratio:.2})",
            fmt_row(sens),
            fmt_row(uni)
        ),
    )
}

fn criterion_4() -> Outcome {
    let mut c = ExperimentConfig::new(vec![0.0, 0.01, 0.1, 1.0, 10.0, 100.0], vec![], vec![]);
    c.n = N;
    c.d = D;
    c.ng_alpha = ALPHA;
    c.master_seed = MASTER_SEED;
    let t = match run_sparsity_experiment(&c) {
        Ok(t) => t,
        Err(e) => return Outcome::new(false, format!("error: {e}")),
    };
    let row = |name: &str| &t.cells[t.row_index(name).unwrap()];
    let grows = |v: &[f64]| v.windows(2).all(|w| w[1] >= w[0]) && v[v.len() - 1] >= (D / 2) as f64;
    let (lasso, modified, ridge) = (row("lasso"), row("modified_lasso"), row("ridge"));
    let ridge_zero = ridge.iter().all(|&z| z == 0.0);
    Outcome::new(
        grows(lasso) && grows(modified) && ridge_zero,
        format!(
            "zeros lasso [{}] modified [{}] ridge [{}]",
            fmt_row(lasso),
            fmt_row(modified),
            fmt_row(ridge)
        ),
    )
}

fn small_instance(seed: u64, n: usize, d: usize) -> RegressionInstance {
    let mut rng = seeded(seed);
    let rows: Vec<Vec<f64>> = (0..n).map(|_| normal_vec(&mut rng, d)).collect();
    let b = normal_vec(&mut rng, n);
    RegressionInstance::new(DenseMatrix::from_rows(&rows).unwrap(), b).unwrap()
}

fn criterion_5() -> Outcome {
    let mut checked = 0;
    let mut violations = Vec::new();
    for k in 0..50u64 {
        let d = 1 + (k % 2) as usize;
        let n = 5 + (k % 4) as usize;
        let inst = small_instance(split_seed(MASTER_SEED, &[5, k]), n, d);
        let aprime = inst.augmented();
        for p in [1.0, 2.0] {
            for lambda in [0.0, 0.5, 5.0] {
                let (spec, bound) = if p == 1.0 {
                    let basis =
                        p_conditioned_basis(&aprime, 1.0, split_seed(MASTER_SEED, &[5, k, 1]))
                            .unwrap();
                    (
                        ObjectiveSpec::rlad(lambda).unwrap(),
                        rlad_sensitivity_bounds(&basis, lambda, &aprime).unwrap(),
                    )
                } else {
                    let basis = orthonormal_basis(&aprime).unwrap();
                    let norm = induced_norm_upper(&aprime, 2.0).unwrap();
                    (
                        ObjectiveSpec::lp_lp(2.0, lambda).unwrap(),
                        lp_lp_sensitivity_bounds(&basis, lambda, norm, n).unwrap(),
                    )
                };
                let oracle = brute_force_sensitivity(&inst, &spec, 48, 7).unwrap();
                for (i, (o, b)) in oracle.values.iter().zip(&bound.values).enumerate() {
                    checked += 1;
                    if *o > b * (1.0 + 1e-9) {
                        violations.push(format!(
                            "instance {k} p={p} lambda={lambda} row {i}: {o} > {b}"
                        ));
                    }
                }
            }
        }
    }
    Outcome::new(
        violations.is_empty(),
        format!(
            "{checked} row checks, {} violations {:?}",
            violations.len(),
            violations.first()
        ),
    )
}

/// `tr(A′(A′ᵀA′ + λI)⁻¹A′ᵀ)` through a Cholesky solve per row.
fn trace_by_cholesky(aprime: &DenseMatrix, lambda: f64) -> f64 {
    let mut g = aprime.gram();
    for j in 0..g.cols() {
        g[(j, j)] += lambda;
    }
    let chol = Cholesky::new(&g).unwrap();
    aprime
        .row_iter()
        .map(|row| {
            row.iter()
                .zip(chol.solve(row))
                .map(|(a, z)| a * z)
                .sum::<f64>()
        })
        .sum()
}

fn criterion_6() -> Outcome {
    let mut worst: f64 = 0.0;
    for k in 0..20u64 {
        let n = 30 + 5 * k as usize;
        let d = 2 + (k % 5) as usize;
        let aprime = small_instance(split_seed(MASTER_SEED, &[6, k]), n, d).augmented();
        let sv = svd(&aprime).unwrap().singular_values;
        for lambda in [0.0, 1.0, 10.0] {
            let total = ridge_leverage_scores(&aprime, lambda).unwrap().total;
            let sd = statistical_dimension(&sv, lambda).unwrap();
            let trace = trace_by_cholesky(&aprime, lambda);
            worst = worst.max((total - sd).abs()).max((total - trace).abs());
        }
    }
    Outcome::new(
        worst <= 1e-8,
        format!("max |total - sd| over 60 cases: {worst:.2e}"),
    )
}

fn criterion_7() -> Outcome {
    let epsilon = 0.1;
    let lambda = 1.0;
    let mut exceptions = 0;
    let mut p_passes = 0;
    for k in 0..10u64 {
        let (inst, _) =
            ng_instance(1_000, 6, 0.05, 1e-5, split_seed(MASTER_SEED, &[7, k])).unwrap();
        let scores = ridge_leverage_scores(&inst.augmented(), lambda).unwrap();
        let coreset = build_coreset(
            &inst,
            &scores,
            150,
            2.0,
            split_seed(MASTER_SEED, &[7, k, 1]),
        )
        .unwrap();
        let mut rng = seeded(split_seed(MASTER_SEED, &[7, k, 2]));
        let queries: Vec<Vec<f64>> = (0..500)
            .map(|_| {
                let scale = 10f64.powf(rng.random_range(-2.0..2.0));
                normal_vec(&mut rng, 6)
                    .into_iter()
                    .map(|v| scale * v)
                    .collect()
            })
            .collect();
        let report = transfer_check(&inst, &coreset, 2.0, 1.0, lambda, &queries, epsilon).unwrap();
        exceptions += report.exceptions.len();
        p_passes += report
            .p_report
            .deviations
            .iter()
            .flatten()
            .filter(|v| **v <= epsilon)
            .count();
    }
    Outcome::new(
        exceptions == 0,
        format!("5000 queries, {p_passes} within eps under ridge, {exceptions} exceptions"),
    )
}

fn criterion_8() -> Outcome {
    let aprime = DenseMatrix::identity(2);
    let core = Coreset::from_parts(&aprime, vec![0], vec![1.0], 2.0, 0, Scheme::Manual).unwrap();
    let epsilon = 0.1;
    let lasso = ObjectiveSpec::lasso(1.0).unwrap();
    let witness = match demonstrate_violation(&aprime, &core, &lasso, epsilon, MASTER_SEED) {
        Ok(Some(w)) => w,
        other => return Outcome::new(false, format!("no witness: {other:?}")),
    };
    // coreset keeps only the first coordinate of A′y = y
    let y = &witness.y;
    let pen = lasso.lambda * (y[0].abs() + y[1].abs());
    let ratio = (y[0] * y[0] + pen) / (y[0] * y[0] + y[1] * y[1] + pen);
    let edge = 1.0 - 0.5 * (epsilon + witness.epsilon_prime);
    let violates = witness.direction == ViolationDirection::Undershoot && ratio < edge;
    let agrees = (ratio - witness.regularized_ratio).abs() <= 1e-12 * ratio.max(1.0);
    let ridge = ObjectiveSpec::ridge(1.0).unwrap();
    let inapplicable = matches!(
        demonstrate_violation(&aprime, &core, &ridge, epsilon, MASTER_SEED),
        Err(CoresetError::TheoremInapplicable(_))
    );
    Outcome::new(
        violates && agrees && inapplicable,
        format!("re-evaluated ratio {ratio:.6} vs band edge {edge:.6}; r=s inapplicable: {inapplicable}"),
    )
}

fn one_d(a: &[f64], b: &[f64]) -> RegressionInstance {
    let rows: Vec<Vec<f64>> = a.iter().map(|v| vec![*v]).collect();
    RegressionInstance::new(DenseMatrix::from_rows(&rows).unwrap(), b.to_vec()).unwrap()
}

fn criterion_9() -> Outcome {
    let mut failures = Vec::new();
    let mut check = |ok: bool, what: &str| {
        if !ok {
            failures.push(what.to_owned());
        }
    };
    let ridge = solve_ridge(&one_d(&[1.0], &[2.0]), 1.0).unwrap();
    check((ridge.solution[0] - 1.0).abs() < 1e-12, "ridge x=[1]");

    let i2 = RegressionInstance::new(DenseMatrix::identity(2), vec![3.0, 0.5]).unwrap();
    let lasso = solve_lasso(&i2, 2.0, 1e-10, 100_000).unwrap();
    check(
        (lasso.solution[0] - 2.0).abs() < 1e-8 && lasso.solution[1].abs() < 1e-8,
        "lasso soft-threshold",
    );

    check(
        (prox_squared_l1(&[3.0], 0.5)[0] - 1.5).abs() < 1e-12,
        "prox scalar 1.5",
    );

    let median = one_d(&[1.0, 1.0, 1.0], &[1.0, 2.0, 9.0]);
    let rlad = solve_rlad(&median, 0.0, 1e-8, 200_000).unwrap();
    check((rlad.solution[0] - 2.0).abs() < 1e-4, "rlad median");
    let irls = solve_lp_lp(&median, 1.0, 0.0, 1e-10, 10_000).unwrap();
    check((irls.solution[0] - 2.0).abs() < 1e-3, "lp_lp p=1 median");

    let cubic = one_d(&[1.0, 2.0, -1.0, 0.5], &[1.0, 3.0, 0.0, 2.0]);
    let spec3 = ObjectiveSpec::lp_lp(3.0, 0.1).unwrap();
    let fit3 = solve_lp_lp(&cubic, 3.0, 0.1, 1e-12, 10_000).unwrap();
    let grid_min = (0..100_000)
        .map(|k| -5.0 + 10.0 * k as f64 / 99_999.0)
        .map(|x| spec3.evaluate(&cubic, &[x]).unwrap())
        .fold(f64::INFINITY, f64::min);
    check(
        fit3.objective_value <= grid_min + 1e-6,
        "lp_lp p=3 grid oracle",
    );

    let modified = solve_modified_lasso(&one_d(&[1.0], &[2.0]), 1.0, 1e-12, 100_000).unwrap();
    check(
        (modified.solution[0] - 1.0).abs() < 1e-8,
        "modified lasso scalar",
    );

    let mut worst_l1: f64 = 0.0;
    let mut worst_l2: f64 = 0.0;
    for k in 0..10u64 {
        let inst = small_instance(split_seed(MASTER_SEED, &[9, k]), 40, 3);
        let lambda = 0.5;
        let a = solve_lp_lp(&inst, 1.0, lambda, 1e-10, 10_000)
            .unwrap()
            .objective_value;
        let b = solve_rlad(&inst, lambda, 1e-9, 500_000)
            .unwrap()
            .objective_value;
        worst_l1 = worst_l1.max((a - b).abs() / b);
        let c = solve_lp_lp(&inst, 2.0, lambda, 1e-10, 100)
            .unwrap()
            .objective_value;
        let r = solve_ridge(&inst, lambda).unwrap().objective_value;
        worst_l2 = worst_l2.max((c - r).abs() / r);
    }
    check(worst_l1 <= 1e-3, "p=1 vs rlad");
    check(worst_l2 <= 1e-8, "p=2 vs ridge");
    Outcome::new(
        failures.is_empty(),
        format!(
            "p=1 vs rlad {worst_l1:.2e}, p=2 vs ridge {worst_l2:.2e}, failed: {:?}",
            failures
        ),
    )
}

fn criterion_10() -> Outcome {
    let mut verified = 0;
    let mut exceptions = Vec::new();
    for k in 0..10u64 {
        let (inst, _) =
            ng_instance(2_000, 6, 0.05, 1e-5, split_seed(MASTER_SEED, &[10, k])).unwrap();
        for (family, lambda) in [(Family::Ridge, 1.0), (Family::ModifiedLasso, 0.5)] {
            let spec = ObjectiveSpec::for_family(family, lambda).unwrap();
            let scores = ridge_leverage_scores(&inst.augmented(), lambda).unwrap();
            for epsilon in [0.2, 0.3] {
                let r = sample_size(scores.total, epsilon, 0.1, inst.d(), DEFAULT_SIZE_CONSTANT)
                    .unwrap();
                let seed = split_seed(MASTER_SEED, &[10, k, (epsilon * 10.0) as u64]);
                let coreset = build_coreset(&inst, &scores, r, 2.0, seed).unwrap();
                let full = regcoreset::solvers::solve(&inst, &spec, 1e-10, 200_000).unwrap();
                let sub = regcoreset::solvers::solve(
                    &coreset.as_instance().unwrap(),
                    &spec,
                    1e-10,
                    200_000,
                )
                .unwrap();
                let mut rng = seeded(split_seed(seed, &[0]));
                let mut queries: Vec<Vec<f64>> =
                    (0..200).map(|_| normal_vec(&mut rng, inst.d())).collect();
                queries.push(full.solution.clone());
                queries.push(sub.solution.clone());
                if !verify_coreset(&inst, &coreset, &spec, &queries, epsilon)
                    .unwrap()
                    .passed
                {
                    continue;
                }
                verified += 1;
                let at_core = spec.evaluate(&inst, &sub.solution).unwrap();
                if at_core > (1.0 + 3.0 * epsilon) * full.objective_value {
                    exceptions.push(format!("instance {k} {} eps={epsilon}", family.name()));
                }
            }
        }
    }
    Outcome::new(
        verified > 0 && exceptions.is_empty(),
        format!("{verified} verified coresets out of 40, exceptions {exceptions:?}"),
    )
}

fn run_tables(threads: usize) -> Vec<Result<String, CoresetError>> {
    in_pool(threads, || {
        [table1_config(), table2_config(), table3_config()]
            .iter()
            .map(|c| run_relative_error_experiment(c).map(|t| emit_report(&t, ReportFormat::Json)))
            .collect()
    })
}

fn main() {
    let mut failed = 0;
    let mut report = |id: usize, name: &str, start: Instant, outcome: Outcome| {
        let tag = if outcome.passed { "PASS" } else { "FAIL" };
        if !outcome.passed {
            failed += 1;
        }
        println!(
            "[{tag}] criterion {id:>2} {name}: {} ({:.1}s)",
            outcome.detail,
            start.elapsed().as_secs_f64()
        );
    };

    let start = Instant::now();
    let single = run_tables(1);
    let tables: Vec<Option<DataTable>> = single
        .iter()
        .map(|r| {
            r.as_ref()
                .ok()
                .map(|s| serde_json::from_str(s).expect("report parses"))
        })
        .collect();
    let table_outcome = |k: usize, check: fn(&DataTable) -> Outcome| match (&tables[k], &single[k])
    {
        (Some(t), _) => check(t),
        (None, Err(e)) => Outcome::new(false, format!("error: {e}")),
        _ => unreachable!(),
    };
    report(
        1,
        "relative error ordering",
        start,
        table_outcome(0, criterion_1),
    );
    report(
        2,
        "uniform error falls with lambda",
        start,
        table_outcome(1, criterion_2),
    );
    report(3, "rlad ordering", start, table_outcome(2, criterion_3));

    let start = Instant::now();
    report(4, "sparsity along lambda", start, criterion_4());
    let start = Instant::now();
    report(5, "oracle below analytic bounds", start, criterion_5());
    let start = Instant::now();
    report(6, "ridge leverage trace identity", start, criterion_6());
    let start = Instant::now();
    report(7, "ridge to modified lasso transfer", start, criterion_7());
    let start = Instant::now();
    report(
        8,
        "regularization lower bound witness",
        start,
        criterion_8(),
    );
    let start = Instant::now();
    report(9, "solver oracles and cross-checks", start, criterion_9());
    let start = Instant::now();
    report(10, "coreset optimum within 1+3eps", start, criterion_10());

    let start = Instant::now();
    let again = run_tables(1);
    let parallel = run_tables(PARALLEL_THREADS);
    let same = |a: &[Result<String, CoresetError>], b: &[Result<String, CoresetError>]| {
        a.iter().zip(b).all(|(x, y)| x == y)
    };
    let rerun = same(&single, &again);
    let threads = same(&single, &parallel);
    report(
        11,
        "determinism",
        start,
        Outcome::new(
            rerun && threads,
            format!(
                "rerun identical: {rerun}, 1 vs {PARALLEL_THREADS} threads identical: {threads}"
            ),
        ),
    );

    println!("acceptance: {} of 11 criteria passed", 11 - failed);
    if failed > 0 && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
