//! The `regcoreset` command line.
//!
//! Every subcommand reads an optional JSON config file, overlays its flags on
//! it (flags win), validates the merged settings before touching any data and
//! writes one document to standard output or `--out`. JSON documents echo the
//! effective configuration and the master seed.
//!
//! Exit codes: 0 on success, 1 on a usage or validation error, 2 on an
//! internal failure such as a solver that did not converge.

use std::ffi::OsString;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::coreset::{build_coreset, sample_size, verify_coreset, Coreset, DEFAULT_SIZE_CONSTANT};
use crate::error::{CoresetError, Result};
use crate::experiments::{
    emit_report, ng_instance, run_relative_error_experiment, run_sparsity_experiment,
    sampling_scores, ExperimentConfig, ReportFormat, SamplingScheme,
};
use crate::lowerbound::demonstrate_violation;
use crate::matrix::{DenseMatrix, RegressionInstance};
use crate::objective::{Family, ObjectiveSpec};
use crate::rng::{normal_vec, seeded, split_seed};
use crate::sensitivity::Scheme;
use crate::solvers::{self, DEFAULT_MAX_ITER, DEFAULT_TOL};

const EXIT_OK: i32 = 0;
const EXIT_VALIDATION: i32 = 1;
const EXIT_INTERNAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "regcoreset",
    version,
    about = "Coresets for regularized regression"
)]
struct Cli {
    /// Worker threads; defaults to the number of available cores.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate an NG test instance.
    GenNg(GenNgArgs),
    /// Sample a coreset from an instance.
    Coreset(CoresetArgs),
    /// Solve a regularized regression problem.
    Solve(SolveArgs),
    /// Check a coreset against the full data on random queries.
    Verify(VerifyArgs),
    /// Run the relative-error experiment.
    Experiment(TableArgs),
    /// Scale an unregularized coreset failure into a regularized one.
    Lowerbound(LowerboundArgs),
    /// Count zeros of lasso, modified lasso and ridge along a λ grid.
    Sparsity(TableArgs),
}

/// Where the document goes and which file seeds the settings.
#[derive(Debug, Args)]
struct Common {
    /// JSON file whose keys mirror the flags; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write the document here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct GenNgArgs {
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    d: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    noise_scale: Option<f64>,
    #[arg(long = "seed", visible_alias = "master-seed")]
    #[serde(rename = "master_seed", skip_serializing_if = "Option::is_none")]
    master_seed: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GenNgConfig {
    #[serde(default = "gen_defaults::n")]
    n: usize,
    #[serde(default = "gen_defaults::d")]
    d: usize,
    #[serde(default = "gen_defaults::alpha")]
    alpha: f64,
    #[serde(default = "gen_defaults::noise_scale")]
    noise_scale: f64,
    #[serde(default)]
    master_seed: u64,
}

mod gen_defaults {
    pub fn n() -> usize {
        20_000
    }
    pub fn d() -> usize {
        30
    }
    pub fn alpha() -> f64 {
        0.00065
    }
    pub fn noise_scale() -> f64 {
        1e-5
    }
}

#[derive(Debug, Args, Serialize)]
struct CoresetArgs {
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
    /// Instance JSON written by `gen-ng`, or `-` for standard input.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    instance: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    scheme: Option<SamplingScheme>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    family: Option<Family>,
    /// Exponent for the `lp_lp` family.
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    p: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    /// Number of draws.
    #[arg(long, conflicts_with = "epsilon")]
    #[serde(skip_serializing_if = "Option::is_none")]
    size: Option<usize>,
    /// Target accuracy; the size then follows from the sensitivity total.
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    epsilon: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    delta: Option<f64>,
    #[arg(long = "seed", visible_alias = "master-seed")]
    #[serde(rename = "master_seed", skip_serializing_if = "Option::is_none")]
    master_seed: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoresetConfig {
    instance: PathBuf,
    scheme: SamplingScheme,
    /// Defaults to `rlad` for the `rlad` scheme, `lp_lp` for `lp-lp` and
    /// `modified_lasso` otherwise.
    #[serde(default)]
    family: Option<Family>,
    #[serde(default = "default_p")]
    p: f64,
    #[serde(default)]
    lambda: f64,
    #[serde(default)]
    size: Option<usize>,
    #[serde(default)]
    epsilon: Option<f64>,
    #[serde(default = "default_delta")]
    delta: f64,
    #[serde(default)]
    master_seed: u64,
}

fn default_p() -> f64 {
    2.0
}

fn default_delta() -> f64 {
    0.1
}

fn default_epsilon() -> f64 {
    0.5
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

fn default_max_iter() -> usize {
    DEFAULT_MAX_ITER
}

#[derive(Debug, Args, Serialize)]
struct SolveArgs {
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
    /// Instance JSON, or `-` for standard input.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    instance: Option<PathBuf>,
    /// Solve on this coreset instead of the instance.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    coreset: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    family: Option<Family>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    p: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    tol: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    max_iter: Option<usize>,
    #[arg(long = "seed", visible_alias = "master-seed")]
    #[serde(rename = "master_seed", skip_serializing_if = "Option::is_none")]
    master_seed: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolveConfig {
    #[serde(default)]
    instance: Option<PathBuf>,
    #[serde(default)]
    coreset: Option<PathBuf>,
    family: Family,
    #[serde(default = "default_p")]
    p: f64,
    #[serde(default)]
    lambda: f64,
    #[serde(default = "default_tol")]
    tol: f64,
    #[serde(default = "default_max_iter")]
    max_iter: usize,
    #[serde(default)]
    master_seed: u64,
}

#[derive(Debug, Args, Serialize)]
struct VerifyArgs {
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    instance: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    coreset: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    family: Option<Family>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    p: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    epsilon: Option<f64>,
    /// Number of Gaussian queries.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    queries: Option<usize>,
    #[arg(long = "seed", visible_alias = "master-seed")]
    #[serde(rename = "master_seed", skip_serializing_if = "Option::is_none")]
    master_seed: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VerifyConfig {
    instance: PathBuf,
    coreset: PathBuf,
    #[serde(default = "default_family")]
    family: Family,
    #[serde(default = "default_p")]
    p: f64,
    #[serde(default)]
    lambda: f64,
    #[serde(default = "default_epsilon")]
    epsilon: f64,
    #[serde(default = "default_queries")]
    queries: usize,
    #[serde(default)]
    master_seed: u64,
}

fn default_family() -> Family {
    Family::ModifiedLasso
}

fn default_queries() -> usize {
    200
}

#[derive(Debug, Args, Serialize)]
struct TableArgs {
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
    #[arg(long, value_parser = ["csv", "json"])]
    #[serde(skip)]
    format: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    d: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    ng_alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    noise_scale: Option<f64>,
    #[arg(long, allow_negative_numbers = true, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    sample_sizes: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    schemes: Option<Vec<SamplingScheme>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    trials_per_cell: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    master_seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    objective_family: Option<Family>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    p: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    tol: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    max_iter: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
struct LowerboundArgs {
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
    /// Objective as inline JSON or a path to a JSON file:
    /// `{"p":2,"q":1,"r":2,"s":1,"lambda":1,"family":"lasso"}`.
    #[arg(long)]
    #[serde(skip)]
    spec: Option<String>,
    /// Matrix JSON `{rows, cols, data}`; defaults to the 2×2 identity.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    aprime: Option<PathBuf>,
    /// Coreset JSON over `aprime`; defaults to its first row with weight 1.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    coreset: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    epsilon: Option<f64>,
    #[arg(long = "seed", visible_alias = "master-seed")]
    #[serde(rename = "master_seed", skip_serializing_if = "Option::is_none")]
    master_seed: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LowerboundConfig {
    spec: ObjectiveSpec,
    #[serde(default)]
    aprime: Option<PathBuf>,
    #[serde(default)]
    coreset: Option<PathBuf>,
    #[serde(default = "default_lowerbound_epsilon")]
    epsilon: f64,
    #[serde(default)]
    master_seed: u64,
}

fn default_lowerbound_epsilon() -> f64 {
    0.1
}

/// Parse `argv` (program name first), run the subcommand and return the
/// exit code. Documents go to `stdout`, diagnostics to `stderr`.
pub fn dispatch<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_VALIDATION
            } else {
                EXIT_OK
            };
            let rendered = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = sink.write_all(rendered.as_bytes());
            return code;
        }
    };
    let outcome = match cli.threads {
        Some(0) => Err(CoresetError::invalid("--threads must be at least 1")),
        Some(k) => match rayon::ThreadPoolBuilder::new().num_threads(k).build() {
            Ok(pool) => pool.install(|| run(&cli.command)),
            Err(e) => Err(CoresetError::invalid(format!("thread pool: {e}"))),
        },
        None => run(&cli.command),
    };
    match outcome.and_then(|(doc, out)| write_document(&doc, out, stdout)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            if e.is_validation() {
                EXIT_VALIDATION
            } else {
                EXIT_INTERNAL
            }
        }
    }
}

fn write_document(doc: &str, out: Option<&Path>, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, doc)
            .map_err(|e| CoresetError::Io(format!("{}: {e}", path.display()))),
        None => stdout
            .write_all(doc.as_bytes())
            .map_err(|e| CoresetError::Io(e.to_string())),
    }
}

fn run(command: &Command) -> Result<(String, Option<&Path>)> {
    let (doc, common) = match command {
        Command::GenNg(a) => (gen_ng(a)?, &a.common),
        Command::Coreset(a) => (coreset(a)?, &a.common),
        Command::Solve(a) => (solve(a)?, &a.common),
        Command::Verify(a) => (verify(a)?, &a.common),
        Command::Experiment(a) => (table(a, false)?, &a.common),
        Command::Lowerbound(a) => (lowerbound(a)?, &a.common),
        Command::Sparsity(a) => (table(a, true)?, &a.common),
    };
    Ok((doc, common.out.as_deref()))
}

/// Overlay the set flags on the config file and deserialize the result.
fn merge<C: DeserializeOwned>(
    config: Option<&Path>,
    flags: &impl Serialize,
    extra: Map<String, Value>,
) -> Result<C> {
    let mut map = match config {
        Some(path) => match read_json(path)? {
            Value::Object(map) => map,
            _ => {
                return Err(CoresetError::Schema(format!(
                    "{}: config must be a JSON object",
                    path.display()
                )))
            }
        },
        None => Map::new(),
    };
    if let Value::Object(set) = serde_json::to_value(flags).expect("flags serialize") {
        map.extend(set);
    }
    map.extend(extra);
    serde_json::from_value(Value::Object(map))
        .map_err(|e| CoresetError::Schema(format!("config: {e}")))
}

fn read_text(path: &Path) -> Result<String> {
    if path == Path::new("-") {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        return Ok(s);
    }
    std::fs::read_to_string(path).map_err(|e| CoresetError::Io(format!("{}: {e}", path.display())))
}

fn read_json(path: &Path) -> Result<Value> {
    serde_json::from_str(&read_text(path)?)
        .map_err(|e| CoresetError::Schema(format!("{}: {e}", path.display())))
}

/// Read `T` from a bare document or from the `key` field of a CLI document.
fn read_artifact<T: DeserializeOwned>(path: &Path, key: &str) -> Result<T> {
    let mut value = read_json(path)?;
    if let Some(inner) = value.get_mut(key) {
        value = inner.take();
    }
    serde_json::from_value(value)
        .map_err(|e| CoresetError::Schema(format!("{}: {e}", path.display())))
}

fn document(
    command: &str,
    config: &impl Serialize,
    master_seed: u64,
    body: Map<String, Value>,
) -> String {
    let mut doc = Map::new();
    doc.insert("command".into(), json!(command));
    doc.insert(
        "config".into(),
        serde_json::to_value(config).expect("configs serialize"),
    );
    doc.insert("master_seed".into(), json!(master_seed));
    doc.extend(body);
    let mut s = serde_json::to_string_pretty(&Value::Object(doc)).expect("documents serialize");
    s.push('\n');
    s
}

fn body(entries: Vec<(&str, Value)>) -> Map<String, Value> {
    entries
        .into_iter()
        .map(|(k, v)| (k.to_owned(), v))
        .collect()
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(CoresetError::invalid(format!(
            "lambda={lambda} must be finite and >= 0"
        )));
    }
    Ok(())
}

fn check_unit_interval(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v < 1.0) {
        return Err(CoresetError::invalid(format!(
            "{name}={v} must lie in (0, 1)"
        )));
    }
    Ok(())
}

fn gen_ng(args: &GenNgArgs) -> Result<String> {
    let cfg: GenNgConfig = merge(args.common.config.as_deref(), args, Map::new())?;
    let (instance, x_true) =
        ng_instance(cfg.n, cfg.d, cfg.alpha, cfg.noise_scale, cfg.master_seed)?;
    Ok(document(
        "gen-ng",
        &cfg,
        cfg.master_seed,
        body(vec![
            ("instance", json!(instance)),
            ("x_true", json!(x_true)),
        ]),
    ))
}

fn coreset_family(cfg: &CoresetConfig) -> Family {
    cfg.family.unwrap_or(match cfg.scheme {
        SamplingScheme::Rlad => Family::Rlad,
        SamplingScheme::LpLp => Family::LpLp,
        _ => Family::ModifiedLasso,
    })
}

fn coreset(args: &CoresetArgs) -> Result<String> {
    let mut cfg: CoresetConfig = merge(args.common.config.as_deref(), args, Map::new())?;
    check_lambda(cfg.lambda)?;
    if let Some(eps) = cfg.epsilon {
        check_unit_interval("epsilon", eps)?;
        check_unit_interval("delta", cfg.delta)?;
    }
    if cfg.size.is_some() && cfg.epsilon.is_some() {
        return Err(CoresetError::invalid(
            "give either size or epsilon, not both",
        ));
    }
    if cfg.size.is_none() && cfg.epsilon.is_none() && cfg.scheme != SamplingScheme::Identity {
        return Err(CoresetError::invalid("one of size or epsilon is required"));
    }
    cfg.family = Some(coreset_family(&cfg));
    let spec = ObjectiveSpec::with_exponent(coreset_family(&cfg), cfg.p, cfg.lambda)?;

    let instance: RegressionInstance = read_artifact(&cfg.instance, "instance")?;
    let aprime = instance.augmented();
    let seed = cfg.master_seed;
    let scores = sampling_scores(cfg.scheme, &aprime, &spec, split_seed(seed, &[0]))?;
    let (coreset, total) = match scores {
        None => (Coreset::identity(&instance, spec.p)?, instance.n() as f64),
        Some(scores) => {
            let r = match (cfg.size, cfg.epsilon) {
                (Some(r), _) => r,
                (None, Some(eps)) => sample_size(
                    scores.total,
                    eps,
                    cfg.delta,
                    instance.d(),
                    DEFAULT_SIZE_CONSTANT,
                )?,
                (None, None) => unreachable!("checked above"),
            };
            (
                build_coreset(&instance, &scores, r, spec.p, split_seed(seed, &[1]))?,
                scores.total,
            )
        }
    };
    Ok(document(
        "coreset",
        &cfg,
        seed,
        body(vec![
            ("sensitivity_total", json!(total)),
            ("coreset", json!(coreset)),
        ]),
    ))
}

fn solve(args: &SolveArgs) -> Result<String> {
    let cfg: SolveConfig = merge(args.common.config.as_deref(), args, Map::new())?;
    check_lambda(cfg.lambda)?;
    if !(cfg.tol > 0.0) {
        return Err(CoresetError::invalid("tol must be positive"));
    }
    let spec = ObjectiveSpec::with_exponent(cfg.family, cfg.p, cfg.lambda)?;
    let instance = match (&cfg.coreset, &cfg.instance) {
        (Some(path), _) => read_artifact::<Coreset>(path, "coreset")?.as_instance()?,
        (None, Some(path)) => read_artifact(path, "instance")?,
        (None, None) => {
            return Err(CoresetError::invalid(
                "one of instance or coreset is required",
            ))
        }
    };
    let result = solvers::solve(&instance, &spec, cfg.tol, cfg.max_iter)?;
    Ok(document(
        "solve",
        &cfg,
        cfg.master_seed,
        body(vec![("result", json!(result))]),
    ))
}

fn verify(args: &VerifyArgs) -> Result<String> {
    let cfg: VerifyConfig = merge(args.common.config.as_deref(), args, Map::new())?;
    check_lambda(cfg.lambda)?;
    check_unit_interval("epsilon", cfg.epsilon)?;
    if cfg.queries == 0 {
        return Err(CoresetError::invalid("queries must be at least 1"));
    }
    let spec = ObjectiveSpec::with_exponent(cfg.family, cfg.p, cfg.lambda)?;
    let instance: RegressionInstance = read_artifact(&cfg.instance, "instance")?;
    let coreset: Coreset = read_artifact(&cfg.coreset, "coreset")?;
    let mut rng = seeded(split_seed(cfg.master_seed, &[0]));
    let queries: Vec<Vec<f64>> = (0..cfg.queries)
        .map(|_| normal_vec(&mut rng, instance.d()))
        .collect();
    let report = verify_coreset(&instance, &coreset, &spec, &queries, cfg.epsilon)?;
    Ok(document(
        "verify",
        &cfg,
        cfg.master_seed,
        body(vec![("report", json!(report))]),
    ))
}

fn table(args: &TableArgs, sparsity: bool) -> Result<String> {
    let cfg: ExperimentConfig = merge(args.common.config.as_deref(), args, Map::new())?;
    let format: ReportFormat = args.format.as_deref().unwrap_or("json").parse()?;
    let table = if sparsity {
        run_sparsity_experiment(&cfg)?
    } else {
        run_relative_error_experiment(&cfg)?
    };
    let mut doc = emit_report(&table, format);
    if !doc.ends_with('\n') {
        doc.push('\n');
    }
    Ok(doc)
}

fn lowerbound(args: &LowerboundArgs) -> Result<String> {
    let mut extra = Map::new();
    if let Some(spec) = &args.spec {
        let value = if spec.trim_start().starts_with('{') {
            serde_json::from_str(spec).map_err(|e| CoresetError::Schema(format!("spec: {e}")))?
        } else {
            read_json(Path::new(spec))?
        };
        extra.insert("spec".into(), value);
    }
    let cfg: LowerboundConfig = merge(args.common.config.as_deref(), args, extra)?;
    cfg.spec.validate()?;
    check_unit_interval("epsilon", cfg.epsilon)?;
    let aprime = match &cfg.aprime {
        Some(path) => read_artifact(path, "aprime")?,
        None => DenseMatrix::identity(2),
    };
    let coreset = match &cfg.coreset {
        Some(path) => read_artifact(path, "coreset")?,
        None => Coreset::from_parts(&aprime, vec![0], vec![1.0], cfg.spec.p, 0, Scheme::Manual)?,
    };
    let witness =
        demonstrate_violation(&aprime, &coreset, &cfg.spec, cfg.epsilon, cfg.master_seed)?;
    let leaves_band = witness.as_ref().map(|w| w.leaves_band());
    Ok(document(
        "lowerbound",
        &cfg,
        cfg.master_seed,
        body(vec![
            ("witness", json!(witness)),
            ("leaves_band", json!(leaves_band)),
        ]),
    ))
}
