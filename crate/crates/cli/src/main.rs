//! Command-line front end: measurable factorization, conditional-expectation
//! tables, least-squares projection, risk reports, and the location-model and
//! filtering demonstrations, all as machine-readable files.
//!
//! Mathematically meaningful negatives — a map that fails to factor, a risk
//! curve that diverges — are successful runs whose verdict lives in the
//! report (exit 0). Exit 1 marks genuine failures (I/O, malformed inputs);
//! exit 2 marks usage errors. Fixed (args, seed) produce byte-identical
//! output across runs and worker counts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value as Json};

use sigmalab::condexp::{project_l2, ProjectionOptions, Ridge};
use sigmalab::factor::{construct_factor, extend_factor};
use sigmalab::fiducial::{
    divergence_demo, fiducial_posterior, posterior_point_estimate, posterior_risk_location,
    ClosedForm, DivergenceCurve, Focus, LocationModel, Noise,
};
use sigmalab::kalman::{ensemble_mse, KalmanBucyModel};
use sigmalab::model_io::{
    parse_action_json, parse_basis_json, parse_focus, parse_model_json, parse_samples_csv,
    parse_space_json,
};
use sigmalab::numeric::{rat_string, Value};
use sigmalab::risk::{truncated_risk_curve, Action, StatisticalModel};
use sigmalab::Error;

/// Default seed for bare runs, so every invocation is reproducible.
const DEFAULT_SEED: u64 = 0xD00B_D00B;

#[derive(Parser)]
#[command(name = "sigmalab", version, about = "Measurable factorization, conditional expectation, and risk reports on finite and location models")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    global: GlobalOpts,
}

#[derive(Args)]
struct GlobalOpts {
    /// RNG seed; the default makes bare runs reproducible.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,

    /// Write the report here (atomically); stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for ensemble work; 0 keeps the library default.
    /// Reports are byte-identical regardless of this setting.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Factor one map through another: find phi with x = phi ∘ y, or a witness pair that forbids it.
    Factorize {
        /// Space file (JSON) defining the maps.
        #[arg(long)]
        space: PathBuf,
        /// Name of the map to factor.
        #[arg(long)]
        x: String,
        /// Name of the map to factor through.
        #[arg(long)]
        y: String,
        /// Extend phi to all of y's codomain with this default value.
        #[arg(long)]
        extend: Option<String>,
    },
    /// Conditional-expectation table of gamma given y (CSV: y, phi, mass).
    Condexp {
        /// Space file (JSON) defining the maps.
        #[arg(long)]
        space: PathBuf,
        /// Name of the real-valued map to condition.
        #[arg(long)]
        gamma: String,
        /// Name of the conditioning map.
        #[arg(long)]
        y: String,
    },
    /// Least-squares projection of samples onto a feature basis (JSON fit).
    Project {
        /// Sample file (CSV with header `y,gamma`).
        #[arg(long)]
        samples: PathBuf,
        /// Basis spec file (JSON).
        #[arg(long)]
        basis: PathBuf,
        /// Ridge coefficient: `auto` or a nonnegative number.
        #[arg(long, default_value = "auto")]
        ridge: String,
        /// On a singular system with ridge 0, return the minimal-norm solution.
        #[arg(long)]
        pseudo_inverse: bool,
    },
    /// Risk report for a model: exact tables (finite) or a truncation curve (location).
    Risk {
        /// Model file (JSON), finite or location.
        #[arg(long)]
        model: PathBuf,
        /// Action file (JSON); finite models only. Defaults to the optimal rule.
        #[arg(long)]
        phi: Option<PathBuf>,
        /// Alias for --out.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Increasing truncation levels for location models, e.g. `1,10,100`.
        #[arg(long)]
        truncations: Option<String>,
        /// Monte-Carlo draws per truncation level.
        #[arg(long, default_value_t = 100_000)]
        n: usize,
    },
    /// Location-model demonstration: point estimate, pointwise risk, divergence curve (JSON).
    #[command(allow_negative_numbers = true)]
    FiducialDemo {
        /// Observed value.
        #[arg(long, default_value_t = 0.0)]
        y: f64,
        /// Noise family: normal, uniform, laplace, or degenerate.
        #[arg(long, default_value = "normal")]
        noise: String,
        /// Quantity of interest: identity, square, or a constant number.
        #[arg(long, default_value = "identity")]
        psi: String,
        /// Monte-Carlo draws.
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        /// Increasing truncation levels for the risk curve.
        #[arg(long, default_value = "1,10,100")]
        truncations: String,
    },
    /// Filtering demonstration: ensemble mean squared error against the error-variance curve (CSV).
    #[command(allow_negative_numbers = true)]
    KalmanDemo {
        /// Signal drift coefficient.
        #[arg(long, default_value_t = 0.0)]
        f: f64,
        /// Signal noise intensity.
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        /// Observation gain.
        #[arg(long, default_value_t = 1.0)]
        g: f64,
        /// Observation noise intensity.
        #[arg(long, default_value_t = 1.0)]
        d: f64,
        /// Initial error variance.
        #[arg(long, default_value_t = 0.0)]
        s0: f64,
        /// Initial state mean.
        #[arg(long = "x0-mean", default_value_t = 0.0)]
        x0_mean: f64,
        /// Time horizon.
        #[arg(long, default_value_t = 2.0)]
        tmax: f64,
        /// Grid step.
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        /// Number of simulated paths (at least 100).
        #[arg(long, default_value_t = 10_000)]
        paths: usize,
    },
}

/// A failed run, split by exit code: usage errors (2) versus runtime
/// failures such as I/O or malformed input files (1).
#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        Failure::Runtime(e.to_string())
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        // Clap exits 2 on usage errors and 0 for --help/--version.
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if cli.global.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.global.threads)
            .build_global()
            .map_err(|e| Failure::Runtime(format!("thread pool: {e}")))?;
    }
    let seed = cli.global.seed;
    let out = cli.global.out.as_deref();
    match cli.command {
        Command::Factorize { space, x, y, extend } => run_factorize(&space, &x, &y, extend.as_deref(), out),
        Command::Condexp { space, gamma, y } => run_condexp(&space, &gamma, &y, out),
        Command::Project { samples, basis, ridge, pseudo_inverse } => {
            run_project(&samples, &basis, &ridge, pseudo_inverse, out)
        }
        Command::Risk { model, phi, report, truncations, n } => {
            let target = report.as_deref().or(out);
            run_risk(&model, phi.as_deref(), truncations.as_deref(), n, seed, target)
        }
        Command::FiducialDemo { y, noise, psi, n, truncations } => {
            run_fiducial_demo(y, &noise, &psi, n, &truncations, seed, out)
        }
        Command::KalmanDemo { f, c, g, d, s0, x0_mean, tmax, dt, paths } => {
            run_kalman_demo(f, c, g, d, s0, x0_mean, tmax, dt, paths, seed, out)
        }
    }
}

// ---------------------------------------------------------------------------
// Shared plumbing

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::Runtime(format!("cannot read {}: {e}", path.display())))
}

/// Write through a temp file in the same directory plus rename, so a report
/// is never observable half-written.
fn write_atomic(path: &Path, content: &str) -> Result<(), Failure> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Failure::Runtime(format!("not a file path: {}", path.display())))?
        .to_string_lossy();
    let tmp = dir.join(format!(".{name}.tmp.{}", std::process::id()));
    let io = |e: std::io::Error| Failure::Runtime(format!("cannot write {}: {e}", path.display()));
    fs::write(&tmp, content).map_err(io)?;
    fs::rename(&tmp, path).map_err(io)
}

fn emit(out: Option<&Path>, content: &str) -> Result<(), Failure> {
    match out {
        Some(path) => write_atomic(path, content),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn json_report(report: &Json) -> String {
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    text
}

/// Comma-separated strictly increasing positive reals.
fn parse_truncations(text: &str) -> Result<Vec<f64>, Failure> {
    let mut out: Vec<f64> = Vec::new();
    for piece in text.split(',') {
        let piece = piece.trim();
        let t: f64 = piece
            .parse()
            .map_err(|_| usage(format!("cannot parse truncation level '{piece}'")))?;
        if !t.is_finite() || t <= 0.0 {
            return Err(usage(format!("truncation levels must be positive, got {t}")));
        }
        if out.last().is_some_and(|&prev| t <= prev) {
            return Err(usage(format!("truncation levels must be strictly increasing, got {text}")));
        }
        out.push(t);
    }
    if out.is_empty() {
        return Err(usage("at least one truncation level is required"));
    }
    Ok(out)
}

fn parse_noise_arg(text: &str) -> Result<Noise, Failure> {
    match text {
        "normal" => Ok(Noise::Normal),
        "uniform" => Ok(Noise::Uniform),
        "laplace" => Ok(Noise::Laplace),
        "degenerate" => Ok(Noise::Degenerate),
        other => Err(usage(format!(
            "unknown noise family '{other}' (expected normal, uniform, laplace, or degenerate)"
        ))),
    }
}

fn parse_focus_arg(text: &str) -> Result<Focus, Failure> {
    // A bare word like `identity` is not valid JSON; quote it and reuse the
    // file-format parser so CLI and file specs accept the same spellings.
    let doc: Json = serde_json::from_str(text).unwrap_or_else(|_| Json::String(text.to_string()));
    parse_focus(&doc, "psi").map_err(|e| usage(e.to_string()))
}

fn focus_name(psi: &Focus) -> String {
    match psi {
        Focus::Identity => "identity".into(),
        Focus::Square => "square".into(),
        Focus::Constant(c) => format!("constant({c})"),
        Focus::Custom { name, .. } => format!("custom({name})"),
    }
}

fn curve_to_json(curve: &DivergenceCurve) -> Json {
    let points: Vec<Json> = curve
        .points
        .iter()
        .map(|p| {
            json!({
                "t": p.t,
                "risk": p.risk,
                "risk_stderr": p.risk_stderr,
                "posterior_risk_probe": p.posterior_risk_probe,
                "posterior_risk_probe_stderr": p.posterior_risk_probe_stderr,
            })
        })
        .collect();
    json!({ "points": points, "diverged": curve.diverged })
}

// ---------------------------------------------------------------------------
// Subcommands

fn run_factorize(
    space: &Path,
    x: &str,
    y: &str,
    extend: Option<&str>,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let file = parse_space_json(&read_file(space)?)?;
    let x_map = file.map(x)?;
    let y_map = file.map(y)?;
    let report = match construct_factor(x_map, y_map) {
        Ok(phi) => {
            let phi = match extend {
                Some(default) => {
                    let default = Value::from_json(&serde_json::from_str(default)
                        .unwrap_or_else(|_| Json::String(default.to_string())))?;
                    extend_factor(&phi, y_map.codomain(), &default)?
                }
                None => phi,
            };
            let pairs: Vec<Json> = phi
                .assignments()
                .iter()
                .map(|(yv, xv)| json!([yv.to_json(), xv.to_json()]))
                .collect();
            json!({
                "schema": "factorize-report/1",
                "status": "factored",
                "x": x,
                "y": y,
                "phi": pairs,
                "defined_on_image_only": phi.defined_on_image_only(),
            })
        }
        Err(Error::NotMeasurable { omega_a, omega_b, .. }) => json!({
            "schema": "factorize-report/1",
            "status": "not_measurable",
            "x": x,
            "y": y,
            "witness": [omega_a, omega_b],
        }),
        Err(e) => return Err(e.into()),
    };
    emit(out, &json_report(&report))
}

fn run_condexp(space: &Path, gamma: &str, y: &str, out: Option<&Path>) -> Result<(), Failure> {
    let file = parse_space_json(&read_file(space)?)?;
    let gamma_map = file.map(gamma)?;
    let y_map = file.map(y)?;
    let table = sigmalab::condexp::condexp_discrete(gamma_map, y_map)?;
    let mut csv = String::from("y,phi,mass\n");
    for (yv, phi) in table.defined() {
        let _ = writeln!(csv, "{yv},{},{}", rat_string(phi), table.mass(yv));
    }
    for yv in table.undefined() {
        let _ = writeln!(csv, "{yv},NA,{}", table.mass(yv));
    }
    emit(out, &csv)
}

fn run_project(
    samples: &Path,
    basis: &Path,
    ridge: &str,
    pseudo_inverse: bool,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let data = parse_samples_csv(&read_file(samples)?)?;
    let spec = parse_basis_json(&read_file(basis)?)?;
    let ridge = match ridge {
        "auto" => Ridge::Auto,
        text => {
            let r: f64 = text
                .parse()
                .map_err(|_| usage(format!("--ridge expects `auto` or a number, got '{text}'")))?;
            if !r.is_finite() || r < 0.0 {
                return Err(usage(format!("--ridge must be nonnegative, got {r}")));
            }
            Ridge::Exact(r)
        }
    };
    let fit = project_l2(&data, &spec.to_basis(), ProjectionOptions { ridge, pseudo_inverse })?;
    let report = json!({
        "schema": "project-report/1",
        "coefficients": fit.coefficients,
        "residual_risk": fit.residual_risk,
        "orthogonality_defect": fit.orthogonality_defect,
        "sample_count": fit.sample_count,
        "condition_diagnostic": fit.condition_diagnostic,
        "ridge_used": fit.ridge_used,
    });
    emit(out, &json_report(&report))
}

fn run_risk(
    model: &Path,
    phi: Option<&Path>,
    truncations: Option<&str>,
    n: usize,
    seed: u64,
    out: Option<&Path>,
) -> Result<(), Failure> {
    match parse_model_json(&read_file(model)?)? {
        StatisticalModel::Finite(m) => {
            if truncations.is_some() {
                return Err(usage("--truncations applies only to location models"));
            }
            let (rule, rule_kind) = match phi {
                Some(path) => (parse_action_json(&read_file(path)?)?, "supplied"),
                None => (m.optimal_action_table(), "optimal"),
            };
            let report = finite_risk_report(&m, &rule, rule_kind)?;
            emit(out, &json_report(&report))
        }
        StatisticalModel::Location { model: loc, psi } => {
            if phi.is_some() {
                return Err(usage(
                    "--phi applies only to finite models; location reports use the posterior-mean rule",
                ));
            }
            let levels = parse_truncations(truncations.unwrap_or("1,10,100"))?;
            if n == 0 {
                return Err(usage("--n must be positive"));
            }
            let curve = truncated_risk_curve(&loc, &psi, &levels, n, seed);
            let report = json!({
                "schema": "risk-report/1",
                "kind": "location",
                "noise": format!("{:?}", loc.noise),
                "psi": focus_name(&psi),
                "samples_per_level": n,
                "curve": curve_to_json(&curve),
                "diverged": curve.diverged,
            });
            emit(out, &json_report(&report))
        }
    }
}

fn finite_risk_report(
    m: &sigmalab::risk::FiniteModel,
    rule: &Action,
    rule_kind: &str,
) -> Result<Json, Failure> {
    let decomposition = m.decompose(rule)?;
    let fubini = m.integrate_frequentist(rule)?;
    let fubini_gap = &fubini - &decomposition.bayes_risk;

    let action_table: Vec<Json> = rule
        .entries()
        .map(|(yv, a)| json!([yv.to_json(), rat_string(a)]))
        .collect();

    let mut posterior = Vec::new();
    let mut undefined = Vec::new();
    for yv in m.ys() {
        match m.posterior_risk(rule, yv) {
            Ok(r) => posterior.push(json!([yv.to_json(), rat_string(&r)])),
            Err(Error::UndefinedFiber(_)) => undefined.push(yv.to_json()),
            Err(e) => return Err(e.into()),
        }
    }

    // A zero-prior parameter can emit data the rule never sees; its
    // frequentist risk is undefined rather than an error for the report.
    let mut frequentist = Vec::new();
    for theta in m.thetas() {
        match m.frequentist_risk(rule, theta) {
            Ok(r) => frequentist.push(json!([theta.to_json(), rat_string(&r)])),
            Err(Error::MissingAction(_)) => frequentist.push(json!([theta.to_json(), Json::Null])),
            Err(e) => return Err(e.into()),
        }
    }

    Ok(json!({
        "schema": "risk-report/1",
        "kind": "finite",
        "rule": rule_kind,
        "action": action_table,
        "bayes_risk": rat_string(&decomposition.bayes_risk),
        "posterior_risk": posterior,
        "undefined_fibers": undefined,
        "frequentist_risk": frequentist,
        "integrated_posterior_risk": rat_string(&decomposition.integrated_posterior_risk),
        "decomposition_discrepancy": rat_string(&decomposition.discrepancy),
        "frequentist_integral": rat_string(&fubini),
        "fubini_discrepancy": rat_string(&fubini_gap),
        "diverged": false,
    }))
}

fn run_fiducial_demo(
    y: f64,
    noise: &str,
    psi: &str,
    n: usize,
    truncations: &str,
    seed: u64,
    out: Option<&Path>,
) -> Result<(), Failure> {
    if !y.is_finite() {
        return Err(usage(format!("--y must be finite, got {y}")));
    }
    if n < 2 {
        return Err(usage("--n must be at least 2"));
    }
    let noise_family = parse_noise_arg(noise)?;
    let psi_focus = parse_focus_arg(psi)?;
    let levels = parse_truncations(truncations)?;
    let model = LocationModel::new(noise_family, psi_focus.clone());

    let post = fiducial_posterior(&model, y, n, seed);
    let estimate = posterior_point_estimate(&post, &psi_focus);
    let (sample_mean, sample_stderr) = post.sample_mean();
    let posterior_risk = posterior_risk_location(&model, y, &psi_focus, n, seed);
    let closed_form = match post.closed_form() {
        Some(ClosedForm::Gaussian { mean, var }) => json!({ "family": "gaussian", "mean": mean, "var": var }),
        None => Json::Null,
    };
    let curve = divergence_demo(&model, &psi_focus, &levels, n, seed);

    let report = json!({
        "schema": "fiducial-report/1",
        "y": y,
        "noise": noise,
        "psi": focus_name(&psi_focus),
        "n": n,
        "estimate": estimate,
        "sample_mean": sample_mean,
        "sample_stderr": sample_stderr,
        "posterior_risk": posterior_risk,
        "closed_form": closed_form,
        "curve": curve_to_json(&curve),
        "diverged": curve.diverged,
    });
    emit(out, &json_report(&report))
}

#[allow(clippy::too_many_arguments)]
fn run_kalman_demo(
    f: f64,
    c: f64,
    g: f64,
    d: f64,
    s0: f64,
    x0_mean: f64,
    tmax: f64,
    dt: f64,
    paths: usize,
    seed: u64,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let model =
        KalmanBucyModel::new(f, c, g, d, s0, x0_mean, tmax, dt).map_err(|e| usage(e.to_string()))?;
    let curve = match ensemble_mse(&model, paths, seed) {
        Ok(curve) => curve,
        Err(e @ Error::TooFewSamples { .. }) => return Err(usage(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    let mut csv = String::from("t,S,mse,stderr\n");
    for i in 0..curve.times.len() {
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            curve.times[i], curve.riccati[i], curve.mse[i], curve.stderr[i]
        );
    }
    emit(out, &csv)
}
