mod checks;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nctorus::coord_ring::{CoordinateRing, RingOptions};
use nctorus::qfield::{QuadIrr, RmData, Sl2Matrix};
use nctorus::theta::{parse_rational, theta_fn_with_tol};
use nctorus::{Error, Precision};
use num_complex::Complex64;
use serde::Deserialize;
use serde_json::{json, Value};

const EXIT_VALIDATION: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "nct",
    version,
    about = "Noncommutative tori with real multiplication"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fixing matrix, ε and the ring conditions for θ.
    Fix(Opts),
    /// Property suite of the torus algebra on random elements.
    Algebra(Opts),
    /// Bimodule, connection and representation checks.
    ModuleCheck(Opts),
    /// Theta constant or theta function with certified truncation.
    Theta(Opts),
    /// Homogeneous coordinate ring report.
    Ring(Opts),
}

/// Flags shared by every subcommand; each one may also come from `--config`.
#[derive(Args, Debug, Default)]
struct Opts {
    /// JSON file with defaults for any of the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Quadratic irrationality "(p+q*sqrtD)/r".
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<String>,
    /// Fixing matrix "[[a,b],[c,d]]"; defaults to the minimal one.
    #[arg(long, allow_hyphen_values = true)]
    g: Option<String>,
    /// Modular parameter "a+bi".
    #[arg(long, allow_hyphen_values = true)]
    tau: Option<String>,
    #[arg(long)]
    max_degree: Option<u32>,
    /// double or extended; NCT_PRECISION is used when absent.
    #[arg(long)]
    precision: Option<String>,
    /// Theta characteristic "p/q".
    #[arg(long, allow_hyphen_values = true)]
    r: Option<String>,
    /// Theta modulus "a+bi".
    #[arg(long, allow_hyphen_values = true)]
    m: Option<String>,
    /// Theta function argument "a+bi".
    #[arg(long, allow_hyphen_values = true)]
    z: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Random triples for the associativity check.
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    theta: Option<String>,
    g: Option<String>,
    tau: Option<String>,
    max_degree: Option<u32>,
    precision: Option<String>,
    r: Option<String>,
    m: Option<String>,
    z: Option<String>,
    tol: Option<f64>,
    seed: Option<u64>,
    samples: Option<usize>,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn validation(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_VALIDATION,
            message: message.into(),
        }
    }

    fn numerical(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_NUMERICAL,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Conditioning(_) | Error::Overflow(_) => Failure::numerical(e.to_string()),
            Error::Domain(_) | Error::Parse(_) => Failure::validation(e.to_string()),
        }
    }
}

type Outcome = std::result::Result<Value, Failure>;

/// Flags merged over the config file.
struct Resolved {
    opts: Opts,
    precision: Precision,
}

fn resolve(mut opts: Opts) -> std::result::Result<Resolved, Failure> {
    let flag_precision = opts.precision.take();
    if let Some(path) = &opts.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::validation(format!("cannot read {}: {e}", path.display())))?;
        let file: FileConfig = serde_json::from_str(&text)
            .map_err(|e| Failure::validation(format!("invalid config {}: {e}", path.display())))?;
        opts.theta = opts.theta.or(file.theta);
        opts.g = opts.g.or(file.g);
        opts.tau = opts.tau.or(file.tau);
        opts.max_degree = opts.max_degree.or(file.max_degree);
        opts.precision = opts.precision.or(file.precision);
        opts.r = opts.r.or(file.r);
        opts.m = opts.m.or(file.m);
        opts.z = opts.z.or(file.z);
        opts.tol = opts.tol.or(file.tol);
        opts.seed = opts.seed.or(file.seed);
        opts.samples = opts.samples.or(file.samples);
    }
    // flag, then environment, then config file, then the default
    let precision = match flag_precision
        .or_else(|| std::env::var("NCT_PRECISION").ok())
        .or_else(|| opts.precision.clone())
    {
        Some(p) => p.parse()?,
        None => Precision::default(),
    };
    Ok(Resolved { opts, precision })
}

fn required<'a>(v: &'a Option<String>, flag: &str) -> std::result::Result<&'a str, Failure> {
    v.as_deref()
        .ok_or_else(|| Failure::validation(format!("--{flag} is required")))
}

fn parse_complex(s: &str, flag: &str) -> std::result::Result<Complex64, Failure> {
    let clean: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    clean
        .parse::<Complex64>()
        .map_err(|_| Failure::validation(format!("cannot parse --{flag} '{s}' as a+bi")))
}

fn parse_tau(opts: &Opts) -> std::result::Result<Complex64, Failure> {
    let tau = parse_complex(required(&opts.tau, "tau")?, "tau")?;
    if tau.im <= 0.0 || !tau.im.is_finite() {
        return Err(Failure::validation(format!(
            "Im(τ) = {} must be positive",
            tau.im
        )));
    }
    Ok(tau)
}

fn parse_theta(opts: &Opts) -> std::result::Result<QuadIrr, Failure> {
    let theta: QuadIrr = required(&opts.theta, "theta")?.parse()?;
    if theta.is_rational() {
        return Err(Failure::validation(format!("θ = {theta} is rational")));
    }
    Ok(theta)
}

fn parse_data(opts: &Opts) -> std::result::Result<RmData, Failure> {
    let theta = parse_theta(opts)?;
    Ok(match &opts.g {
        Some(g) => RmData::new(theta, g.parse::<Sl2Matrix>()?)?,
        None => RmData::from_theta(theta)?,
    })
}

fn complex_json(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn data_json(d: &RmData) -> Value {
    json!({
        "theta": d.theta.to_string(),
        "g": d.g.rows(),
    })
}

fn fix(r: &Resolved) -> Outcome {
    let d = parse_data(&r.opts)?;
    Ok(json!({
        "config": {
            "command": "fix",
            "theta": d.theta.to_string(),
            "precision": r.precision.as_str(),
        },
        "g": d.g.rows(),
        "trace": d.g.trace(),
        "epsilon": d.epsilon,
        "epsilon_str": d.epsilon.to_string(),
        "epsilon_value": d.epsilon.to_f64(),
        "rank": d.rank().to_string(),
        "conditions": d.ring_conditions(),
    }))
}

fn algebra(r: &Resolved) -> Outcome {
    let theta = parse_theta(&r.opts)?;
    let tol = r.opts.tol.unwrap_or(1e-12);
    let seed = r.opts.seed.unwrap_or(0);
    let count = r.opts.samples.unwrap_or(100);
    let tau = match &r.opts.tau {
        Some(_) => parse_tau(&r.opts)?,
        None => Complex64::new(0.0, 1.0),
    };
    let res = checks::algebra_suite(&theta, r.precision, tau, count, seed)?;
    let worst = res.values().cloned().fold(0.0, f64::max);
    let report = json!({
        "config": {
            "command": "algebra",
            "theta": theta.to_string(),
            "tau": complex_json(tau),
            "precision": r.precision.as_str(),
            "tol": tol,
            "seed": seed,
            "samples": count,
        },
        "residuals": res,
        "max_residual": worst,
    });
    within_tol(report, worst, tol)
}

fn module_check(r: &Resolved) -> Outcome {
    let d = parse_data(&r.opts)?;
    let tau = parse_tau(&r.opts)?;
    let tol = r.opts.tol.unwrap_or(1e-12);
    let res = checks::module_suite(&d, tau)?;
    let worst = res.values().cloned().fold(0.0, f64::max);
    let report = json!({
        "config": {
            "command": "module-check",
            "data": data_json(&d),
            "tau": complex_json(tau),
            "precision": r.precision.as_str(),
            "tol": tol,
        },
        "residuals": res,
        "max_residual": worst,
    });
    within_tol(report, worst, tol)
}

fn theta(r: &Resolved) -> Outcome {
    let ch = parse_rational(required(&r.opts.r, "r")?)?;
    let m = parse_complex(required(&r.opts.m, "m")?, "m")?;
    let z = match &r.opts.z {
        Some(z) => parse_complex(z, "z")?,
        None => Complex64::default(),
    };
    let tol = r.opts.tol.unwrap_or(nctorus::theta::DEFAULT_TOL);
    let v = theta_fn_with_tol(ch, z, m, tol)?;
    Ok(json!({
        "config": {
            "command": "theta",
            "r": ch.to_string(),
            "m": complex_json(m),
            "z": complex_json(z),
            "tol": tol,
            "precision": r.precision.as_str(),
        },
        "value": complex_json(v.value),
        "error_bound": v.error_bound,
        "terms": v.terms,
    }))
}

fn ring(r: &Resolved) -> Outcome {
    let d = parse_data(&r.opts)?;
    let tau = parse_tau(&r.opts)?;
    let max_degree = r.opts.max_degree.unwrap_or(3);
    let seed = r.opts.seed.unwrap_or(0);
    let samples = r.opts.samples.unwrap_or(20);
    let opts = RingOptions::default();
    let tol = r.opts.tol.unwrap_or(opts.residual_tol);
    let config = json!({
        "command": "ring",
        "data": data_json(&d),
        "tau": complex_json(tau),
        "max_degree": max_degree,
        "precision": r.precision.as_str(),
        "seed": seed,
        "samples": samples,
        "tol": tol,
        "truncation_tol": opts.tol,
        "rank_tol": opts.rank_tol,
        "quad_tol": opts.quad_tol,
        "condition_limit": opts.condition_limit,
    });
    let ring = CoordinateRing::new(d, tau, opts)?;
    let report = ring.report(max_degree, samples, seed)?;
    let flagged: usize = report.tensors.iter().map(|t| t.flagged.len()).sum();
    let mut out = serde_json::to_value(&report)
        .map_err(|e| Failure::numerical(format!("cannot serialize report: {e}")))?;
    out["config"] = config;
    if flagged > 0 {
        return emit_then(
            out,
            Failure::numerical(format!(
                "{flagged} structure-constant expansions exceed the residual tolerance"
            )),
        );
    }
    within_tol(out, report.assoc_residual, tol)
}

/// Prints the report and still fails, so residual failures stay inspectable.
fn emit_then(report: Value, f: Failure) -> Outcome {
    print_json(&report);
    Err(f)
}

fn within_tol(report: Value, worst: f64, tol: f64) -> Outcome {
    if worst.is_nan() || worst > tol {
        return emit_then(
            report,
            Failure::numerical(format!("residual {worst:e} exceeds tolerance {tol:e}")),
        );
    }
    Ok(report)
}

fn print_json(v: &Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(v).expect("JSON values always serialize")
    );
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (opts, run): (Opts, fn(&Resolved) -> Outcome) = match cli.command {
        Command::Fix(o) => (o, fix),
        Command::Algebra(o) => (o, algebra),
        Command::ModuleCheck(o) => (o, module_check),
        Command::Theta(o) => (o, theta),
        Command::Ring(o) => (o, ring),
    };
    match resolve(opts).and_then(|r| run(&r)) {
        Ok(v) => {
            print_json(&v);
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("nct: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
