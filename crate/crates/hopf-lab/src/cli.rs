//! Batch experiment runner: parses a flat `key = value` config, dispatches
//! to the named experiment, and writes deterministic JSON summaries and CSV
//! tables (timestamps are isolated in a separate metadata file).

use crate::barrier::{certify_barrier, BarrierSpec};
use crate::freeboundary::{
    default_flame_problem, fb_lipschitz_check, glue, one_phase_profile, write_flame_csv,
    FbProblem, GlueInput,
};
use crate::grid::{fmt_f64, PlanarField, PlanarGrid, RadialGrid};
use crate::operators::{EllipticParams, OperatorSpec};
use crate::regularity::{
    c1omega_constants_check, campanato_seminorm, dyadic_expansion, write_dyadic_csv,
    ConstantsRegion, ModulusOfContinuity, SampledField,
};
use crate::solver::{solve_radial, BvpProblem, Domain, SolverConfig};
use crate::verify::{
    counterexample_audit, max_constant_per_alpha, run_sweep, write_ledger_csv, SweepConfig,
    SweepKind,
};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};
use std::rc::Rc;

pub const EXPERIMENTS: [&str; 12] = [
    "barrier-certify",
    "solve",
    "convergence",
    "harnack-sweep",
    "weak-harnack-sweep",
    "hopf-sweep",
    "counterexample",
    "flame-sweep",
    "fb-check",
    "glue-test",
    "campanato",
    "constants-check",
];

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Usage or config error → exit 2.
    #[error("{0}")]
    Usage(String),
    /// A verified inequality failed → exit 1.
    #[error("check failed: {0}")]
    CheckFailed(String),
    /// The solver did not converge → exit 3.
    #[error("solver divergence: {0}")]
    Divergence(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::CheckFailed(_) => 1,
            CliError::Usage(_) | CliError::Io(_) => 2,
            CliError::Divergence(_) => 3,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

#[derive(Parser, Debug)]
#[command(name = "hopf-lab", version, about = "Numerical laboratory for degenerate elliptic boundary estimates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// Flat key=value config file (# comments allowed).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory for summaries, CSV tables, and metadata.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Overrides the seed from the config file.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    BarrierCertify(RunArgs),
    Solve(RunArgs),
    Convergence(RunArgs),
    HarnackSweep(RunArgs),
    WeakHarnackSweep(RunArgs),
    HopfSweep(RunArgs),
    Counterexample(RunArgs),
    FlameSweep(RunArgs),
    FbCheck(RunArgs),
    GlueTest(RunArgs),
    Campanato(RunArgs),
    ConstantsCheck(RunArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::BarrierCertify(_) => "barrier-certify",
            Command::Solve(_) => "solve",
            Command::Convergence(_) => "convergence",
            Command::HarnackSweep(_) => "harnack-sweep",
            Command::WeakHarnackSweep(_) => "weak-harnack-sweep",
            Command::HopfSweep(_) => "hopf-sweep",
            Command::Counterexample(_) => "counterexample",
            Command::FlameSweep(_) => "flame-sweep",
            Command::FbCheck(_) => "fb-check",
            Command::GlueTest(_) => "glue-test",
            Command::Campanato(_) => "campanato",
            Command::ConstantsCheck(_) => "constants-check",
        }
    }

    fn args(&self) -> &RunArgs {
        match self {
            Command::BarrierCertify(a)
            | Command::Solve(a)
            | Command::Convergence(a)
            | Command::HarnackSweep(a)
            | Command::WeakHarnackSweep(a)
            | Command::HopfSweep(a)
            | Command::Counterexample(a)
            | Command::FlameSweep(a)
            | Command::FbCheck(a)
            | Command::GlueTest(a)
            | Command::Campanato(a)
            | Command::ConstantsCheck(a) => a,
        }
    }
}

// --- config file ----------------------------------------------------------

/// Flat `key = value` config with `#` comments; every read marks the key as
/// consumed, and unknown leftovers are an error.
pub struct Config {
    map: HashMap<String, String>,
    used: std::cell::RefCell<HashSet<String>>,
    pub digest: String,
}

fn fnv1a_bytes(bytes: &[u8]) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut map = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Usage(format!(
                    "line {}: expected `key = value`, got `{raw}`",
                    lineno + 1
                )));
            };
            let key = key.trim().to_string();
            if map.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(CliError::Usage(format!("duplicate key `{key}`")));
            }
        }
        Ok(Self {
            map,
            used: std::cell::RefCell::new(HashSet::new()),
            digest: fnv1a_bytes(text.as_bytes()),
        })
    }

    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Self::parse(""),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", p.display())))?;
                Self::parse(&text)
            }
        }
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.used.borrow_mut().insert(key.to_string());
        self.map.get(key).map(|s| s.as_str())
    }

    pub fn f64(&self, key: &str, default: f64) -> Result<f64, CliError> {
        match self.raw(key) {
            None => Ok(default),
            Some(s) => s
                .parse()
                .map_err(|_| CliError::Usage(format!("key `{key}`: `{s}` is not a number"))),
        }
    }

    pub fn usize(&self, key: &str, default: usize) -> Result<usize, CliError> {
        match self.raw(key) {
            None => Ok(default),
            Some(s) => s
                .parse()
                .map_err(|_| CliError::Usage(format!("key `{key}`: `{s}` is not an integer"))),
        }
    }

    pub fn u64(&self, key: &str, default: u64) -> Result<u64, CliError> {
        match self.raw(key) {
            None => Ok(default),
            Some(s) => s
                .parse()
                .map_err(|_| CliError::Usage(format!("key `{key}`: `{s}` is not an integer"))),
        }
    }

    pub fn str(&self, key: &str, default: &str) -> String {
        self.raw(key).unwrap_or(default).to_string()
    }

    pub fn list_f64(&self, key: &str, default: &[f64]) -> Result<Vec<f64>, CliError> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some(s) => {
                let vals: Result<Vec<f64>, _> =
                    s.split(',').map(|t| t.trim().parse::<f64>()).collect();
                let vals = vals
                    .map_err(|_| CliError::Usage(format!("key `{key}`: `{s}` is not a number list")))?;
                if vals.is_empty() {
                    return Err(CliError::Usage(format!("key `{key}`: empty list")));
                }
                Ok(vals)
            }
        }
    }

    pub fn list_usize(&self, key: &str, default: &[usize]) -> Result<Vec<usize>, CliError> {
        let floats = self.list_f64(key, &default.iter().map(|&v| v as f64).collect::<Vec<_>>())?;
        floats
            .iter()
            .map(|&v| {
                if v.fract() == 0.0 && v >= 0.0 {
                    Ok(v as usize)
                } else {
                    Err(CliError::Usage(format!("key `{key}`: `{v}` is not a nonnegative integer")))
                }
            })
            .collect()
    }

    /// Validates the optional `experiment` key against the subcommand.
    fn check_experiment(&self, expected: &str) -> Result<(), CliError> {
        if let Some(name) = self.raw("experiment") {
            if !EXPERIMENTS.contains(&name) {
                return Err(CliError::Usage(format!(
                    "unknown experiment `{name}`; valid experiments: {}",
                    EXPERIMENTS.join(", ")
                )));
            }
            if name != expected {
                return Err(CliError::Usage(format!(
                    "config names experiment `{name}` but the `{expected}` subcommand was invoked"
                )));
            }
        }
        Ok(())
    }

    /// All keys must have been consumed by the handler.
    fn finish(&self) -> Result<(), CliError> {
        let used = self.used.borrow();
        let mut unknown: Vec<&String> = self.map.keys().filter(|k| !used.contains(*k)).collect();
        unknown.sort();
        if let Some(key) = unknown.first() {
            return Err(CliError::Usage(format!("unknown config key `{key}`")));
        }
        Ok(())
    }
}

// --- output plumbing ------------------------------------------------------

/// Atomic file write: temp file in the target directory, then rename.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("artifact")
    ));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Appends a `config_digest` provenance column to every row of a CSV body.
fn append_digest_column(csv: &str, digest: &str) -> String {
    let mut out = String::with_capacity(csv.len());
    for (i, line) in csv.lines().enumerate() {
        out.push_str(line);
        out.push(',');
        out.push_str(if i == 0 { "config_digest" } else { digest });
        out.push('\n');
    }
    out
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value).map_err(|e| CliError::Usage(e.to_string()))
}

#[derive(Serialize)]
struct RunMeta {
    experiment: String,
    config_digest: String,
    seed: u64,
    timestamp_unix_ms: u128,
}

fn write_meta(out: &Path, experiment: &str, digest: &str, seed: u64) -> Result<(), CliError> {
    let meta = RunMeta {
        experiment: experiment.to_string(),
        config_digest: digest.to_string(),
        seed,
        timestamp_unix_ms: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_millis())
            .unwrap_or(0),
    };
    write_atomic(&out.join(format!("{experiment}_meta.json")), to_json(&meta)?.as_bytes())
}

fn params_from(cfg: &Config) -> Result<EllipticParams, CliError> {
    EllipticParams::new(
        cfg.usize("n", 2)?,
        cfg.f64("lambda", 1.0)?,
        cfg.f64("Lambda", 1.0)?,
        cfg.f64("alpha", 0.0)?,
    )
    .map_err(usage)
}

fn solver_config_from(cfg: &Config, seed_override: Option<u64>) -> Result<SolverConfig, CliError> {
    let mut sc = SolverConfig {
        grid_m: cfg.usize("grid_m", 257)?,
        residual_tol: cfg.f64("tolerance", 1e-8)?,
        max_iters: cfg.usize("max_iters", 500)?,
        ..SolverConfig::default()
    };
    sc.seed = cfg.u64("seed", sc.seed)?;
    if let Some(seed) = seed_override {
        sc.seed = seed;
    }
    Ok(sc)
}

// --- experiments ----------------------------------------------------------

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let name = cli.command.name();
    let args = cli.command.args();
    let cfg = Config::load(args.config.as_deref())?;
    cfg.check_experiment(name)?;
    let result = match &cli.command {
        Command::BarrierCertify(a) => barrier_certify(&cfg, a),
        Command::Solve(a) => solve_cmd(&cfg, a),
        Command::Convergence(a) => convergence(&cfg, a),
        Command::HarnackSweep(a) => sweep(&cfg, a, SweepKind::Harnack, "harnack-sweep"),
        Command::WeakHarnackSweep(a) => sweep(&cfg, a, SweepKind::WeakHarnack, "weak-harnack-sweep"),
        Command::HopfSweep(a) => sweep(&cfg, a, SweepKind::Hopf, "hopf-sweep"),
        Command::Counterexample(a) => counterexample(&cfg, a),
        Command::FlameSweep(a) => flame_sweep_cmd(&cfg, a),
        Command::FbCheck(a) => fb_check(&cfg, a),
        Command::GlueTest(a) => glue_test(&cfg, a),
        Command::Campanato(a) => campanato(&cfg, a),
        Command::ConstantsCheck(a) => constants_check(&cfg, a),
    };
    result
}

#[derive(Serialize)]
struct BarrierSummary {
    experiment: &'static str,
    config_digest: String,
    certificates: Vec<String>,
    pass: bool,
}

fn barrier_certify(cfg: &Config, args: &RunArgs) -> Result<(), CliError> {
    let ns = cfg.list_usize("n", &[2, 3])?;
    let lambdas = cfg.list_f64("lambda", &[1.0])?;
    let big_lambdas = cfg.list_f64("Lambda", &[1.0, 2.0])?;
    let alphas = cfg.list_f64("alpha", &[0.0, 1.0])?;
    let height = cfg.f64("height", 1.0)?;
    let outer = cfg.f64("outer_radius", 1.0)?;
    let samples = cfg.usize("samples", 64)?;
    let tol = cfg.f64("tolerance", 1e-9)?;
    cfg.finish()?;

    let mut files = Vec::new();
    let mut all_pass = true;
    for &n in &ns {
        for &lambda in &lambdas {
            for &big in &big_lambdas {
                if big < lambda {
                    continue;
                }
                for &alpha in &alphas {
                    let params = EllipticParams::new(n, lambda, big, alpha).map_err(usage)?;
                    let spec = BarrierSpec::new(height, outer, params).map_err(usage)?;
                    let cert = certify_barrier(&spec, samples, tol).map_err(usage)?;
                    all_pass &= cert.pass;
                    let file = format!(
                        "barrier_n{n}_lambda{}_Lambda{}_alpha{}.json",
                        fmt_f64(lambda),
                        fmt_f64(big),
                        fmt_f64(alpha)
                    );
                    write_atomic(&args.out.join(&file), to_json(&cert)?.as_bytes())?;
                    files.push(file);
                }
            }
        }
    }
    let summary = BarrierSummary {
        experiment: "barrier-certify",
        config_digest: cfg.digest.clone(),
        certificates: files,
        pass: all_pass,
    };
    write_atomic(
        &args.out.join("barrier-certify_summary.json"),
        to_json(&summary)?.as_bytes(),
    )?;
    write_meta(&args.out, "barrier-certify", &cfg.digest, 0)?;
    if all_pass {
        Ok(())
    } else {
        Err(CliError::CheckFailed("barrier certification failed; see certificates".into()))
    }
}

#[derive(Serialize)]
struct SolveSummary {
    experiment: &'static str,
    config_digest: String,
    residual: f64,
    iterations: usize,
    delta_final: f64,
    converged: bool,
    inf: f64,
    sup: f64,
}

fn solve_cmd(cfg: &Config, args: &RunArgs) -> Result<(), CliError> {
    let params = params_from(cfg)?;
    let sc = solver_config_from(cfg, args.seed)?;
    let boundary = cfg.f64("boundary_value", 1.0)?;
    let radius = cfg.f64("radius", 1.0)?;
    let f_level = cfg.f64("f", 0.0)?;
    cfg.finish()?;

    let problem = BvpProblem::new(
        Domain::Ball { radius, boundary_value: boundary },
        OperatorSpec::pucci_minus(params),
        Rc::new(move |_| f_level),
    );
    let sol = solve_radial(&problem, &sc).map_err(usage)?;
    let mut csv = Vec::new();
    sol.u.write_csv(&mut csv).map_err(usage)?;
    let body = append_digest_column(&String::from_utf8_lossy(&csv), &cfg.digest);
    write_atomic(&args.out.join("solve_solution.csv"), body.as_bytes())?;
    let (inf, sup) = sol
        .u
        .inf_sup(&crate::grid::RadialRegion::ball(radius))
        .map_err(usage)?;
    let summary = SolveSummary {
        experiment: "solve",
        config_digest: cfg.digest.clone(),
        residual: sol.residual_norm,
        iterations: sol.iterations,
        delta_final: sol.delta_final,
        converged: sol.converged,
        inf,
        sup,
    };
    write_atomic(&args.out.join("solve_summary.json"), to_json(&summary)?.as_bytes())?;
    write_meta(&args.out, "solve", &cfg.digest, sc.seed)?;
    if sol.converged {
        Ok(())
    } else {
        Err(CliError::Divergence(format!("residual {} after {} iterations", sol.residual_norm, sol.iterations)))
    }
}

#[derive(Serialize)]
struct ConvergenceSummary {
    experiment: &'static str,
    config_digest: String,
    slope: f64,
    levels: Vec<(f64, f64)>,
    pass: bool,
}

/// Manufactured solution `u = r⁴` of the Pucci-minus problem on the annulus
/// `[1/2, 1]` with forcing `(4r³)^α · λ(8 + 4n) r²` (quadratics are
/// reproduced exactly by the central stencil, so a quartic is needed to see
/// truncation error; the annulus keeps the degenerate weight bounded away
/// from zero for every α). The error must shrink at second order, so the
/// fitted slope is required to exceed 1.5.
fn convergence(cfg: &Config, args: &RunArgs) -> Result<(), CliError> {
    let params = params_from(cfg)?;
    let levels = cfg.usize("levels", 4)?;
    let base_m = cfg.usize("grid_m", 33)?;
    // the residual lives on the 1/h² scale, so roundoff alone keeps it
    // above ~1e-10 on the finest default level
    let tol = cfg.f64("tolerance", 1e-9)?;
    cfg.finish()?;
    if levels < 2 {
        return Err(CliError::Usage(format!("levels {levels} < 2")));
    }

    let alpha = params.alpha;
    let scale = params.lambda * (8.0 + 4.0 * params.n as f64);
    let mut table = Vec::new();
    let mut m = base_m;
    for _ in 0..levels {
        let sc = SolverConfig {
            grid_m: m,
            residual_tol: tol,
            max_iters: 2000,
            delta_ladder: vec![1e-1, 1e-2, 1e-3, 1e-4, 1e-6, 1e-8],
            ..SolverConfig::default()
        };
        let problem = BvpProblem::new(
            Domain::Annulus {
                inner: 0.5,
                outer: 1.0,
                inner_value: 0.0625,
                outer_value: 1.0,
            },
            OperatorSpec::pucci_minus(params),
            Rc::new(move |r: f64| (4.0 * r * r * r).powf(alpha) * scale * r * r),
        );
        let sol = solve_radial(&problem, &sc).map_err(usage)?;
        if !sol.converged {
            return Err(CliError::Divergence(format!("level m={m} residual {}", sol.residual_norm)));
        }
        let h = sol.u.grid.spacing();
        let err = (0..m)
            .map(|i| {
                let r = sol.u.grid.node(i);
                (sol.u.value(i) - r.powi(4)).abs()
            })
            .fold(0.0f64, f64::max);
        table.push((h, err));
        m = 2 * m - 1;
    }
    // least-squares slope of log error against log h
    let pts: Vec<(f64, f64)> = table.iter().map(|&(h, e)| (h.ln(), e.max(1e-300).ln())).collect();
    let k = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
    let pass = slope >= 1.5;

    let mut csv = String::from("h,max_error\n");
    for (h, e) in &table {
        csv.push_str(&format!("{},{}\n", fmt_f64(*h), fmt_f64(*e)));
    }
    write_atomic(
        &args.out.join("convergence_errors.csv"),
        append_digest_column(&csv, &cfg.digest).as_bytes(),
    )?;
    let summary = ConvergenceSummary {
        experiment: "convergence",
        config_digest: cfg.digest.clone(),
        slope,
        levels: table,
        pass,
    };
    write_atomic(&args.out.join("convergence_summary.json"), to_json(&summary)?.as_bytes())?;
    write_meta(&args.out, "convergence", &cfg.digest, 0)?;
    if pass {
        Ok(())
    } else {
        Err(CliError::CheckFailed(format!("convergence slope {slope:.3} < 1.5")))
    }
}

#[derive(Serialize)]
struct SweepSummary {
    experiment: String,
    config_digest: String,
    rows: usize,
    max_constant_per_alpha: BTreeMap<String, f64>,
    pass: bool,
}

fn sweep(cfg: &Config, args: &RunArgs, kind: SweepKind, name: &str) -> Result<(), CliError> {
    let n = cfg.usize("n", 2)?;
    let lambda = cfg.f64("lambda", 1.0)?;
    let big_lambda = cfg.f64("Lambda", 1.0)?;
    let sweep_cfg = SweepConfig {
        alphas: cfg.list_f64("alpha", &[0.0, 1.0, 2.0])?,
        epsilons: cfg.list_f64("epsilon", &[0.25, 0.5, 1.0])?,
        runs: cfg.usize("runs", 20)?,
        seed: args.seed.map_or(cfg.u64("seed", 1)?, |s| {
            let _ = cfg.u64("seed", 1);
            s
        }),
        boundary_range: (cfg.f64("boundary_min", 0.5)?, cfg.f64("boundary_max", 2.0)?),
        rhs_range: (cfg.f64("rhs_min", -1.0)?, cfg.f64("rhs_max", 0.0)?),
    };
    let sc = SolverConfig { grid_m: cfg.usize("grid_m", 129)?, ..SolverConfig::default() };
    // growth offset for the Hopf check: the annular barrier's A2 by default
    let default_a2 = {
        let params = EllipticParams::new(n, lambda, big_lambda, sweep_cfg.alphas[0]).map_err(usage)?;
        let spec = BarrierSpec::new(1.0, 1.0, params).map_err(usage)?;
        crate::barrier::barrier_constants(&spec).a2
    };
    let a2 = cfg.f64("a2", default_a2)?;
    cfg.finish()?;

    let rows = run_sweep(kind, n, lambda, big_lambda, &sweep_cfg, &sc, a2).map_err(usage)?;
    let mut csv = Vec::new();
    write_ledger_csv(&rows, &mut csv)?;
    let body = append_digest_column(&String::from_utf8_lossy(&csv), &cfg.digest);
    write_atomic(&args.out.join(format!("{name}_ledger.csv")), body.as_bytes())?;
    let pass = rows.iter().all(|r| r.pass);
    let summary = SweepSummary {
        experiment: name.to_string(),
        config_digest: cfg.digest.clone(),
        rows: rows.len(),
        max_constant_per_alpha: max_constant_per_alpha(&rows),
        pass,
    };
    write_atomic(&args.out.join(format!("{name}_summary.json")), to_json(&summary)?.as_bytes())?;
    write_meta(&args.out, name, &cfg.digest, sweep_cfg.seed)?;
    if pass {
        Ok(())
    } else {
        Err(CliError::CheckFailed(format!("{name}: a ledger row failed")))
    }
}

#[derive(Serialize)]
struct CounterexampleSummary {
    experiment: &'static str,
    config_digest: String,
    report: crate::verify::InequalityReport,
    pass: bool,
}

fn counterexample(cfg: &Config, args: &RunArgs) -> Result<(), CliError> {
    let n = cfg.usize("n", 2)?;
    let grid_m = cfg.usize("grid_m", 2049)?;
    cfg.finish()?;
    let report = counterexample_audit(n, grid_m).map_err(usage)?;
    let pass = report.pass;
    let summary = CounterexampleSummary {
        experiment: "counterexample",
        config_digest: cfg.digest.clone(),
        report,
        pass,
    };
    write_atomic(&args.out.join("counterexample_summary.json"), to_json(&summary)?.as_bytes())?;
    write_meta(&args.out, "counterexample", &cfg.digest, 0)?;
    if pass {
        Ok(())
    } else {
        Err(CliError::CheckFailed("counterexample audit failed".into()))
    }
}

#[derive(Serialize)]
struct FlameSummary {
    experiment: &'static str,
    config_digest: String,
    log_slope: f64,
    bounded: bool,
    diverged: Vec<f64>,
    rows: usize,
}

fn flame_sweep_cmd(cfg: &Config, args: &RunArgs) -> Result<(), CliError> {
    let params = params_from(cfg)?;
    let epsilons = cfg.list_f64("epsilon", &[0.125, 0.0625, 0.03125, 0.015625])?;
    let sc = SolverConfig {
        grid_m: cfg.usize("grid_m", 513)?,
        residual_tol: cfg.f64("tolerance", 1e-8)?,
        max_iters: cfg.usize("max_iters", 500)?,
        ..SolverConfig::default()
    };
    cfg.finish()?;

    let problem = default_flame_problem(OperatorSpec::pucci_minus(params), epsilons);
    let report = crate::freeboundary::flame_sweep(&problem, &sc).map_err(usage)?;
    let mut csv = Vec::new();
    write_flame_csv(&report, &mut csv)?;
    let body = append_digest_column(&String::from_utf8_lossy(&csv), &cfg.digest);
    write_atomic(&args.out.join("flame-sweep_table.csv"), body.as_bytes())?;
    let summary = FlameSummary {
        experiment: "flame-sweep",
        config_digest: cfg.digest.clone(),
        log_slope: report.log_slope,
        bounded: report.bounded,
        diverged: report.diverged.clone(),
        rows: report.rows.len(),
    };
    write_atomic(&args.out.join("flame-sweep_summary.json"), to_json(&summary)?.as_bytes())?;
    write_meta(&args.out, "flame-sweep", &cfg.digest, sc.seed)?;
    if !report.diverged.is_empty() {
        return Err(CliError::Divergence(format!("epsilons {:?} did not converge", report.diverged)));
    }
    if report.bounded {
        Ok(())
    } else {
        Err(CliError::CheckFailed(format!("flame constants drift: log slope {:.3}", report.log_slope)))
    }
}

#[derive(Serialize)]
struct FbSummary {
    experiment: &'static str,
    config_digest: String,
    report: crate::verify::InequalityReport,
    pass: bool,
}

/// Audits the Lipschitz bound on the closed-form one-phase profile
/// `u = h(r₀ − r)⁺` with its exact forcing.
fn fb_check(cfg: &Config, args: &RunArgs) -> Result<(), CliError> {
    let params = params_from(cfg)?;
    let h_slope = cfg.f64("h", 1.0)?;
    let r0 = cfg.f64("r0", 0.5)?;
    let grid_m = cfg.usize("grid_m", 513)?;
    cfg.finish()?;

    let spec = OperatorSpec::pucci_minus(params);
    let grid = RadialGrid::ball(1.0, grid_m, params.n).map_err(usage)?;
    let (u, rhs) = one_phase_profile(&spec, h_slope, r0, grid).map_err(usage)?;
    let problem = FbProblem::with_constant_bound(spec, rhs, h_slope).map_err(usage)?;
    let report = fb_lipschitz_check(&problem, &u).map_err(usage)?;
    let pass = report.pass;
    let summary = FbSummary {
        experiment: "fb-check",
        config_digest: cfg.digest.clone(),
        report,
        pass,
    };
    write_atomic(&args.out.join("fb-check_summary.json"), to_json(&summary)?.as_bytes())?;
    write_meta(&args.out, "fb-check", &cfg.digest, 0)?;
    if pass {
        Ok(())
    } else {
        Err(CliError::CheckFailed("free-boundary Lipschitz check failed".into()))
    }
}

#[derive(Serialize)]
struct GlueSummary {
    experiment: &'static str,
    config_digest: String,
    report: crate::freeboundary::GlueReport,
    pass: bool,
}

/// Glues the half-space wedges `u = −x` on `{x < 0}` and `v = x` on
/// `{x > 0}` across the axis and audits the composite-gradient identities
/// and norm inequalities.
fn glue_test(cfg: &Config, args: &RunArgs) -> Result<(), CliError> {
    let m = cfg.usize("grid_m", 33)?;
    let eta = cfg.f64("eta", 2.0)?;
    let s = cfg.f64("s", 0.25)?;
    cfg.finish()?;

    let grid = Rc::new(PlanarGrid::disk(1.0, m).map_err(usage)?);
    let u = PlanarField::from_fn(grid.clone(), |x, _| -x).map_err(usage)?;
    let v = PlanarField::from_fn(grid.clone(), |x, _| x).map_err(usage)?;
    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut gamma = Vec::new();
    for (i, &(x, _)) in grid.nodes().iter().enumerate() {
        if x < -1e-12 {
            a.push(i);
        } else if x > 1e-12 {
            b.push(i);
        } else {
            gamma.push(i);
        }
    }
    let input = GlueInput { u, v, a, b, gamma };
    let outcome = glue(&input, eta, s).map_err(usage)?;
    let pass = outcome.report.pass;
    let summary = GlueSummary {
        experiment: "glue-test",
        config_digest: cfg.digest.clone(),
        report: outcome.report,
        pass,
    };
    write_atomic(&args.out.join("glue-test_summary.json"), to_json(&summary)?.as_bytes())?;
    write_meta(&args.out, "glue-test", &cfg.digest, 0)?;
    if pass {
        Ok(())
    } else {
        Err(CliError::CheckFailed("gluing audit failed".into()))
    }
}

fn named_field(name: &str, gamma: f64, resolution: f64) -> Result<SampledField, CliError> {
    match name {
        "square" => SampledField::from_fn(2, resolution, |x: &[f64]| x[0] * x[0] + x[1] * x[1]),
        "cusp" => SampledField::from_fn(2, resolution, move |x: &[f64]| {
            (x[0] * x[0] + x[1] * x[1]).sqrt().powf(1.0 + gamma)
        }),
        "affine" => SampledField::from_fn(2, resolution, |x: &[f64]| 0.5 + x[0] - 2.0 * x[1]),
        other => {
            return Err(CliError::Usage(format!(
                "unknown field `{other}`; valid fields: square, cusp, affine"
            )))
        }
    }
    .map_err(usage)
}

#[derive(Serialize)]
struct CampanatoSummary {
    experiment: &'static str,
    config_digest: String,
    field: String,
    gamma: f64,
    seminorm: f64,
    scale_truncated: bool,
    telescoping_ok: bool,
    remainder_constant: f64,
    pass: bool,
}

fn campanato(cfg: &Config, args: &RunArgs) -> Result<(), CliError> {
    let gamma = cfg.f64("gamma", 1.0)?;
    let field_name = cfg.str("field", "square");
    let resolution = cfg.f64("resolution", 1e-4)?;
    let k_max = cfg.usize("k_max", 8)?;
    cfg.finish()?;

    let field = named_field(&field_name, gamma, resolution)?;
    let centers = vec![vec![0.0, 0.0], vec![0.25, 0.0], vec![-0.2, 0.15]];
    let radii = vec![0.5, 0.25, 0.125];
    let report = campanato_seminorm(&field, gamma, &centers, &radii).map_err(usage)?;
    let expansion = dyadic_expansion(&field, &[0.0, 0.0], gamma, k_max).map_err(usage)?;

    let mut csv = Vec::new();
    write_dyadic_csv(&expansion.rows, &mut csv)?;
    let body = append_digest_column(&String::from_utf8_lossy(&csv), &cfg.digest);
    write_atomic(&args.out.join("campanato_dyadic.csv"), body.as_bytes())?;
    let pass = expansion.telescoping_ok;
    let summary = CampanatoSummary {
        experiment: "campanato",
        config_digest: cfg.digest.clone(),
        field: field_name,
        gamma,
        seminorm: report.seminorm,
        scale_truncated: report.scale_truncated,
        telescoping_ok: expansion.telescoping_ok,
        remainder_constant: expansion.remainder_constant,
        pass,
    };
    write_atomic(&args.out.join("campanato_summary.json"), to_json(&summary)?.as_bytes())?;
    write_meta(&args.out, "campanato", &cfg.digest, 0)?;
    if pass {
        Ok(())
    } else {
        Err(CliError::CheckFailed("dyadic telescoping bounds violated".into()))
    }
}

#[derive(Serialize)]
struct ConstantsSummary {
    experiment: &'static str,
    config_digest: String,
    report: crate::regularity::ConstantsReport,
    pass: bool,
}

/// Explicit-constant audit on `u = |x|²` (∇u = 2x) with a power modulus.
fn constants_check(cfg: &Config, args: &RunArgs) -> Result<(), CliError> {
    let gamma = cfg.f64("gamma", 1.0)?;
    let t_const = cfg.f64("T", 1.0)?;
    let rho = cfg.f64("rho", 0.5)?;
    let sigma = cfg.f64("sigma", 0.25)?;
    let r_big = cfg.f64("R", 1.0)?;
    let resolution = cfg.f64("resolution", 1e-3)?;
    cfg.finish()?;

    let field = SampledField::from_fn(2, resolution, |x: &[f64]| x[0] * x[0] + x[1] * x[1])
        .map_err(usage)?;
    let grad = |x: &[f64]| vec![2.0 * x[0], 2.0 * x[1]];
    let omega = ModulusOfContinuity::power(gamma).map_err(usage)?;
    let region = ConstantsRegion { rho, sigma, r_big };
    let report = c1omega_constants_check(&field, &grad, region, &omega, t_const)
        .map_err(|e| CliError::CheckFailed(e.to_string()))?;
    let pass = report.pass;
    let summary = ConstantsSummary {
        experiment: "constants-check",
        config_digest: cfg.digest.clone(),
        report,
        pass,
    };
    write_atomic(&args.out.join("constants-check_summary.json"), to_json(&summary)?.as_bytes())?;
    write_meta(&args.out, "constants-check", &cfg.digest, 0)?;
    if pass {
        Ok(())
    } else {
        Err(CliError::CheckFailed("explicit constant bounds violated".into()))
    }
}
