//! Empirical verification of the quantitative inequalities: weak Harnack,
//! Harnack, linear boundary growth, the large-gradient reduction and the
//! large-gradient counterexample. Each check returns an [`InequalityReport`]
//! with the measured constant, a pass flag and a digest of its inputs;
//! sweeps aggregate reports into a CSV ledger.

use crate::grid::{fmt_f64, RadialField, RadialGrid, RadialRegion};
use crate::operators::{radial_pucci, EllipticParams, OperatorSpec, PucciSign};
use crate::solver::{solve_radial, BvpProblem, Domain, SolverConfig, SolverError};
use serde::Serialize;
use std::collections::BTreeMap;
use std::io::Write;
use std::rc::Rc;
use thiserror::Error;

/// Absolute slack added to every inequality check, on top of any reported
/// scheme residual.
pub const CHECK_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("field is negative beyond tolerance at node {node} (value {value:.3e})")]
    NegativeField { node: usize, value: f64 },
    #[error("boundary value {0:.3e} is not zero within tolerance")]
    NonzeroBoundary(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("boundary ordering violated at region edge: lower {lower:.6e} > u {upper:.6e}")]
    BoundaryOrdering { lower: f64, upper: f64 },
    #[error(transparent)]
    Grid(#[from] crate::grid::GridError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Outcome of a single inequality check.
#[derive(Debug, Clone, Serialize)]
pub struct InequalityReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub measured_constant: f64,
    pub pass: bool,
    pub inputs_digest: String,
    pub notes: String,
}

/// FNV-1a digest over the bit patterns of the inputs, for provenance.
pub fn digest(parts: &[&[f64]]) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    let mut eat = |byte: u8| {
        h ^= byte as u64;
        h = h.wrapping_mul(0x100000001b3);
    };
    for part in parts {
        for v in *part {
            for b in v.to_bits().to_le_bytes() {
                eat(b);
            }
        }
        eat(0xff); // separator
    }
    format!("{h:016x}")
}

fn params_digest(u: &RadialField, f: &RadialField, params: &EllipticParams) -> String {
    digest(&[
        u.values(),
        f.values(),
        &[params.n as f64, params.lambda, params.big_lambda, params.alpha],
    ])
}

fn check_nonnegative(u: &RadialField) -> Result<(), VerifyError> {
    for (i, &v) in u.values().iter().enumerate() {
        if v < -CHECK_TOL {
            return Err(VerifyError::NegativeField { node: i, value: v });
        }
    }
    Ok(())
}

fn forcing_term(f: &RadialField, alpha: f64, positive_part_only: bool) -> f64 {
    let sup = f
        .values()
        .iter()
        .map(|&v| if positive_part_only { v.max(0.0) } else { v.abs() })
        .fold(0.0f64, f64::max);
    sup.powf(1.0 / (1.0 + alpha))
}

/// `‖u‖_{L^{ε/2}(B_{1/2})} ≤ C (inf_{B_{1/2}} u + ‖f‖_∞^{1/(1+α)})`;
/// the measured constant is the quotient of the two sides.
pub fn weak_harnack_ratio(
    u: &RadialField,
    f: &RadialField,
    params: &EllipticParams,
    epsilon_exp: f64,
) -> Result<InequalityReport, VerifyError> {
    if !(epsilon_exp > 0.0) {
        return Err(VerifyError::InvalidArgument(format!("epsilon_exp {epsilon_exp}")));
    }
    check_nonnegative(u)?;
    let half = RadialRegion::ball(0.5 * u.grid.r_max);
    let lhs = u.map(f64::abs)?.lp_norm(epsilon_exp / 2.0, &half)?;
    let (inf, _) = u.inf_sup(&half)?;
    let rhs_denom = inf.max(0.0) + forcing_term(f, params.alpha, false);
    let (constant, pass, notes) = if lhs <= CHECK_TOL && rhs_denom <= CHECK_TOL {
        // degenerate 0/0 case: the display holds with any constant
        (0.0, true, "degenerate zero field: constant 0 by convention".to_string())
    } else {
        let c = lhs / rhs_denom;
        (c, c.is_finite(), String::new())
    };
    Ok(InequalityReport {
        name: "weak_harnack".into(),
        lhs,
        rhs: rhs_denom,
        measured_constant: constant,
        pass,
        inputs_digest: params_digest(u, f, params),
        notes,
    })
}

/// `sup_{B_{1/2}} u ≤ C (inf_{B_{1/2}} u + ‖f‖_∞^{1/(1+α)})`.
pub fn harnack_ratio(
    u: &RadialField,
    f: &RadialField,
    params: &EllipticParams,
) -> Result<InequalityReport, VerifyError> {
    check_nonnegative(u)?;
    let half = RadialRegion::ball(0.5 * u.grid.r_max);
    let (inf, sup) = u.inf_sup(&half)?;
    let rhs_denom = inf.max(0.0) + forcing_term(f, params.alpha, false);
    let (constant, pass, notes) = if sup <= CHECK_TOL && rhs_denom <= CHECK_TOL {
        (0.0, true, "degenerate zero field: constant 0 by convention".to_string())
    } else {
        let c = sup / rhs_denom;
        (c, c.is_finite(), String::new())
    };
    Ok(InequalityReport {
        name: "harnack".into(),
        lhs: sup,
        rhs: rhs_denom,
        measured_constant: constant,
        pass,
        inputs_digest: params_digest(u, f, params),
        notes,
    })
}

/// Largest `A₁` such that `u(x) ≥ (A₁‖u‖_{L^ε(B_{1/2})} − A₂‖f⁺‖^{1/(1+α)})
/// · dist(x, ∂B₁)` holds at every node, given `A₂`.
pub fn hopf_growth_check(
    u: &RadialField,
    f: &RadialField,
    params: &EllipticParams,
    a2: f64,
    epsilon_exp: f64,
) -> Result<InequalityReport, VerifyError> {
    if !(epsilon_exp > 0.0 && a2 >= 0.0) {
        return Err(VerifyError::InvalidArgument(format!(
            "need epsilon_exp > 0 and A2 >= 0, got ({epsilon_exp}, {a2})"
        )));
    }
    check_nonnegative(u)?;
    let radius = u.grid.r_max;
    let half = RadialRegion::ball(0.5 * radius);
    let norm_eps = u.map(f64::abs)?.lp_norm(epsilon_exp, &half)?;
    let fplus = forcing_term(f, params.alpha, true);
    if norm_eps <= CHECK_TOL {
        return Ok(InequalityReport {
            name: "hopf_growth".into(),
            lhs: 0.0,
            rhs: 0.0,
            measured_constant: 0.0,
            pass: true,
            inputs_digest: params_digest(u, f, params),
            notes: "vacuous: ‖u‖_{L^ε} = 0".to_string(),
        });
    }
    let mut a1 = f64::INFINITY;
    for i in 0..u.grid.m {
        let dist = radius - u.grid.node(i);
        if dist <= 0.0 {
            continue;
        }
        a1 = a1.min((u.value(i) / dist + a2 * fplus) / norm_eps);
    }
    Ok(InequalityReport {
        name: "hopf_growth".into(),
        lhs: a1 * norm_eps - a2 * fplus,
        rhs: a1,
        measured_constant: a1,
        pass: a1.is_finite(),
        inputs_digest: params_digest(u, f, params),
        notes: format!("A2={}, epsilon={}", fmt_f64(a2), fmt_f64(epsilon_exp)),
    })
}

/// Inner-normal difference quotients at the outer boundary with a linear
/// Richardson extrapolation.
#[derive(Debug, Clone, Serialize)]
pub struct NormalDerivative {
    pub offsets: Vec<f64>,
    pub quotients: Vec<f64>,
    pub extrapolated: f64,
}

/// Difference quotients `u(R − t)/t` of a field vanishing at `r = R`,
/// extrapolated to `t = 0` from the two smallest offsets.
pub fn normal_derivative(u: &RadialField, offsets: &[f64]) -> Result<NormalDerivative, VerifyError> {
    let radius = u.grid.r_max;
    let boundary_value = u.value(u.grid.m - 1);
    let scale = u.values().iter().fold(1.0f64, |a, &v| a.max(v.abs()));
    if boundary_value.abs() > 1e-6 * scale {
        return Err(VerifyError::NonzeroBoundary(boundary_value));
    }
    if offsets.len() < 2 {
        return Err(VerifyError::InvalidArgument("need at least two offsets".into()));
    }
    for w in offsets.windows(2) {
        if !(w[1] < w[0]) {
            return Err(VerifyError::InvalidArgument("offsets must be strictly decreasing".into()));
        }
    }
    if *offsets.last().unwrap() <= 0.0 || offsets[0] >= radius - u.grid.r_min {
        return Err(VerifyError::InvalidArgument("offsets outside the grid range".into()));
    }
    let quotients: Vec<f64> = offsets.iter().map(|&t| u.interpolate(radius - t) / t).collect();
    // linear model q(t) = D + C t through the two finest offsets
    let k = offsets.len();
    let (t1, t2) = (offsets[k - 1], offsets[k - 2]);
    let (q1, q2) = (quotients[k - 1], quotients[k - 2]);
    let extrapolated = (q1 * t2 - q2 * t1) / (t2 - t1);
    Ok(NormalDerivative {
        offsets: offsets.to_vec(),
        quotients,
        extrapolated,
    })
}

/// Checks `M⁻(D²u) ≤ γ^{−α}‖f‖_∞` at nodes where the discrete gradient
/// clears the threshold. Nodes within `2h` of the threshold level set are
/// excluded: discrete gradients are ambiguous there at stencil width.
pub fn large_gradient_reduction_check(
    u: &RadialField,
    f: &RadialField,
    params: &EllipticParams,
    gamma: f64,
) -> Result<InequalityReport, VerifyError> {
    if !(gamma > 0.0) {
        return Err(VerifyError::InvalidArgument(format!("gamma {gamma} <= 0")));
    }
    let bound = gamma.powf(-params.alpha)
        * f.values().iter().map(|v| v.abs()).fold(0.0f64, f64::max);
    let d = u.derivative();
    let dd = u.second_derivative();
    let above: Vec<bool> = d.values().iter().map(|&s| s.abs() >= gamma).collect();
    let m = u.grid.m;
    let mut worst: f64 = f64::NEG_INFINITY;
    let mut checked = 0usize;
    for i in 1..m - 1 {
        if !above[i] {
            continue;
        }
        // 2h safety collar around the threshold level set
        let near_threshold = (i.saturating_sub(2)..=(i + 2).min(m - 1)).any(|j| !above[j]);
        if near_threshold {
            continue;
        }
        let r = u.grid.node(i);
        if r == 0.0 {
            continue;
        }
        let value = radial_pucci(dd.value(i), d.value(i) / r, params, PucciSign::Minus);
        worst = worst.max(value - bound);
        checked += 1;
    }
    let pass = checked == 0 || worst <= CHECK_TOL;
    Ok(InequalityReport {
        name: "large_gradient_reduction".into(),
        lhs: if checked == 0 { 0.0 } else { worst + bound },
        rhs: bound,
        measured_constant: if checked == 0 { 0.0 } else { worst },
        pass,
        inputs_digest: params_digest(u, f, params),
        notes: format!("gamma={}, nodes_checked={checked}", fmt_f64(gamma)),
    })
}

/// Audits the large-gradient counterexample `u = (1 − |x|)²` in dimension
/// `n`: superharmonicity on the large-gradient set (closed form),
/// vanishing normal derivative with linear quotient decay, nonnegativity.
pub fn counterexample_audit(n: usize, grid_m: usize) -> Result<InequalityReport, VerifyError> {
    if n < 2 {
        return Err(VerifyError::InvalidArgument(format!("dimension {n} < 2")));
    }
    let grid = RadialGrid::ball(1.0, grid_m, n)?;
    let u = RadialField::from_fn(grid, |r| (1.0 - r) * (1.0 - r))?;
    let mut notes = Vec::new();
    let mut pass = true;

    // (i) closed-form Laplacian 2n − 2(n−1)/r is nonpositive exactly where
    // the gradient magnitude 2(1−r) is at least 1, i.e. r ≤ 1/2
    let mut worst_lap = f64::NEG_INFINITY;
    for i in 1..grid.m {
        let r = grid.node(i);
        let grad = 2.0 * (1.0 - r);
        if grad < 1.0 {
            continue;
        }
        let lap = 2.0 * n as f64 - 2.0 * (n as f64 - 1.0) / r;
        worst_lap = worst_lap.max(lap);
        if lap > 1e-12 {
            pass = false;
        }
    }
    notes.push(format!("max Laplacian on large-gradient set: {}", fmt_f64(worst_lap)));

    // (ii) boundary quotients u(1−t)/t = t: vanishing limit, unit slope;
    // node-aligned offsets so the sampled quotients are exact
    let h = grid.spacing();
    let offsets: Vec<f64> = [32.0, 16.0, 8.0, 4.0, 2.0, 1.0]
        .iter()
        .map(|&k| k * h)
        .collect();
    let nd = normal_derivative(&u, &offsets)?;
    if nd.extrapolated.abs() > 1e-8 {
        pass = false;
    }
    // least-squares slope of quotient vs offset
    let k = offsets.len() as f64;
    let st: f64 = offsets.iter().sum();
    let sq: f64 = nd.quotients.iter().sum();
    let stq: f64 = offsets.iter().zip(&nd.quotients).map(|(t, q)| t * q).sum();
    let stt: f64 = offsets.iter().map(|t| t * t).sum();
    let slope = (k * stq - st * sq) / (k * stt - st * st);
    if (slope - 1.0).abs() > 0.05 {
        pass = false;
    }
    notes.push(format!(
        "normal derivative {}, quotient slope {}",
        fmt_f64(nd.extrapolated),
        fmt_f64(slope)
    ));

    // (iii) nonnegativity and zero boundary value
    if u.values().iter().any(|&v| v < 0.0) || u.value(grid.m - 1) != 0.0 {
        pass = false;
    }

    Ok(InequalityReport {
        name: "counterexample".into(),
        lhs: nd.extrapolated,
        rhs: 0.0,
        measured_constant: slope,
        pass,
        inputs_digest: digest(&[u.values(), &[n as f64]]),
        notes: notes.join("; "),
    })
}

/// Asserts `lower ≤ u + tol` on every node of the region; the ordering must
/// already hold at the region's edge nodes (precondition).
pub fn comparison_check(
    u: &RadialField,
    lower: &RadialField,
    region: &RadialRegion,
) -> Result<InequalityReport, VerifyError> {
    if u.grid != lower.grid {
        return Err(VerifyError::InvalidArgument("fields on different grids".into()));
    }
    let idx: Vec<usize> = (0..u.grid.m)
        .filter(|&i| region.contains(u.grid.node(i), u.grid.spacing()))
        .collect();
    if idx.is_empty() {
        return Err(VerifyError::InvalidArgument("region contains no nodes".into()));
    }
    for &edge in [idx[0], *idx.last().unwrap()].iter() {
        if lower.value(edge) > u.value(edge) + CHECK_TOL {
            return Err(VerifyError::BoundaryOrdering {
                lower: lower.value(edge),
                upper: u.value(edge),
            });
        }
    }
    let worst = idx
        .iter()
        .map(|&i| lower.value(i) - u.value(i))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(InequalityReport {
        name: "comparison".into(),
        lhs: worst,
        rhs: 0.0,
        measured_constant: worst,
        pass: worst <= CHECK_TOL,
        inputs_digest: digest(&[u.values(), lower.values()]),
        notes: String::new(),
    })
}

/// Family descriptor for randomized sweeps.
#[derive(Debug, Clone, Serialize)]
pub struct SweepConfig {
    pub boundary_range: (f64, f64),
    /// Constant right-hand sides are drawn from this range (use nonpositive
    /// ranges to stay within the supersolution families).
    pub rhs_range: (f64, f64),
    pub alphas: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub runs: usize,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            boundary_range: (0.5, 2.0),
            rhs_range: (-1.0, 0.0),
            alphas: vec![0.0, 1.0, 2.0],
            epsilons: vec![0.25, 0.5, 1.0],
            runs: 20,
            seed: 1,
        }
    }
}

impl SweepConfig {
    fn validate(&self) -> Result<(), VerifyError> {
        if self.runs == 0 {
            return Err(VerifyError::InvalidArgument("run count must be >= 1".into()));
        }
        if self.alphas.is_empty() || self.epsilons.is_empty() {
            return Err(VerifyError::InvalidArgument("empty alpha or epsilon list".into()));
        }
        Ok(())
    }
}

/// One row of the CSV ledger.
#[derive(Debug, Clone, Serialize)]
pub struct LedgerRow {
    pub name: String,
    pub n: usize,
    pub lambda: f64,
    #[serde(rename = "Lambda")]
    pub big_lambda: f64,
    pub alpha: f64,
    pub epsilon: f64,
    pub constant: f64,
    pub pass: bool,
    pub seed: u64,
    pub grid_m: usize,
    pub residual: f64,
}

/// Writes the ledger with a fixed header and LF line endings.
pub fn write_ledger_csv(rows: &[LedgerRow], out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "name,n,lambda,Lambda,alpha,epsilon,constant,pass,seed,grid_m,residual")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.name,
            r.n,
            fmt_f64(r.lambda),
            fmt_f64(r.big_lambda),
            fmt_f64(r.alpha),
            fmt_f64(r.epsilon),
            fmt_f64(r.constant),
            r.pass,
            r.seed,
            r.grid_m,
            fmt_f64(r.residual)
        )?;
    }
    Ok(())
}

/// Largest measured constant per α, for the α-(in)dependence comparison.
pub fn max_constant_per_alpha(rows: &[LedgerRow]) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    for r in rows {
        let key = fmt_f64(r.alpha);
        let slot = out.entry(key).or_insert(f64::NEG_INFINITY);
        *slot = slot.max(r.constant);
    }
    out
}

fn sample_uniform(rng: &mut impl rand::Rng, range: (f64, f64)) -> f64 {
    if range.0 == range.1 {
        range.0
    } else {
        rng.gen_range(range.0.min(range.1)..range.0.max(range.1))
    }
}

/// Which inequality a sweep measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    WeakHarnack,
    Harnack,
    Hopf,
}

/// Runs a randomized family of radial Pucci-minus supersolutions through the
/// selected inequality check and returns the ledger rows. `a2` is the growth
/// offset used by the Hopf check (ignored otherwise).
pub fn run_sweep(
    kind: SweepKind,
    n: usize,
    lambda: f64,
    big_lambda: f64,
    sweep: &SweepConfig,
    solver_config: &SolverConfig,
    a2: f64,
) -> Result<Vec<LedgerRow>, VerifyError> {
    use rand::SeedableRng;
    sweep.validate()?;
    let mut rows = Vec::new();
    for &alpha in &sweep.alphas {
        let params = EllipticParams::new(n, lambda, big_lambda, alpha)
            .map_err(|e| VerifyError::InvalidArgument(e.to_string()))?;
        for run in 0..sweep.runs {
            // deterministic per-run seed so sweeps can be parallelized and
            // aggregated in order
            let run_seed = sweep
                .seed
                .wrapping_mul(0x9e3779b97f4a7c15)
                .wrapping_add((alpha.to_bits() >> 12) ^ run as u64);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(run_seed);
            let boundary = sample_uniform(&mut rng, sweep.boundary_range);
            let rhs_level = sample_uniform(&mut rng, sweep.rhs_range).min(0.0);
            let problem = BvpProblem::new(
                Domain::Ball { radius: 1.0, boundary_value: boundary },
                OperatorSpec::pucci_minus(params),
                Rc::new(move |_| rhs_level),
            );
            let sol = solve_radial(&problem, solver_config)?;
            let f_field = RadialField::from_fn(sol.u.grid, |_| rhs_level)?;
            let u = sol.u.map(|v| v.max(0.0))?;
            for &eps in &sweep.epsilons {
                let report = match kind {
                    SweepKind::WeakHarnack => weak_harnack_ratio(&u, &f_field, &params, eps)?,
                    SweepKind::Harnack => harnack_ratio(&u, &f_field, &params)?,
                    SweepKind::Hopf => hopf_growth_check(&u, &f_field, &params, a2, eps)?,
                };
                rows.push(LedgerRow {
                    name: report.name.clone(),
                    n,
                    lambda,
                    big_lambda,
                    alpha,
                    epsilon: eps,
                    constant: report.measured_constant,
                    pass: report.pass,
                    seed: run_seed,
                    grid_m: solver_config.grid_m,
                    residual: sol.residual_norm,
                });
                if kind == SweepKind::Harnack {
                    break; // the Harnack ratio does not depend on epsilon
                }
            }
        }
    }
    Ok(rows)
}
