//! One-phase free boundary machinery: positive parts with their gradient
//! fields, discrete gluing across a rough interface, the flame-propagation
//! ε-sweep and the Lipschitz bound at the free boundary.

use crate::grid::{fmt_f64, PlanarField, RadialField, RadialRegion};
use crate::operators::OperatorSpec;
use crate::solver::{
    solve_flame, BvpProblem, Domain, FlameReaction, Rhs, SolverConfig, SolverError,
};
use crate::verify::{digest, InequalityReport};
use serde::Serialize;
use std::io::Write;
use std::rc::Rc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FbError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("trace hypothesis violated at node {node}: |{value:.3e}| exceeds tolerance")]
    TraceViolation { node: usize, value: f64 },
    #[error(transparent)]
    Grid(#[from] crate::grid::GridError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Verify(#[from] crate::verify::VerifyError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Truncation `Φ_η`: shifts values toward zero by `η` and kills the band
/// `|t| ≤ η`.
pub fn phi_eta(t: f64, eta: f64) -> f64 {
    if t > eta {
        t - eta
    } else if t < -eta {
        t + eta
    } else {
        0.0
    }
}

/// Cutoff `ζ_s`: 0 up to `s/2`, affine with slope `2/s` on `(s/2, s)`,
/// 1 from `s` on.
pub fn zeta_s(t: f64, s: f64) -> f64 {
    ((2.0 / s) * (t - s / 2.0)).clamp(0.0, 1.0)
}

/// Positive part of a planar field together with its gradient field
/// `χ_{u>0} ∇u` (each node uses the indicator of its own sign).
#[derive(Debug, Clone)]
pub struct PositivePart {
    pub plus: PlanarField,
    pub gradient: Vec<Option<(f64, f64)>>,
}

pub fn positive_part(u: &PlanarField) -> Result<PositivePart, FbError> {
    let grads = u.gradient();
    let gradient = u
        .values()
        .iter()
        .zip(&grads)
        .map(|(&v, g)| {
            if v > 0.0 {
                *g
            } else {
                g.map(|_| (0.0, 0.0))
            }
        })
        .collect();
    let plus = PlanarField::new(u.grid.clone(), u.values().iter().map(|v| v.max(0.0)).collect())?;
    Ok(PositivePart { plus, gradient })
}

/// Radial analogue: `(u⁺, χ_{u>0} u')`.
pub fn positive_part_radial(u: &RadialField) -> Result<(RadialField, RadialField), FbError> {
    let d = u.derivative();
    let grad = RadialField::new(
        u.grid,
        u.values()
            .iter()
            .zip(d.values())
            .map(|(&v, &s)| if v > 0.0 { s } else { 0.0 })
            .collect(),
    )?;
    Ok((u.map(|v| v.max(0.0))?, grad))
}

/// Fields to glue: `u` lives on node set `A`, `v` on node set `B`, both
/// vanishing on the interface `Γ`.
#[derive(Debug, Clone)]
pub struct GlueInput {
    pub u: PlanarField,
    pub v: PlanarField,
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub gamma: Vec<usize>,
}

pub const TRACE_TOL: f64 = 1e-10;

impl GlueInput {
    fn validate(&self) -> Result<(), FbError> {
        if !Rc::ptr_eq(&self.u.grid, &self.v.grid) {
            return Err(FbError::InvalidInput("u and v live on different grids".into()));
        }
        let len = self.u.grid.len();
        let mut owner = vec![0u8; len];
        for &i in &self.a {
            if i >= len {
                return Err(FbError::InvalidInput(format!("A index {i} out of range")));
            }
            owner[i] |= 1;
        }
        for &i in &self.b {
            if i >= len {
                return Err(FbError::InvalidInput(format!("B index {i} out of range")));
            }
            if owner[i] != 0 {
                return Err(FbError::InvalidInput(format!("node {i} lies in both A and B")));
            }
            owner[i] |= 2;
        }
        for &i in &self.gamma {
            if i >= len {
                return Err(FbError::InvalidInput(format!("interface index {i} out of range")));
            }
            if owner[i] != 0 {
                return Err(FbError::InvalidInput(format!("interface node {i} overlaps A or B")));
            }
        }
        let scale = self
            .u
            .values()
            .iter()
            .chain(self.v.values())
            .fold(1.0f64, |m, &x| m.max(x.abs()));
        let mut worst = (usize::MAX, 0.0f64);
        for &i in &self.gamma {
            for value in [self.u.value(i), self.v.value(i)] {
                if value.abs() > worst.1 {
                    worst = (i, value.abs());
                }
            }
        }
        if worst.1 > TRACE_TOL * scale {
            return Err(FbError::TraceViolation { node: worst.0, value: worst.1 });
        }
        Ok(())
    }
}

/// One `(p, lhs, rhs)` comparison of the gluing report.
#[derive(Debug, Clone, Serialize)]
pub struct NormCheck {
    pub p: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GlueReport {
    pub value_checks: Vec<NormCheck>,
    pub gradient_checks: Vec<NormCheck>,
    /// Max discrepancy between the discrete gradient of `w` and the glued
    /// gradient `χ_A ∇u + χ_B ∇v`, at nodes at least `2h` from `Γ`.
    pub identity_discrepancy: f64,
    pub collar_width: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct GlueOutcome {
    /// The glued field: `u` on `A`, `v` on `B`, zero elsewhere.
    pub w: PlanarField,
    /// Truncated/cutoff intermediate `Φ_η(w)·ζ_s(d(·, Γ))`.
    pub w_eta: PlanarField,
    /// The glued gradient field `χ_A ∇u + χ_B ∇v`.
    pub gradient: Vec<Option<(f64, f64)>>,
    pub report: GlueReport,
}

fn masked_lp_norm(values: impl Iterator<Item = f64>, p: f64, cell: f64) -> f64 {
    if p.is_infinite() {
        return values.fold(0.0f64, |m, v| m.max(v.abs()));
    }
    let sum: f64 = values.map(|v| v.abs().powf(p) * cell).sum();
    sum.powf(1.0 / p)
}

/// Glues two fields vanishing on the interface and verifies the norm
/// inequalities of the construction; `eta` and `s` shape the exposed
/// truncated intermediate.
pub fn glue(input: &GlueInput, eta: f64, s: f64) -> Result<GlueOutcome, FbError> {
    if !(eta > 0.0 && s > 0.0) {
        return Err(FbError::InvalidInput(format!("need eta, s > 0, got ({eta}, {s})")));
    }
    input.validate()?;
    let grid = input.u.grid.clone();
    let len = grid.len();
    let h = grid.spacing();
    let cell = h * h;

    let mut w_vals = vec![0.0; len];
    let mut side = vec![0u8; len]; // 1 = A, 2 = B
    for &i in &input.a {
        w_vals[i] = input.u.value(i);
        side[i] = 1;
    }
    for &i in &input.b {
        w_vals[i] = input.v.value(i);
        side[i] = 2;
    }
    let w = PlanarField::new(grid.clone(), w_vals)?;

    let gamma_points: Vec<(f64, f64)> = input.gamma.iter().map(|&i| grid.nodes()[i]).collect();
    let dist = if gamma_points.is_empty() {
        PlanarField::new(grid.clone(), vec![f64::INFINITY.min(1e30); len])?
    } else {
        PlanarField::dist_to_nodes(&grid, &gamma_points)
    };
    let w_eta = PlanarField::new(
        grid.clone(),
        (0..len)
            .map(|i| phi_eta(w.value(i), eta) * zeta_s(dist.value(i), s))
            .collect(),
    )?;

    let grad_u = input.u.gradient();
    let grad_v = input.v.gradient();
    let gradient: Vec<Option<(f64, f64)>> = (0..len)
        .map(|i| match side[i] {
            1 => grad_u[i],
            2 => grad_v[i],
            _ => Some((0.0, 0.0)),
        })
        .collect();

    let mag = |g: &Option<(f64, f64)>| g.map(|(x, y)| (x * x + y * y).sqrt());
    let mut value_checks = Vec::new();
    let mut gradient_checks = Vec::new();
    for p in [1.0, 2.0, f64::INFINITY] {
        let lhs = masked_lp_norm(w.values().iter().copied(), p, cell);
        let rhs_u = masked_lp_norm(input.a.iter().map(|&i| input.u.value(i)), p, cell);
        let rhs_v = masked_lp_norm(input.b.iter().map(|&i| input.v.value(i)), p, cell);
        let rhs = rhs_u + rhs_v;
        value_checks.push(NormCheck { p, lhs, rhs, pass: lhs <= rhs * (1.0 + 1e-12) + 1e-12 });

        let glhs = masked_lp_norm((0..len).filter_map(|i| mag(&gradient[i])), p, cell);
        let grhs_u = masked_lp_norm(input.a.iter().filter_map(|&i| mag(&grad_u[i])), p, cell);
        let grhs_v = masked_lp_norm(input.b.iter().filter_map(|&i| mag(&grad_v[i])), p, cell);
        let grhs = grhs_u + grhs_v;
        gradient_checks.push(NormCheck {
            p,
            lhs: glhs,
            rhs: grhs,
            pass: glhs <= grhs * (1.0 + 1e-12) + 1e-12,
        });
    }

    // away from the 2h collar of Γ the discrete gradient of w must agree
    // with the glued gradient exactly
    let collar = 2.0 * h;
    let grad_w = w.gradient();
    let mut identity_discrepancy = 0.0f64;
    for i in 0..len {
        if dist.value(i) <= collar + 1e-12 * h {
            continue;
        }
        if let (Some((ax, ay)), Some((bx, by))) = (grad_w[i], gradient[i]) {
            identity_discrepancy = identity_discrepancy
                .max((ax - bx).abs())
                .max((ay - by).abs());
        }
    }

    let pass = value_checks.iter().all(|c| c.pass)
        && gradient_checks.iter().all(|c| c.pass)
        && identity_discrepancy <= 1e-10;
    Ok(GlueOutcome {
        w,
        w_eta,
        gradient,
        report: GlueReport {
            value_checks,
            gradient_checks,
            identity_discrepancy,
            collar_width: collar,
            pass,
        },
    })
}

/// One-phase problem data: operator, forcing, and the bound `h` on the
/// free-boundary gradient.
#[derive(Clone)]
pub struct FbProblem {
    pub spec: OperatorSpec,
    pub rhs: Rhs,
    /// Free-boundary slope bound `h(r) ≥ 0`.
    pub h_bound: Rc<dyn Fn(f64) -> f64>,
}

impl FbProblem {
    pub fn with_constant_bound(spec: OperatorSpec, rhs: Rhs, h: f64) -> Result<Self, FbError> {
        if h < 0.0 {
            return Err(FbError::InvalidInput(format!("h bound {h} < 0")));
        }
        Ok(Self { spec, rhs, h_bound: Rc::new(move |_| h) })
    }
}

/// Discrete free boundary of a radial field: indices `i` with
/// `u(r_i) > 0 ≥ u(r_{i±1})` (sign-change node pairs).
pub fn free_boundary_pairs(u: &RadialField) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for i in 0..u.grid.m - 1 {
        let (a, b) = (u.value(i), u.value(i + 1));
        if (a > 0.0 && b <= 0.0) || (b > 0.0 && a <= 0.0) {
            pairs.push((i, i + 1));
        }
    }
    pairs
}

fn max_fb_quotient(u: &RadialField) -> f64 {
    let h = u.grid.spacing();
    free_boundary_pairs(u)
        .iter()
        .map(|&(i, j)| (u.value(i).max(0.0).max(u.value(j).max(0.0))) / h)
        .fold(0.0f64, f64::max)
}

/// Lipschitz bound at the free boundary:
/// `‖∇u⁺‖_{L∞(B_{1/2})} ≤ C (‖h‖_∞ + ‖u‖_{L∞(B₁⁺)} + ‖f‖_∞^{1/(1+α)})`,
/// with the free-boundary difference quotients measured against `h`.
pub fn fb_lipschitz_check(problem: &FbProblem, u: &RadialField) -> Result<InequalityReport, FbError> {
    let grid = u.grid;
    let h_grid = grid.spacing();
    let alpha = problem.spec.params.alpha;
    let (plus, grad_plus) = positive_part_radial(u)?;
    let positive_nodes: Vec<usize> =
        (0..grid.m).filter(|&i| u.value(i) > 0.0).collect();
    if positive_nodes.is_empty() {
        return Ok(InequalityReport {
            name: "fb_lipschitz".into(),
            lhs: 0.0,
            rhs: 0.0,
            measured_constant: 0.0,
            pass: true,
            inputs_digest: digest(&[u.values()]),
            notes: "empty positivity set: vacuous pass".to_string(),
        });
    }
    let pairs = free_boundary_pairs(u);

    let half = RadialRegion::ball(0.5 * grid.r_max);
    let lip = grad_plus.map(f64::abs)?.lp_norm(f64::INFINITY, &half)?;
    let sup_pos = positive_nodes
        .iter()
        .map(|&i| u.value(i))
        .fold(0.0f64, f64::max);
    let f_sup = grid
        .nodes()
        .map(|r| (problem.rhs)(r).abs())
        .fold(0.0f64, f64::max);
    let h_sup = grid
        .nodes()
        .map(|r| (problem.h_bound)(r))
        .fold(0.0f64, f64::max);
    let rhs = h_sup + sup_pos + f_sup.powf(1.0 / (1.0 + alpha));
    let measured_c = if rhs > 0.0 { lip / rhs } else { 0.0 };

    // second derivative scale bounds the quotient discretization error
    let curvature = u
        .second_derivative()
        .values()
        .iter()
        .fold(0.0f64, |m, &v| m.max(v.abs()));
    let quotient_tol = 2.0 * h_grid * curvature + 1e-8;
    let mut worst_quotient = 0.0f64;
    let mut quotient_pass = true;
    for &(i, j) in &pairs {
        let q = (plus.value(i).max(plus.value(j))) / h_grid;
        worst_quotient = worst_quotient.max(q);
        let r = grid.node(i.min(j));
        if q > (problem.h_bound)(r) + quotient_tol {
            quotient_pass = false;
        }
    }

    let mut notes = vec![
        format!("free_boundary_pairs={}", pairs.len()),
        format!("max_quotient={}", fmt_f64(worst_quotient)),
    ];
    if pairs.is_empty() {
        notes.push("no free boundary: interior gradient bound only".to_string());
    }
    if pairs.iter().any(|&(i, _)| grid.node(i) <= h_grid) {
        // free boundary passes through the origin at grid scale: the sharper
        // bound drops the sup term
        let sharp_rhs = h_sup + f_sup.powf(1.0 / (1.0 + alpha));
        if sharp_rhs > 0.0 {
            notes.push(format!("sharper_constant={}", fmt_f64(lip / sharp_rhs)));
        }
    }
    Ok(InequalityReport {
        name: "fb_lipschitz".into(),
        lhs: lip,
        rhs,
        measured_constant: measured_c,
        pass: quotient_pass && measured_c.is_finite(),
        inputs_digest: digest(&[u.values()]),
        notes: notes.join("; "),
    })
}

/// Flame-propagation family: one operator/forcing, a reaction profile, and
/// the ε ladder to sweep.
#[derive(Clone)]
pub struct FlameProblem {
    pub spec: OperatorSpec,
    pub rhs: Rhs,
    pub boundary_value: f64,
    pub beta_profile: Rc<dyn Fn(f64) -> f64>,
    pub epsilons: Vec<f64>,
}

impl FlameProblem {
    fn validate(&self) -> Result<(), FbError> {
        if self.epsilons.is_empty() {
            return Err(FbError::InvalidInput("empty epsilon list".into()));
        }
        for &e in &self.epsilons {
            if !(e > 0.0 && e <= 0.125) {
                return Err(FbError::InvalidInput(format!("epsilon {e} outside (0, 1/8]")));
            }
        }
        // support check on profile samples
        for k in 0..=64 {
            let t = -0.5 + 2.0 * k as f64 / 64.0;
            let v = (self.beta_profile)(t);
            if !v.is_finite() {
                return Err(FbError::InvalidInput(format!("beta profile not finite at {t}")));
            }
            if !(0.0..=1.0).contains(&t) && v != 0.0 {
                return Err(FbError::InvalidInput(format!(
                    "beta profile not supported in [0,1]: beta({t}) = {v}"
                )));
            }
        }
        Ok(())
    }
}

/// One row of the flame sweep table.
#[derive(Debug, Clone, Serialize)]
pub struct FlameRow {
    pub epsilon: f64,
    pub sup_u: f64,
    pub lip_norm: f64,
    pub beta_sup: f64,
    pub f_sup: f64,
    pub measured_c: f64,
    pub fb_quotient_max: f64,
    pub center_value: f64,
    /// Sharper constant on `B_{1/4}` without the `‖u‖_∞` term, present when
    /// `u_ε(0) ≤ ε`.
    pub sharp_c: Option<f64>,
    pub residual: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FlameSweepReport {
    pub rows: Vec<FlameRow>,
    /// Least-squares slope of `log C` against `log(1/ε)`.
    pub log_slope: f64,
    pub bounded: bool,
    pub diverged: Vec<f64>,
}

/// Sweeps the ε ladder through `solve_flame`, measuring the Lipschitz
/// constant of each solution against the bound
/// `C (1 + ‖β‖_∞^{1/(1+α)} + ‖u_ε‖_∞ + ‖f‖_∞^{1/(1+α)})` on `B_{1/2}`.
pub fn flame_sweep(
    problem: &FlameProblem,
    config: &SolverConfig,
) -> Result<FlameSweepReport, FbError> {
    problem.validate()?;
    let alpha = problem.spec.params.alpha;
    let mut epsilons = problem.epsilons.clone();
    epsilons.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let beta_sup = (0..=1000)
        .map(|i| (problem.beta_profile)(i as f64 / 1000.0))
        .fold(0.0f64, f64::max);

    let mut rows = Vec::new();
    let mut diverged = Vec::new();
    let mut warm: Option<RadialField> = None;
    for &eps in &epsilons {
        let bvp = BvpProblem::new(
            Domain::Ball { radius: 1.0, boundary_value: problem.boundary_value },
            problem.spec.clone(),
            problem.rhs.clone(),
        );
        let reaction = FlameReaction::new(problem.beta_profile.clone(), eps)?;
        let sol = solve_flame(&bvp, &reaction, config, warm.as_ref())?;
        if !sol.converged {
            // partial table with diagnostics
            diverged.push(eps);
            rows.push(FlameRow {
                epsilon: eps,
                sup_u: f64::NAN,
                lip_norm: f64::NAN,
                beta_sup,
                f_sup: f64::NAN,
                measured_c: f64::NAN,
                fb_quotient_max: f64::NAN,
                center_value: f64::NAN,
                sharp_c: None,
                residual: sol.residual_norm,
                converged: false,
            });
            continue;
        }
        let u = &sol.u;
        let grid = u.grid;
        let sup_u = u.values().iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        let f_sup = grid
            .nodes()
            .map(|r| (problem.rhs)(r).abs())
            .fold(0.0f64, f64::max);
        let d = u.derivative();
        let half = RadialRegion::ball(0.5);
        let lip_norm = d.map(f64::abs)?.lp_norm(f64::INFINITY, &half)?;
        let rhs_bound =
            1.0 + beta_sup.powf(1.0 / (1.0 + alpha)) + sup_u + f_sup.powf(1.0 / (1.0 + alpha));
        let measured_c = lip_norm / rhs_bound;
        let center_value = u.value(0);
        let sharp_c = if center_value <= eps {
            let quarter = RadialRegion::ball(0.25);
            let lip_q = d.map(f64::abs)?.lp_norm(f64::INFINITY, &quarter)?;
            let sharp_rhs =
                1.0 + beta_sup.powf(1.0 / (1.0 + alpha)) + f_sup.powf(1.0 / (1.0 + alpha));
            Some(lip_q / sharp_rhs)
        } else {
            None
        };
        rows.push(FlameRow {
            epsilon: eps,
            sup_u,
            lip_norm,
            beta_sup,
            f_sup,
            measured_c,
            fb_quotient_max: max_fb_quotient(u),
            center_value,
            sharp_c,
            residual: sol.residual_norm,
            converged: true,
        });
        warm = Some(sol.u.clone());
    }

    // trend of log C against log(1/eps) over converged rows
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.converged && r.measured_c > 0.0)
        .map(|r| ((1.0 / r.epsilon).ln(), r.measured_c.ln()))
        .collect();
    let log_slope = if pts.len() >= 2 {
        let k = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        (k * sxy - sx * sy) / (k * sxx - sx * sx)
    } else {
        0.0
    };
    let bounded = diverged.is_empty() && log_slope <= 0.1;
    Ok(FlameSweepReport { rows, log_slope, bounded, diverged })
}

/// CSV serialization of the sweep table (fixed header, LF endings).
pub fn write_flame_csv(report: &FlameSweepReport, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "epsilon,sup_u,lip_norm,beta_sup,f_sup,measured_C,fb_quotient_max")?;
    for r in &report.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            fmt_f64(r.epsilon),
            fmt_f64(r.sup_u),
            fmt_f64(r.lip_norm),
            fmt_f64(r.beta_sup),
            fmt_f64(r.f_sup),
            fmt_f64(r.measured_c),
            fmt_f64(r.fb_quotient_max)
        )?;
    }
    Ok(())
}

/// Canonical flame family used by the sweeps: Pucci-minus (or Laplacian when
/// λ = Λ) with constant forcing 6 and unit boundary data, so the solution
/// crosses the reaction band transversally and develops a free boundary.
pub fn default_flame_problem(spec: OperatorSpec, epsilons: Vec<f64>) -> FlameProblem {
    FlameProblem {
        spec,
        rhs: Rc::new(|_| 6.0),
        boundary_value: 1.0,
        beta_profile: FlameReaction::default_profile(),
        epsilons,
    }
}

/// The closed-form one-phase profile `u(r) = h·(r₀ − r)⁺` together with the
/// forcing that makes it an exact solution of the Pucci-minus equation.
pub fn one_phase_profile(
    spec: &OperatorSpec,
    h: f64,
    r0: f64,
    grid: crate::grid::RadialGrid,
) -> Result<(RadialField, Rhs), FbError> {
    if !(h >= 0.0 && r0 > 0.0) {
        return Err(FbError::InvalidInput(format!("need h >= 0, r0 > 0, got ({h}, {r0})")));
    }
    let u = RadialField::from_fn(grid, |r| h * (r0 - r).max(0.0))?;
    let params = spec.params;
    let lam = params.lambda;
    let big = params.big_lambda;
    let nm1 = (params.n - 1) as f64;
    let alpha = params.alpha;
    let rhs: Rhs = Rc::new(move |r: f64| {
        if r >= r0 || r == 0.0 {
            0.0
        } else {
            // eigenvalues of D²u: 0 (radial) and −h/r (tangential, n−1)
            let tangential = -h / r;
            let pucci = lam * 0.0 + if tangential > 0.0 { lam } else { big } * nm1 * tangential;
            h.powf(alpha) * pucci
        }
    });
    Ok((u, rhs))
}
