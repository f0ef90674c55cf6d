//! Numerical solution of `|∇u|^α F(D²u) = f` with Dirichlet data on balls
//! and annuli. The radial reduction is the workhorse: damped policy
//! iteration on the frozen extremal coefficients with continuation in the
//! degeneracy regularization `δ`. A monotone 2D wide-stencil scheme serves
//! as a cross-check at `n = 2`, and a semilinear variant handles the
//! flame-propagation reaction term.

use crate::grid::{GridError, PlanarField, PlanarGrid, RadialField, RadialGrid};
use crate::operators::{radial_apply, OperatorKind, OperatorSpec};
use serde::Serialize;
use std::rc::Rc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("discrete operator lost monotonicity at node {node} (diagonal {diag:.3e})")]
    MonotonicityLoss { node: usize, diag: f64 },
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Domain plus Dirichlet closure of the boundary value problem.
#[derive(Clone)]
pub enum Domain {
    Ball { radius: f64, boundary_value: f64 },
    Annulus { inner: f64, outer: f64, inner_value: f64, outer_value: f64 },
}

impl Domain {
    fn radial_extent(&self) -> (f64, f64) {
        match self {
            Domain::Ball { radius, .. } => (0.0, *radius),
            Domain::Annulus { inner, outer, .. } => (*inner, *outer),
        }
    }
}

/// Right-hand side sampled at a point of the domain.
pub type Rhs = Rc<dyn Fn(f64) -> f64>;

/// Boundary value problem `|∇u|^α F(D²u) = f` with Dirichlet data.
#[derive(Clone)]
pub struct BvpProblem {
    pub domain: Domain,
    pub spec: OperatorSpec,
    /// Radial right-hand side `f(r)`.
    pub rhs: Rhs,
}

impl BvpProblem {
    pub fn new(domain: Domain, spec: OperatorSpec, rhs: Rhs) -> Self {
        Self { domain, spec, rhs }
    }

    pub fn homogeneous(domain: Domain, spec: OperatorSpec) -> Self {
        Self::new(domain, spec, Rc::new(|_| 0.0))
    }
}

/// Numerical policy: tolerances, iteration budget, δ-continuation ladder.
#[derive(Debug, Clone, Serialize)]
pub struct SolverConfig {
    pub residual_tol: f64,
    pub max_iters: usize,
    /// Strictly decreasing regularization levels; `|p|^α` is replaced by
    /// `(p² + δ²)^{α/2}` and the ladder is walked down to the last entry.
    pub delta_ladder: Vec<f64>,
    pub damping: f64,
    pub seed: u64,
    pub grid_m: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            residual_tol: 1e-8,
            max_iters: 500,
            delta_ladder: vec![1e-1, 1e-2, 1e-3, 1e-4],
            damping: 1.0,
            seed: 0,
            grid_m: 257,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<(), SolverError> {
        if self.grid_m < 5 {
            return Err(SolverError::InvalidConfig(format!("grid_m {} < 5", self.grid_m)));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(SolverError::InvalidConfig(format!("damping {}", self.damping)));
        }
        if self.delta_ladder.is_empty() {
            return Err(SolverError::InvalidConfig("empty delta ladder".into()));
        }
        for w in self.delta_ladder.windows(2) {
            if w[1] >= w[0] {
                return Err(SolverError::InvalidConfig("delta ladder not strictly decreasing".into()));
            }
        }
        if *self.delta_ladder.last().unwrap() < 0.0 {
            return Err(SolverError::InvalidConfig("negative delta".into()));
        }
        Ok(())
    }
}

/// Solver outcome; `converged` implies `residual_norm <= residual_tol`.
#[derive(Debug, Clone)]
pub struct Solution {
    pub u: RadialField,
    pub residual_norm: f64,
    pub iterations: usize,
    pub delta_final: f64,
    pub converged: bool,
}

/// Solve metadata for JSON reports.
#[derive(Debug, Clone, Serialize)]
pub struct SolveMeta {
    pub residual_norm: f64,
    pub iterations: usize,
    pub delta_final: f64,
    pub converged: bool,
    pub grid_m: usize,
    pub residual_tol: f64,
    pub delta_ladder: Vec<f64>,
}

impl Solution {
    pub fn meta(&self, config: &SolverConfig) -> SolveMeta {
        SolveMeta {
            residual_norm: self.residual_norm,
            iterations: self.iterations,
            delta_final: self.delta_final,
            converged: self.converged,
            grid_m: self.u.grid.m,
            residual_tol: config.residual_tol,
            delta_ladder: config.delta_ladder.clone(),
        }
    }
}

/// Frozen coefficients `(on u'', on u'/r aggregated over the n−1 tangential
/// directions)` realizing the extremum at the current iterate; lowest index
/// wins Bellman ties.
fn frozen_coeffs(spec: &OperatorSpec, second: f64, first_over_r: f64) -> (f64, f64) {
    let p = &spec.params;
    let tangential = (p.n - 1) as f64;
    match &spec.kind {
        OperatorKind::PucciMinus => {
            let a_r = if second > 0.0 { p.lambda } else { p.big_lambda };
            let a_t = if first_over_r > 0.0 { p.lambda } else { p.big_lambda };
            (a_r, tangential * a_t)
        }
        OperatorKind::PucciPlus => {
            let a_r = if second > 0.0 { p.big_lambda } else { p.lambda };
            let a_t = if first_over_r > 0.0 { p.big_lambda } else { p.lambda };
            (a_r, tangential * a_t)
        }
        OperatorKind::LinearTrace(a) => {
            let a00 = a.entries()[(0, 0)];
            (a00, a.trace() - a00)
        }
        OperatorKind::BellmanMin(family) => {
            let mut best = (f64::INFINITY, 0.0, 0.0);
            for a in family {
                let a00 = a.entries()[(0, 0)];
                let rest = a.trace() - a00;
                let v = a00 * second + rest * first_over_r;
                if v < best.0 {
                    best = (v, a00, rest);
                }
            }
            (best.1, best.2)
        }
    }
}

fn regularized_weight(slope: f64, delta: f64, alpha: f64) -> f64 {
    if alpha == 0.0 {
        return 1.0;
    }
    (slope * slope + delta * delta).powf(alpha / 2.0).max(1e-14)
}

/// Tridiagonal solve (Thomas algorithm); returns None on a vanishing pivot.
fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut denom = diag[0];
    if denom.abs() < 1e-300 {
        return None;
    }
    c[0] = upper[0] / denom;
    d[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - lower[i] * c[i - 1];
        if denom.abs() < 1e-300 {
            return None;
        }
        c[i] = upper[i] / denom;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / denom;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    Some(x)
}

struct RadialScheme<'a> {
    problem: &'a BvpProblem,
    grid: RadialGrid,
    f: Vec<f64>,
    is_ball: bool,
    inner_value: f64,
    outer_value: f64,
}

impl<'a> RadialScheme<'a> {
    fn new(problem: &'a BvpProblem, m: usize) -> Result<Self, SolverError> {
        let (r_min, r_max) = problem.domain.radial_extent();
        if r_max <= r_min {
            return Err(SolverError::InvalidProblem("empty radial extent".into()));
        }
        let grid = RadialGrid::new(r_min, r_max, m, problem.spec.params.n)?;
        let f: Vec<f64> = grid.nodes().map(|r| (problem.rhs)(r)).collect();
        if f.iter().any(|v| !v.is_finite()) {
            return Err(SolverError::InvalidProblem("non-finite right-hand side".into()));
        }
        let (is_ball, inner_value, outer_value) = match &problem.domain {
            Domain::Ball { boundary_value, .. } => (true, 0.0, *boundary_value),
            Domain::Annulus { inner_value, outer_value, .. } => (false, *inner_value, *outer_value),
        };
        Ok(Self { problem, grid, f, is_ball, inner_value, outer_value })
    }

    fn initial_guess(&self) -> Vec<f64> {
        let m = self.grid.m;
        let inner = if self.is_ball { self.outer_value } else { self.inner_value };
        (0..m)
            .map(|i| {
                let t = i as f64 / (m - 1) as f64;
                inner * (1.0 - t) + self.outer_value * t
            })
            .collect()
    }

    fn slopes(&self, u: &[f64]) -> Vec<f64> {
        let m = self.grid.m;
        let h = self.grid.spacing();
        let mut s = vec![0.0; m];
        for i in 1..m - 1 {
            s[i] = (u[i + 1] - u[i - 1]) / (2.0 * h);
        }
        if self.is_ball {
            s[0] = 0.0; // symmetry at the origin
        } else {
            s[0] = (u[1] - u[0]) / h;
        }
        s[m - 1] = (u[m - 1] - u[m - 2]) / h;
        s
    }

    /// Pointwise residual of the regularized equation, optionally with a
    /// reaction term subtracted from the right-hand side.
    fn residual_norm(&self, u: &[f64], delta: f64, reaction: Option<&dyn Fn(f64) -> (f64, f64)>) -> f64 {
        self.residual_norms(u, delta, reaction).0
    }

    /// `(sup, rms)` of the pointwise residual; the sup norm decides
    /// convergence while the smoother rms norm steers the line search.
    fn residual_norms(
        &self,
        u: &[f64],
        delta: f64,
        reaction: Option<&dyn Fn(f64) -> (f64, f64)>,
    ) -> (f64, f64) {
        let m = self.grid.m;
        let h = self.grid.spacing();
        let alpha = self.problem.spec.params.alpha;
        let slopes = self.slopes(u);
        let mut worst = 0.0f64;
        let mut sumsq = 0.0f64;
        let mut count = 0usize;
        for i in 1..m - 1 {
            let r = self.grid.node(i);
            let second = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h);
            let value = radial_apply(&self.problem.spec, second, slopes[i] / r);
            let w = regularized_weight(slopes[i], delta, alpha);
            let mut res = w * value - self.f[i];
            if let Some(g) = reaction {
                res -= g(u[i]).0;
            }
            worst = worst.max(res.abs());
            sumsq += res * res;
            count += 1;
        }
        if self.is_ball {
            let second0 = 2.0 * (u[1] - u[0]) / (h * h);
            let value = radial_apply(&self.problem.spec, second0, second0);
            let w = regularized_weight(0.0, delta, alpha);
            let mut res = w * value - self.f[0];
            if let Some(g) = reaction {
                res -= g(u[0]).0;
            }
            worst = worst.max(res.abs());
            sumsq += res * res;
            count += 1;
        }
        let rms = if count > 0 { (sumsq / count as f64).sqrt() } else { 0.0 };
        (worst, rms)
    }

    /// One frozen-coefficient linear solve. The first-order term uses central
    /// differences and falls back to upwinding at nodes where the central
    /// stencil would break the M-matrix structure.
    fn linear_step(
        &self,
        u: &[f64],
        delta: f64,
        reaction: Option<&dyn Fn(f64) -> (f64, f64)>,
        clamp_reaction: bool,
        sigma: f64,
    ) -> Result<Option<Vec<f64>>, SolverError> {
        let m = self.grid.m;
        let h = self.grid.spacing();
        let h2 = h * h;
        let alpha = self.problem.spec.params.alpha;
        let slopes = self.slopes(u);

        let mut lower = vec![0.0; m];
        let mut diag = vec![0.0; m];
        let mut upper = vec![0.0; m];
        let mut rhs = vec![0.0; m];

        // boundary rows
        if self.is_ball {
            // symmetry row assembled below
        } else {
            diag[0] = 1.0;
            rhs[0] = self.inner_value;
        }
        diag[m - 1] = 1.0;
        rhs[m - 1] = self.outer_value;

        for i in 1..m - 1 {
            let r = self.grid.node(i);
            let second = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / h2;
            let first_over_r = slopes[i] / r;
            let (a_r, a_t) = frozen_coeffs(&self.problem.spec, second, first_over_r);
            let w = regularized_weight(slopes[i], delta, alpha);
            let c = a_t / r; // coefficient on u'

            let mut lo = w * (a_r / h2 - c / (2.0 * h));
            let mut up = w * (a_r / h2 + c / (2.0 * h));
            let mut dg = -2.0 * w * a_r / h2;
            if lo < 0.0 {
                // forward upwind for c > 0
                lo = w * a_r / h2;
                up = w * (a_r / h2 + c / h);
                dg = -w * (2.0 * a_r / h2 + c / h);
            } else if up < 0.0 {
                // backward upwind for c < 0
                up = w * a_r / h2;
                lo = w * (a_r / h2 - c / h);
                dg = -w * (2.0 * a_r / h2 - c / h);
            }
            let mut b = self.f[i];
            if let Some(g) = reaction {
                let (val, mut dval) = g(u[i]);
                if clamp_reaction {
                    dval = dval.min(0.0);
                }
                // implicit linearization of the reaction term
                dg -= dval;
                b += val - dval * u[i];
            }
            // proximal damping term sigma (u_next - u) keeps the matrix
            // diagonally dominant when the reaction linearization is stiff
            dg -= sigma;
            b -= sigma * u[i];
            if dg >= 0.0 {
                return Err(SolverError::MonotonicityLoss { node: i, diag: dg });
            }
            lower[i] = lo;
            diag[i] = dg;
            upper[i] = up;
            rhs[i] = b;
        }

        if self.is_ball {
            // even extension at r = 0: all Hessian eigenvalues equal
            // u''(0) ~ 2(u_1 - u_0)/h²
            let second0 = 2.0 * (u[1] - u[0]) / h2;
            let (a_r, a_t) = frozen_coeffs(&self.problem.spec, second0, second0);
            let coeff = a_r + a_t;
            let w = regularized_weight(0.0, delta, alpha);
            let mut dg = -2.0 * w * coeff / h2;
            let up = 2.0 * w * coeff / h2;
            let mut b = self.f[0];
            if let Some(g) = reaction {
                let (val, mut dval) = g(u[0]);
                if clamp_reaction {
                    dval = dval.min(0.0);
                }
                dg -= dval;
                b += val - dval * u[0];
            }
            dg -= sigma;
            b -= sigma * u[0];
            diag[0] = dg;
            upper[0] = up;
            rhs[0] = b;
        }

        Ok(thomas(&lower, &diag, &upper, &rhs))
    }

    /// Policy/Newton iteration at the given `δ`, with residual backtracking.
    fn iterate(
        &self,
        u: &mut Vec<f64>,
        delta: f64,
        reaction: Option<&dyn Fn(f64) -> (f64, f64)>,
        config: &SolverConfig,
        iterations: &mut usize,
    ) -> Result<f64, SolverError> {
        let mut res = self.residual_norm(u, delta, reaction);
        // Levenberg-Marquardt style proximal weight: zero for plain Newton
        // steps, grown whenever backtracking cannot make progress (stiff
        // reaction linearizations), shrunk again after accepted steps
        let mut sigma = 0.0f64;
        let h2 = self.grid.spacing().powi(2);
        let sigma_unit = 1.0 / h2;
        for _ in 0..config.max_iters {
            if res <= config.residual_tol {
                break;
            }
            *iterations += 1;
            let candidate = match self.linear_step(u, delta, reaction, false, sigma) {
                Ok(Some(v)) => v,
                // near-singular Newton matrix: retry with the stabilized
                // (clamped) reaction linearization
                _ => match self.linear_step(u, delta, reaction, true, sigma)? {
                    Some(v) => v,
                    None => break,
                },
            };
            let mut step = config.damping;
            let mut accepted = false;
            for _ in 0..30 {
                let trial: Vec<f64> = u
                    .iter()
                    .zip(&candidate)
                    .map(|(&a, &b)| a + step * (b - a))
                    .collect();
                let trial_res = self.residual_norm(&trial, delta, reaction);
                if trial_res < res || trial_res <= config.residual_tol {
                    *u = trial;
                    res = trial_res;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if accepted {
                sigma = 0.0;
            } else {
                let next = if sigma == 0.0 { 1e-2 * sigma_unit } else { 10.0 * sigma };
                if next > 1e6 * sigma_unit {
                    break;
                }
                sigma = next;
            }
        }
        Ok(res)
    }

    /// Pseudo-transient continuation for stiff semilinear reactions: implicit
    /// Euler steps of `u_t = |∇u|^α F(D²u) − f − g(u)` with the timestep
    /// controlled by switched evolution relaxation. Unlike a line search on
    /// the residual, the flow is allowed to pass through plateaus where
    /// kinks of `g` pin the sup norm, and the timestep grows into a full
    /// Newton step as the steady state is approached.
    fn iterate_ptc(
        &self,
        u: &mut Vec<f64>,
        delta: f64,
        reaction: &dyn Fn(f64) -> (f64, f64),
        config: &SolverConfig,
        iterations: &mut usize,
    ) -> Result<f64, SolverError> {
        let sigma_floor = 1e-12;
        // the initial 1/Δt must dominate the destabilizing part of the
        // reaction linearization so early steps stay monotone
        let mut sigma = u
            .iter()
            .map(|&t| reaction(t).1.max(0.0))
            .fold(1.0f64, f64::max);
        let (mut res, mut merit) = self.residual_norms(u, delta, Some(reaction));
        let mut rejects = 0usize;
        for _ in 0..config.max_iters {
            if res <= config.residual_tol {
                break;
            }
            *iterations += 1;
            let candidate = match self.linear_step(u, delta, Some(reaction), false, sigma) {
                Ok(Some(v)) => v,
                _ => {
                    // monotonicity or elimination failure: shrink the timestep
                    sigma *= 4.0;
                    rejects += 1;
                    if rejects > 120 {
                        break;
                    }
                    continue;
                }
            };
            let (trial_res, trial_merit) = self.residual_norms(&candidate, delta, Some(reaction));
            if !trial_merit.is_finite() || trial_merit > 2.0 * merit {
                sigma = (4.0 * sigma).max(1.0);
                rejects += 1;
                if rejects > 120 {
                    break;
                }
                continue;
            }
            rejects = 0;
            *u = candidate;
            // switched evolution relaxation: Δt ∝ 1/residual
            let ratio = if merit > 0.0 { trial_merit / merit } else { 0.0 };
            sigma = (sigma * ratio).max(sigma_floor);
            res = trial_res;
            merit = trial_merit;
        }
        Ok(res)
    }
}

/// Solves the radial problem by damped policy iteration with continuation in
/// the regularization `δ`.
pub fn solve_radial(problem: &BvpProblem, config: &SolverConfig) -> Result<Solution, SolverError> {
    solve_radial_with(problem, None, config, None)
}

/// Shared core: optional semilinear reaction `g(t) -> (value, derivative)`
/// enters the right-hand side as `... = f + g(u)`, and an optional warm
/// start seeds the iteration.
pub fn solve_radial_with(
    problem: &BvpProblem,
    reaction: Option<&dyn Fn(f64) -> (f64, f64)>,
    config: &SolverConfig,
    warm_start: Option<&RadialField>,
) -> Result<Solution, SolverError> {
    config.validate()?;
    let scheme = RadialScheme::new(problem, config.grid_m)?;
    let mut u = match warm_start {
        Some(field) if field.grid.m == scheme.grid.m => field.values().to_vec(),
        Some(field) => scheme.grid.nodes().map(|r| field.interpolate(r)).collect(),
        None => scheme.initial_guess(),
    };
    let mut iterations = 0usize;
    let mut res = f64::INFINITY;
    let mut delta_final = *config.delta_ladder.last().unwrap();
    let alpha = problem.spec.params.alpha;
    let ladder: Vec<f64> = if alpha == 0.0 {
        vec![0.0]
    } else {
        config.delta_ladder.clone()
    };
    let zero_reaction = |_: f64| (0.0, 0.0);
    for &delta in &ladder {
        delta_final = delta;
        res = match reaction {
            Some(g) => scheme.iterate_ptc(&mut u, delta, g, config, &mut iterations)?,
            None => {
                let mut level = scheme.iterate(&mut u, delta, None, config, &mut iterations)?;
                if level > config.residual_tol {
                    // Newton with line search can cycle when the degenerate
                    // weight reacts strongly to the slope (large α); the
                    // pseudo-transient flow is slower but unconditionally
                    // stable, so it finishes the level
                    level =
                        scheme.iterate_ptc(&mut u, delta, &zero_reaction, config, &mut iterations)?;
                }
                level
            }
        };
    }
    let converged = res <= config.residual_tol;
    Ok(Solution {
        u: RadialField::new(scheme.grid, u)?,
        residual_norm: res,
        iterations,
        delta_final,
        converged,
    })
}

/// Flame reaction profile `β_ε(t) = ε^{-1} β(t/ε)` for a continuous `β`
/// supported in `[0, 1]`.
pub struct FlameReaction {
    pub profile: Rc<dyn Fn(f64) -> f64>,
    pub epsilon: f64,
}

impl FlameReaction {
    /// Canonical bump `β(t) = 6t(1−t)` on `[0, 1]` (unit mass).
    pub fn default_profile() -> Rc<dyn Fn(f64) -> f64> {
        Rc::new(|t: f64| if (0.0..=1.0).contains(&t) { 6.0 * t * (1.0 - t) } else { 0.0 })
    }

    pub fn new(profile: Rc<dyn Fn(f64) -> f64>, epsilon: f64) -> Result<Self, SolverError> {
        if !(epsilon > 0.0) {
            return Err(SolverError::InvalidProblem(format!("epsilon {epsilon} <= 0")));
        }
        Ok(Self { profile, epsilon })
    }

    pub fn value(&self, t: f64) -> f64 {
        (self.profile)(t / self.epsilon) / self.epsilon
    }

    /// Central finite-difference slope of `β_ε`, used for the implicit
    /// linearization of the reaction term. The window is a fixed fraction
    /// of `ε` so that nodes sitting right at a kink of the profile still
    /// see the one-sided coupling.
    pub fn slope(&self, t: f64) -> f64 {
        let dh = 1e-2 * self.epsilon;
        (self.value(t + dh) - self.value(t - dh)) / (2.0 * dh)
    }

    pub fn sup_profile(&self) -> f64 {
        (0..=1000)
            .map(|i| (self.profile)(i as f64 / 1000.0))
            .fold(0.0f64, f64::max)
    }
}

/// Solves `|∇u|^α F(D²u) = β_ε(u) + f` by the semilinear radial iteration.
pub fn solve_flame(
    problem: &BvpProblem,
    reaction: &FlameReaction,
    config: &SolverConfig,
    warm_start: Option<&RadialField>,
) -> Result<Solution, SolverError> {
    let g = |t: f64| (reaction.value(t), reaction.slope(t));
    // without a warm start, seed from the reaction-free solution: starting
    // inside a flat stretch of the profile can pin the iteration at a kink
    let seed;
    let start = match warm_start {
        Some(field) => Some(field),
        None => {
            seed = solve_radial(problem, config)?;
            Some(&seed.u)
        }
    };
    solve_radial_with(problem, Some(&g), config, start)
}

/// Pointwise residual `|∇u|^α F(D²u) − f` of an externally supplied field,
/// evaluated with the unregularized weight.
pub fn residual(problem: &BvpProblem, u: &RadialField) -> Result<RadialField, SolverError> {
    let grid = u.grid;
    let h = grid.spacing();
    let alpha = problem.spec.params.alpha;
    let d = u.derivative();
    let dd = u.second_derivative();
    let mut out = vec![0.0; grid.m];
    for i in 0..grid.m {
        let r = grid.node(i);
        let (second, first_over_r) = if r == 0.0 {
            let s = 2.0 * (u.value(1) - u.value(0)) / (h * h);
            (s, s)
        } else {
            (dd.value(i), d.value(i) / r)
        };
        let slope = if r == 0.0 { 0.0 } else { d.value(i) };
        let w = if alpha == 0.0 { 1.0 } else { slope.abs().powf(alpha) };
        out[i] = w * radial_apply(&problem.spec, second, first_over_r) - (problem.rhs)(r);
    }
    Ok(RadialField::new(grid, out)?)
}

/// Rescaled solution `v(x) = a·u(bx)` together with the residual factor
/// `a^{α+1} b^{α+2}` of the transformed problem.
#[derive(Debug, Clone)]
pub struct RescaledSolution {
    pub u: RadialField,
    pub residual_factor: f64,
    /// Max-norm discrepancy between the transformed residual and
    /// `factor × original residual`, recomputed discretely.
    pub residual_identity_error: f64,
}

/// Applies the ellipticity-preserving rescaling. All operator kinds in the
/// closed family are positively one-homogeneous, so the transformed operator
/// coincides with the original.
pub fn rescale_solution(
    problem: &BvpProblem,
    sol: &Solution,
    a: f64,
    b: f64,
) -> Result<RescaledSolution, SolverError> {
    if !(a > 0.0 && b > 0.0) {
        return Err(SolverError::InvalidProblem(format!("need a, b > 0, got ({a}, {b})")));
    }
    let g = sol.u.grid;
    let new_grid = RadialGrid::new(g.r_min / b, g.r_max / b, g.m, g.dim)?;
    let values: Vec<f64> = sol.u.values().iter().map(|&v| a * v).collect();
    let u_scaled = RadialField::new(new_grid, values)?;

    let alpha = problem.spec.params.alpha;
    let factor = a.powf(alpha + 1.0) * b.powf(alpha + 2.0);

    // transformed problem: same operator, f~(r) = factor * f(b r)
    let rhs = problem.rhs.clone();
    let scaled_problem = BvpProblem::new(
        scale_domain(&problem.domain, a, b),
        problem.spec.clone(),
        Rc::new(move |r| factor * rhs(b * r)),
    );
    let res_orig = residual(problem, &sol.u)?;
    let res_scaled = residual(&scaled_problem, &u_scaled)?;
    let err = res_orig
        .values()
        .iter()
        .zip(res_scaled.values())
        .map(|(&orig, &scaled)| (scaled - factor * orig).abs())
        .fold(0.0f64, f64::max);

    Ok(RescaledSolution {
        u: u_scaled,
        residual_factor: factor,
        residual_identity_error: err,
    })
}

fn scale_domain(domain: &Domain, a: f64, b: f64) -> Domain {
    match domain {
        Domain::Ball { radius, boundary_value } => Domain::Ball {
            radius: radius / b,
            boundary_value: a * boundary_value,
        },
        Domain::Annulus { inner, outer, inner_value, outer_value } => Domain::Annulus {
            inner: inner / b,
            outer: outer / b,
            inner_value: a * inner_value,
            outer_value: a * outer_value,
        },
    }
}

/// 2D disk problem for the wide-stencil cross-check.
#[derive(Clone)]
pub struct Planar2dProblem {
    pub radius: f64,
    pub spec: OperatorSpec,
    pub rhs: Rc<dyn Fn(f64, f64) -> f64>,
    pub boundary: Rc<dyn Fn(f64, f64) -> f64>,
}

#[derive(Debug, Clone)]
pub struct PlanarSolution {
    pub u: PlanarField,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Orthogonal lattice direction pairs for the wide stencil, by increasing
/// angular resolution.
fn stencil_pairs(directions: usize) -> Vec<((i64, i64), (i64, i64))> {
    let all = [
        ((1, 0), (0, 1)),
        ((1, 1), (1, -1)),
        ((2, 1), (1, -2)),
        ((2, -1), (1, 2)),
    ];
    let count = (directions / 2).clamp(2, 4);
    all[..count].to_vec()
}

struct PlanarScheme {
    grid: Rc<PlanarGrid>,
    spec: OperatorSpec,
    f: Vec<f64>,
    boundary: Vec<Option<f64>>,
    pairs: Vec<((i64, i64), (i64, i64))>,
}

impl PlanarScheme {
    /// Pucci value over the frozen stencil: extremal coefficient per
    /// directional second difference, extremal pair.
    fn stencil_value(&self, u: &[f64], idx: usize) -> Option<f64> {
        let h = self.grid.spacing();
        let p = &self.spec.params;
        let second_along = |e: (i64, i64)| -> Option<f64> {
            let fwd = self.grid.neighbor(idx, e.0, e.1)?;
            let bwd = self.grid.neighbor(idx, -e.0, -e.1)?;
            let len2 = (e.0 * e.0 + e.1 * e.1) as f64;
            Some((u[fwd] - 2.0 * u[idx] + u[bwd]) / (h * h * len2))
        };
        match &self.spec.kind {
            OperatorKind::PucciMinus | OperatorKind::PucciPlus => {
                let minus = matches!(self.spec.kind, OperatorKind::PucciMinus);
                let mut extremal: Option<f64> = None;
                // near the rim long stencil arms can leave the disk; fall
                // back to the pairs that fit (the axis pair always does at
                // interior nodes)
                for &(e1, e2) in &self.pairs {
                    let (Some(d1), Some(d2)) = (second_along(e1), second_along(e2)) else {
                        continue;
                    };
                    let weigh = |d: f64| {
                        if minus == (d > 0.0) {
                            p.lambda * d
                        } else {
                            p.big_lambda * d
                        }
                    };
                    let v = weigh(d1) + weigh(d2);
                    extremal = Some(match extremal {
                        None => v,
                        Some(best) if minus => best.min(v),
                        Some(best) => best.max(v),
                    });
                }
                extremal
            }
            OperatorKind::LinearTrace(a) => {
                let d1 = second_along((1, 0))?;
                let d2 = second_along((0, 1))?;
                let uxy = match (second_along((1, 1)), second_along((1, -1))) {
                    (Some(dp), Some(dm)) => (dp - dm) / 2.0,
                    // diagonal arms unavailable at the rim: drop the mixed
                    // term (consistent for diagonal coefficient matrices)
                    _ => 0.0,
                };
                let m = a.entries();
                Some(m[(0, 0)] * d1 + m[(1, 1)] * d2 + 2.0 * m[(0, 1)] * uxy)
            }
            OperatorKind::BellmanMin(family) => {
                let d1 = second_along((1, 0))?;
                let d2 = second_along((0, 1))?;
                let uxy = match (second_along((1, 1)), second_along((1, -1))) {
                    (Some(dp), Some(dm)) => (dp - dm) / 2.0,
                    _ => 0.0,
                };
                family
                    .iter()
                    .map(|a| {
                        let m = a.entries();
                        m[(0, 0)] * d1 + m[(1, 1)] * d2 + 2.0 * m[(0, 1)] * uxy
                    })
                    .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |b| b.min(v))))
            }
        }
    }

    fn weight(&self, u: &[f64], idx: usize, delta: f64) -> f64 {
        let alpha = self.spec.params.alpha;
        if alpha == 0.0 {
            return 1.0;
        }
        let h = self.grid.spacing();
        let dx = match (self.grid.neighbor(idx, 1, 0), self.grid.neighbor(idx, -1, 0)) {
            (Some(a), Some(b)) => (u[a] - u[b]) / (2.0 * h),
            _ => 0.0,
        };
        let dy = match (self.grid.neighbor(idx, 0, 1), self.grid.neighbor(idx, 0, -1)) {
            (Some(a), Some(b)) => (u[a] - u[b]) / (2.0 * h),
            _ => 0.0,
        };
        regularized_weight((dx * dx + dy * dy).sqrt(), delta, alpha)
    }

    fn residual_norm(&self, u: &[f64], delta: f64) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.grid.len() {
            if self.boundary[i].is_some() {
                continue;
            }
            if let Some(v) = self.stencil_value(u, i) {
                let w = self.weight(u, i, delta);
                worst = worst.max((w * v - self.f[i]).abs());
            }
        }
        worst
    }
}

/// Monotone wide-stencil solve on the 2D disk by nonlinear Gauss–Seidel
/// under the frozen extremal stencil.
pub fn solve_2d_wide_stencil(
    problem: &Planar2dProblem,
    config: &SolverConfig,
    directions: usize,
) -> Result<PlanarSolution, SolverError> {
    config.validate()?;
    if directions < 4 {
        return Err(SolverError::InvalidConfig(format!("directions {directions} < 4")));
    }
    let m = if config.grid_m % 2 == 0 { config.grid_m + 1 } else { config.grid_m };
    let grid = Rc::new(PlanarGrid::disk(problem.radius, m)?);
    let f: Vec<f64> = grid.nodes().iter().map(|&(x, y)| (problem.rhs)(x, y)).collect();
    let boundary: Vec<Option<f64>> = grid
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| {
            if grid.is_interior(i) {
                None
            } else {
                Some((problem.boundary)(x, y))
            }
        })
        .collect();
    let scheme = PlanarScheme {
        grid: grid.clone(),
        spec: problem.spec.clone(),
        f,
        boundary,
        pairs: stencil_pairs(directions),
    };

    let mut u: Vec<f64> = scheme
        .boundary
        .iter()
        .map(|b| b.unwrap_or(0.0))
        .collect();
    let alpha = problem.spec.params.alpha;
    let ladder: Vec<f64> = if alpha == 0.0 { vec![0.0] } else { config.delta_ladder.clone() };
    let mut iterations = 0usize;
    let mut res = f64::INFINITY;
    let h = grid.spacing();
    for &delta in &ladder {
        for _ in 0..config.max_iters {
            iterations += 1;
            // one Gauss-Seidel sweep: solve each node's frozen linear
            // relation for its own value
            for i in 0..grid.len() {
                if let Some(b) = scheme.boundary[i] {
                    u[i] = b;
                    continue;
                }
                let Some(value) = scheme.stencil_value(&u, i) else { continue };
                let w = scheme.weight(&u, i, delta);
                // local diagonal of the frozen stencil: the scheme is a sum
                // of second differences with positive coefficients, so the
                // self-coefficient follows from a unit perturbation
                let mut bumped = u[i] + 1.0;
                std::mem::swap(&mut u[i], &mut bumped);
                let value_bumped = scheme.stencil_value(&u, i).unwrap_or(value);
                std::mem::swap(&mut u[i], &mut bumped);
                let diag = (value_bumped - value).min(-1e-12 / (h * h));
                let correction = (scheme.f[i] / w - value) / diag;
                u[i] += config.damping * correction;
            }
            res = scheme.residual_norm(&u, delta);
            if res <= config.residual_tol {
                break;
            }
        }
    }
    let converged = res <= config.residual_tol;
    Ok(PlanarSolution {
        u: PlanarField::new(grid, u)?,
        residual_norm: res,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::EllipticParams;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(n: usize, lambda: f64, big_lambda: f64, alpha: f64) -> EllipticParams {
        EllipticParams::new(n, lambda, big_lambda, alpha).unwrap()
    }

    fn tight_config(m: usize) -> SolverConfig {
        SolverConfig {
            grid_m: m,
            residual_tol: 1e-10,
            delta_ladder: vec![1e-1, 1e-2, 1e-3, 1e-4, 1e-6, 1e-8],
            ..Default::default()
        }
    }

    #[test]
    fn zero_data_gives_zero_solution() {
        let p = params(2, 1.0, 2.0, 1.0);
        let problem = BvpProblem::homogeneous(
            Domain::Ball { radius: 1.0, boundary_value: 0.0 },
            OperatorSpec::pucci_minus(p),
        );
        let sol = solve_radial(&problem, &SolverConfig::default()).unwrap();
        assert!(sol.converged);
        assert!(sol.u.values().iter().all(|&v| v.abs() < 1e-9));
    }

    #[test]
    fn manufactured_quadratic_alpha_one() {
        // u*(r) = r² with Laplacian, alpha = 1: f(r) = 2r * 4 = 8r
        let p = params(2, 1.0, 1.0, 1.0);
        let problem = BvpProblem::new(
            Domain::Ball { radius: 1.0, boundary_value: 1.0 },
            OperatorSpec::laplacian(p).unwrap(),
            Rc::new(|r| 8.0 * r),
        );
        let sol = solve_radial(&problem, &tight_config(129)).unwrap();
        assert!(sol.converged, "residual {}", sol.residual_norm);
        let err = sol
            .u
            .values()
            .iter()
            .enumerate()
            .map(|(i, &v)| (v - sol.u.grid.node(i).powi(2)).abs())
            .fold(0.0f64, f64::max);
        assert!(err < 5e-4, "max error {err}");
    }

    #[test]
    fn manufactured_convergence_slope() {
        let p = params(2, 1.0, 1.0, 1.0);
        let mut errors = Vec::new();
        for m in [33usize, 65, 129, 257] {
            let problem = BvpProblem::new(
                Domain::Ball { radius: 1.0, boundary_value: 1.0 },
                OperatorSpec::laplacian(p).unwrap(),
                Rc::new(|r| 8.0 * r),
            );
            let sol = solve_radial(&problem, &tight_config(m)).unwrap();
            assert!(sol.converged);
            let err = sol
                .u
                .values()
                .iter()
                .enumerate()
                .map(|(i, &v)| (v - sol.u.grid.node(i).powi(2)).abs())
                .fold(0.0f64, f64::max);
            errors.push(err);
        }
        let slope = (errors[0] / errors[errors.len() - 1]).log2() / (errors.len() - 1) as f64;
        assert!(slope >= 1.5, "slope {slope}, errors {errors:?}");
    }

    #[test]
    fn annulus_harmonic_profile() {
        // Pucci minus with lambda = Lambda = 1 is the Laplacian; the radial
        // harmonic function on the annulus in n = 2 is M log(1/r)/log 2
        let p = params(2, 1.0, 1.0, 0.0);
        let m_height = 3.0;
        let problem = BvpProblem::homogeneous(
            Domain::Annulus { inner: 0.5, outer: 1.0, inner_value: m_height, outer_value: 0.0 },
            OperatorSpec::pucci_minus(p),
        );
        let config = SolverConfig {
            grid_m: 257,
            residual_tol: 1e-9,
            ..Default::default()
        };
        let sol = solve_radial(&problem, &config).unwrap();
        assert!(sol.converged, "residual {}", sol.residual_norm);
        let exact = |r: f64| m_height * (1.0 / r).ln() / 2f64.ln();
        let err = sol
            .u
            .values()
            .iter()
            .enumerate()
            .map(|(i, &v)| (v - exact(sol.u.grid.node(i))).abs())
            .fold(0.0f64, f64::max);
        assert!(err < 1e-4, "max error {err}");
    }

    #[test]
    fn discrete_comparison_principle() {
        let p = params(3, 1.0, 2.0, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let config = SolverConfig {
            grid_m: 65,
            residual_tol: 1e-11,
            ..Default::default()
        };
        for _ in 0..20 {
            let base: f64 = rng.gen_range(-1.0..1.0);
            let gap: f64 = rng.gen_range(0.0..1.0);
            let g1: f64 = rng.gen_range(0.0..2.0);
            let g2 = g1 - rng.gen_range(0.0..1.0);
            let p1 = BvpProblem::new(
                Domain::Ball { radius: 1.0, boundary_value: g1 },
                OperatorSpec::pucci_minus(p),
                Rc::new(move |r| base + r.cos()),
            );
            let p2 = BvpProblem::new(
                Domain::Ball { radius: 1.0, boundary_value: g2 },
                OperatorSpec::pucci_minus(p),
                Rc::new(move |r| base + r.cos() + gap),
            );
            let u1 = solve_radial(&p1, &config).unwrap();
            let u2 = solve_radial(&p2, &config).unwrap();
            assert!(u1.converged && u2.converged);
            // f1 <= f2 and g1 >= g2 => u1 >= u2
            for (a, b) in u1.u.values().iter().zip(u2.u.values()) {
                assert!(a - b >= -1e-10, "comparison violated: {a} < {b}");
            }
        }
    }

    #[test]
    fn flame_reduces_to_plain_when_beta_zero() {
        let p = params(2, 1.0, 1.0, 0.0);
        let problem = BvpProblem::new(
            Domain::Ball { radius: 1.0, boundary_value: 1.0 },
            OperatorSpec::laplacian(p).unwrap(),
            Rc::new(|r| 4.0 + 0.0 * r),
        );
        let reaction = FlameReaction::new(Rc::new(|_| 0.0), 0.125).unwrap();
        let config = tight_config(129);
        let plain = solve_radial(&problem, &config).unwrap();
        let flame = solve_flame(&problem, &reaction, &config, None).unwrap();
        assert!(flame.converged);
        for (a, b) in plain.u.values().iter().zip(flame.u.values()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn flame_transition_layer_shrinks_with_epsilon() {
        // positive forcing drives the solution through the reaction band
        // transversally, so the band {0 < u < eps} is a genuine layer
        let p = params(2, 1.0, 1.0, 0.0);
        let problem = BvpProblem::new(
            Domain::Ball { radius: 1.0, boundary_value: 1.0 },
            OperatorSpec::laplacian(p).unwrap(),
            Rc::new(|_| 6.0),
        );
        let config = SolverConfig {
            grid_m: 513,
            residual_tol: 1e-8,
            max_iters: 400,
            ..Default::default()
        };
        let mut widths = Vec::new();
        let mut warm: Option<RadialField> = None;
        for eps in [0.125, 0.0625, 0.03125] {
            let reaction = FlameReaction::new(FlameReaction::default_profile(), eps).unwrap();
            let sol = solve_flame(&problem, &reaction, &config, warm.as_ref()).unwrap();
            assert!(sol.converged, "eps {eps}: residual {}", sol.residual_norm);
            // layer: radius interval where 0 < u < eps
            let h = sol.u.grid.spacing();
            let width = sol
                .u
                .values()
                .iter()
                .filter(|&&v| v > 0.0 && v < eps)
                .count() as f64
                * h;
            widths.push(width);
            warm = Some(sol.u.clone());
        }
        assert!(widths[2] < widths[0], "widths {widths:?}");
    }

    #[test]
    fn rescale_identity_and_residual_factor() {
        let p = params(2, 1.0, 2.0, 1.0);
        let problem = BvpProblem::new(
            Domain::Ball { radius: 1.0, boundary_value: 1.0 },
            OperatorSpec::pucci_minus(p),
            Rc::new(|r| -1.0 - r * r),
        );
        let sol = solve_radial(&problem, &SolverConfig { grid_m: 65, ..Default::default() }).unwrap();
        let identity = rescale_solution(&problem, &sol, 1.0, 1.0).unwrap();
        assert_eq!(identity.u.values(), sol.u.values());
        assert_eq!(identity.residual_factor, 1.0);

        let scaled = rescale_solution(&problem, &sol, 0.5, 2.0).unwrap();
        // a = 1/b: factor = a^{alpha+1} b^{alpha+2} = b = 2
        assert_relative_eq!(scaled.residual_factor, 2.0, epsilon = 1e-12);
        assert!(scaled.residual_identity_error < 1e-10, "err {}", scaled.residual_identity_error);
    }

    #[test]
    fn residual_of_exact_pair_near_zero() {
        let p = params(2, 1.0, 1.0, 0.0);
        let problem = BvpProblem::new(
            Domain::Ball { radius: 1.0, boundary_value: 1.0 },
            OperatorSpec::laplacian(p).unwrap(),
            Rc::new(|_| 4.0),
        );
        let grid = RadialGrid::ball(1.0, 101, 2).unwrap();
        let u = RadialField::from_fn(grid, |r| r * r).unwrap();
        let res = residual(&problem, &u).unwrap();
        for &v in &res.values()[..100] {
            assert!(v.abs() < 1e-8, "residual {v}");
        }
    }

    #[test]
    fn wide_stencil_zero_data() {
        let p = params(2, 1.0, 2.0, 0.0);
        let problem = Planar2dProblem {
            radius: 1.0,
            spec: OperatorSpec::pucci_minus(p),
            rhs: Rc::new(|_, _| 0.0),
            boundary: Rc::new(|_, _| 0.0),
        };
        let sol = solve_2d_wide_stencil(&problem, &SolverConfig { grid_m: 33, ..Default::default() }, 8).unwrap();
        assert!(sol.converged);
        assert!(sol.u.values().iter().all(|&v| v.abs() < 1e-8));
    }

    #[test]
    fn wide_stencil_manufactured_quadratic() {
        let p = params(2, 1.0, 1.0, 0.0);
        let problem = Planar2dProblem {
            radius: 1.0,
            spec: OperatorSpec::laplacian(p).unwrap(),
            rhs: Rc::new(|_, _| 4.0),
            boundary: Rc::new(|x, y| x * x + y * y),
        };
        let config = SolverConfig {
            grid_m: 33,
            residual_tol: 1e-9,
            max_iters: 3000,
            ..Default::default()
        };
        let sol = solve_2d_wide_stencil(&problem, &config, 8).unwrap();
        assert!(sol.converged, "residual {}", sol.residual_norm);
        let err = sol
            .u
            .values()
            .iter()
            .zip(sol.u.grid.nodes())
            .map(|(&v, &(x, y))| (v - (x * x + y * y)).abs())
            .fold(0.0f64, f64::max);
        assert!(err < 5e-2, "max error {err}");
    }

    #[test]
    fn wide_stencil_cross_checks_radial() {
        let p = params(2, 1.0, 2.0, 0.0);
        let radial_problem = BvpProblem::new(
            Domain::Ball { radius: 1.0, boundary_value: 1.0 },
            OperatorSpec::pucci_minus(p),
            Rc::new(|_| -2.0),
        );
        let radial = solve_radial(&radial_problem, &tight_config(257)).unwrap();
        assert!(radial.converged);
        let planar_problem = Planar2dProblem {
            radius: 1.0,
            spec: OperatorSpec::pucci_minus(p),
            rhs: Rc::new(|_, _| -2.0),
            boundary: Rc::new(|_, _| 1.0),
        };
        let config = SolverConfig {
            grid_m: 41,
            residual_tol: 1e-6,
            max_iters: 20000,
            ..Default::default()
        };
        let planar = solve_2d_wide_stencil(&planar_problem, &config, 8).unwrap();
        assert!(planar.converged, "residual {}", planar.residual_norm);
        let err = planar
            .u
            .values()
            .iter()
            .zip(planar.u.grid.nodes())
            .map(|(&v, &(x, y))| {
                let r = (x * x + y * y).sqrt();
                (v - radial.u.interpolate(r)).abs()
            })
            .fold(0.0f64, f64::max);
        assert!(err < 5e-2, "cross-check discrepancy {err}");
    }

    #[test]
    fn config_validation() {
        let mut c = SolverConfig::default();
        c.delta_ladder = vec![1e-2, 1e-1];
        assert!(matches!(
            solve_radial(
                &BvpProblem::homogeneous(
                    Domain::Ball { radius: 1.0, boundary_value: 0.0 },
                    OperatorSpec::pucci_minus(params(2, 1.0, 1.0, 1.0)),
                ),
                &c
            ),
            Err(SolverError::InvalidConfig(_))
        ));
    }
}
