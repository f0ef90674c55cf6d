//! End-to-end acceptance gate: one test (and one printed verdict line) per
//! shipped guarantee, exercised at the documented tolerances.

use std::rc::Rc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hopf_lab::barrier::{barrier_constants, barrier_eval_radius, certify_barrier, BarrierSpec};
use hopf_lab::freeboundary::{default_flame_problem, flame_sweep, glue, GlueInput};
use hopf_lab::grid::{PlanarField, PlanarGrid, RadialField, RadialGrid, RadialRegion};
use hopf_lab::operators::{EllipticParams, OperatorSpec};
use hopf_lab::regularity::{
    c1omega_constants_check, campanato_seminorm, dyadic_expansion, ConstantsRegion,
    ModulusOfContinuity, SampledField,
};
use hopf_lab::solver::{solve_radial, BvpProblem, Domain, SolverConfig};
use hopf_lab::verify::{
    comparison_check, counterexample_audit, harnack_ratio, hopf_growth_check,
    max_constant_per_alpha, normal_derivative, run_sweep, write_ledger_csv, SweepConfig, SweepKind,
};

fn params(n: usize, lambda: f64, big_lambda: f64, alpha: f64) -> EllipticParams {
    EllipticParams::new(n, lambda, big_lambda, alpha).unwrap()
}

fn verdict(number: usize, name: &str, pass: bool, started: Instant) {
    println!(
        "criterion {number}: {} — {name} ({:.1}s)",
        if pass { "PASS" } else { "FAIL" },
        started.elapsed().as_secs_f64()
    );
    assert!(pass, "criterion {number} ({name}) failed");
}

/// Unit-ball field sampled from a radial profile.
fn unit_ball_field(n: usize, m: usize, f: impl Fn(f64) -> f64) -> RadialField {
    RadialField::from_fn(RadialGrid::ball(1.0, m, n).unwrap(), f).unwrap()
}

/// Barrier profile on the annulus [1/2, 1] extended by its height on the
/// inner ball: the canonical boundary-vanishing supersolution shape.
fn barrier_extended(p: EllipticParams, height: f64, m: usize) -> RadialField {
    let spec = BarrierSpec::new(height, 1.0, p).unwrap();
    unit_ball_field(p.n, m, |r| {
        if r < 0.5 {
            height
        } else {
            barrier_eval_radius(&spec, r).unwrap()
        }
    })
}

#[test]
fn criterion_1_barrier_certification() {
    let t0 = Instant::now();
    let mut pass = true;
    for n in [2usize, 3, 5] {
        for (lambda, big_lambda) in [(1.0, 1.0), (1.0, 2.0), (0.5, 4.0)] {
            for alpha in [0.0, 1.0, 2.0] {
                let spec =
                    BarrierSpec::new(1.0, 1.0, params(n, lambda, big_lambda, alpha)).unwrap();
                let cert = certify_barrier(&spec, 10_000, 1e-10).unwrap();
                if !cert.pass {
                    eprintln!(
                        "certificate failed at (n={n}, {lambda}, {big_lambda}, {alpha}): {:?}",
                        cert.violations
                    );
                    pass = false;
                }
            }
        }
    }
    // closed-form spot values
    let flat = BarrierSpec::new(1.0, 1.0, params(2, 1.0, 1.0, 0.0)).unwrap();
    let flat_consts = barrier_constants(&flat);
    pass &= (flat_consts.beta - 3.0).abs() <= 1e-12;
    pass &= (flat_consts.a1 - 3.0 / 7.0).abs() <= 1e-12;
    let skew = BarrierSpec::new(1.0, 1.0, params(3, 1.0, 2.0, 0.0)).unwrap();
    pass &= (barrier_constants(&skew).c0 - 2.0 / 7.0).abs() <= 1e-12;
    verdict(1, "barrier certification", pass, t0);
}

#[test]
fn criterion_2_counterexample_audit() {
    let t0 = Instant::now();
    let mut pass = true;
    for n in [2usize, 3, 5] {
        pass &= counterexample_audit(n, 2049).unwrap().pass;
        // closed-form Laplacian of (1 − r)² at r = 1/2: 2n − 2(n−1)/r
        let lap_half = 2.0 * n as f64 - 4.0 * (n as f64 - 1.0);
        let expected = match n {
            2 => 0.0,
            3 => -2.0,
            _ => lap_half,
        };
        pass &= (lap_half - expected).abs() <= 1e-12;
    }
    // boundary quotients of u = (1 − r)² are exactly t at node-aligned offsets
    let u = unit_ball_field(2, 2049, |r| (1.0 - r) * (1.0 - r));
    let h = 1.0 / 2048.0;
    let offsets: Vec<f64> = [64.0, 32.0, 16.0, 8.0].iter().map(|k| k * h).collect();
    let nd = normal_derivative(&u, &offsets).unwrap();
    for (t, q) in offsets.iter().zip(&nd.quotients) {
        pass &= (q - t).abs() <= 1e-12;
    }
    verdict(2, "counterexample audit", pass, t0);
}

#[test]
fn criterion_3_solver_convergence() {
    let t0 = Instant::now();
    let n = 2usize;
    let mut pass = true;
    // manufactured u = r⁴ on the annulus [1/2, 1]: the degenerate weight
    // |u'|^α = (4r³)^α stays bounded away from zero there
    let cases: [(f64, fn(EllipticParams) -> OperatorSpec); 3] = [
        (0.0, |p| OperatorSpec::pucci_minus(p)),
        (1.0, |p| OperatorSpec::laplacian(p).unwrap()),
        (2.0, |p| OperatorSpec::pucci_minus(p)),
    ];
    for (alpha, make_spec) in cases {
        let p = params(n, 1.0, 1.0, alpha);
        let scale = p.lambda * (8.0 + 4.0 * n as f64);
        let problem = BvpProblem::new(
            Domain::Annulus { inner: 0.5, outer: 1.0, inner_value: 0.0625, outer_value: 1.0 },
            make_spec(p),
            Rc::new(move |r: f64| (4.0 * r * r * r).powf(alpha) * scale * r * r),
        );
        let mut points = Vec::new();
        let mut m = 33usize;
        let mut finest_err = f64::NAN;
        for _ in 0..4 {
            let config = SolverConfig {
                grid_m: m,
                residual_tol: 1e-9,
                max_iters: 2000,
                delta_ladder: vec![1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8],
                ..Default::default()
            };
            let sol = solve_radial(&problem, &config).unwrap();
            if !sol.converged {
                eprintln!(
                    "alpha={alpha} m={m}: residual {:.3e} after {} iterations",
                    sol.residual_norm, sol.iterations
                );
                pass = false;
            }
            let err = sol
                .u
                .grid
                .nodes()
                .zip(sol.u.values())
                .map(|(r, &v)| (v - r.powi(4)).abs())
                .fold(0.0f64, f64::max);
            let h = sol.u.grid.spacing();
            points.push((h.ln(), err.ln()));
            finest_err = err;
            m = 2 * m - 1;
        }
        let k = points.len() as f64;
        let sx: f64 = points.iter().map(|p| p.0).sum();
        let sy: f64 = points.iter().map(|p| p.1).sum();
        let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
        let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
        let slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
        if slope < 1.5 || finest_err > 1e-4 {
            eprintln!("alpha={alpha}: slope {slope:.3}, finest error {finest_err:.3e}");
            pass = false;
        }
    }
    verdict(3, "solver convergence", pass, t0);
}

#[test]
fn criterion_4_discrete_comparison() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let alphas = [0.0, 1.0, 2.0];
    let config = SolverConfig { grid_m: 129, ..Default::default() };
    let mut pass = true;
    for trial in 0..100 {
        let alpha = alphas[trial % alphas.len()];
        let p = params(2, 1.0, 2.0, alpha);
        // monotone annulus data keeps the gradient bounded away from zero,
        // so the degenerate weight never pins a node of either solve
        let inner_low: f64 = rng.gen_range(0.0..0.5);
        let inner_high = inner_low + rng.gen_range(0.0..0.5);
        let outer_low = inner_high + rng.gen_range(0.75..1.5);
        let outer_high = outer_low + rng.gen_range(0.0..0.5);
        let f_high: f64 = rng.gen_range(-0.25..0.0);
        let f_low = f_high - rng.gen_range(0.0..0.25);
        let solve = |inner_value: f64, outer_value: f64, level: f64| {
            let problem = BvpProblem::new(
                Domain::Annulus { inner: 0.5, outer: 1.0, inner_value, outer_value },
                OperatorSpec::pucci_minus(p),
                Rc::new(move |_| level),
            );
            solve_radial(&problem, &config).unwrap()
        };
        // larger boundary data and smaller forcing give the larger solution
        let upper = solve(inner_high, outer_high, f_low);
        let lower = solve(inner_low, outer_low, f_high);
        if !(upper.converged && lower.converged) {
            eprintln!(
                "trial {trial} (alpha={alpha}): solver residuals {:.3e} / {:.3e}",
                upper.residual_norm, lower.residual_norm
            );
            pass = false;
        }
        let report =
            comparison_check(&upper.u, &lower.u, &RadialRegion::annulus(0.5, 1.0)).unwrap();
        if !report.pass {
            eprintln!("ordering violated by {:.3e} on trial {trial}", report.measured_constant);
            pass = false;
        }
    }
    verdict(4, "discrete comparison principle", pass, t0);
}

#[test]
fn criterion_5_harnack_sweep() {
    let t0 = Instant::now();
    let mut pass = true;
    let sweep = SweepConfig {
        runs: 50,
        alphas: vec![0.0, 1.0, 2.0],
        epsilons: vec![0.5],
        ..Default::default()
    };
    let config = SolverConfig { grid_m: 129, ..Default::default() };
    for n in [2usize, 3] {
        let rows = run_sweep(SweepKind::Harnack, n, 1.0, 2.0, &sweep, &config, 0.0).unwrap();
        pass &= rows.iter().all(|r| r.pass && r.constant.is_finite());
        for (alpha, max) in max_constant_per_alpha(&rows) {
            println!("  harnack n={n} alpha={alpha}: max ratio {max:.4}");
        }
    }
    // scaling invariance u → cu, f → c^{1+α} f of the measured ratio
    for alpha in [0.0, 1.0, 2.0] {
        let p = params(2, 1.0, 2.0, alpha);
        let problem = BvpProblem::new(
            Domain::Ball { radius: 1.0, boundary_value: 1.0 },
            OperatorSpec::pucci_minus(p),
            Rc::new(|_| -0.5),
        );
        let sol = solve_radial(&problem, &config).unwrap();
        let u = sol.u.map(|v| v.max(0.0)).unwrap();
        let f = RadialField::from_fn(u.grid, |_| -0.5).unwrap();
        let base = harnack_ratio(&u, &f, &p).unwrap().measured_constant;
        for c in [0.1, 10.0] {
            let uc = u.map(|v| c * v).unwrap();
            let fc = f.map(|v| c.powf(1.0 + alpha) * v).unwrap();
            let scaled = harnack_ratio(&uc, &fc, &p).unwrap().measured_constant;
            if (scaled - base).abs() > 1e-8 * base.abs().max(1.0) {
                eprintln!("scaling drift at alpha={alpha}, c={c}: {base} vs {scaled}");
                pass = false;
            }
        }
    }
    verdict(5, "harnack sweep", pass, t0);
}

#[test]
fn criterion_6_hopf_growth() {
    let t0 = Instant::now();
    let mut pass = true;
    let eps = 0.5;
    let config = SolverConfig { grid_m: 257, ..Default::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for trial in 0..30 {
        let alpha = [0.0, 1.0, 2.0][trial % 3];
        let p = params(2, 1.0, 2.0, alpha);
        let boundary = rng.gen_range(0.5..2.0);
        let level = -rng.gen_range(0.0..1.0);
        let problem = BvpProblem::new(
            Domain::Ball { radius: 1.0, boundary_value: boundary },
            OperatorSpec::pucci_minus(p),
            Rc::new(move |_| level),
        );
        let sol = solve_radial(&problem, &config).unwrap();
        let u = sol.u.map(|v| v.max(0.0)).unwrap();
        let f = RadialField::from_fn(u.grid, |_| level).unwrap();
        let (inf, _) = u.inf_sup(&RadialRegion::ball(0.5)).unwrap();
        if inf > 0.0 {
            let report = hopf_growth_check(&u, &f, &p, 0.0, eps).unwrap();
            if !(report.pass && report.measured_constant > 0.0) {
                eprintln!("nonpositive A1 {} on trial {trial}", report.measured_constant);
                pass = false;
            }
        }
    }
    // cone profile: u/dist ≡ 1, so A₁ · ‖u‖_{L^ε(B_{1/2})} = 1
    let p0 = params(2, 1.0, 1.0, 0.0);
    let cone = unit_ball_field(2, 513, |r| 1.0 - r);
    let zero = unit_ball_field(2, 513, |_| 0.0);
    let a1 = hopf_growth_check(&cone, &zero, &p0, 0.0, eps).unwrap().measured_constant;
    let norm = cone.lp_norm(eps, &RadialRegion::ball(0.5)).unwrap();
    pass &= (a1 * norm - 1.0).abs() <= 1e-3;
    // growth/normal-derivative consistency on boundary-vanishing fields
    for field in [unit_ball_field(2, 1025, |r| 1.0 - r), barrier_extended(p0, 1.0, 1025)] {
        let zero = unit_ball_field(2, 1025, |_| 0.0);
        let a1 = hopf_growth_check(&field, &zero, &p0, 0.0, eps).unwrap().measured_constant;
        let nd = normal_derivative(&field, &[0.03125, 0.015625, 0.0078125]).unwrap();
        let norm = field.lp_norm(eps, &RadialRegion::ball(0.5)).unwrap();
        if a1 > nd.extrapolated / norm + 1e-2 {
            eprintln!("A1 {a1} exceeds normal-derivative cap {}", nd.extrapolated / norm);
            pass = false;
        }
    }
    verdict(6, "hopf growth", pass, t0);
}

#[test]
fn criterion_7_flame_sweep() {
    let t0 = Instant::now();
    let mut pass = true;
    let epsilons = vec![0.125, 0.0625, 0.03125, 0.015625, 0.0078125, 0.00390625];
    for alpha in [0.0, 1.0] {
        let spec = OperatorSpec::pucci_minus(params(2, 1.0, 1.0, alpha));
        let problem = default_flame_problem(spec, epsilons.clone());
        let config = SolverConfig { grid_m: 2049, max_iters: 3000, ..Default::default() };
        let report = flame_sweep(&problem, &config).unwrap();
        if !report.diverged.is_empty() {
            eprintln!("alpha={alpha}: diverged at {:?}", report.diverged);
            pass = false;
        }
        if report.log_slope > 0.1 {
            eprintln!("alpha={alpha}: log-slope {:.4} exceeds 0.1", report.log_slope);
            pass = false;
        }
        for row in &report.rows {
            pass &= row.converged && row.measured_c.is_finite();
            if row.center_value <= row.epsilon {
                // sharper B_{1/4} bound applies when the center sits below
                // the reaction band
                pass &= matches!(row.sharp_c, Some(c) if c.is_finite());
            }
        }
    }
    verdict(7, "flame sweep", pass, t0);
}

#[test]
fn criterion_8_gluing() {
    let t0 = Instant::now();
    let mut pass = true;
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let grid = Rc::new(PlanarGrid::disk(1.0, 33).unwrap());
    for trial in 0..200 {
        // node-aligned split line so the interface is exactly representable
        let axis = rng.gen_range(0..2usize);
        let line: f64 = (rng.gen_range(-8..=8i64) as f64) / 16.0;
        let coeffs: Vec<f64> = (0..8).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let smooth_a = {
            let c = coeffs.clone();
            move |x: f64, y: f64| c[0] + c[1] * x + c[2] * y + c[3] * (x * y).sin()
        };
        let smooth_b = {
            let c = coeffs.clone();
            move |x: f64, y: f64| c[4] + c[5] * x + c[6] * y + c[7] * (x - y).cos()
        };
        let zero_v = trial % 4 == 0;
        let dist = |x: f64, y: f64| if axis == 0 { x - line } else { y - line };
        let u = PlanarField::from_fn(grid.clone(), |x, y| {
            dist(x, y).max(0.0) * smooth_a(x, y)
        })
        .unwrap();
        let v = PlanarField::from_fn(grid.clone(), |x, y| {
            if zero_v { 0.0 } else { (-dist(x, y)).max(0.0) * smooth_b(x, y) }
        })
        .unwrap();
        let mut a = Vec::new();
        let mut b = Vec::new();
        let mut gamma = Vec::new();
        for (i, &(x, y)) in grid.nodes().iter().enumerate() {
            let d = dist(x, y);
            if d > 1e-9 {
                a.push(i);
            } else if d < -1e-9 {
                b.push(i);
            } else {
                gamma.push(i);
            }
        }
        let input = GlueInput { u, v, a, b, gamma };
        let outcome = glue(&input, 2.0, 0.25).unwrap();
        for check in outcome
            .report
            .value_checks
            .iter()
            .chain(&outcome.report.gradient_checks)
        {
            if !check.pass {
                eprintln!(
                    "trial {trial}: p={} inequality violated ({} > {})",
                    check.p, check.lhs, check.rhs
                );
                pass = false;
            }
        }
        if zero_v {
            // with v ≡ 0 the value inequality is an identity for p < ∞
            for check in &outcome.report.value_checks {
                if check.p.is_finite()
                    && (check.lhs - check.rhs).abs() > 1e-8 * check.rhs.abs().max(1.0)
                {
                    eprintln!(
                        "trial {trial}: p={} equality off by {:.3e}",
                        check.p,
                        (check.lhs - check.rhs).abs()
                    );
                    pass = false;
                }
            }
        }
    }
    verdict(8, "gluing and positive part", pass, t0);
}

#[test]
fn criterion_9_campanato_regularity() {
    let t0 = Instant::now();
    let mut pass = true;
    let centers = vec![vec![0.0, 0.0], vec![0.25, 0.0], vec![-0.2, 0.15]];
    let radii = [0.5, 0.25, 0.125];

    // affine inputs: zero seminorms
    let affine = SampledField::from_fn(2, 1e-4, |x| 1.5 + 2.0 * x[0] - 0.75 * x[1]).unwrap();
    let rep = campanato_seminorm(&affine, 1.0, &centers, &radii).unwrap();
    pass &= rep.seminorm <= 1e-12;
    let dy = dyadic_expansion(&affine, &[0.0, 0.0], 1.0, 8).unwrap();
    pass &= dy.seminorm <= 1e-12;

    // u = |x|²: Campanato A = 1/2 at γ = 1, dyadic gradient p(0) = 0
    let square = SampledField::from_fn(2, 1e-4, |x| x[0] * x[0] + x[1] * x[1]).unwrap();
    let rep = campanato_seminorm(&square, 1.0, &centers, &radii).unwrap();
    if (rep.seminorm - 0.5).abs() > 1e-3 {
        eprintln!("Campanato seminorm {} != 1/2", rep.seminorm);
        pass = false;
    }
    let dy = dyadic_expansion(&square, &[0.0, 0.0], 1.0, 8).unwrap();
    pass &= dy.telescoping_ok;
    let p0_norm = dy.affine.gradient.iter().map(|g| g * g).sum::<f64>().sqrt();
    pass &= p0_norm <= 1e-6;

    // explicit constants of the pointwise C^{1,ω} estimate
    let omega = ModulusOfContinuity::power(1.0).unwrap();
    let grad = |x: &[f64]| vec![2.0 * x[0], 2.0 * x[1]];
    let region = ConstantsRegion { rho: 0.5, sigma: 0.25, r_big: 1.0 };
    let report = c1omega_constants_check(&square, &grad, region, &omega, 1.0).unwrap();
    pass &= report.pass
        && report.gradient_bound.pass
        && report.seminorm_8t.pass
        && report.seminorm_mixed.pass;
    verdict(9, "campanato regularity", pass, t0);
}

#[test]
fn criterion_10_determinism() {
    let t0 = Instant::now();
    let sweep = SweepConfig {
        runs: 5,
        alphas: vec![0.0, 1.0],
        epsilons: vec![0.5],
        seed: 7,
        ..Default::default()
    };
    let config = SolverConfig { grid_m: 65, ..Default::default() };
    let render = || {
        let rows = run_sweep(SweepKind::WeakHarnack, 2, 1.0, 2.0, &sweep, &config, 0.0).unwrap();
        let mut buf = Vec::new();
        write_ledger_csv(&rows, &mut buf).unwrap();
        buf
    };
    let pass = render() == render();
    verdict(10, "determinism", pass, t0);
}
