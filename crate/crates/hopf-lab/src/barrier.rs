//! The explicit annular barrier `Γ_{M,R}(x) = M·((|x|/R)^{−β} − 1)/(2^β − 1)`
//! with `β = (n−1)Λ/λ + 2`, together with its closed-form gradient, its
//! geometric constants and a deterministic pointwise certification of the
//! differential inequality and the sandwich bounds.

use crate::operators::{radial_pucci, EllipticParams, PucciSign};
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BarrierError {
    #[error("point at radius {0} lies outside the closed annulus [{1}, {2}]")]
    OutsideAnnulus(f64, f64, f64),
    #[error("invalid barrier spec: {0}")]
    InvalidSpec(String),
}

/// Height `M` on the inner sphere, outer radius `R`, elliptic parameters.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BarrierSpec {
    #[serde(rename = "M")]
    pub height: f64,
    #[serde(rename = "R")]
    pub outer_radius: f64,
    pub params: EllipticParams,
}

impl BarrierSpec {
    pub fn new(height: f64, outer_radius: f64, params: EllipticParams) -> Result<Self, BarrierError> {
        if !(height >= 0.0) {
            return Err(BarrierError::InvalidSpec(format!("M = {height} < 0")));
        }
        if !(outer_radius > 0.0) {
            return Err(BarrierError::InvalidSpec(format!("R = {outer_radius} <= 0")));
        }
        Ok(Self {
            height,
            outer_radius,
            params,
        })
    }

    /// Barrier exponent `β = (n−1)Λ/λ + 2 > 1`.
    pub fn beta(&self) -> f64 {
        (self.params.n - 1) as f64 * self.params.big_lambda / self.params.lambda + 2.0
    }

    fn check_radius(&self, r: f64) -> Result<(), BarrierError> {
        let lo = self.outer_radius / 2.0;
        let hi = self.outer_radius;
        let slack = 1e-9 * self.outer_radius;
        if r < lo - slack || r > hi + slack {
            return Err(BarrierError::OutsideAnnulus(r, lo, hi));
        }
        Ok(())
    }
}

/// Normalized radial profile `φ(t) = (t^{−β} − 1)/(2^β − 1)` on `[1/2, 1]`.
fn profile(t: f64, beta: f64) -> f64 {
    (t.powf(-beta) - 1.0) / (2f64.powf(beta) - 1.0)
}

fn profile_deriv(t: f64, beta: f64) -> f64 {
    -beta / (2f64.powf(beta) - 1.0) * t.powf(-(beta + 1.0))
}

fn profile_second(t: f64, beta: f64) -> f64 {
    beta * (beta + 1.0) / (2f64.powf(beta) - 1.0) * t.powf(-(beta + 2.0))
}

/// Barrier value at a point of the closed annulus `R/2 ≤ |x| ≤ R`.
pub fn barrier_eval(spec: &BarrierSpec, x: &[f64]) -> Result<f64, BarrierError> {
    barrier_eval_radius(spec, norm(x))
}

/// Barrier value as a function of the radius alone.
pub fn barrier_eval_radius(spec: &BarrierSpec, r: f64) -> Result<f64, BarrierError> {
    spec.check_radius(r)?;
    let t = (r / spec.outer_radius).clamp(0.5, 1.0);
    Ok(spec.height * profile(t, spec.beta()))
}

/// Closed-form gradient magnitude `(M/R)·β/(2^β−1)·(|x|/R)^{−(β+1)}`.
pub fn barrier_grad_norm(spec: &BarrierSpec, x: &[f64]) -> Result<f64, BarrierError> {
    barrier_grad_norm_radius(spec, norm(x))
}

pub fn barrier_grad_norm_radius(spec: &BarrierSpec, r: f64) -> Result<f64, BarrierError> {
    spec.check_radius(r)?;
    let t = (r / spec.outer_radius).clamp(0.5, 1.0);
    Ok(spec.height / spec.outer_radius * (-profile_deriv(t, spec.beta())))
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Geometric and differential constants of the barrier.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BarrierConstants {
    pub beta: f64,
    /// Differential-inequality constant; uses the annulus-wide minimum of the
    /// `|x|^{−…}` factors, attained at `|x| = R`.
    pub c0: f64,
    #[serde(rename = "A1")]
    pub a1: f64,
    #[serde(rename = "A2")]
    pub a2: f64,
    #[serde(rename = "A3")]
    pub a3: f64,
    #[serde(rename = "A4")]
    pub a4: f64,
}

/// Evaluates the explicit constants `c₀, A₁..A₄` for the given spec.
pub fn barrier_constants(spec: &BarrierSpec) -> BarrierConstants {
    let p = &spec.params;
    let beta = spec.beta();
    let denom = 2f64.powf(beta) - 1.0;
    let slope = beta / denom;
    // (β+1)λ − (n−1)Λ = 3λ under β = (n−1)Λ/λ + 2.
    let gap = (beta + 1.0) * p.lambda - (p.n - 1) as f64 * p.big_lambda;
    let pucci_lower = slope * gap;
    let c0 = slope.powf(p.alpha) * pucci_lower;
    BarrierConstants {
        beta,
        c0,
        a1: slope,
        a2: beta * 2f64.powf(beta + 1.0) / denom,
        a3: slope,
        a4: beta * 2f64.powf(beta + 1.0) / denom,
    }
}

/// Pointwise certificate: constants, per-property worst margins and the
/// deterministic sample count.
#[derive(Debug, Clone, Serialize)]
pub struct BarrierCertificate {
    pub n: usize,
    pub lambda: f64,
    #[serde(rename = "Lambda")]
    pub big_lambda: f64,
    pub alpha: f64,
    #[serde(rename = "M")]
    pub height: f64,
    #[serde(rename = "R")]
    pub outer_radius: f64,
    pub beta: f64,
    pub c0: f64,
    #[serde(rename = "A1")]
    pub a1: f64,
    #[serde(rename = "A2")]
    pub a2: f64,
    #[serde(rename = "A3")]
    pub a3: f64,
    #[serde(rename = "A4")]
    pub a4: f64,
    /// Minimal slack per certified property; nonnegative up to the tolerance
    /// on pass.
    pub margins: BTreeMap<String, f64>,
    pub samples: usize,
    pub tol: f64,
    pub pass: bool,
    /// Violated properties with their witness radius, empty on pass.
    pub violations: Vec<String>,
}

/// Certifies, over a deterministic tensor grid of annulus points plus the two
/// boundary spheres, the degenerate Pucci inequality, both sandwich bounds on
/// the value, both gradient bounds, and the exact boundary values.
pub fn certify_barrier(
    spec: &BarrierSpec,
    samples: usize,
    tol: f64,
) -> Result<BarrierCertificate, BarrierError> {
    let p = &spec.params;
    let consts = barrier_constants(spec);
    let (m_h, r_out) = (spec.height, spec.outer_radius);
    let beta = consts.beta;

    let n_radii = ((samples.max(1) as f64).sqrt().ceil() as usize).max(2);
    let n_angles = samples.max(1).div_ceil(n_radii);
    // The barrier is radial: every certified quantity depends on |x| only, so
    // the angular factor of the tensor grid multiplies the sample count
    // without changing the margins.
    let total_samples = n_radii * n_angles + 2;

    let mut margins: BTreeMap<String, f64> = BTreeMap::new();
    let mut record = |name: &str, value: f64| {
        let entry = margins.entry(name.to_string()).or_insert(f64::INFINITY);
        if value < *entry {
            *entry = value;
        }
    };
    let mut violations = Vec::new();

    let rhs = consts.c0 * m_h.powf(1.0 + p.alpha) / r_out.powf(2.0 + p.alpha);
    let scale = if m_h > 0.0 { m_h } else { 1.0 };

    for i in 0..n_radii {
        let t = 0.5 + 0.5 * i as f64 / (n_radii - 1) as f64;
        let r = t * r_out;
        let value = m_h * profile(t, beta);
        let grad = m_h / r_out * (-profile_deriv(t, beta));
        let second = m_h / (r_out * r_out) * profile_second(t, beta);
        let first_over_r = m_h / (r_out * r_out) * profile_deriv(t, beta) / t;
        let weight = if p.alpha == 0.0 { 1.0 } else { grad.powf(p.alpha) };
        let lhs = weight * radial_pucci(second, first_over_r, p, PucciSign::Minus);
        let dist = r_out - r;

        let checks = [
            ("pucci", lhs - rhs),
            ("growth_lower", value - consts.a1 * m_h / r_out * dist),
            ("growth_upper", consts.a2 * m_h / r_out * dist - value),
            ("grad_lower", grad - consts.a3 * m_h / r_out),
            ("grad_upper", consts.a4 * m_h / r_out - grad),
        ];
        for (name, margin) in checks {
            record(name, margin);
            if margin < -tol * scale.max(1.0) {
                violations.push(format!("{name} violated by {:.3e} at r = {r}", -margin));
            }
        }
    }

    // Boundary spheres: exact values.
    let outer = m_h * profile(1.0, beta);
    let inner = m_h * profile(0.5, beta);
    let bound_tol = 1e-14 * scale;
    record("boundary_outer", bound_tol - outer.abs());
    record("boundary_inner", bound_tol - (inner - m_h).abs());
    if outer.abs() > bound_tol {
        violations.push(format!("boundary_outer off by {:.3e}", outer.abs()));
    }
    if (inner - m_h).abs() > bound_tol {
        violations.push(format!("boundary_inner off by {:.3e}", (inner - m_h).abs()));
    }

    let pass = violations.is_empty();
    Ok(BarrierCertificate {
        n: p.n,
        lambda: p.lambda,
        big_lambda: p.big_lambda,
        alpha: p.alpha,
        height: m_h,
        outer_radius: r_out,
        beta,
        c0: consts.c0,
        a1: consts.a1,
        a2: consts.a2,
        a3: consts.a3,
        a4: consts.a4,
        margins,
        samples: total_samples,
        tol,
        pass,
        violations,
    })
}
