//! Radial and 2D Cartesian grids with sampled scalar fields, quadrature
//! (including the `L^ε` quasi-norm with the surface-measure weight),
//! second-order difference operators and distance-to-boundary fields.

use serde::Serialize;
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("value length {got} does not match grid node count {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("region contains no grid nodes")]
    EmptyRegion,
    #[error("non-finite value at node {0}")]
    NonFinite(usize),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Surface area of the unit sphere `S^{n−1}` in `R^n`.
pub fn sphere_area(n: usize) -> f64 {
    // 2 π^{n/2} / Γ(n/2), with Γ evaluated at integer or half-integer argument.
    let half_n = n as f64 / 2.0;
    2.0 * std::f64::consts::PI.powf(half_n) / gamma_half(n)
}

/// Γ(n/2) for integer n ≥ 1.
fn gamma_half(n: usize) -> f64 {
    if n % 2 == 0 {
        // Γ(k) = (k-1)!
        let k = n / 2;
        (1..k).map(|i| i as f64).product()
    } else {
        // Γ(k + 1/2) = (2k)! / (4^k k!) √π
        let mut g = std::f64::consts::PI.sqrt();
        let mut z = 0.5;
        for _ in 0..(n - 1) / 2 {
            g *= z;
            z += 1.0;
        }
        g
    }
}

/// Uniform radial grid on `[r_min, r_max]`, carrying the ambient dimension
/// used by the quadrature weight `r^{n−1}·ω_{n−1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadialGrid {
    pub r_min: f64,
    pub r_max: f64,
    pub m: usize,
    pub dim: usize,
}

impl RadialGrid {
    pub fn new(r_min: f64, r_max: f64, m: usize, dim: usize) -> Result<Self, GridError> {
        if !(r_min >= 0.0 && r_min < r_max) {
            return Err(GridError::InvalidGrid(format!(
                "need 0 <= r_min < r_max, got [{r_min}, {r_max}]"
            )));
        }
        if m < 3 {
            return Err(GridError::InvalidGrid(format!("node count {m} < 3")));
        }
        if dim < 2 {
            return Err(GridError::InvalidGrid(format!("dimension {dim} < 2")));
        }
        Ok(Self { r_min, r_max, m, dim })
    }

    pub fn ball(radius: f64, m: usize, dim: usize) -> Result<Self, GridError> {
        Self::new(0.0, radius, m, dim)
    }

    pub fn spacing(&self) -> f64 {
        (self.r_max - self.r_min) / (self.m - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        self.r_min + self.spacing() * i as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.m).map(|i| self.node(i))
    }
}

/// Scalar field sampled on a radial grid; immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialField {
    pub grid: RadialGrid,
    values: Vec<f64>,
}

impl RadialField {
    pub fn new(grid: RadialGrid, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.m {
            return Err(GridError::LengthMismatch {
                expected: grid.m,
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite(i));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: RadialGrid, f: impl Fn(f64) -> f64) -> Result<Self, GridError> {
        let values = grid.nodes().map(f).collect();
        Self::new(grid, values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// Linear interpolation at radius `r` (clamped to the grid range).
    pub fn interpolate(&self, r: f64) -> f64 {
        let g = &self.grid;
        let t = ((r - g.r_min) / g.spacing()).clamp(0.0, (g.m - 1) as f64);
        let i = (t.floor() as usize).min(g.m - 2);
        let frac = t - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self, GridError> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// `(∫_{region} |u|^p r^{n−1} ω_{n−1} dr)^{1/p}` by the trapezoid rule;
    /// `p = ∞` returns the sup over region nodes. Exponents below 1 give the
    /// non-averaged quasi-norm.
    pub fn lp_norm(&self, p: f64, region: &RadialRegion) -> Result<f64, GridError> {
        let idx = self.region_indices(region)?;
        if p.is_infinite() {
            return Ok(idx
                .iter()
                .map(|&i| self.values[i].abs())
                .fold(f64::NEG_INFINITY, f64::max));
        }
        assert!(p > 0.0, "lp_norm requires p > 0");
        let g = &self.grid;
        let h = g.spacing();
        let omega = sphere_area(g.dim);
        let weight = |i: usize| self.values[i].abs().powf(p) * g.node(i).powf((g.dim - 1) as f64);
        // contiguous runs of region nodes, integrated separately
        let mut integral = 0.0;
        let mut run: Vec<usize> = Vec::new();
        let mut flush = |run: &mut Vec<usize>| {
            if run.len() >= 2 {
                let vals: Vec<f64> = run.iter().map(|&i| weight(i)).collect();
                let mut sum = 0.5 * (vals[0] + vals[vals.len() - 1]);
                for v in &vals[1..vals.len() - 1] {
                    sum += v;
                }
                let mut piece = h * sum;
                // Euler-Maclaurin endpoint correction: one-sided second-order
                // slope estimates of the integrand
                if vals.len() >= 3 {
                    let k = vals.len();
                    let da = (-3.0 * vals[0] + 4.0 * vals[1] - vals[2]) / (2.0 * h);
                    let db = (3.0 * vals[k - 1] - 4.0 * vals[k - 2] + vals[k - 3]) / (2.0 * h);
                    piece += h * h / 12.0 * (da - db);
                }
                integral += piece;
            }
            run.clear();
        };
        for &i in &idx {
            if let Some(&last) = run.last() {
                if i != last + 1 {
                    flush(&mut run);
                }
            }
            run.push(i);
        }
        flush(&mut run);
        Ok((omega * integral).powf(1.0 / p))
    }

    /// Exact min and max over region nodes.
    pub fn inf_sup(&self, region: &RadialRegion) -> Result<(f64, f64), GridError> {
        let idx = self.region_indices(region)?;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &i in &idx {
            lo = lo.min(self.values[i]);
            hi = hi.max(self.values[i]);
        }
        Ok((lo, hi))
    }

    fn region_indices(&self, region: &RadialRegion) -> Result<Vec<usize>, GridError> {
        let g = &self.grid;
        let idx: Vec<usize> = (0..g.m)
            .filter(|&i| region.contains(g.node(i), g.spacing()))
            .collect();
        if idx.is_empty() {
            return Err(GridError::EmptyRegion);
        }
        Ok(idx)
    }

    /// Central second-order differences in the interior, one-sided
    /// second-order stencils at the endpoints.
    pub fn derivative(&self) -> RadialField {
        let g = &self.grid;
        let h = g.spacing();
        let u = &self.values;
        let m = g.m;
        let mut d = vec![0.0; m];
        d[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h);
        d[m - 1] = (3.0 * u[m - 1] - 4.0 * u[m - 2] + u[m - 3]) / (2.0 * h);
        for i in 1..m - 1 {
            d[i] = (u[i + 1] - u[i - 1]) / (2.0 * h);
        }
        RadialField { grid: *g, values: d }
    }

    /// Second derivative: central in the interior, one-sided at endpoints.
    pub fn second_derivative(&self) -> RadialField {
        let g = &self.grid;
        let h = g.spacing();
        let u = &self.values;
        let m = g.m;
        let mut d = vec![0.0; m];
        let h2 = h * h;
        d[0] = (2.0 * u[0] - 5.0 * u[1] + 4.0 * u[2] - u[3.min(m - 1)]) / h2;
        d[m - 1] = (2.0 * u[m - 1] - 5.0 * u[m - 2] + 4.0 * u[m - 3] - u[m - 4]) / h2;
        for i in 1..m - 1 {
            d[i] = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / h2;
        }
        RadialField { grid: *g, values: d }
    }

    /// `R − r` for the ball of radius `R` containing the grid.
    pub fn dist_to_boundary(grid: &RadialGrid, ball_radius: f64) -> RadialField {
        RadialField::from_fn(*grid, |r| ball_radius - r).expect("finite values")
    }

    pub fn write_csv(&self, out: &mut impl Write) -> Result<(), GridError> {
        writeln!(out, "r,value")?;
        for (i, &v) in self.values.iter().enumerate() {
            writeln!(out, "{},{}", fmt_f64(self.grid.node(i)), fmt_f64(v))?;
        }
        Ok(())
    }
}

/// Sub-ball (or sub-annulus) descriptor for radial norms and extrema.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialRegion {
    pub r_lo: f64,
    pub r_hi: f64,
}

impl RadialRegion {
    pub fn ball(radius: f64) -> Self {
        Self { r_lo: 0.0, r_hi: radius }
    }

    pub fn annulus(r_lo: f64, r_hi: f64) -> Self {
        Self { r_lo, r_hi }
    }

    pub(crate) fn contains(&self, r: f64, h: f64) -> bool {
        let slack = 1e-9 * h;
        r >= self.r_lo - slack && r <= self.r_hi + slack
    }
}

/// Square lattice of half-width `L` restricted to the closed disk of radius
/// `L`; `m` odd so the center node exists. Nodes within one spacing of the
/// disk rim are marked as boundary and carry Dirichlet data.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarGrid {
    pub half_width: f64,
    pub m: usize,
    nodes: Vec<(f64, f64)>,
    interior: Vec<bool>,
}

impl PlanarGrid {
    pub fn disk(half_width: f64, m: usize) -> Result<Self, GridError> {
        if half_width <= 0.0 {
            return Err(GridError::InvalidGrid(format!("half-width {half_width} <= 0")));
        }
        if m < 3 || m % 2 == 0 {
            return Err(GridError::InvalidGrid(format!("resolution {m} must be odd and >= 3")));
        }
        let h = 2.0 * half_width / (m - 1) as f64;
        let mut nodes = Vec::new();
        let mut interior = Vec::new();
        for j in 0..m {
            for i in 0..m {
                let x = -half_width + i as f64 * h;
                let y = -half_width + j as f64 * h;
                let r = (x * x + y * y).sqrt();
                if r <= half_width + 1e-12 {
                    nodes.push((x, y));
                    interior.push(r < half_width - h + 1e-12);
                }
            }
        }
        Ok(Self { half_width, m, nodes, interior })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.m - 1) as f64
    }

    pub fn nodes(&self) -> &[(f64, f64)] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_interior(&self, idx: usize) -> bool {
        self.interior[idx]
    }

    /// Index of the node at lattice offset `(di, dj)` from node `idx`, if it
    /// lies inside the disk.
    pub fn neighbor(&self, idx: usize, di: i64, dj: i64) -> Option<usize> {
        let (x, y) = self.nodes[idx];
        let h = self.spacing();
        let tx = x + di as f64 * h;
        let ty = y + dj as f64 * h;
        self.find(tx, ty)
    }

    fn find(&self, x: f64, y: f64) -> Option<usize> {
        let h = self.spacing();
        let i = ((x + self.half_width) / h).round() as i64;
        let j = ((y + self.half_width) / h).round() as i64;
        if i < 0 || j < 0 || i >= self.m as i64 || j >= self.m as i64 {
            return None;
        }
        // node list is row-major over the masked lattice; binary search by
        // reconstructing coordinates
        let tx = -self.half_width + i as f64 * h;
        let ty = -self.half_width + j as f64 * h;
        if (tx * tx + ty * ty).sqrt() > self.half_width + 1e-12 {
            return None;
        }
        self.nodes
            .binary_search_by(|&(nx, ny)| {
                ny.partial_cmp(&ty)
                    .unwrap()
                    .then(nx.partial_cmp(&tx).unwrap())
            })
            .ok()
    }
}

/// Scalar field on a planar disk grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarField {
    pub grid: std::rc::Rc<PlanarGrid>,
    values: Vec<f64>,
}

impl PlanarField {
    pub fn new(grid: std::rc::Rc<PlanarGrid>, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite(i));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: std::rc::Rc<PlanarGrid>, f: impl Fn(f64, f64) -> f64) -> Result<Self, GridError> {
        let values = grid.nodes().iter().map(|&(x, y)| f(x, y)).collect();
        Self::new(grid, values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self, GridError> {
        Self::new(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    /// Cell-weighted `L^p` norm over nodes within radius `r0`; `p = ∞` is the
    /// node sup.
    pub fn lp_norm(&self, p: f64, r0: f64) -> Result<f64, GridError> {
        let idx = self.region_indices(r0)?;
        if p.is_infinite() {
            return Ok(idx
                .iter()
                .map(|&i| self.values[i].abs())
                .fold(f64::NEG_INFINITY, f64::max));
        }
        assert!(p > 0.0);
        let h = self.grid.spacing();
        let cell = h * h;
        let sum: f64 = idx.iter().map(|&i| self.values[i].abs().powf(p) * cell).sum();
        Ok(sum.powf(1.0 / p))
    }

    pub fn inf_sup(&self, r0: f64) -> Result<(f64, f64), GridError> {
        let idx = self.region_indices(r0)?;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &i in &idx {
            lo = lo.min(self.values[i]);
            hi = hi.max(self.values[i]);
        }
        Ok((lo, hi))
    }

    fn region_indices(&self, r0: f64) -> Result<Vec<usize>, GridError> {
        let idx: Vec<usize> = self
            .grid
            .nodes()
            .iter()
            .enumerate()
            .filter(|(_, &(x, y))| (x * x + y * y).sqrt() <= r0 + 1e-12)
            .map(|(i, _)| i)
            .collect();
        if idx.is_empty() {
            return Err(GridError::EmptyRegion);
        }
        Ok(idx)
    }

    /// Central differences where both lattice neighbors exist, one-sided
    /// otherwise; `None` where no stencil fits.
    pub fn gradient(&self) -> Vec<Option<(f64, f64)>> {
        let g = &self.grid;
        let h = g.spacing();
        (0..g.len())
            .map(|i| {
                let dx = self.directional_deriv(i, 1, 0, h)?;
                let dy = self.directional_deriv(i, 0, 1, h)?;
                Some((dx, dy))
            })
            .collect()
    }

    fn directional_deriv(&self, i: usize, di: i64, dj: i64, h: f64) -> Option<f64> {
        let fwd = self.grid.neighbor(i, di, dj);
        let bwd = self.grid.neighbor(i, -di, -dj);
        match (bwd, fwd) {
            (Some(b), Some(f)) => Some((self.values[f] - self.values[b]) / (2.0 * h)),
            (None, Some(f)) => Some((self.values[f] - self.values[i]) / h),
            (Some(b), None) => Some((self.values[i] - self.values[b]) / h),
            (None, None) => None,
        }
    }

    /// Hessian entries `(u_xx, u_xy, u_yy)` by central differences; `None`
    /// where the 9-point stencil leaves the disk.
    pub fn hessian(&self) -> Vec<Option<(f64, f64, f64)>> {
        let g = &self.grid;
        let h = g.spacing();
        let h2 = h * h;
        (0..g.len())
            .map(|i| {
                let xp = g.neighbor(i, 1, 0)?;
                let xm = g.neighbor(i, -1, 0)?;
                let yp = g.neighbor(i, 0, 1)?;
                let ym = g.neighbor(i, 0, -1)?;
                let pp = g.neighbor(i, 1, 1)?;
                let pm = g.neighbor(i, 1, -1)?;
                let mp = g.neighbor(i, -1, 1)?;
                let mm = g.neighbor(i, -1, -1)?;
                let u = &self.values;
                let uxx = (u[xp] - 2.0 * u[i] + u[xm]) / h2;
                let uyy = (u[yp] - 2.0 * u[i] + u[ym]) / h2;
                let uxy = (u[pp] - u[pm] - u[mp] + u[mm]) / (4.0 * h2);
                Some((uxx, uxy, uyy))
            })
            .collect()
    }

    /// Exact `R − |x|` against the disk rim.
    pub fn dist_to_boundary(grid: &std::rc::Rc<PlanarGrid>) -> PlanarField {
        let r = grid.half_width;
        PlanarField::from_fn(grid.clone(), |x, y| r - (x * x + y * y).sqrt()).expect("finite")
    }

    /// Brute-force nearest distance against an arbitrary node set.
    pub fn dist_to_nodes(grid: &std::rc::Rc<PlanarGrid>, targets: &[(f64, f64)]) -> PlanarField {
        PlanarField::from_fn(grid.clone(), |x, y| {
            targets
                .iter()
                .map(|&(tx, ty)| ((x - tx).powi(2) + (y - ty).powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min)
        })
        .expect("finite")
    }

    pub fn write_csv(&self, out: &mut impl Write) -> Result<(), GridError> {
        writeln!(out, "x,y,value")?;
        for (i, &v) in self.values.iter().enumerate() {
            let (x, y) = self.grid.nodes()[i];
            writeln!(out, "{},{},{}", fmt_f64(x), fmt_f64(y), fmt_f64(v))?;
        }
        Ok(())
    }
}

/// Shortest-width float formatting, stable across runs for CSV bodies.
pub fn fmt_f64(v: f64) -> String {
    let mut s = format!("{v}");
    if s == "-0" {
        s = "0".to_string();
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::rc::Rc;

    #[test]
    fn sphere_areas() {
        assert_relative_eq!(sphere_area(2), 2.0 * std::f64::consts::PI, epsilon = 1e-12);
        assert_relative_eq!(sphere_area(3), 4.0 * std::f64::consts::PI, epsilon = 1e-12);
        assert_relative_eq!(
            sphere_area(5),
            8.0 * std::f64::consts::PI.powi(2) / 3.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn radial_quadrature_recovers_ball_volume() {
        // |B_r| in n dims = ω_{n-1} r^n / n
        for (n, m) in [(2usize, 512usize), (3, 512), (5, 512)] {
            let grid = RadialGrid::ball(1.0, m, n).unwrap();
            let one = RadialField::from_fn(grid, |_| 1.0).unwrap();
            let vol = one.lp_norm(1.0, &RadialRegion::ball(1.0)).unwrap();
            let exact = sphere_area(n) / n as f64;
            assert_relative_eq!(vol, exact, max_relative = 1e-6);
        }
    }

    #[test]
    fn lp_norm_constant_on_half_ball() {
        let grid = RadialGrid::ball(1.0, 2001, 2).unwrap();
        let one = RadialField::from_fn(grid, |_| 1.0).unwrap();
        for eps in [0.25, 0.5, 1.0] {
            let got = one.lp_norm(eps, &RadialRegion::ball(0.5)).unwrap();
            let exact = (std::f64::consts::PI / 4.0).powf(1.0 / eps);
            assert_relative_eq!(got, exact, max_relative = 1e-5);
        }
    }

    #[test]
    fn lp_norm_zero_and_sup() {
        let grid = RadialGrid::ball(1.0, 101, 2).unwrap();
        let zero = RadialField::from_fn(grid, |_| 0.0).unwrap();
        assert_eq!(zero.lp_norm(2.0, &RadialRegion::ball(1.0)).unwrap(), 0.0);
        let dist = RadialField::dist_to_boundary(&grid, 1.0);
        assert_eq!(
            dist.lp_norm(f64::INFINITY, &RadialRegion::ball(1.0)).unwrap(),
            1.0
        );
    }

    #[test]
    fn lp_norm_homogeneity() {
        let grid = RadialGrid::ball(1.0, 201, 3).unwrap();
        let u = RadialField::from_fn(grid, |r| (1.0 - r) * (2.0 + r.sin())).unwrap();
        for p in [0.5, 1.0, 2.0, f64::INFINITY] {
            let base = u.lp_norm(p, &RadialRegion::ball(1.0)).unwrap();
            let scaled = u
                .map(|v| -3.0 * v)
                .unwrap()
                .lp_norm(p, &RadialRegion::ball(1.0))
                .unwrap();
            assert_relative_eq!(scaled, 3.0 * base, max_relative = 1e-12);
        }
    }

    #[test]
    fn inf_sup_examples() {
        let grid = RadialGrid::ball(1.0, 101, 2).unwrap();
        let c = RadialField::from_fn(grid, |_| 4.2).unwrap();
        assert_eq!(c.inf_sup(&RadialRegion::ball(1.0)).unwrap(), (4.2, 4.2));
        let id = RadialField::from_fn(grid, |r| r).unwrap();
        assert_eq!(id.inf_sup(&RadialRegion::ball(1.0)).unwrap(), (0.0, 1.0));
        let cone = RadialField::from_fn(grid, |r| 1.0 - r).unwrap();
        let (lo, hi) = cone.inf_sup(&RadialRegion::ball(0.5)).unwrap();
        assert_relative_eq!(lo, 0.5, epsilon = 1e-2);
        assert_relative_eq!(hi, 1.0, epsilon = 1e-2);
    }

    #[test]
    fn differences_exact_on_quadratics() {
        let grid = RadialGrid::ball(1.0, 101, 2).unwrap();
        let u = RadialField::from_fn(grid, |r| 3.0 * r * r - 2.0 * r + 1.0).unwrap();
        let d = u.derivative();
        let dd = u.second_derivative();
        for i in 0..grid.m {
            let r = grid.node(i);
            assert_relative_eq!(d.value(i), 6.0 * r - 2.0, epsilon = 1e-10);
            assert_relative_eq!(dd.value(i), 6.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn difference_convergence_order() {
        // measured slope >= 1.9 on a smooth function across dyadic refinement
        let exact = |r: f64| (2.0 * r).sin();
        let dexact = |r: f64| 2.0 * (2.0 * r).cos();
        let mut errors = Vec::new();
        for m in [33usize, 65, 129, 257] {
            let grid = RadialGrid::new(0.1, 1.0, m, 2).unwrap();
            let u = RadialField::from_fn(grid, exact).unwrap();
            let d = u.derivative();
            let err = (1..m - 1)
                .map(|i| (d.value(i) - dexact(grid.node(i))).abs())
                .fold(0.0f64, f64::max);
            errors.push(err);
        }
        for w in errors.windows(2) {
            let slope = (w[0] / w[1]).log2();
            assert!(slope >= 1.9, "slope {slope}");
        }
    }

    #[test]
    fn planar_grid_center_and_mask() {
        let grid = PlanarGrid::disk(1.0, 33).unwrap();
        assert!(grid.find(0.0, 0.0).is_some());
        let vol: f64 = grid.len() as f64 * grid.spacing().powi(2);
        assert_relative_eq!(vol, std::f64::consts::PI, max_relative = 0.05);
    }

    #[test]
    fn planar_quadrature_disk_area() {
        let grid = Rc::new(PlanarGrid::disk(1.0, 257).unwrap());
        let one = PlanarField::from_fn(grid, |_, _| 1.0).unwrap();
        let vol = one.lp_norm(1.0, 1.0).unwrap();
        assert_relative_eq!(vol, std::f64::consts::PI, max_relative = 1e-2);
    }

    #[test]
    fn planar_differences_exact_on_quadratics() {
        let grid = Rc::new(PlanarGrid::disk(1.0, 65).unwrap());
        let u = PlanarField::from_fn(grid.clone(), |x, y| x * x + y * y).unwrap();
        let grads = u.gradient();
        let hess = u.hessian();
        for i in 0..grid.len() {
            if !grid.is_interior(i) {
                continue;
            }
            let (x, y) = grid.nodes()[i];
            if let Some((gx, gy)) = grads[i] {
                if grid.neighbor(i, 1, 0).is_some() && grid.neighbor(i, -1, 0).is_some() {
                    assert_relative_eq!(gx, 2.0 * x, epsilon = 1e-10);
                }
                if grid.neighbor(i, 0, 1).is_some() && grid.neighbor(i, 0, -1).is_some() {
                    assert_relative_eq!(gy, 2.0 * y, epsilon = 1e-10);
                }
            }
            if let Some((uxx, uxy, uyy)) = hess[i] {
                assert_relative_eq!(uxx, 2.0, epsilon = 1e-8);
                assert_relative_eq!(uyy, 2.0, epsilon = 1e-8);
                assert_relative_eq!(uxy, 0.0, epsilon = 1e-8);
            }
        }
        // mixed derivative on x*y
        let v = PlanarField::from_fn(u.grid.clone(), |x, y| x * y).unwrap();
        for (i, h) in v.hessian().iter().enumerate() {
            if let Some((_, uxy, _)) = h {
                if v.grid.is_interior(i) {
                    assert_relative_eq!(*uxy, 1.0, epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn dist_to_boundary_examples() {
        let grid = RadialGrid::ball(1.0, 11, 2).unwrap();
        let d = RadialField::dist_to_boundary(&grid, 1.0);
        assert_eq!(d.value(0), 1.0);
        assert_relative_eq!(d.value(10), 0.0, epsilon = 1e-15);

        let pg = Rc::new(PlanarGrid::disk(1.0, 17).unwrap());
        let dn = PlanarField::dist_to_nodes(&pg, &[(0.0, 0.0)]);
        let i = pg.find(0.5, 0.0).unwrap();
        assert_relative_eq!(dn.value(i), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn empty_region_rejected() {
        let grid = RadialGrid::new(0.5, 1.0, 11, 2).unwrap();
        let u = RadialField::from_fn(grid, |_| 1.0).unwrap();
        assert!(matches!(
            u.lp_norm(1.0, &RadialRegion::ball(0.2)),
            Err(GridError::EmptyRegion)
        ));
    }
}
