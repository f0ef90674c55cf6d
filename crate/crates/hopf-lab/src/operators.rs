//! Pointwise evaluation of Pucci extremal operators, (λ,Λ)-elliptic
//! operators from a closed family, the degenerate operator `|p|^α F(X)`,
//! and their radial reductions.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

/// Tolerated asymmetry `‖X − Xᵀ‖_max` before a matrix is rejected.
pub const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum OperatorError {
    #[error("matrix asymmetry {0:.3e} exceeds tolerance {SYMMETRY_TOL:.0e}")]
    NotSymmetric(f64),
    #[error("dimension mismatch: expected order {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid elliptic parameters: {0}")]
    InvalidParams(String),
    #[error("Bellman family is empty")]
    EmptyBellmanFamily,
    #[error("coefficient matrix eigenvalue {eigenvalue} lies outside [{lambda}, {big_lambda}]")]
    CoefficientOutOfRange {
        eigenvalue: f64,
        lambda: f64,
        big_lambda: f64,
    },
    #[error("radial reduction requires r > 0")]
    ZeroRadius,
}

/// Dimension, ellipticity pair (λ, Λ) and degeneracy exponent α.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EllipticParams {
    pub n: usize,
    pub lambda: f64,
    pub big_lambda: f64,
    pub alpha: f64,
}

impl EllipticParams {
    pub fn new(n: usize, lambda: f64, big_lambda: f64, alpha: f64) -> Result<Self, OperatorError> {
        if n < 2 {
            return Err(OperatorError::InvalidParams(format!("n = {n} < 2")));
        }
        if !(lambda > 0.0 && big_lambda >= lambda) {
            return Err(OperatorError::InvalidParams(format!(
                "need 0 < lambda <= Lambda, got ({lambda}, {big_lambda})"
            )));
        }
        if !(alpha >= 0.0) {
            return Err(OperatorError::InvalidParams(format!("alpha = {alpha} < 0")));
        }
        Ok(Self {
            n,
            lambda,
            big_lambda,
            alpha,
        })
    }
}

/// Real symmetric matrix with eigendecomposition attached on demand.
///
/// Construction symmetrizes inputs whose asymmetry is below [`SYMMETRY_TOL`]
/// and rejects anything worse: Pucci values are eigenvalue functions and
/// silent asymmetry corrupts them.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    entries: DMatrix<f64>,
}

impl SymMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self, OperatorError> {
        if m.nrows() != m.ncols() {
            return Err(OperatorError::DimensionMismatch {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        let asym = (&m - m.transpose()).abs().max();
        if asym > SYMMETRY_TOL {
            return Err(OperatorError::NotSymmetric(asym));
        }
        let sym = (&m + m.transpose()) * 0.5;
        Ok(Self { entries: sym })
    }

    pub fn zeros(order: usize) -> Self {
        Self {
            entries: DMatrix::zeros(order, order),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self {
            entries: DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(diag)),
        }
    }

    pub fn identity(order: usize) -> Self {
        Self {
            entries: DMatrix::identity(order, order),
        }
    }

    pub fn order(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            entries: &self.entries * c,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            entries: &self.entries + &other.entries,
        }
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.entries
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect()
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace()
    }
}

fn pucci_from_eigenvalues(eigs: &[f64], lambda: f64, big_lambda: f64, plus: bool) -> f64 {
    eigs.iter()
        .map(|&mu| {
            if plus {
                if mu > 0.0 {
                    big_lambda * mu
                } else {
                    lambda * mu
                }
            } else if mu > 0.0 {
                lambda * mu
            } else {
                big_lambda * mu
            }
        })
        .sum()
}

/// `M⁺(X) = Λ·Tr(X⁺) − λ·Tr(X⁻)`, evaluated from the eigenvalues of `X`.
pub fn pucci_plus(x: &SymMatrix, params: &EllipticParams) -> Result<f64, OperatorError> {
    if x.order() != params.n {
        return Err(OperatorError::DimensionMismatch {
            expected: params.n,
            got: x.order(),
        });
    }
    Ok(pucci_from_eigenvalues(
        &x.eigenvalues(),
        params.lambda,
        params.big_lambda,
        true,
    ))
}

/// `M⁻(X) = λ·Tr(X⁺) − Λ·Tr(X⁻)`.
pub fn pucci_minus(x: &SymMatrix, params: &EllipticParams) -> Result<f64, OperatorError> {
    if x.order() != params.n {
        return Err(OperatorError::DimensionMismatch {
            expected: params.n,
            got: x.order(),
        });
    }
    Ok(pucci_from_eigenvalues(
        &x.eigenvalues(),
        params.lambda,
        params.big_lambda,
        false,
    ))
}

/// Closed family of (λ,Λ)-elliptic operators with `F(0) = 0` by construction.
#[derive(Debug, Clone)]
pub enum OperatorKind {
    PucciMinus,
    PucciPlus,
    /// `F(X) = Tr(A·X)` with a fixed symmetric coefficient matrix.
    LinearTrace(SymMatrix),
    /// `F(X) = min_i Tr(A_i·X)` over a finite family, lowest index wins ties.
    BellmanMin(Vec<SymMatrix>),
}

#[derive(Debug, Clone)]
pub struct OperatorSpec {
    pub kind: OperatorKind,
    pub params: EllipticParams,
}

impl OperatorSpec {
    /// Validated constructor: every linear coefficient matrix must have its
    /// spectrum inside `[lambda, Lambda]`, which guarantees ellipticity.
    pub fn new(kind: OperatorKind, params: EllipticParams) -> Result<Self, OperatorError> {
        let check = |a: &SymMatrix| -> Result<(), OperatorError> {
            if a.order() != params.n {
                return Err(OperatorError::DimensionMismatch {
                    expected: params.n,
                    got: a.order(),
                });
            }
            for mu in a.eigenvalues() {
                if mu < params.lambda - 1e-12 || mu > params.big_lambda + 1e-12 {
                    return Err(OperatorError::CoefficientOutOfRange {
                        eigenvalue: mu,
                        lambda: params.lambda,
                        big_lambda: params.big_lambda,
                    });
                }
            }
            Ok(())
        };
        match &kind {
            OperatorKind::LinearTrace(a) => check(a)?,
            OperatorKind::BellmanMin(family) => {
                if family.is_empty() {
                    return Err(OperatorError::EmptyBellmanFamily);
                }
                for a in family {
                    check(a)?;
                }
            }
            _ => {}
        }
        Ok(Self { kind, params })
    }

    /// Skips coefficient validation; used to exercise failure witnesses in
    /// ellipticity audits.
    pub fn new_unchecked(kind: OperatorKind, params: EllipticParams) -> Self {
        Self { kind, params }
    }

    pub fn pucci_minus(params: EllipticParams) -> Self {
        Self {
            kind: OperatorKind::PucciMinus,
            params,
        }
    }

    pub fn pucci_plus(params: EllipticParams) -> Self {
        Self {
            kind: OperatorKind::PucciPlus,
            params,
        }
    }

    pub fn laplacian(params: EllipticParams) -> Result<Self, OperatorError> {
        Self::new(OperatorKind::LinearTrace(SymMatrix::identity(params.n)), params)
    }
}

/// Evaluates `F(X)` for the given spec.
pub fn apply_f(spec: &OperatorSpec, x: &SymMatrix) -> Result<f64, OperatorError> {
    match &spec.kind {
        OperatorKind::PucciMinus => pucci_minus(x, &spec.params),
        OperatorKind::PucciPlus => pucci_plus(x, &spec.params),
        OperatorKind::LinearTrace(a) => {
            if x.order() != a.order() {
                return Err(OperatorError::DimensionMismatch {
                    expected: a.order(),
                    got: x.order(),
                });
            }
            Ok((a.entries() * x.entries()).trace())
        }
        OperatorKind::BellmanMin(family) => {
            if family.is_empty() {
                return Err(OperatorError::EmptyBellmanFamily);
            }
            let mut best = f64::INFINITY;
            for a in family {
                let v = (a.entries() * x.entries()).trace();
                if v < best {
                    best = v;
                }
            }
            Ok(best)
        }
    }
}

/// Euclidean norm of a gradient vector.
pub fn grad_norm(p: &[f64]) -> f64 {
    p.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// The degenerate operator `|p|^α F(X)`; returns 0 at `p = 0` when `α > 0`.
pub fn degenerate_op(spec: &OperatorSpec, p: &[f64], x: &SymMatrix) -> Result<f64, OperatorError> {
    let norm = grad_norm(p);
    let alpha = spec.params.alpha;
    if norm == 0.0 && alpha > 0.0 {
        return Ok(0.0);
    }
    let weight = if alpha == 0.0 { 1.0 } else { norm.powf(alpha) };
    Ok(weight * apply_f(spec, x)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PucciSign {
    Plus,
    Minus,
}

/// Pucci operator applied to the radial eigenvalue pair: `second_deriv` with
/// multiplicity 1 and `first_deriv_over_r` with multiplicity `n − 1`.
pub fn radial_pucci(
    second_deriv: f64,
    first_deriv_over_r: f64,
    params: &EllipticParams,
    sign: PucciSign,
) -> f64 {
    let weight = |mu: f64| -> f64 {
        match sign {
            PucciSign::Plus => {
                if mu > 0.0 {
                    params.big_lambda
                } else {
                    params.lambda
                }
            }
            PucciSign::Minus => {
                if mu > 0.0 {
                    params.lambda
                } else {
                    params.big_lambda
                }
            }
        }
    };
    weight(second_deriv) * second_deriv
        + (params.n - 1) as f64 * weight(first_deriv_over_r) * first_deriv_over_r
}

/// `F` applied to a radial Hessian whose radial direction is the first
/// coordinate axis: `D²u = diag(u'', u'/r, …, u'/r)` in that frame.
pub fn radial_apply(spec: &OperatorSpec, second_deriv: f64, first_deriv_over_r: f64) -> f64 {
    let params = &spec.params;
    match &spec.kind {
        OperatorKind::PucciMinus => {
            radial_pucci(second_deriv, first_deriv_over_r, params, PucciSign::Minus)
        }
        OperatorKind::PucciPlus => {
            radial_pucci(second_deriv, first_deriv_over_r, params, PucciSign::Plus)
        }
        OperatorKind::LinearTrace(a) => {
            let a00 = a.entries()[(0, 0)];
            a00 * second_deriv + (a.trace() - a00) * first_deriv_over_r
        }
        OperatorKind::BellmanMin(family) => family
            .iter()
            .map(|a| {
                let a00 = a.entries()[(0, 0)];
                a00 * second_deriv + (a.trace() - a00) * first_deriv_over_r
            })
            .fold(f64::INFINITY, f64::min),
    }
}

/// Outcome of a randomized (λ,Λ)-ellipticity audit.
#[derive(Debug, Clone, Serialize)]
pub struct EllipticityReport {
    pub samples: usize,
    pub worst_margin: f64,
    pub pass: bool,
    /// Human-readable description of the worst violating pair, if any.
    pub witness: Option<String>,
}

fn random_symmetric(rng: &mut impl Rng, n: usize) -> SymMatrix {
    let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    SymMatrix::new((&m + m.transpose()) * 0.5).expect("symmetrized")
}

fn random_psd(rng: &mut impl Rng, n: usize) -> SymMatrix {
    let b = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    SymMatrix::new(b.transpose() * &b).expect("Gram matrix is symmetric")
}

/// Draws random pairs (X, Y) and nonnegative increments N, and checks the
/// ellipticity sandwich `M⁻(X−Y) ≤ F(X)−F(Y) ≤ M⁺(X−Y)` together with its
/// trace form `λTr(N) ≤ F(X+N)−F(X) ≤ ΛTr(N)`.
pub fn check_ellipticity(
    spec: &OperatorSpec,
    sample_count: usize,
    seed: u64,
) -> Result<EllipticityReport, OperatorError> {
    let params = &spec.params;
    let n = params.n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tol = 1e-9;
    let mut worst = f64::INFINITY;
    let mut witness = None;

    for _ in 0..sample_count.max(1) {
        let x = random_symmetric(&mut rng, n);
        let y = random_symmetric(&mut rng, n);
        let diff = SymMatrix::new(x.entries() - y.entries())?;
        let fx = apply_f(spec, &x)?;
        let fy = apply_f(spec, &y)?;
        let lower = fx - fy - pucci_minus(&diff, params)?;
        let upper = pucci_plus(&diff, params)? - (fx - fy);
        for (label, margin) in [("sandwich lower", lower), ("sandwich upper", upper)] {
            if margin < worst {
                worst = margin;
                if margin < -tol {
                    witness = Some(format!(
                        "{label} violated by {:.3e} at X = {:?}, Y = {:?}",
                        -margin,
                        x.entries().as_slice(),
                        y.entries().as_slice()
                    ));
                }
            }
        }

        let nmat = random_psd(&mut rng, n);
        let fxn = apply_f(spec, &x.add(&nmat))?;
        let tr = nmat.trace();
        let lower_tr = fxn - fx - params.lambda * tr;
        let upper_tr = params.big_lambda * tr - (fxn - fx);
        for (label, margin) in [("trace lower", lower_tr), ("trace upper", upper_tr)] {
            if margin < worst {
                worst = margin;
                if margin < -tol {
                    witness = Some(format!(
                        "{label} violated by {:.3e} at X = {:?}, N = {:?}",
                        -margin,
                        x.entries().as_slice(),
                        nmat.entries().as_slice()
                    ));
                }
            }
        }
    }

    Ok(EllipticityReport {
        samples: sample_count.max(1),
        worst_margin: worst,
        pass: worst >= -tol,
        witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params2(lambda: f64, big_lambda: f64, alpha: f64) -> EllipticParams {
        EllipticParams::new(2, lambda, big_lambda, alpha).unwrap()
    }

    #[test]
    fn pucci_zero_matrix() {
        let p = params2(1.0, 2.0, 0.0);
        let z = SymMatrix::zeros(2);
        assert_eq!(pucci_plus(&z, &p).unwrap(), 0.0);
        assert_eq!(pucci_minus(&z, &p).unwrap(), 0.0);
    }

    #[test]
    fn pucci_diagonal_values() {
        let p = params2(1.0, 2.0, 0.0);
        let x = SymMatrix::from_diagonal(&[3.0, -1.0]);
        assert_relative_eq!(pucci_plus(&x, &p).unwrap(), 5.0, max_relative = 1e-12);
        assert_relative_eq!(pucci_minus(&x, &p).unwrap(), 1.0, max_relative = 1e-12);
        let pos = SymMatrix::from_diagonal(&[1.0, 1.0]);
        assert_relative_eq!(pucci_plus(&pos, &p).unwrap(), 4.0, max_relative = 1e-12);
    }

    #[test]
    fn pucci_duality() {
        let p = params2(0.5, 4.0, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let x = random_symmetric(&mut rng, 2);
            let neg = x.scale(-1.0);
            assert_relative_eq!(
                pucci_minus(&x, &p).unwrap(),
                -pucci_plus(&neg, &p).unwrap(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn pucci_homogeneity_and_subadditivity() {
        let p = params2(1.0, 3.0, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let x = random_symmetric(&mut rng, 2);
            let y = random_symmetric(&mut rng, 2);
            let c = rng.gen_range(0.0..5.0);
            assert_relative_eq!(
                pucci_plus(&x.scale(c), &p).unwrap(),
                c * pucci_plus(&x, &p).unwrap(),
                epsilon = 1e-10
            );
            let sum = x.add(&y);
            assert!(
                pucci_plus(&sum, &p).unwrap()
                    <= pucci_plus(&x, &p).unwrap() + pucci_plus(&y, &p).unwrap() + 1e-10
            );
            assert!(
                pucci_minus(&sum, &p).unwrap()
                    >= pucci_minus(&x, &p).unwrap() + pucci_minus(&y, &p).unwrap() - 1e-10
            );
        }
    }

    #[test]
    fn pucci_ordering_for_elliptic_specs() {
        let p = params2(1.0, 2.0, 0.0);
        let spec = OperatorSpec::new(
            OperatorKind::LinearTrace(SymMatrix::from_diagonal(&[1.5, 1.5])),
            p,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let x = random_symmetric(&mut rng, 2);
            let f = apply_f(&spec, &x).unwrap();
            assert!(pucci_minus(&x, &p).unwrap() <= f + 1e-12);
            assert!(f <= pucci_plus(&x, &p).unwrap() + 1e-12);
        }
    }

    #[test]
    fn bellman_min_over_diagonal_family_equals_pucci_minus() {
        let p = params2(1.0, 2.0, 0.0);
        let family: Vec<SymMatrix> = [(1.0, 1.0), (1.0, 2.0), (2.0, 1.0), (2.0, 2.0)]
            .iter()
            .map(|&(a, b)| SymMatrix::from_diagonal(&[a, b]))
            .collect();
        let spec = OperatorSpec::new(OperatorKind::BellmanMin(family), p).unwrap();
        let x = SymMatrix::from_diagonal(&[3.0, -1.0]);
        assert_relative_eq!(apply_f(&spec, &x).unwrap(), 1.0, max_relative = 1e-12);
        // brute-force equivalence on random diagonal matrices
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..30 {
            let d = SymMatrix::from_diagonal(&[rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)]);
            assert_relative_eq!(
                apply_f(&spec, &d).unwrap(),
                pucci_minus(&d, &p).unwrap(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn apply_f_laplacian() {
        let p = params2(1.0, 2.0, 0.0);
        let spec = OperatorSpec::laplacian(p).unwrap();
        let x = SymMatrix::from_diagonal(&[1.0, 1.0]);
        assert_relative_eq!(apply_f(&spec, &x).unwrap(), 2.0, max_relative = 1e-12);
    }

    #[test]
    fn degenerate_op_values() {
        let p = params2(1.0, 1.0, 1.0);
        let spec = OperatorSpec::laplacian(p).unwrap();
        let x = SymMatrix::from_diagonal(&[2.0, 2.0]);
        assert_eq!(degenerate_op(&spec, &[0.0, 0.0], &x).unwrap(), 0.0);
        assert_relative_eq!(
            degenerate_op(&spec, &[2.0, 0.0], &x).unwrap(),
            8.0,
            max_relative = 1e-12
        );
        let p0 = params2(1.0, 1.0, 0.0);
        let spec0 = OperatorSpec::laplacian(p0).unwrap();
        assert_relative_eq!(
            degenerate_op(&spec0, &[0.0, 0.0], &x).unwrap(),
            apply_f(&spec0, &x).unwrap(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn degenerate_scaling_law() {
        // L⁻_α(c·u) = c^{1+α}·L⁻_α(u), tested via (c·p, c·X) inputs.
        let p = params2(1.0, 2.0, 1.5);
        let spec = OperatorSpec::pucci_minus(p);
        let x = SymMatrix::from_diagonal(&[1.2, -0.7]);
        let grad = [0.3, -0.4];
        let base = degenerate_op(&spec, &grad, &x).unwrap();
        for c in [0.5, 2.0, 10.0] {
            let scaled = degenerate_op(&spec, &[c * grad[0], c * grad[1]], &x.scale(c)).unwrap();
            assert_relative_eq!(scaled, c.powf(1.0 + p.alpha) * base, max_relative = 1e-10);
        }
    }

    #[test]
    fn radial_pucci_examples() {
        let p = params2(1.0, 1.0, 0.0);
        // u(r) = r²: Laplacian of |x|² in n = 2.
        assert_relative_eq!(
            radial_pucci(2.0, 2.0, &p, PucciSign::Minus),
            4.0,
            max_relative = 1e-12
        );
        // barrier profile at |x| = 1 with beta = 3.
        assert_relative_eq!(
            radial_pucci(12.0 / 7.0, -3.0 / 7.0, &p, PucciSign::Minus),
            9.0 / 7.0,
            max_relative = 1e-12
        );
        let pl = params2(1.0, 2.0, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let a = rng.gen_range(-2.0..2.0);
            let b = rng.gen_range(-2.0..2.0);
            assert!(
                radial_pucci(a, b, &pl, PucciSign::Minus)
                    <= radial_pucci(a, b, &pl, PucciSign::Plus) + 1e-14
            );
        }
    }

    #[test]
    fn asymmetric_matrix_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(
            SymMatrix::new(m),
            Err(OperatorError::NotSymmetric(_))
        ));
    }

    #[test]
    fn ellipticity_audit_passes_for_pucci_and_interior_linear() {
        let p = params2(1.0, 2.0, 0.0);
        let r = check_ellipticity(&OperatorSpec::pucci_minus(p), 200, 42).unwrap();
        assert!(r.pass, "worst margin {}", r.worst_margin);
        let spec = OperatorSpec::new(
            OperatorKind::LinearTrace(SymMatrix::from_diagonal(&[1.5, 1.5])),
            p,
        )
        .unwrap();
        assert!(check_ellipticity(&spec, 200, 42).unwrap().pass);
    }

    #[test]
    fn ellipticity_audit_fails_with_witness_for_out_of_range_linear() {
        let p = params2(1.0, 2.0, 0.0);
        let spec = OperatorSpec::new_unchecked(
            OperatorKind::LinearTrace(SymMatrix::from_diagonal(&[3.0, 1.0])),
            p,
        );
        let r = check_ellipticity(&spec, 500, 1).unwrap();
        assert!(!r.pass);
        assert!(r.witness.is_some());
    }

    #[test]
    fn spec_constructor_rejects_bad_coefficients_and_empty_family() {
        let p = params2(1.0, 2.0, 0.0);
        assert!(OperatorSpec::new(
            OperatorKind::LinearTrace(SymMatrix::from_diagonal(&[3.0, 1.0])),
            p
        )
        .is_err());
        assert!(OperatorSpec::new(OperatorKind::BellmanMin(vec![]), p).is_err());
    }
}
