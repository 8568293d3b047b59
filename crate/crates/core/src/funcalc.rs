//! Holomorphic functional calculus by contour quadrature.
//!
//! b(A) is realized as the Cauchy integral (1/2 pi i) of b(z) (zI - A)^{-1}
//! around a circle enclosing the spectrum of A and excluding the poles of b.
//! The trapezoid rule on a circle converges geometrically for analytic
//! integrands, so node doubling with a tight successive-difference tolerance
//! gives certified values cheaply. Sign indicator functions of the real part
//! are not holomorphic across the imaginary axis and are handled separately
//! by Riesz spectral projections around one eigenvalue cluster.

use crate::maxreg::{MaxRegOperator, QuadratureMode};
use crate::numlin::{self, eig_general, CMatrix, NumlinError};
use crate::semigroup::{Generator, SemigroupError, Sign};
use crate::signal::{self, Signal};
use num_complex::Complex64;
use thiserror::Error;

/// Starting node count of the doubling ladder.
pub const CONTOUR_DEFAULT_NODES: usize = 256;
/// Node cap; quadrature that has not settled by then reports failure.
pub const CONTOUR_MAX_NODES: usize = 4096;
/// Successive-difference stopping tolerance, relative to max(1, norm).
pub const CONTOUR_TOL: f64 = 1e-11;
/// Eigenvalues must sit inside the circle by this fraction of the radius.
pub const INNER_MARGIN_FRAC: f64 = 0.9;
/// Poles must sit outside the circle by this fraction of the radius.
pub const OUTER_MARGIN_FRAC: f64 = 1.1;
/// Bisectorial splitting needs |Re lambda| above this times the spectral
/// scale.
pub const BISECT_AXIS_RTOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum FuncalcError {
    #[error("function is not holomorphic near the spectrum: {reason}")]
    NotHolomorphic { reason: String },
    #[error("no valid contour: {reason}")]
    NoValidContour { reason: String },
    #[error("contour quadrature stalled at {max_nodes} nodes (last correction {last_correction:.3e})")]
    NoConvergence { max_nodes: usize, last_correction: f64 },
    #[error("spectrum touches the imaginary axis: eigenvalue {eigenvalue}")]
    NotBisectorial { eigenvalue: Complex64 },
    #[error(transparent)]
    Numlin(#[from] NumlinError),
    #[error(transparent)]
    Semigroup(#[from] SemigroupError),
}

/// Scalar functions admitted by the calculus. Polynomial coefficients are
/// ascending in the power of z.
#[derive(Debug, Clone)]
pub enum HoloFunction {
    /// b(z) = 1.
    ConstOne,
    /// b(z) = z (sign * i * sigma + z)^{-1}, the frequency multiplier as a
    /// function of the generator; single pole at -sign * i * sigma.
    ResolventFrac { sign: Sign, sigma: f64 },
    /// b(z) = e^{-t z}; entire.
    ExpScale { t: f64 },
    /// b(z) = p(z) / q(z); poles at the roots of q.
    Rational {
        numerator: Vec<Complex64>,
        denominator: Vec<Complex64>,
    },
    /// Indicator of a real-part half plane. Not holomorphic across the
    /// imaginary axis: rejected by [`apply_calculus`], realized by
    /// [`spectral_projection`] instead.
    HalfplaneIndicator { side: Sign },
    /// Pointwise product of two admitted functions.
    Product(Box<HoloFunction>, Box<HoloFunction>),
}

impl HoloFunction {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        match self {
            HoloFunction::ConstOne => Complex64::new(1.0, 0.0),
            HoloFunction::ResolventFrac { sign, sigma } => {
                z / (Complex64::new(0.0, sign.factor() * sigma) + z)
            }
            HoloFunction::ExpScale { t } => (-z * *t).exp(),
            HoloFunction::Rational { numerator, denominator } => {
                polyval(numerator, z) / polyval(denominator, z)
            }
            HoloFunction::HalfplaneIndicator { side } => {
                if z.re * side.factor() > 0.0 {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
            HoloFunction::Product(a, b) => a.eval(z) * b.eval(z),
        }
    }

    /// Pole locations, for contour placement. Entire functions return an
    /// empty list; the half-plane indicator is rejected.
    pub fn poles(&self) -> Result<Vec<Complex64>, FuncalcError> {
        match self {
            HoloFunction::ConstOne | HoloFunction::ExpScale { .. } => Ok(Vec::new()),
            HoloFunction::ResolventFrac { sign, sigma } => {
                if *sigma == 0.0 {
                    Ok(Vec::new())
                } else {
                    Ok(vec![Complex64::new(0.0, -sign.factor() * sigma)])
                }
            }
            HoloFunction::Rational { denominator, .. } => Ok(polynomial_roots(denominator)?),
            HoloFunction::HalfplaneIndicator { .. } => Err(FuncalcError::NotHolomorphic {
                reason: "half-plane indicator jumps across the imaginary axis; \
                         use spectral_projection"
                    .into(),
            }),
            HoloFunction::Product(a, b) => {
                let mut p = a.poles()?;
                p.extend(b.poles()?);
                Ok(p)
            }
        }
    }

    pub fn product(a: HoloFunction, b: HoloFunction) -> HoloFunction {
        HoloFunction::Product(Box::new(a), Box::new(b))
    }
}

fn polyval(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for c in coeffs.iter().rev() {
        acc = acc * z + c;
    }
    acc
}

/// Roots via the companion matrix of the monic rescaling.
fn polynomial_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>, FuncalcError> {
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(FuncalcError::NotHolomorphic {
            reason: "rational function has an identically zero denominator".into(),
        });
    }
    let degree = coeffs
        .iter()
        .rposition(|c| c.norm() > 1e-14 * scale)
        .expect("nonzero polynomial has a leading coefficient");
    if degree == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[degree];
    let mut companion = CMatrix::zeros(degree, degree);
    for i in 0..degree {
        companion[(i, degree - 1)] = -coeffs[i] / lead;
        if i + 1 < degree {
            companion[(i + 1, i)] = Complex64::new(1.0, 0.0);
        }
    }
    Ok(eig_general(&companion)?.eigenvalues)
}

/// Circle |z - center| = radius traversed counterclockwise.
#[derive(Debug, Clone, Copy)]
pub struct Contour {
    pub center: Complex64,
    pub radius: f64,
    pub n_nodes: usize,
}

impl Contour {
    pub fn new(center: Complex64, radius: f64) -> Contour {
        assert!(radius.is_finite() && radius > 0.0, "radius must be positive");
        Contour {
            center,
            radius,
            n_nodes: CONTOUR_DEFAULT_NODES,
        }
    }
}

/// Circle around the spectrum of `g` keeping the poles of `b` outside, both
/// with a 10% radial margin. The preferred radius 1.5 maxdist + 0.5 alpha is
/// clamped into the feasible window when poles crowd the spectrum.
pub fn auto_contour(g: &Generator, b: &HoloFunction) -> Result<Contour, FuncalcError> {
    let poles = b.poles()?;
    let spectrum = g.spectrum();
    let len = spectrum.len() as f64;
    let center = spectrum.iter().sum::<Complex64>() / len;
    let max_dist = spectrum
        .iter()
        .map(|l| (l - center).norm())
        .fold(0.0, f64::max);
    let min_pole = poles
        .iter()
        .map(|p| (p - center).norm())
        .fold(f64::INFINITY, f64::min);

    let lo = max_dist / INNER_MARGIN_FRAC;
    let hi = min_pole / OUTER_MARGIN_FRAC;
    if lo >= hi {
        return Err(FuncalcError::NoValidContour {
            reason: format!(
                "pole at distance {min_pole:.3e} from the spectral centroid cannot be \
                 separated from eigenvalues spread {max_dist:.3e}"
            ),
        });
    }
    // lo and hi already carry the 10% margins, so sitting on either bound
    // still leaves the full gap between circle and spectrum or pole.
    let preferred = 1.5 * max_dist + 0.5 * g.alpha();
    let radius = if hi.is_finite() {
        preferred.clamp(lo, hi)
    } else {
        preferred.max(lo)
    };
    Ok(Contour::new(center, radius.max(1e-12)))
}

fn check_margins(
    contour: &Contour,
    spectrum: &[Complex64],
    poles: &[Complex64],
) -> Result<(), FuncalcError> {
    let slack = 1e-9 * contour.radius;
    for l in spectrum {
        let d = (l - contour.center).norm();
        if d > INNER_MARGIN_FRAC * contour.radius + slack {
            return Err(FuncalcError::NoValidContour {
                reason: format!("eigenvalue {l} too close to the contour (distance {d:.3e})"),
            });
        }
    }
    for p in poles {
        let d = (p - contour.center).norm();
        if d < OUTER_MARGIN_FRAC * contour.radius - slack {
            return Err(FuncalcError::NoValidContour {
                reason: format!("pole {p} too close to the contour (distance {d:.3e})"),
            });
        }
    }
    Ok(())
}

/// One trapezoid pass with `m` nodes: (r/m) sum of e^{i theta} b(z) R(z).
fn contour_pass(
    matrix: &CMatrix,
    eval: &dyn Fn(Complex64) -> Complex64,
    contour: &Contour,
    m: usize,
) -> Result<CMatrix, FuncalcError> {
    let n = matrix.n_rows();
    let eye = CMatrix::identity(n);
    let mut acc = CMatrix::zeros(n, n);
    for node in 0..m {
        let theta = 2.0 * std::f64::consts::PI * node as f64 / m as f64;
        let unit = Complex64::new(theta.cos(), theta.sin());
        let z = contour.center + unit * contour.radius;
        let mut shifted = eye.scale(z);
        for i in 0..n {
            for j in 0..n {
                shifted[(i, j)] -= matrix[(i, j)];
            }
        }
        let resolvent = numlin::solve(&shifted, &eye)?;
        let weight = unit * eval(z) * (contour.radius / m as f64);
        acc = acc.add(&resolvent.scale(weight));
    }
    Ok(acc)
}

/// Doubles nodes until two successive passes agree to [`CONTOUR_TOL`].
fn converged_contour_integral(
    matrix: &CMatrix,
    eval: &dyn Fn(Complex64) -> Complex64,
    contour: &Contour,
) -> Result<CMatrix, FuncalcError> {
    let mut m = contour.n_nodes.max(8);
    let mut prev = contour_pass(matrix, eval, contour, m)?;
    let mut correction = f64::INFINITY;
    while m < CONTOUR_MAX_NODES {
        m *= 2;
        let next = contour_pass(matrix, eval, contour, m)?;
        correction = next.sub(&prev).frob_norm();
        if correction <= CONTOUR_TOL * next.frob_norm().max(1.0) {
            return Ok(next);
        }
        prev = next;
    }
    Err(FuncalcError::NoConvergence {
        max_nodes: m,
        last_correction: correction,
    })
}

/// Evaluates b(A) on the given contour after margin checks.
pub fn apply_calculus(
    g: &Generator,
    b: &HoloFunction,
    contour: &Contour,
) -> Result<CMatrix, FuncalcError> {
    let poles = b.poles()?;
    check_margins(contour, g.spectrum(), &poles)?;
    converged_contour_integral(g.matrix(), &|z| b.eval(z), contour)
}

/// Evaluates b(A) on an automatically placed contour.
pub fn apply_calculus_auto(g: &Generator, b: &HoloFunction) -> Result<CMatrix, FuncalcError> {
    let contour = auto_contour(g, b)?;
    apply_calculus(g, b, &contour)
}

/// Frobenius-norm defect of b1(A) b2(A) - (b1 b2)(A), all three evaluated on
/// one shared contour, relative to max(1, ||(b1 b2)(A)||).
pub fn homomorphism_defect(
    g: &Generator,
    b1: &HoloFunction,
    b2: &HoloFunction,
) -> Result<f64, FuncalcError> {
    let product = HoloFunction::product(b1.clone(), b2.clone());
    let contour = auto_contour(g, &product)?;
    let m1 = apply_calculus(g, b1, &contour)?;
    let m2 = apply_calculus(g, b2, &contour)?;
    let mp = apply_calculus(g, &product, &contour)?;
    let defect = m1.matmul(&m2).sub(&mp).frob_norm();
    Ok(defect / mp.frob_norm().max(1.0))
}

/// Riesz projection onto the invariant subspace of the eigenvalues whose
/// real part has the requested sign. The matrix must be bisectorial in the
/// weak sense that no eigenvalue sits within [`BISECT_AXIS_RTOL`] times the
/// spectral radius of the imaginary axis.
pub fn spectral_projection(m: &CMatrix, side: Sign) -> Result<CMatrix, FuncalcError> {
    assert!(m.is_square(), "projection needs a square matrix");
    let eigenvalues = eig_general(m)?.eigenvalues;
    let scale = eigenvalues
        .iter()
        .map(|l| l.norm())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    for l in &eigenvalues {
        if l.re.abs() <= BISECT_AXIS_RTOL * scale {
            return Err(FuncalcError::NotBisectorial { eigenvalue: *l });
        }
    }
    let selected: Vec<Complex64> = eigenvalues
        .iter()
        .copied()
        .filter(|l| l.re * side.factor() > 0.0)
        .collect();
    if selected.is_empty() {
        return Ok(CMatrix::zeros(m.n_rows(), m.n_cols()));
    }
    let others: Vec<Complex64> = eigenvalues
        .iter()
        .copied()
        .filter(|l| l.re * side.factor() < 0.0)
        .collect();

    let center = selected.iter().sum::<Complex64>() / selected.len() as f64;
    let max_dist = selected
        .iter()
        .map(|l| (l - center).norm())
        .fold(0.0, f64::max);
    let radius = if others.is_empty() {
        1.5 * max_dist + 0.5 * scale
    } else {
        let min_other = others
            .iter()
            .map(|l| (l - center).norm())
            .fold(f64::INFINITY, f64::min);
        let lo = max_dist / INNER_MARGIN_FRAC;
        let hi = min_other / OUTER_MARGIN_FRAC;
        if lo >= hi {
            return Err(FuncalcError::NoValidContour {
                reason: format!(
                    "eigenvalue clusters overlap: spread {max_dist:.3e} vs separation \
                     {min_other:.3e}"
                ),
            });
        }
        0.5 * (lo + hi)
    };
    let contour = Contour::new(center, radius.max(1e-12));
    converged_contour_integral(m, &|_| Complex64::new(1.0, 0.0), &contour)
}

/// Commutator residual of the operator pair twisted by constant matrices:
/// || T1 T2 f - T2 T1 f || / ||f|| where T1 = forward after b1, T2 = backward
/// after b2, both on the trapezoid direct path. The outer applications
/// integrate over the off-window continuations of the inner images; the
/// twists, being functions of the generator, commute with that propagation.
pub fn extended_commutator_residual_with(
    g: &Generator,
    f: &Signal,
    b1: &CMatrix,
    b2: &CMatrix,
) -> f64 {
    let op = MaxRegOperator::new(g, *f.grid());
    let mode = QuadratureMode::Trapezoid;
    let t2f = op.backward_direct(&f.apply_matrix(b2), mode).output;
    let t1t2 = op.forward_over_backward_image(&t2f.apply_matrix(b1), mode);
    let t1f = op.forward_direct(&f.apply_matrix(b1), mode).output;
    let t2t1 = op.backward_over_forward_image(&t1f.apply_matrix(b2), mode);
    let twisted = t1t2.sub(&t2t1);
    signal::l2_norm(&twisted) / signal::l2_norm(f).max(f64::MIN_POSITIVE)
}

/// As [`extended_commutator_residual_with`], with the twist matrices built
/// from holomorphic functions of the generator.
pub fn extended_commutator_residual(
    g: &Generator,
    f: &Signal,
    b1: &HoloFunction,
    b2: &HoloFunction,
) -> Result<f64, FuncalcError> {
    let m1 = apply_calculus_auto(g, b1)?;
    let m2 = apply_calculus_auto(g, b2)?;
    Ok(extended_commutator_residual_with(g, f, &m1, &m2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semigroup;
    use crate::signal::{preset_signal, Grid, PresetParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_sectorial(seed: u64, n: usize) -> Generator {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    a[(i, j)] = c(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3));
                }
            }
            a[(i, i)] = c(rng.gen_range(1.0..4.0), rng.gen_range(-0.5..0.5));
        }
        Generator::new(a).unwrap()
    }

    #[test]
    fn constant_one_returns_the_identity() {
        let g = random_sectorial(1, 4);
        let got = apply_calculus_auto(&g, &HoloFunction::ConstOne).unwrap();
        let defect = got.sub(&CMatrix::identity(4)).frob_norm();
        assert!(defect <= 1e-10, "identity defect {defect:.3e}");
    }

    #[test]
    fn exp_scale_matches_pade_semigroup() {
        // Contour quadrature and scaling-and-squaring are fully independent
        // evaluations of e^{-tA}; agreement certifies both.
        let g = random_sectorial(2, 5);
        for t in [0.1, 0.5, 1.5] {
            let via_contour = apply_calculus_auto(&g, &HoloFunction::ExpScale { t }).unwrap();
            let via_pade = semigroup::semigroup_at(&g, t);
            let defect = via_contour.sub(&via_pade).frob_norm() / via_pade.frob_norm();
            assert!(defect <= 1e-9, "t = {t}: defect {defect:.3e}");
        }
    }

    #[test]
    fn resolvent_frac_matches_multiplier() {
        let g = random_sectorial(3, 3);
        for (sign, sigma) in [(Sign::Plus, 2.0), (Sign::Minus, 7.5), (Sign::Plus, 0.4)] {
            let via_contour =
                apply_calculus_auto(&g, &HoloFunction::ResolventFrac { sign, sigma }).unwrap();
            let direct = semigroup::multiplier(&g, sign, sigma).unwrap().value;
            let defect = via_contour.sub(&direct).frob_norm() / direct.frob_norm();
            assert!(defect <= 1e-10, "sign {sign} sigma {sigma}: defect {defect:.3e}");
        }
    }

    #[test]
    fn rational_matches_shifted_inverse() {
        // b(z) = 1 / (z + 2) has its pole at -2, far left of the spectrum.
        let g = random_sectorial(4, 4);
        let b = HoloFunction::Rational {
            numerator: vec![c(1.0, 0.0)],
            denominator: vec![c(2.0, 0.0), c(1.0, 0.0)],
        };
        let via_contour = apply_calculus_auto(&g, &b).unwrap();
        let mut shifted = g.matrix().clone();
        for i in 0..4 {
            shifted[(i, i)] += 2.0;
        }
        let direct = numlin::inverse(&shifted).unwrap();
        let defect = via_contour.sub(&direct).frob_norm() / direct.frob_norm();
        assert!(defect <= 1e-10, "defect {defect:.3e}");
    }

    #[test]
    fn polynomial_roots_recovers_known_factors() {
        // (z - 1)(z - 2i) = z^2 - (1 + 2i) z + 2i.
        let mut roots =
            polynomial_roots(&[c(0.0, 2.0), c(-1.0, -2.0), c(1.0, 0.0)]).unwrap();
        roots.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        assert!((roots[0] - c(0.0, 2.0)).norm() <= 1e-10);
        assert!((roots[1] - c(1.0, 0.0)).norm() <= 1e-10);
    }

    #[test]
    fn halfplane_indicator_is_rejected_by_the_contour_path() {
        let g = random_sectorial(5, 2);
        let b = HoloFunction::HalfplaneIndicator { side: Sign::Plus };
        match apply_calculus_auto(&g, &b) {
            Err(FuncalcError::NotHolomorphic { .. }) => {}
            other => panic!("expected NotHolomorphic, got {other:?}"),
        }
    }

    #[test]
    fn contour_too_close_to_a_pole_is_rejected() {
        let g = random_sectorial(6, 2);
        // Pole right at the spectral centroid distance: infeasible.
        let center = g.spectrum().iter().sum::<Complex64>() / 2.0;
        let b = HoloFunction::Rational {
            numerator: vec![c(1.0, 0.0)],
            denominator: vec![-center, c(1.0, 0.0)],
        };
        match auto_contour(&g, &b) {
            Err(FuncalcError::NoValidContour { .. }) => {}
            other => panic!("expected NoValidContour, got {other:?}"),
        }
    }

    #[test]
    fn homomorphism_defect_is_tiny_for_builtin_pairs() {
        let g = random_sectorial(7, 4);
        let pairs: Vec<(HoloFunction, HoloFunction)> = vec![
            (HoloFunction::ConstOne, HoloFunction::ExpScale { t: 0.7 }),
            (
                HoloFunction::ResolventFrac { sign: Sign::Plus, sigma: 3.0 },
                HoloFunction::ResolventFrac { sign: Sign::Minus, sigma: 1.2 },
            ),
            (
                HoloFunction::ExpScale { t: 0.3 },
                HoloFunction::Rational {
                    numerator: vec![c(0.0, 0.0), c(1.0, 0.0)],
                    denominator: vec![c(3.0, 0.0), c(1.0, 0.0)],
                },
            ),
        ];
        for (b1, b2) in &pairs {
            let defect = homomorphism_defect(&g, b1, b2).unwrap();
            assert!(defect <= 1e-9, "defect {defect:.3e} for {b1:?} * {b2:?}");
        }
    }

    #[test]
    fn spectral_projection_splits_a_diagonal_sign_pattern() {
        let m = CMatrix::from_real_rows(&[vec![1.0, 0.0], vec![0.0, -1.0]]);
        let plus = spectral_projection(&m, Sign::Plus).unwrap();
        let minus = spectral_projection(&m, Sign::Minus).unwrap();
        let want_plus = CMatrix::from_real_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]);
        let want_minus = CMatrix::from_real_rows(&[vec![0.0, 0.0], vec![0.0, 1.0]]);
        assert!(plus.sub(&want_plus).frob_norm() <= 1e-10);
        assert!(minus.sub(&want_minus).frob_norm() <= 1e-10);
    }

    #[test]
    fn spectral_projection_matches_offdiagonal_closed_form() {
        // [[0, a], [b, 0]] with a = 2, b = 1/2 has eigenvalues +-1 and
        // projections (I +- M)/2 where M = [[0, a], [b, 0]] / sqrt(ab):
        // P_+ = [[1/2, 1], [1/4, 1/2]].
        let m = CMatrix::from_real_rows(&[vec![0.0, 2.0], vec![0.5, 0.0]]);
        let plus = spectral_projection(&m, Sign::Plus).unwrap();
        let want = CMatrix::from_real_rows(&[vec![0.5, 1.0], vec![0.25, 0.5]]);
        assert!(plus.sub(&want).frob_norm() <= 1e-9, "got {plus:?}");
    }

    #[test]
    fn spectral_projections_are_idempotent_and_resolve_the_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..10 {
            let n = 4;
            let mut m = CMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        m[(i, j)] = c(rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2));
                    }
                }
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                m[(i, i)] = c(sign * rng.gen_range(1.0..3.0), rng.gen_range(-0.5..0.5));
            }
            let plus = spectral_projection(&m, Sign::Plus).unwrap();
            let minus = spectral_projection(&m, Sign::Minus).unwrap();
            let idem = plus.matmul(&plus).sub(&plus).frob_norm();
            assert!(idem <= 1e-9, "trial {trial}: idempotency defect {idem:.3e}");
            let resolution = plus.add(&minus).sub(&CMatrix::identity(n)).frob_norm();
            assert!(resolution <= 1e-9, "trial {trial}: resolution defect {resolution:.3e}");
            let commute = plus.matmul(&m).sub(&m.matmul(&plus)).frob_norm();
            assert!(commute <= 1e-9, "trial {trial}: commutation defect {commute:.3e}");
        }
    }

    #[test]
    fn projection_of_a_one_sided_spectrum_is_trivial() {
        let m = CMatrix::from_real_rows(&[vec![1.0, 0.2], vec![0.0, 2.0]]);
        let plus = spectral_projection(&m, Sign::Plus).unwrap();
        assert!(plus.sub(&CMatrix::identity(2)).frob_norm() <= 1e-9);
        let minus = spectral_projection(&m, Sign::Minus).unwrap();
        assert!(minus.frob_norm() <= 1e-12);
    }

    #[test]
    fn axis_touching_spectrum_is_rejected() {
        let m = CMatrix::from_rows(&[vec![c(0.0, 1.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]]);
        match spectral_projection(&m, Sign::Plus) {
            Err(FuncalcError::NotBisectorial { .. }) => {}
            other => panic!("expected NotBisectorial, got {other:?}"),
        }
    }

    #[test]
    fn twisted_commutator_stays_small_for_holomorphic_twists() {
        let g = random_sectorial(13, 3);
        let grid = Grid::new(10.0, 512).unwrap();
        let f = preset_signal("gauss_bump", &grid, 3, &PresetParams::default(), 17).unwrap();
        let b1 = HoloFunction::ExpScale { t: 0.4 };
        let b2 = HoloFunction::ResolventFrac { sign: Sign::Minus, sigma: 2.0 };
        let residual = extended_commutator_residual(&g, &f, &b1, &b2).unwrap();
        assert!(residual <= 5e-3, "twisted residual {residual:.3e}");
    }

    #[test]
    fn twisted_commutator_accepts_matching_riesz_projections() {
        // Two spectral clusters around 1 and 4; shifting by 2.5 gives a
        // bisectorial matrix whose Riesz projections twist the pair.
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let n = 4;
        let mut a = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    a[(i, j)] = c(rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1));
                }
            }
            let base = if i < 2 { 1.0 } else { 4.0 };
            a[(i, i)] = c(base + rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2));
        }
        let g = Generator::new(a.clone()).unwrap();
        let mut shifted = a;
        for i in 0..n {
            shifted[(i, i)] -= 2.5;
        }
        let p = spectral_projection(&shifted, Sign::Plus).unwrap();
        let grid = Grid::new(12.0, 512).unwrap();
        let f = preset_signal("randsmooth", &grid, n, &PresetParams::default(), 23).unwrap();
        let residual = extended_commutator_residual_with(&g, &f, &p, &p);
        assert!(residual <= 5e-3, "projection-twisted residual {residual:.3e}");
    }
}
