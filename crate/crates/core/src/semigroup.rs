//! Sectorial generators and the analytic semigroup attached to them.
//!
//! A validated [`Generator`] wraps a matrix A whose spectrum lies strictly
//! inside the open right half-plane and inside a sector of half-angle below
//! pi/2. The module evaluates e^{-tA}, resolvents (zI + A)^{-1}, the
//! convolution kernel A e^{-tA} with its zero extension to t <= 0, and the
//! frequency multipliers A (+-i sigma + A)^{-1} used by the Fourier path.

use crate::numlin::{self, eig_general, CMatrix, NumlinError};
use num_complex::Complex64;
use thiserror::Error;

/// Margin below pi/2 required of the spectral sector half-angle.
pub const SECTOR_ANGLE_MARGIN: f64 = 1e-9;

/// Minimal admissible distance between a resolvent point and the spectrum.
pub const RESOLVENT_POLE_MARGIN: f64 = 1e-10;

/// One-norm threshold below which the degree-13 Pade approximant is applied
/// without scaling.
pub const EXPM_SCALING_THRESHOLD: f64 = 5.4;

#[derive(Debug, Error)]
pub enum SemigroupError {
    #[error("generator has an eigenvalue {eigenvalue} with non-positive real part; the forward problem is not uniformly stable")]
    NotStable { eigenvalue: Complex64 },
    #[error("generator has an eigenvalue {eigenvalue} at sector half-angle {angle:.12} >= {limit:.12}; not sectorial")]
    NotSectorial { eigenvalue: Complex64, angle: f64, limit: f64 },
    #[error("resolvent point {z} is within {distance:.3e} of the spectrum (minimum {margin:.1e})")]
    ResolventNearPole { z: Complex64, distance: f64, margin: f64 },
    #[error(transparent)]
    Numlin(#[from] NumlinError),
}

/// Direction of the half-line integral: `Plus` is the causal operator acting
/// on the past, `Minus` the anticausal one acting on the future.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    /// Multiplies sigma in the symbol A (factor * i * sigma + A)^{-1}.
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

impl std::fmt::Display for Sign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Sign::Plus => write!(f, "+"),
            Sign::Minus => write!(f, "-"),
        }
    }
}

/// A matrix generator together with its validated spectral data.
#[derive(Debug, Clone)]
pub struct Generator {
    a: CMatrix,
    spectrum: Vec<Complex64>,
    alpha: f64,
    sector_angle: f64,
    is_selfadjoint: bool,
    m_bound: f64,
}

impl Generator {
    /// Validates the matrix and records the spectral data used everywhere
    /// else: spectral abscissa, sector half-angle, self-adjointness flag and
    /// the uniform bound on ||e^{-tA}|| sampled over [0, 10/alpha].
    pub fn new(a: CMatrix) -> Result<Generator, SemigroupError> {
        assert!(a.is_square(), "generator matrix must be square");
        assert!(a.is_finite(), "generator matrix must have finite entries");
        let spectrum = eig_general(&a)?.eigenvalues;

        for l in &spectrum {
            if l.re < 0.0 {
                return Err(SemigroupError::NotStable { eigenvalue: *l });
            }
        }
        let limit = std::f64::consts::FRAC_PI_2 - SECTOR_ANGLE_MARGIN;
        let mut sector_angle: f64 = 0.0;
        for l in &spectrum {
            let angle = l.im.atan2(l.re).abs();
            if angle >= limit {
                return Err(SemigroupError::NotSectorial {
                    eigenvalue: *l,
                    angle,
                    limit,
                });
            }
            sector_angle = sector_angle.max(angle);
        }
        let alpha = spectrum.iter().map(|l| l.re).fold(f64::INFINITY, f64::min);
        if !(alpha > 0.0) {
            let worst = spectrum
                .iter()
                .cloned()
                .min_by(|x, y| x.re.partial_cmp(&y.re).unwrap())
                .unwrap_or_else(|| Complex64::new(0.0, 0.0));
            return Err(SemigroupError::NotStable { eigenvalue: worst });
        }

        let fro = a.frob_norm();
        let is_selfadjoint = a.sub(&a.adjoint()).frob_norm() <= 1e-12 * fro;

        // Uniform semigroup bound over one decay horizon, sampled at t = 0
        // and 32 log-spaced times.
        let t_max = 10.0 / alpha;
        let mut m_bound: f64 = 1.0;
        for i in 0..32 {
            let t = t_max * 10f64.powf(-4.0 * (1.0 - i as f64 / 31.0));
            let norm = expm(&a.scale(Complex64::new(-t, 0.0))).op_norm2();
            m_bound = m_bound.max(norm);
        }

        Ok(Generator {
            a,
            spectrum,
            alpha,
            sector_angle,
            is_selfadjoint,
            m_bound,
        })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.a
    }

    pub fn dim(&self) -> usize {
        self.a.n_rows()
    }

    pub fn spectrum(&self) -> &[Complex64] {
        &self.spectrum
    }

    /// Spectral abscissa: the smallest real part over the spectrum.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn sector_angle(&self) -> f64 {
        self.sector_angle
    }

    pub fn is_selfadjoint(&self) -> bool {
        self.is_selfadjoint
    }

    /// Recorded maximum of ||e^{-tA}|| over the sampled decay horizon.
    pub fn m_bound(&self) -> f64 {
        self.m_bound
    }

    pub fn spectral_radius(&self) -> f64 {
        self.spectrum.iter().map(|l| l.norm()).fold(0.0, f64::max)
    }

    /// Generator built from the conjugate transpose of this matrix.
    pub fn adjoint_generator(&self) -> Result<Generator, SemigroupError> {
        Generator::new(self.a.adjoint())
    }
}

/// e^{-tA} by scaling-and-squaring with the diagonal degree-13 Pade
/// approximant. Exactly the identity at t = 0.
pub fn semigroup_at(g: &Generator, t: f64) -> CMatrix {
    assert!(t.is_finite() && t >= 0.0, "time must be finite and non-negative");
    if t == 0.0 {
        return CMatrix::identity(g.dim());
    }
    expm(&g.matrix().scale(Complex64::new(-t, 0.0)))
}

/// Matrix exponential e^M. Coefficients are the diagonal degree-13 Pade
/// numerator coefficients; see Higham, "The scaling and squaring method for
/// the matrix exponential revisited" (2005).
pub fn expm(m: &CMatrix) -> CMatrix {
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    let n = m.n_rows();
    let eta = m.one_norm();
    let s = if eta > EXPM_SCALING_THRESHOLD {
        (eta / EXPM_SCALING_THRESHOLD).log2().ceil() as u32
    } else {
        0
    };
    let a = m.scale(Complex64::new(0.5_f64.powi(s as i32), 0.0));

    let ident = CMatrix::identity(n);
    let a2 = a.matmul(&a);
    let a4 = a2.matmul(&a2);
    let a6 = a2.matmul(&a4);

    let re = |x: f64| Complex64::new(x, 0.0);
    let u_inner = a6
        .scale(re(B[13]))
        .add(&a4.scale(re(B[11])))
        .add(&a2.scale(re(B[9])));
    let u_poly = a6
        .matmul(&u_inner)
        .add(&a6.scale(re(B[7])))
        .add(&a4.scale(re(B[5])))
        .add(&a2.scale(re(B[3])))
        .add(&ident.scale(re(B[1])));
    let u = a.matmul(&u_poly);
    let v_inner = a6
        .scale(re(B[12]))
        .add(&a4.scale(re(B[10])))
        .add(&a2.scale(re(B[8])));
    let v = a6
        .matmul(&v_inner)
        .add(&a6.scale(re(B[6])))
        .add(&a4.scale(re(B[4])))
        .add(&a2.scale(re(B[2])))
        .add(&ident.scale(re(B[0])));

    let num = v.add(&u);
    let den = v.sub(&u);
    let mut f = numlin::solve(&den, &num).expect("Pade denominator is well conditioned after scaling");
    for _ in 0..s {
        f = f.matmul(&f);
    }
    f
}

/// Resolvent (zI + A)^{-1}. The point -z must stay clear of the spectrum.
pub fn resolvent(g: &Generator, z: Complex64) -> Result<CMatrix, SemigroupError> {
    let distance = g
        .spectrum()
        .iter()
        .map(|l| (l + z).norm())
        .fold(f64::INFINITY, f64::min);
    if distance < RESOLVENT_POLE_MARGIN {
        return Err(SemigroupError::ResolventNearPole {
            z,
            distance,
            margin: RESOLVENT_POLE_MARGIN,
        });
    }
    let n = g.dim();
    let mut shifted = g.matrix().clone();
    for i in 0..n {
        shifted[(i, i)] += z;
    }
    Ok(numlin::solve(&shifted, &CMatrix::identity(n))?)
}

/// Frequency multiplier A (s i sigma + A)^{-1} for s in {+1, -1}.
#[derive(Debug, Clone)]
pub struct MultiplierSymbol {
    pub sign: Sign,
    pub sigma: f64,
    pub value: CMatrix,
}

/// Evaluates the multiplier through the stabilized identity
/// A (z + A)^{-1} = I - z (z + A)^{-1} with z = sign * i * sigma, which stays
/// accurate for large |sigma| where the resolvent itself is tiny.
pub fn multiplier(g: &Generator, sign: Sign, sigma: f64) -> Result<MultiplierSymbol, SemigroupError> {
    assert!(sigma.is_finite(), "sigma must be finite");
    let n = g.dim();
    if sigma == 0.0 {
        return Ok(MultiplierSymbol {
            sign,
            sigma,
            value: CMatrix::identity(n),
        });
    }
    let z = Complex64::new(0.0, sign.factor() * sigma);
    let res = resolvent(g, z)?;
    let value = CMatrix::identity(n).sub(&res.scale(z));
    Ok(MultiplierSymbol { sign, sigma, value })
}

/// Convolution kernel A e^{-tA} for t > 0, extended by zero to t <= 0.
pub fn kernel_eval(g: &Generator, t: f64) -> CMatrix {
    assert!(t.is_finite(), "time must be finite");
    if t <= 0.0 {
        return CMatrix::zeros(g.dim(), g.dim());
    }
    g.matrix().matmul(&semigroup_at(g, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn scalar_gen(l: Complex64) -> Generator {
        Generator::new(CMatrix::from_rows(&[vec![l]])).unwrap()
    }

    fn random_moderate_generator(seed: u64, n: usize) -> Generator {
        // Diagonally dominant with positive real diagonal: comfortably
        // sectorial without needing the CLI preset machinery.
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
    fn rejects_negative_real_eigenvalue_as_unstable() {
        let err = Generator::new(CMatrix::from_real_rows(&[vec![-1.0]])).unwrap_err();
        assert!(matches!(err, SemigroupError::NotStable { .. }), "{err}");
    }

    #[test]
    fn rejects_rotation_matrix_as_not_sectorial() {
        // Eigenvalues +-i sit exactly on the sector boundary.
        let a = CMatrix::from_real_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]);
        let err = Generator::new(a).unwrap_err();
        match err {
            SemigroupError::NotSectorial { eigenvalue, .. } => {
                assert!((eigenvalue.norm() - 1.0).abs() < 1e-9);
                assert!(eigenvalue.re.abs() < 1e-9);
            }
            other => panic!("expected NotSectorial, got {other}"),
        }
    }

    #[test]
    fn records_alpha_angle_and_selfadjointness() {
        let a = CMatrix::from_real_rows(&[vec![2.0, -1.0], vec![-1.0, 2.0]]);
        let g = Generator::new(a).unwrap();
        assert!((g.alpha() - 1.0).abs() < 1e-9);
        assert!(g.sector_angle().abs() < 1e-9);
        assert!(g.is_selfadjoint());
        // Hermitian positive definite: the semigroup is a contraction.
        assert!((g.m_bound() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn semigroup_at_zero_is_exactly_identity() {
        let g = random_moderate_generator(3, 4);
        let e0 = semigroup_at(&g, 0.0);
        let n = g.dim();
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_eq!(e0[(i, j)], c(want, 0.0));
            }
        }
    }

    #[test]
    fn jordan_block_exponential_matches_closed_form() {
        // exp(-t(I + cN)) = e^{-t} (I - c t N) for the nilpotent N = e_12.
        let coupling = 10.0;
        let a = CMatrix::from_real_rows(&[vec![1.0, coupling], vec![0.0, 1.0]]);
        let g = Generator::new(a).unwrap();
        for t in [0.05, 0.3, 1.0, 2.7] {
            let got = semigroup_at(&g, t);
            let decay = (-t as f64).exp();
            let want = CMatrix::from_real_rows(&[
                vec![decay, -coupling * t * decay],
                vec![0.0, decay],
            ]);
            let rel = got.sub(&want).frob_norm() / want.frob_norm();
            assert!(rel <= 1e-12, "t = {t}: defect {rel:.3e}");
        }
    }

    #[test]
    fn semigroup_law_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for seed in 0..6u64 {
            let g = random_moderate_generator(seed, 3);
            for _ in 0..5 {
                let t = rng.gen_range(0.0..5.0);
                let s = rng.gen_range(0.0..5.0);
                let joint = semigroup_at(&g, t + s);
                let split = semigroup_at(&g, t).matmul(&semigroup_at(&g, s));
                let rel = joint.sub(&split).frob_norm() / joint.frob_norm().max(1e-300);
                assert!(rel <= 1e-9, "seed {seed}: law defect {rel:.3e}");
            }
        }
    }

    #[test]
    fn difference_quotient_recovers_generator_to_first_order() {
        let g = random_moderate_generator(21, 4);
        let a = g.matrix();
        let a_norm = a.op_norm2();
        for h in [1e-3, 1e-4, 1e-5] {
            let e = semigroup_at(&g, h);
            let quotient = CMatrix::identity(g.dim())
                .sub(&e)
                .scale(c(1.0 / h, 0.0));
            let defect = quotient.sub(a).op_norm2();
            assert!(
                defect <= 0.5 * a_norm * a_norm * h,
                "h = {h}: defect {defect:.3e} above {:.3e}",
                0.5 * a_norm * a_norm * h
            );
        }
    }

    #[test]
    fn resolvent_commutes_with_semigroup() {
        let g = random_moderate_generator(5, 3);
        let r = resolvent(&g, c(0.7, 0.3)).unwrap();
        let e = semigroup_at(&g, 1.3);
        let defect = r.matmul(&e).sub(&e.matmul(&r)).frob_norm();
        assert!(defect <= 1e-9, "commutation defect {defect:.3e}");
    }

    #[test]
    fn resolvent_rejects_points_near_spectrum() {
        let g = scalar_gen(c(1.0, 0.0));
        let err = resolvent(&g, c(-1.0, 0.0)).unwrap_err();
        assert!(matches!(err, SemigroupError::ResolventNearPole { .. }));
    }

    #[test]
    fn multiplier_at_zero_is_identity_and_satisfies_identity() {
        let g = random_moderate_generator(9, 3);
        let m0 = multiplier(&g, Sign::Plus, 0.0).unwrap();
        assert_eq!(m0.value, CMatrix::identity(3));
        for sigma in [0.3, 2.0, 50.0, 1e4] {
            for sign in [Sign::Plus, Sign::Minus] {
                let m = multiplier(&g, sign, sigma).unwrap();
                let z = c(0.0, sign.factor() * sigma);
                let res = resolvent(&g, z).unwrap();
                // value + z (zI + A)^{-1} must reproduce the identity.
                let defect = m
                    .value
                    .add(&res.scale(z))
                    .sub(&CMatrix::identity(3))
                    .frob_norm();
                assert!(defect <= 1e-10, "sigma {sigma}: defect {defect:.3e}");
                // And value must equal A (zI + A)^{-1} computed directly.
                let direct = g.matrix().matmul(&res);
                let rel = m.value.sub(&direct).frob_norm() / direct.frob_norm().max(1e-300);
                assert!(rel <= 1e-10, "sigma {sigma}: direct defect {rel:.3e}");
            }
        }
    }

    #[test]
    fn hermitian_multiplier_norm_matches_scalar_formula() {
        // For self-adjoint positive A the multiplier norm is
        // max over eigenvalues of lambda / sqrt(sigma^2 + lambda^2).
        let a = CMatrix::from_real_rows(&[vec![2.0, -1.0], vec![-1.0, 2.0]]);
        let g = Generator::new(a).unwrap();
        for sigma in [0.0, 0.5, 3.0, 40.0] {
            let m = multiplier(&g, Sign::Plus, sigma).unwrap();
            let want = g
                .spectrum()
                .iter()
                .map(|l| l.re / (sigma * sigma + l.re * l.re).sqrt())
                .fold(0.0_f64, f64::max);
            assert!(
                (m.value.op_norm2() - want).abs() <= 1e-10,
                "sigma {sigma}"
            );
        }
    }

    #[test]
    fn multipliers_of_opposite_sign_commute() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for case in 0..100u64 {
            let g = random_moderate_generator(case, 1 + (case % 4) as usize);
            let sigma = 10f64.powf(rng.gen_range(-2.0..3.0));
            let mp = multiplier(&g, Sign::Plus, sigma).unwrap().value;
            let mm = multiplier(&g, Sign::Minus, sigma).unwrap().value;
            let defect = mp.matmul(&mm).sub(&mm.matmul(&mp)).frob_norm();
            assert!(defect <= 1e-10, "case {case}: commutator {defect:.3e}");
        }
    }

    #[test]
    fn multiplier_product_equals_squared_resolvent_formula() {
        // m_+(sigma) m_-(sigma) = A^2 (sigma^2 + A^2)^{-1}, checked through
        // an independent linear solve.
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        for case in 0..20u64 {
            let n = 1 + (case % 4) as usize;
            let g = random_moderate_generator(1000 + case, n);
            let sigma = 10f64.powf(rng.gen_range(-1.0..2.0));
            let mp = multiplier(&g, Sign::Plus, sigma).unwrap().value;
            let mm = multiplier(&g, Sign::Minus, sigma).unwrap().value;
            let prod = mp.matmul(&mm);

            let a2 = g.matrix().matmul(g.matrix());
            let mut shifted = a2.clone();
            for i in 0..n {
                shifted[(i, i)] += c(sigma * sigma, 0.0);
            }
            let want = numlin::solve(&shifted, &a2).unwrap();
            let rel = prod.sub(&want).frob_norm() / want.frob_norm().max(1e-300);
            assert!(rel <= 1e-9, "case {case}: defect {rel:.3e}");
        }
    }

    #[test]
    fn kernel_is_zero_on_the_closed_negative_half_line() {
        let g = random_moderate_generator(17, 3);
        for t in [-2.0, -1e-9, 0.0] {
            assert_eq!(kernel_eval(&g, t), CMatrix::zeros(3, 3));
        }
        let k = kernel_eval(&g, 0.5);
        let want = g.matrix().matmul(&semigroup_at(&g, 0.5));
        assert!(k.sub(&want).frob_norm() <= 1e-12 * want.frob_norm());
    }
}
