//! Built-in generator families.

use super::config::{CliError, GeneratorSpec};
use crate::numlin::{self, CMatrix};
use crate::semigroup::Generator;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// random_sectorial: cap on cond(V) of the similarity transform.
pub const SIMILARITY_COND_CAP: f64 = 20.0;
/// random_sectorial: default half-angle of the eigenvalue sector.
pub const DEFAULT_SECTOR_ANGLE: f64 = std::f64::consts::FRAC_PI_4;

/// Dirichlet second-difference matrix on n interior points of the unit
/// interval: tridiagonal (2, -1) scaled by (n+1)^2. Self-adjoint positive.
pub fn laplacian_1d(n: usize) -> Result<Generator, CliError> {
    if n == 0 || n > 64 {
        return Err(CliError::Config(format!("laplacian_1d size {n} outside [1, 64]")));
    }
    let scale = ((n + 1) * (n + 1)) as f64;
    let mut a = CMatrix::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = Complex64::new(2.0 * scale, 0.0);
        if i + 1 < n {
            a[(i, i + 1)] = Complex64::new(-scale, 0.0);
            a[(i + 1, i)] = Complex64::new(-scale, 0.0);
        }
    }
    Generator::new(a).map_err(|e| CliError::Numerical(e.to_string()))
}

/// V diag(lambda) V^{-1} with eigenvalues drawn in the sector
/// |arg lambda| <= angle, Re lambda in [0.5, 4], and V = I + 0.3 R redrawn
/// until cond(V) <= 20. Deterministic in the seed.
pub fn random_sectorial(n: usize, seed: u64, angle: f64) -> Result<Generator, CliError> {
    if n == 0 || n > 64 {
        return Err(CliError::Config(format!(
            "random_sectorial size {n} outside [1, 64]"
        )));
    }
    if !(angle >= 0.0 && angle < std::f64::consts::FRAC_PI_2) {
        return Err(CliError::Config(format!(
            "random_sectorial angle {angle} outside [0, pi/2)"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eigenvalues: Vec<Complex64> = (0..n)
        .map(|_| {
            let re = rng.gen_range(0.5..4.0);
            let phi = if angle > 0.0 { rng.gen_range(-angle..angle) } else { 0.0 };
            Complex64::new(re, re * phi.tan())
        })
        .collect();
    for attempt in 0..64 {
        let mut v = CMatrix::identity(n);
        for i in 0..n {
            for j in 0..n {
                v[(i, j)] += Complex64::new(
                    0.3 * rng.gen_range(-1.0..1.0),
                    0.3 * rng.gen_range(-1.0..1.0),
                );
            }
        }
        let v_inv = match numlin::inverse(&v) {
            Ok(inv) => inv,
            Err(_) => continue,
        };
        let cond = v.op_norm2() * v_inv.op_norm2();
        if cond > SIMILARITY_COND_CAP {
            continue;
        }
        let a = v.matmul(&CMatrix::from_diag(&eigenvalues)).matmul(&v_inv);
        return Generator::new(a).map_err(|e| {
            CliError::Numerical(format!("random_sectorial attempt {attempt}: {e}"))
        });
    }
    Err(CliError::Numerical(
        "random_sectorial: no similarity with cond <= 20 in 64 draws".into(),
    ))
}

/// Identity plus `coupling` on the superdiagonal: spectrum {1}, maximally
/// non-normal for large coupling.
pub fn jordan_like(n: usize, coupling: f64) -> Result<Generator, CliError> {
    if n == 0 || n > 64 {
        return Err(CliError::Config(format!("jordan_like size {n} outside [1, 64]")));
    }
    if !coupling.is_finite() {
        return Err(CliError::Config(format!("jordan_like coupling {coupling} not finite")));
    }
    let mut a = CMatrix::identity(n);
    for i in 0..n - 1 {
        a[(i, i + 1)] = Complex64::new(coupling, 0.0);
    }
    Generator::new(a).map_err(|e| CliError::Numerical(e.to_string()))
}

/// 1 x 1 generator with the given eigenvalue.
pub fn scalar_generator(value: Complex64) -> Result<Generator, CliError> {
    Generator::new(CMatrix::from_rows(&[vec![value]]))
        .map_err(|e| CliError::Numerical(e.to_string()))
}

/// Resolves a generator spec; `master_seed` fills a missing seed.
pub fn preset_generator(spec: &GeneratorSpec, master_seed: u64) -> Result<Generator, CliError> {
    if let Some(path) = &spec.file {
        let a = super::config::load_matrix(path)?;
        return Generator::new(a).map_err(|e| CliError::Numerical(e.to_string()));
    }
    let preset = spec.preset.as_deref().expect("validated: preset xor file");
    let seed = spec.seed.unwrap_or(master_seed);
    match preset {
        "laplacian_1d" => laplacian_1d(spec.n.unwrap_or(8)),
        "random_sectorial" => random_sectorial(
            spec.n.unwrap_or(4),
            seed,
            spec.angle.unwrap_or(DEFAULT_SECTOR_ANGLE),
        ),
        "jordan_like" => jordan_like(spec.n.unwrap_or(2), spec.coupling.unwrap_or(10.0)),
        "scalar" => scalar_generator(Complex64::new(
            spec.re.unwrap_or(1.0),
            spec.im.unwrap_or(0.0),
        )),
        other => Err(CliError::Config(format!("unknown generator preset {other}"))),
    }
}
