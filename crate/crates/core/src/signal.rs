//! Time grids, vector-valued signals, quadrature and the discrete Fourier
//! transform.
//!
//! All quadrature on [0, T] is composite trapezoid over the nodes t_j = j h,
//! j = 0..N-1, with the convention that the signal vanishes at the phantom
//! node t_N = T. The node t = 0 therefore carries weight h/2 and every other
//! stored node weight h.

use crate::numlin::{CMatrix, CVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MIN_SAMPLES: usize = 64;
pub const MAX_SAMPLES: usize = 1 << 20;

#[derive(Debug, Error)]
pub enum SignalError {
    #[error("invalid grid: {reason}")]
    BadGrid { reason: String },
    #[error("transform length {len} is not a power of two")]
    NotPowerOfTwo { len: usize },
    #[error("unknown signal preset '{name}'")]
    UnknownPreset { name: String },
    #[error("invalid preset parameter: {reason}")]
    BadParameter { reason: String },
}

/// Uniform grid on [0, T): N samples t_j = j h with h = T / N. N is a power
/// of two, so h is an exact binary scaling of T and h * N == T exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    horizon: f64,
    n_samples: usize,
}

impl Grid {
    pub fn new(horizon: f64, n_samples: usize) -> Result<Grid, SignalError> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(SignalError::BadGrid {
                reason: format!("horizon T = {horizon} must be finite and positive"),
            });
        }
        if !n_samples.is_power_of_two() || !(MIN_SAMPLES..=MAX_SAMPLES).contains(&n_samples) {
            return Err(SignalError::BadGrid {
                reason: format!(
                    "N = {n_samples} must be a power of two in [{MIN_SAMPLES}, {MAX_SAMPLES}]"
                ),
            });
        }
        Ok(Grid { horizon, n_samples })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.n_samples as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        j as f64 * self.step()
    }

    /// Trapezoid weight of node j under the f(T) = 0 convention.
    pub fn weight(&self, j: usize) -> f64 {
        if j == 0 {
            0.5 * self.step()
        } else {
            self.step()
        }
    }
}

/// Frequencies of the zero-padded transform of length L = 2N: the k-th bin
/// carries sigma_k = 2 pi k~ / (L h) with k~ the signed alias of k in
/// [-L/2, L/2).
#[derive(Debug, Clone, Copy)]
pub struct FrequencyGrid {
    len: usize,
    step: f64,
}

impl FrequencyGrid {
    pub fn for_padded(grid: &Grid) -> FrequencyGrid {
        FrequencyGrid {
            len: 2 * grid.n_samples(),
            step: grid.step(),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn signed_alias(&self, k: usize) -> i64 {
        debug_assert!(k < self.len);
        if k < self.len / 2 {
            k as i64
        } else {
            k as i64 - self.len as i64
        }
    }

    pub fn sigma(&self, k: usize) -> f64 {
        2.0 * std::f64::consts::PI * self.signed_alias(k) as f64 / (self.len as f64 * self.step)
    }
}

/// N complex vectors of a fixed dimension sampled on a [`Grid`], stored
/// row-major by time index.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    grid: Grid,
    dim: usize,
    samples: Vec<Complex64>,
}

impl Signal {
    pub fn zeros(grid: Grid, dim: usize) -> Signal {
        assert!(dim > 0, "signal dimension must be positive");
        Signal {
            grid,
            dim,
            samples: vec![Complex64::new(0.0, 0.0); grid.n_samples() * dim],
        }
    }

    pub fn from_fn(grid: Grid, dim: usize, mut f: impl FnMut(f64) -> CVector) -> Signal {
        let mut s = Signal::zeros(grid, dim);
        for j in 0..grid.n_samples() {
            let v = f(grid.node(j));
            assert_eq!(v.len(), dim);
            s.sample_mut(j).copy_from_slice(&v);
        }
        s
    }

    /// Scalar profile times a fixed direction vector.
    pub fn from_profile(grid: Grid, direction: &[Complex64], mut profile: impl FnMut(f64) -> f64) -> Signal {
        let dim = direction.len();
        let mut s = Signal::zeros(grid, dim);
        for j in 0..grid.n_samples() {
            let amp = profile(grid.node(j));
            for (dst, dir) in s.sample_mut(j).iter_mut().zip(direction) {
                *dst = dir * amp;
            }
        }
        s
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sample(&self, j: usize) -> &[Complex64] {
        &self.samples[j * self.dim..(j + 1) * self.dim]
    }

    pub fn sample_mut(&mut self, j: usize) -> &mut [Complex64] {
        &mut self.samples[j * self.dim..(j + 1) * self.dim]
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn add(&self, other: &Signal) -> Signal {
        assert_eq!(self.grid, other.grid);
        assert_eq!(self.dim, other.dim);
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a + b)
            .collect();
        Signal { grid: self.grid, dim: self.dim, samples }
    }

    pub fn sub(&self, other: &Signal) -> Signal {
        assert_eq!(self.grid, other.grid);
        assert_eq!(self.dim, other.dim);
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a - b)
            .collect();
        Signal { grid: self.grid, dim: self.dim, samples }
    }

    pub fn scale(&self, factor: Complex64) -> Signal {
        Signal {
            grid: self.grid,
            dim: self.dim,
            samples: self.samples.iter().map(|a| a * factor).collect(),
        }
    }

    /// Applies a matrix to every time sample.
    pub fn apply_matrix(&self, m: &CMatrix) -> Signal {
        assert_eq!(m.n_cols(), self.dim);
        let mut out = Signal::zeros(self.grid, m.n_rows());
        for j in 0..self.grid.n_samples() {
            let v = m.matvec(self.sample(j));
            out.sample_mut(j).copy_from_slice(&v);
        }
        out
    }

    /// Energy fraction carried by the last decade [0.9 T, T) of the window;
    /// a large value signals that the truncation of the time axis bites.
    pub fn tail_energy_ratio(&self) -> f64 {
        let total = l2_norm(self).powi(2);
        if total == 0.0 {
            return 0.0;
        }
        let cutoff = 0.9 * self.grid.horizon();
        let mut tail = 0.0;
        for j in 0..self.grid.n_samples() {
            if self.grid.node(j) >= cutoff {
                let e: f64 = self.sample(j).iter().map(|z| z.norm_sqr()).sum();
                tail += self.grid.weight(j) * e;
            }
        }
        tail / total
    }
}

/// Hermitian inner product of the time samples under trapezoid weights,
/// linear in the first argument.
pub fn inner(f: &Signal, g: &Signal) -> Complex64 {
    assert_eq!(f.grid, g.grid);
    assert_eq!(f.dim, g.dim);
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..f.grid.n_samples() {
        let w = f.grid.weight(j);
        let mut node = Complex64::new(0.0, 0.0);
        for (a, b) in f.sample(j).iter().zip(g.sample(j)) {
            node += a * b.conj();
        }
        acc += node * w;
    }
    acc
}

pub fn l2_norm(f: &Signal) -> f64 {
    let mut acc = 0.0;
    for j in 0..f.grid.n_samples() {
        let e: f64 = f.sample(j).iter().map(|z| z.norm_sqr()).sum();
        acc += f.grid.weight(j) * e;
    }
    acc.sqrt()
}

/// Unnormalized forward transform X_k = sum_j x_j e^{-2 pi i j k / L},
/// in place, radix-2.
pub fn fft_in_place(buf: &mut [Complex64], inverse: bool) -> Result<(), SignalError> {
    let n = buf.len();
    if !n.is_power_of_two() {
        return Err(SignalError::NotPowerOfTwo { len: n });
    }
    if n <= 1 {
        return Ok(());
    }
    // Bit-reversal permutation.
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if i < j {
            buf.swap(i, j);
        }
    }
    let sign = if inverse { 1.0 } else { -1.0 };
    let mut len = 2;
    while len <= n {
        let angle = sign * 2.0 * std::f64::consts::PI / len as f64;
        let wlen = Complex64::new(angle.cos(), angle.sin());
        let mut start = 0;
        while start < n {
            let mut w = Complex64::new(1.0, 0.0);
            for off in 0..len / 2 {
                let u = buf[start + off];
                let v = buf[start + off + len / 2] * w;
                buf[start + off] = u + v;
                buf[start + off + len / 2] = u - v;
                w *= wlen;
            }
            start += len;
        }
        len <<= 1;
    }
    Ok(())
}

/// Forward transform of a sequence of complex vectors, coordinate by
/// coordinate. Unnormalized.
pub fn dft(x: &[CVector]) -> Result<Vec<CVector>, SignalError> {
    transform_vectors(x, false)
}

/// Inverse transform with 1/L normalization: idft(dft(x)) == x.
pub fn idft(x: &[CVector]) -> Result<Vec<CVector>, SignalError> {
    let len = x.len();
    let mut out = transform_vectors(x, true)?;
    let scale = 1.0 / len as f64;
    for v in &mut out {
        for z in v {
            *z *= scale;
        }
    }
    Ok(out)
}

fn transform_vectors(x: &[CVector], inverse: bool) -> Result<Vec<CVector>, SignalError> {
    let len = x.len();
    if !len.is_power_of_two() {
        return Err(SignalError::NotPowerOfTwo { len });
    }
    let dim = x.first().map(|v| v.len()).unwrap_or(0);
    let mut out = vec![vec![Complex64::new(0.0, 0.0); dim]; len];
    let mut column = vec![Complex64::new(0.0, 0.0); len];
    for c in 0..dim {
        for (j, v) in x.iter().enumerate() {
            assert_eq!(v.len(), dim, "ragged vector sequence");
            column[j] = v[c];
        }
        fft_in_place(&mut column, inverse)?;
        for (j, out_v) in out.iter_mut().enumerate() {
            out_v[c] = column[j];
        }
    }
    Ok(out)
}

/// Parameters accepted by [`preset_signal`]; each preset reads the subset it
/// documents and rejects out-of-range values.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresetParams {
    /// gauss_bump: center t0 of the bump. Default T/4.
    pub center: Option<f64>,
    /// gauss_bump: width w. Default T/40.
    pub width: Option<f64>,
    /// exp_decay: decay rate. Default 10/T.
    pub rate: Option<f64>,
    /// randsmooth: number of low-frequency modes. Default 8.
    pub n_modes: Option<usize>,
    /// Index of a coordinate basis vector to use instead of a random
    /// direction (gauss_bump and exp_decay).
    pub direction: Option<usize>,
}

fn unit_direction(dim: usize, params: &PresetParams, rng: &mut ChaCha8Rng) -> Result<CVector, SignalError> {
    if let Some(idx) = params.direction {
        if idx >= dim {
            return Err(SignalError::BadParameter {
                reason: format!("direction index {idx} out of range for dimension {dim}"),
            });
        }
        let mut e = vec![Complex64::new(0.0, 0.0); dim];
        e[idx] = Complex64::new(1.0, 0.0);
        return Ok(e);
    }
    let mut v: CVector = (0..dim)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm < 1e-6 {
        v[0] = Complex64::new(1.0, 0.0);
        return Ok(v);
    }
    for z in &mut v {
        *z /= norm;
    }
    Ok(v)
}

/// Deterministic seeded test signals.
///
/// * `gauss_bump`: Gaussian profile exp(-(t-t0)^2 / (2 w^2)) times a fixed
///   unit direction.
/// * `exp_decay`: exp(-rate * t) times a fixed unit direction.
/// * `randsmooth`: a band-limited random field, evaluated as a trigonometric
///   sum over the lowest `n_modes` frequencies of the window (equivalently,
///   the inverse transform of those random coefficients), tapered to zero
///   after 0.9 T by a cosine ramp. The realized function depends only on
///   (T, dim, seed), not on N, so grid refinements sample one fixed signal.
pub fn preset_signal(
    name: &str,
    grid: &Grid,
    dim: usize,
    params: &PresetParams,
    seed: u64,
) -> Result<Signal, SignalError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t_max = grid.horizon();
    match name {
        "gauss_bump" => {
            let center = params.center.unwrap_or(0.25 * t_max);
            let width = params.width.unwrap_or(0.025 * t_max);
            if !(width > 0.0 && width.is_finite()) {
                return Err(SignalError::BadParameter {
                    reason: format!("gauss_bump width {width} must be positive"),
                });
            }
            if !(0.0..=t_max).contains(&center) {
                return Err(SignalError::BadParameter {
                    reason: format!("gauss_bump center {center} outside [0, {t_max}]"),
                });
            }
            let dir = unit_direction(dim, params, &mut rng)?;
            Ok(Signal::from_profile(*grid, &dir, |t| {
                (-(t - center) * (t - center) / (2.0 * width * width)).exp()
            }))
        }
        "exp_decay" => {
            let rate = params.rate.unwrap_or(10.0 / t_max);
            if !(rate > 0.0 && rate.is_finite()) {
                return Err(SignalError::BadParameter {
                    reason: format!("exp_decay rate {rate} must be positive"),
                });
            }
            let dir = unit_direction(dim, params, &mut rng)?;
            Ok(Signal::from_profile(*grid, &dir, |t| (-rate * t).exp()))
        }
        "randsmooth" => {
            let n_modes = params.n_modes.unwrap_or(8);
            if n_modes == 0 || n_modes > grid.n_samples() / 4 {
                return Err(SignalError::BadParameter {
                    reason: format!("randsmooth n_modes {n_modes} outside [1, N/4]"),
                });
            }
            let coeffs: Vec<CVector> = (0..dim)
                .map(|_| {
                    (0..n_modes)
                        .map(|_| {
                            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                                / (n_modes as f64).sqrt()
                        })
                        .collect()
                })
                .collect();
            let ramp_start = 0.75 * t_max;
            let ramp_end = 0.9 * t_max;
            let mut s = Signal::zeros(*grid, dim);
            for j in 0..grid.n_samples() {
                let t = grid.node(j);
                let chi = if t <= ramp_start {
                    1.0
                } else if t >= ramp_end {
                    0.0
                } else {
                    0.5 * (1.0 + (std::f64::consts::PI * (t - ramp_start) / (ramp_end - ramp_start)).cos())
                };
                if chi == 0.0 {
                    continue;
                }
                let sample = s.sample_mut(j);
                for (c, modes) in coeffs.iter().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (k, coeff) in modes.iter().enumerate() {
                        let phase = 2.0 * std::f64::consts::PI * k as f64 * t / t_max;
                        acc += coeff * Complex64::new(phase.cos(), phase.sin());
                    }
                    sample[c] = acc * chi;
                }
            }
            Ok(s)
        }
        other => Err(SignalError::UnknownPreset {
            name: other.to_string(),
        }),
    }
}
