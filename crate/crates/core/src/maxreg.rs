//! Forward and backward maximal regularity operators on a time grid.
//!
//! The forward operator maps f to the integral over [0, t] of
//! A e^{-(t-s)A} f(s) ds; the backward one integrates A e^{-(s-t)A} f(s)
//! over [t, T]. Both are evaluated either by direct O(N^2) quadrature
//! (rectangle or trapezoid weights) or through the frequency multipliers
//! A (+-i sigma + A)^{-1} on the zero-padded transform of length 2N.
//!
//! Propagator samples e^{-j h A} are computed once per (generator, grid)
//! by chaining a single Pade exponential of the step, and the kernel
//! samples A e^{-j h A} are derived from them, so solving the Cauchy
//! problem and applying the regularity operator share one table.

use crate::numlin::CMatrix;
use crate::semigroup::{self, Generator, SemigroupError, Sign};
use crate::signal::{self, FrequencyGrid, Grid, Signal};
use num_complex::Complex64;
use rayon::prelude::*;
use std::time::Instant;

/// Quadrature weights of the direct path. `Rect` uses left-endpoint panels
/// and is exactly a discrete linear convolution; `Trapezoid` corrects both
/// endpoints and carries the one-sided kernel limit A at lag zero with
/// weight h/2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureMode {
    Rect,
    Trapezoid,
}

/// Which symbol multiplies the spectrum on the Fourier path. `Resolvent` is
/// the analytic multiplier A (+-i sigma + A)^{-1}; `RectKernelDft` is the
/// transform of the h-weighted rectangle kernel sequence, which reproduces
/// the rect direct path to roundoff and exists for path-equivalence checks
/// and benchmarking.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FourierSymbol {
    Resolvent,
    RectKernelDft,
}

/// Evaluation route for composed experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathKind {
    DirectRect,
    DirectTrapezoid,
    Fourier,
}

impl std::fmt::Display for PathKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PathKind::DirectRect => write!(f, "direct-rect"),
            PathKind::DirectTrapezoid => write!(f, "direct-trapezoid"),
            PathKind::Fourier => write!(f, "fourier"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MaxRegResult {
    pub output: Signal,
    pub path: PathKind,
    /// Worst-case estimate e^{-alpha T / 2} * m_bound * ||f|| of the mass the
    /// finite window cannot represent.
    pub truncation_tail_bound: f64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone)]
pub struct CommutatorReport {
    pub abs_residual: f64,
    pub rel_residual: f64,
    pub grid: Grid,
    pub path: PathKind,
}

#[derive(Debug, Clone)]
pub struct NormEqualityReport {
    pub norm_plus: f64,
    pub norm_minus: f64,
    /// |norm_plus - norm_minus| / max(norm_plus, norm_minus), guarded
    /// against a vanishing denominator.
    pub rel_gap: f64,
    pub is_selfadjoint: bool,
}

/// Regularity operator bound to one generator and one grid, holding the
/// propagator and kernel tables.
pub struct MaxRegOperator {
    generator: Generator,
    grid: Grid,
    propagators: Vec<CMatrix>,
    kernels: Vec<CMatrix>,
}

impl MaxRegOperator {
    pub fn new(generator: &Generator, grid: Grid) -> MaxRegOperator {
        // Tables reach lag 2N - 1: composed applications integrate over the
        // off-window continuations of intermediate images, which doubles the
        // largest lag a single application needs.
        let len = 2 * grid.n_samples();
        let dim = generator.dim();
        let step = semigroup::semigroup_at(generator, grid.step());
        let mut propagators = Vec::with_capacity(len);
        propagators.push(CMatrix::identity(dim));
        for j in 1..len {
            let next = propagators[j - 1].matmul(&step);
            propagators.push(next);
        }
        let kernels = propagators
            .iter()
            .map(|s| generator.matrix().matmul(s))
            .collect();
        MaxRegOperator {
            generator: generator.clone(),
            grid,
            propagators,
            kernels,
        }
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn tail_bound(&self, f: &Signal) -> f64 {
        truncation_tail_bound(&self.generator, self.grid.horizon(), f)
    }

    /// Causal half of the pair: integral over [0, t_j].
    pub fn forward_direct(&self, f: &Signal, mode: QuadratureMode) -> MaxRegResult {
        let start = Instant::now();
        let output = self.convolve_forward(f, &self.kernels, mode);
        MaxRegResult {
            output,
            path: direct_path(mode),
            truncation_tail_bound: self.tail_bound(f),
            wall_time_s: start.elapsed().as_secs_f64(),
        }
    }

    /// Anticausal half: integral over [t_j, T], truncated at the horizon.
    pub fn backward_direct(&self, f: &Signal, mode: QuadratureMode) -> MaxRegResult {
        let start = Instant::now();
        let output = self.convolve_backward(f, &self.kernels, mode);
        MaxRegResult {
            output,
            path: direct_path(mode),
            truncation_tail_bound: self.tail_bound(f),
            wall_time_s: start.elapsed().as_secs_f64(),
        }
    }

    pub fn apply_direct(&self, f: &Signal, sign: Sign, mode: QuadratureMode) -> MaxRegResult {
        match sign {
            Sign::Plus => self.forward_direct(f, mode),
            Sign::Minus => self.backward_direct(f, mode),
        }
    }

    /// Fourier path: zero-pad to 2N, transform, multiply the k-th
    /// coefficient vector by the symbol at sigma_k, transform back and keep
    /// the first N samples.
    pub fn apply_fourier(
        &self,
        f: &Signal,
        sign: Sign,
        symbol: FourierSymbol,
    ) -> Result<MaxRegResult, SemigroupError> {
        assert_eq!(f.dim(), self.generator.dim());
        assert_eq!(*f.grid(), self.grid);
        let start = Instant::now();
        let n = self.grid.n_samples();
        let dim = f.dim();
        let len = 2 * n;
        let freq = FrequencyGrid::for_padded(&self.grid);

        let mut padded: Vec<Vec<Complex64>> = Vec::with_capacity(len);
        for j in 0..n {
            padded.push(f.sample(j).to_vec());
        }
        padded.resize(len, vec![Complex64::new(0.0, 0.0); dim]);
        let spectrum = signal::dft(&padded).expect("padded length is a power of two");

        let multiplied: Vec<Vec<Complex64>> = match symbol {
            FourierSymbol::Resolvent => {
                let mut out = Vec::with_capacity(len);
                for (k, coeff) in spectrum.iter().enumerate() {
                    let m = semigroup::multiplier(&self.generator, sign, freq.sigma(k))?;
                    out.push(m.value.matvec(coeff));
                }
                out
            }
            FourierSymbol::RectKernelDft => {
                let table = self.rect_kernel_spectrum(sign);
                let mut out = vec![vec![Complex64::new(0.0, 0.0); dim]; len];
                for (k, coeff) in spectrum.iter().enumerate() {
                    let dst = &mut out[k];
                    for r in 0..dim {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for (c, x) in coeff.iter().enumerate() {
                            acc += table[r * dim + c][k] * x;
                        }
                        dst[r] = acc;
                    }
                }
                out
            }
        };

        let restored = signal::idft(&multiplied).expect("padded length is a power of two");
        let mut output = Signal::zeros(self.grid, dim);
        for j in 0..n {
            output.sample_mut(j).copy_from_slice(&restored[j]);
        }
        Ok(MaxRegResult {
            output,
            path: PathKind::Fourier,
            truncation_tail_bound: self.tail_bound(f),
            wall_time_s: start.elapsed().as_secs_f64(),
        })
    }

    /// Entrywise transforms of the h-weighted rectangle kernel sequence.
    /// The forward operator is a convolution, so its symbol is the ordinary
    /// transform; the backward one is a correlation, whose circular kernel
    /// is index-reversed, equivalent to transforming with the opposite
    /// twiddle orientation.
    fn rect_kernel_spectrum(&self, sign: Sign) -> Vec<Vec<Complex64>> {
        let n = self.grid.n_samples();
        let dim = self.generator.dim();
        let len = 2 * n;
        let h = self.grid.step();
        let mut table = vec![vec![Complex64::new(0.0, 0.0); len]; dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                let seq = &mut table[r * dim + c];
                for (l, k_l) in self.kernels.iter().take(n).enumerate() {
                    if l == 0 && sign == Sign::Plus {
                        continue;
                    }
                    seq[l] = k_l[(r, c)] * h;
                }
                signal::fft_in_place(seq, sign == Sign::Minus)
                    .expect("padded length is a power of two");
            }
        }
        table
    }

    /// Mild solution u of u' + A u = f, u(0) = 0: the same quadrature as the
    /// forward operator with propagator samples in place of kernel samples.
    /// u[0] is exactly zero.
    pub fn solve_forward(&self, f: &Signal, mode: QuadratureMode) -> MaxRegResult {
        let start = Instant::now();
        let output = self.convolve_forward(f, &self.propagators, mode);
        MaxRegResult {
            output,
            path: direct_path(mode),
            truncation_tail_bound: self.tail_bound(f),
            wall_time_s: start.elapsed().as_secs_f64(),
        }
    }

    /// Mild solution v of v' - A v = f with v vanishing beyond the horizon:
    /// minus the backward propagator quadrature.
    pub fn solve_backward(&self, f: &Signal, mode: QuadratureMode) -> MaxRegResult {
        let start = Instant::now();
        let output = self
            .convolve_backward(f, &self.propagators, mode)
            .scale(Complex64::new(-1.0, 0.0));
        MaxRegResult {
            output,
            path: direct_path(mode),
            truncation_tail_bound: self.tail_bound(f),
            wall_time_s: start.elapsed().as_secs_f64(),
        }
    }

    fn convolve_forward(&self, f: &Signal, table: &[CMatrix], mode: QuadratureMode) -> Signal {
        assert_eq!(f.dim(), self.generator.dim());
        assert_eq!(*f.grid(), self.grid);
        let n = self.grid.n_samples();
        let dim = f.dim();
        let h = self.grid.step();
        let rows: Vec<Vec<Complex64>> = (0..n)
            .into_par_iter()
            .map(|j| {
                let mut acc = vec![Complex64::new(0.0, 0.0); dim];
                match mode {
                    QuadratureMode::Rect => {
                        // Lags ascend; lag 0 is not a left endpoint of any panel.
                        for l in 1..=j {
                            axpy_matvec(&mut acc, &table[l], f.sample(j - l), h);
                        }
                    }
                    QuadratureMode::Trapezoid => {
                        if j >= 1 {
                            axpy_matvec(&mut acc, &table[0], f.sample(j), 0.5 * h);
                            for l in 1..j {
                                axpy_matvec(&mut acc, &table[l], f.sample(j - l), h);
                            }
                            axpy_matvec(&mut acc, &table[j], f.sample(0), 0.5 * h);
                        }
                    }
                }
                acc
            })
            .collect();
        rows_to_signal(self.grid, dim, rows)
    }

    fn convolve_backward(&self, f: &Signal, table: &[CMatrix], mode: QuadratureMode) -> Signal {
        assert_eq!(f.dim(), self.generator.dim());
        assert_eq!(*f.grid(), self.grid);
        let n = self.grid.n_samples();
        let dim = f.dim();
        let h = self.grid.step();
        let rows: Vec<Vec<Complex64>> = (0..n)
            .into_par_iter()
            .map(|j| {
                let mut acc = vec![Complex64::new(0.0, 0.0); dim];
                let max_lag = n - 1 - j;
                match mode {
                    QuadratureMode::Rect => {
                        for l in 0..=max_lag {
                            axpy_matvec(&mut acc, &table[l], f.sample(j + l), h);
                        }
                    }
                    QuadratureMode::Trapezoid => {
                        // The phantom node at T carries value zero, so only
                        // the leading endpoint needs a half weight.
                        axpy_matvec(&mut acc, &table[0], f.sample(j), 0.5 * h);
                        for l in 1..=max_lag {
                            axpy_matvec(&mut acc, &table[l], f.sample(j + l), h);
                        }
                    }
                }
                acc
            })
            .collect();
        rows_to_signal(self.grid, dim, rows)
    }

    /// Forward operator applied to a backward image w. Such an image is not
    /// supported on [0, T): it continues into negative time as the semigroup
    /// decay e^{t A} w(0), and the forward integral at every node sees that
    /// history. The quadrature therefore runs over [-T, t_j] with the
    /// history nodes reconstructed from the propagator table; the mass
    /// beyond -T is of order e^{-alpha T}.
    pub fn forward_over_backward_image(&self, w: &Signal, mode: QuadratureMode) -> Signal {
        assert_eq!(w.dim(), self.generator.dim());
        assert_eq!(*w.grid(), self.grid);
        let n = self.grid.n_samples();
        let dim = w.dim();
        let h = self.grid.step();
        let mut history = Vec::with_capacity(n + 1);
        for l in 0..=n {
            history.push(self.propagators[l].matvec(w.sample(0)));
        }
        let sample = |m: isize| -> &[Complex64] {
            if m >= 0 {
                w.sample(m as usize)
            } else {
                &history[(-m) as usize]
            }
        };
        let rows: Vec<Vec<Complex64>> = (0..n)
            .into_par_iter()
            .map(|j| {
                let mut acc = vec![Complex64::new(0.0, 0.0); dim];
                let j = j as isize;
                let lo = -(n as isize);
                match mode {
                    QuadratureMode::Rect => {
                        for l in 1..=(j - lo) as usize {
                            axpy_matvec(&mut acc, &self.kernels[l], sample(j - l as isize), h);
                        }
                    }
                    QuadratureMode::Trapezoid => {
                        axpy_matvec(&mut acc, &self.kernels[0], sample(j), 0.5 * h);
                        for l in 1..(j - lo) as usize {
                            axpy_matvec(&mut acc, &self.kernels[l], sample(j - l as isize), h);
                        }
                        axpy_matvec(&mut acc, &self.kernels[(j - lo) as usize], sample(lo), 0.5 * h);
                    }
                }
                acc
            })
            .collect();
        rows_to_signal(self.grid, dim, rows)
    }

    /// Backward operator applied to a forward image u. Past the last node a
    /// forward image keeps evolving freely as e^{-t A} times its last value,
    /// so the quadrature runs over [t_j, 2T) with the continuation nodes
    /// reconstructed from the propagator table; the mass beyond 2T is of
    /// order e^{-alpha T}.
    pub fn backward_over_forward_image(&self, u: &Signal, mode: QuadratureMode) -> Signal {
        assert_eq!(u.dim(), self.generator.dim());
        assert_eq!(*u.grid(), self.grid);
        let n = self.grid.n_samples();
        let dim = u.dim();
        let h = self.grid.step();
        let mut continuation = Vec::with_capacity(n + 1);
        for l in 0..=n {
            continuation.push(self.propagators[l].matvec(u.sample(n - 1)));
        }
        let sample = |m: usize| -> &[Complex64] {
            if m < n {
                u.sample(m)
            } else {
                &continuation[m - (n - 1)]
            }
        };
        let rows: Vec<Vec<Complex64>> = (0..n)
            .into_par_iter()
            .map(|j| {
                let mut acc = vec![Complex64::new(0.0, 0.0); dim];
                let max_lag = 2 * n - 1 - j;
                match mode {
                    QuadratureMode::Rect => {
                        for l in 0..=max_lag {
                            axpy_matvec(&mut acc, &self.kernels[l], sample(j + l), h);
                        }
                    }
                    QuadratureMode::Trapezoid => {
                        axpy_matvec(&mut acc, &self.kernels[0], sample(j), 0.5 * h);
                        for l in 1..=max_lag {
                            axpy_matvec(&mut acc, &self.kernels[l], sample(j + l), h);
                        }
                    }
                }
                acc
            })
            .collect();
        rows_to_signal(self.grid, dim, rows)
    }

    /// L2 size of M_+(M_- f) - M_-(M_+ f) on the grid, absolute and relative
    /// to ||f||. The direct paths compose through the off-window
    /// continuations above; the fourier path composes the multipliers on the
    /// padded spectrum before transforming back, so no intermediate
    /// truncation is introduced on either route.
    pub fn commutator_residual(
        &self,
        f: &Signal,
        path: PathKind,
    ) -> Result<CommutatorReport, SemigroupError> {
        let difference = match path {
            PathKind::DirectRect | PathKind::DirectTrapezoid => {
                let mode = match path {
                    PathKind::DirectRect => QuadratureMode::Rect,
                    _ => QuadratureMode::Trapezoid,
                };
                let plus_minus =
                    self.forward_over_backward_image(&self.backward_direct(f, mode).output, mode);
                let minus_plus =
                    self.backward_over_forward_image(&self.forward_direct(f, mode).output, mode);
                plus_minus.sub(&minus_plus)
            }
            PathKind::Fourier => self.fourier_commutator_difference(f)?,
        };
        let abs_residual = signal::l2_norm(&difference);
        let denom = signal::l2_norm(f).max(f64::MIN_POSITIVE);
        Ok(CommutatorReport {
            abs_residual,
            rel_residual: abs_residual / denom,
            grid: self.grid,
            path,
        })
    }

    /// Spectral-side commutator: one padded transform, both multiplier
    /// orders composed per frequency, one inverse transform of the
    /// difference. The multipliers are rational in A and commute exactly, so
    /// this difference is roundoff for every generator.
    fn fourier_commutator_difference(&self, f: &Signal) -> Result<Signal, SemigroupError> {
        assert_eq!(f.dim(), self.generator.dim());
        assert_eq!(*f.grid(), self.grid);
        let n = self.grid.n_samples();
        let dim = f.dim();
        let len = 2 * n;
        let freq = FrequencyGrid::for_padded(&self.grid);

        let mut padded: Vec<Vec<Complex64>> = Vec::with_capacity(len);
        for j in 0..n {
            padded.push(f.sample(j).to_vec());
        }
        padded.resize(len, vec![Complex64::new(0.0, 0.0); dim]);
        let spectrum = signal::dft(&padded).expect("padded length is a power of two");

        let mut composed = Vec::with_capacity(len);
        for (k, coeff) in spectrum.iter().enumerate() {
            let m_plus = semigroup::multiplier(&self.generator, Sign::Plus, freq.sigma(k))?.value;
            let m_minus = semigroup::multiplier(&self.generator, Sign::Minus, freq.sigma(k))?.value;
            let pm = m_plus.matvec(&m_minus.matvec(coeff));
            let mp = m_minus.matvec(&m_plus.matvec(coeff));
            composed.push(pm.iter().zip(&mp).map(|(a, b)| a - b).collect::<Vec<_>>());
        }
        let restored = signal::idft(&composed).expect("padded length is a power of two");
        let mut output = Signal::zeros(self.grid, dim);
        for j in 0..n {
            output.sample_mut(j).copy_from_slice(&restored[j]);
        }
        Ok(output)
    }

    /// Compares ||M_+ f|| and ||M_- f|| on the trapezoid direct path.
    pub fn norm_equality_report(&self, f: &Signal) -> NormEqualityReport {
        let norm_plus = signal::l2_norm(&self.forward_direct(f, QuadratureMode::Trapezoid).output);
        let norm_minus = signal::l2_norm(&self.backward_direct(f, QuadratureMode::Trapezoid).output);
        let denom = norm_plus.max(norm_minus).max(f64::MIN_POSITIVE);
        NormEqualityReport {
            norm_plus,
            norm_minus,
            rel_gap: (norm_plus - norm_minus).abs() / denom,
            is_selfadjoint: self.generator.is_selfadjoint(),
        }
    }

    /// Centered-difference defect of the solved Cauchy problem, relative to
    /// ||f||: u' + A u - f for the forward sign, v' - A v - f backward.
    pub fn ode_residual(&self, f: &Signal, sign: Sign, mode: QuadratureMode) -> f64 {
        let n = self.grid.n_samples();
        let h = self.grid.step();
        let u = match sign {
            Sign::Plus => self.solve_forward(f, mode).output,
            Sign::Minus => self.solve_backward(f, mode).output,
        };
        let a_sign = match sign {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        };
        let au = u.apply_matrix(self.generator.matrix());
        let mut acc = 0.0;
        for j in 1..n - 1 {
            let mut node = 0.0;
            for d in 0..f.dim() {
                let dt = (u.sample(j + 1)[d] - u.sample(j - 1)[d]) / (2.0 * h);
                let r = dt + au.sample(j)[d] * a_sign - f.sample(j)[d];
                node += r.norm_sqr();
            }
            acc += h * node;
        }
        acc.sqrt() / signal::l2_norm(f).max(f64::MIN_POSITIVE)
    }
}

/// Worst-case mass of the integrals beyond the window: the semigroup decays
/// like m_bound e^{-alpha t}, folded into one e^{-alpha T / 2} factor that
/// covers every node.
pub fn truncation_tail_bound(g: &Generator, horizon: f64, f: &Signal) -> f64 {
    (-g.alpha() * horizon / 2.0).exp() * g.m_bound() * signal::l2_norm(f)
}

fn direct_path(mode: QuadratureMode) -> PathKind {
    match mode {
        QuadratureMode::Rect => PathKind::DirectRect,
        QuadratureMode::Trapezoid => PathKind::DirectTrapezoid,
    }
}

fn rows_to_signal(grid: Grid, dim: usize, rows: Vec<Vec<Complex64>>) -> Signal {
    let mut out = Signal::zeros(grid, dim);
    for (j, row) in rows.into_iter().enumerate() {
        out.sample_mut(j).copy_from_slice(&row);
    }
    out
}

#[inline]
fn axpy_matvec(acc: &mut [Complex64], m: &CMatrix, x: &[Complex64], w: f64) {
    let dim = acc.len();
    for (r, a) in acc.iter_mut().enumerate() {
        let row = m.row(r);
        let mut s = Complex64::new(0.0, 0.0);
        for c in 0..dim {
            s += row[c] * x[c];
        }
        *a += s * w;
    }
}

/// Supremum of the multiplier operator norm over a log-symmetric frequency
/// grid {0} union +-(exp-spaced up to sigma_max): the constant of the a
/// priori bound ||M_{+-} f|| <= C ||f||. Self-adjoint positive generators
/// give C = 1 up to roundoff.
pub fn desimon_constant(
    g: &Generator,
    sigma_max: Option<f64>,
    n_sigma: usize,
) -> Result<f64, SemigroupError> {
    assert!(n_sigma >= 64, "need at least 64 frequencies per side");
    let top = sigma_max.unwrap_or(1e3 * g.spectral_radius());
    assert!(top.is_finite() && top > 0.0, "sigma_max must be positive");
    let bottom = 1e-3 * g.alpha().min(top);
    let mut best = semigroup::multiplier(g, Sign::Plus, 0.0)?.value.op_norm2();
    for i in 0..n_sigma {
        let sigma = bottom * (top / bottom).powf(i as f64 / (n_sigma - 1) as f64);
        for signed in [sigma, -sigma] {
            let norm = semigroup::multiplier(g, Sign::Plus, signed)?.value.op_norm2();
            best = best.max(norm);
        }
    }
    Ok(best)
}

/// Duality defect |<M_+^A f, phi> - <f, M_-^{A*} phi>| / (||f|| ||phi||) on
/// the trapezoid direct path.
pub fn adjoint_defect(g: &Generator, f: &Signal, phi: &Signal) -> Result<f64, SemigroupError> {
    assert_eq!(f.grid(), phi.grid());
    assert_eq!(f.dim(), phi.dim());
    let g_adj = g.adjoint_generator()?;
    let op = MaxRegOperator::new(g, *f.grid());
    let op_adj = MaxRegOperator::new(&g_adj, *f.grid());
    let lhs = signal::inner(&op.forward_direct(f, QuadratureMode::Trapezoid).output, phi);
    let rhs = signal::inner(f, &op_adj.backward_direct(phi, QuadratureMode::Trapezoid).output);
    let denom = (signal::l2_norm(f) * signal::l2_norm(phi)).max(f64::MIN_POSITIVE);
    Ok((lhs - rhs).norm() / denom)
}
