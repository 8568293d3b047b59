//! Dense complex linear algebra on small matrices.
//!
//! Everything here targets the n <= 64 regime used by the rest of the crate:
//! row-major storage, LU with partial pivoting for solves, cyclic Jacobi for
//! Hermitian eigenproblems and Hessenberg + shifted QR for general spectra.

mod eig;

pub use eig::{eig_general, eig_hermitian, EigenDecomposition};

use num_complex::Complex64;
use thiserror::Error;

pub type CVector = Vec<Complex64>;

#[derive(Debug, Error)]
pub enum NumlinError {
    #[error("matrix is numerically singular at pivot {pivot_index} (|pivot| = {pivot_magnitude:.3e}, threshold = {threshold:.3e})")]
    Singular {
        pivot_index: usize,
        pivot_magnitude: f64,
        threshold: f64,
    },
    #[error("matrix is not Hermitian: ||a - a*||_F = {defect:.3e} exceeds {bound:.3e}")]
    NotHermitian { defect: f64, bound: f64 },
    #[error("eigenvalue iteration did not converge within {cap} steps")]
    NoConvergence { cap: usize },
}

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        CMatrix {
            n_rows,
            n_cols,
            data: vec![Complex64::new(0.0, 0.0); n_rows * n_cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let n_rows = rows.len();
        let n_cols = if n_rows == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for r in rows {
            assert_eq!(r.len(), n_cols, "ragged rows");
            data.extend_from_slice(r);
        }
        CMatrix {
            n_rows,
            n_cols,
            data,
        }
    }

    pub fn from_diag(diag: &[Complex64]) -> Self {
        let n = diag.len();
        let mut m = CMatrix::zeros(n, n);
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        m
    }

    /// Real-valued convenience constructor, mostly for tests and presets.
    pub fn from_real_rows(rows: &[Vec<f64>]) -> Self {
        let converted: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        CMatrix::from_rows(&converted)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn add(&self, other: &CMatrix) -> CMatrix {
        assert_eq!((self.n_rows, self.n_cols), (other.n_rows, other.n_cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        CMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            data,
        }
    }

    pub fn sub(&self, other: &CMatrix) -> CMatrix {
        assert_eq!((self.n_rows, self.n_cols), (other.n_rows, other.n_cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        CMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            data,
        }
    }

    pub fn scale(&self, factor: Complex64) -> CMatrix {
        CMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            data: self.data.iter().map(|a| a * factor).collect(),
        }
    }

    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.n_cols, other.n_rows, "inner dimensions must agree");
        let mut out = CMatrix::zeros(self.n_rows, other.n_cols);
        for i in 0..self.n_rows {
            for k in 0..self.n_cols {
                let aik = self.data[i * self.n_cols + k];
                if aik.re == 0.0 && aik.im == 0.0 {
                    continue;
                }
                let src = &other.data[k * other.n_cols..(k + 1) * other.n_cols];
                let dst = &mut out.data[i * other.n_cols..(i + 1) * other.n_cols];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += aik * s;
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[Complex64]) -> CVector {
        assert_eq!(self.n_cols, x.len());
        let mut out = vec![Complex64::new(0.0, 0.0); self.n_rows];
        for i in 0..self.n_rows {
            let mut acc = Complex64::new(0.0, 0.0);
            let row = self.row(i);
            for (a, b) in row.iter().zip(x) {
                acc += a * b;
            }
            out[i] = acc;
        }
        out
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> CMatrix {
        let mut out = CMatrix::zeros(self.n_cols, self.n_rows);
        for i in 0..self.n_rows {
            for j in 0..self.n_cols {
                out[(j, i)] = self.data[i * self.n_cols + j].conj();
            }
        }
        out
    }

    pub fn frob_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Maximum absolute column sum; grows with the exponential scaling step.
    pub fn one_norm(&self) -> f64 {
        let mut best: f64 = 0.0;
        for j in 0..self.n_cols {
            let mut s = 0.0;
            for i in 0..self.n_rows {
                s += self.data[i * self.n_cols + j].norm();
            }
            best = best.max(s);
        }
        best
    }

    /// Spectral norm, computed as the square root of the largest eigenvalue
    /// of the Hermitian product a* a.
    pub fn op_norm2(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        let gram = self.adjoint().matmul(self);
        // Symmetrize to remove roundoff skew before the Jacobi sweep.
        let herm = gram.add(&gram.adjoint()).scale(Complex64::new(0.5, 0.0));
        let dec = eig_hermitian(&herm).expect("gram matrix is Hermitian by construction");
        let top = dec
            .eigenvalues
            .last()
            .map(|z| z.re)
            .unwrap_or(0.0)
            .max(0.0);
        top.sqrt()
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.n_cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.n_cols + j]
    }
}

/// Relative pivot floor for LU elimination.
pub const PIVOT_RTOL: f64 = 1e-13;

/// Solves a X = rhs by LU with partial pivoting. `rhs` may hold several
/// right-hand sides as columns.
pub fn solve(a: &CMatrix, rhs: &CMatrix) -> Result<CMatrix, NumlinError> {
    assert!(a.is_square(), "coefficient matrix must be square");
    assert_eq!(a.n_rows, rhs.n_rows, "rhs row count must match");
    let n = a.n_rows;
    let k = rhs.n_cols;

    let max_row_norm = (0..n)
        .map(|i| a.row(i).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0_f64, f64::max);
    let threshold = PIVOT_RTOL * max_row_norm;

    let mut lu = a.data.clone();
    let mut perm: Vec<usize> = (0..n).collect();

    for col in 0..n {
        let mut piv_row = col;
        let mut piv_mag = lu[col * n + col].norm();
        for r in col + 1..n {
            let mag = lu[r * n + col].norm();
            if mag > piv_mag {
                piv_mag = mag;
                piv_row = r;
            }
        }
        if piv_mag <= threshold {
            return Err(NumlinError::Singular {
                pivot_index: col,
                pivot_magnitude: piv_mag,
                threshold,
            });
        }
        if piv_row != col {
            for j in 0..n {
                lu.swap(col * n + j, piv_row * n + j);
            }
            perm.swap(col, piv_row);
        }
        let pivot = lu[col * n + col];
        for r in col + 1..n {
            let factor = lu[r * n + col] / pivot;
            lu[r * n + col] = factor;
            if factor.re == 0.0 && factor.im == 0.0 {
                continue;
            }
            for j in col + 1..n {
                let upd = factor * lu[col * n + j];
                lu[r * n + j] -= upd;
            }
        }
    }

    let mut x = CMatrix::zeros(n, k);
    for c in 0..k {
        // Forward substitution on the permuted right-hand side.
        let mut y = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            let mut acc = rhs[(perm[i], c)];
            for j in 0..i {
                acc -= lu[i * n + j] * y[j];
            }
            y[i] = acc;
        }
        // Back substitution.
        for i in (0..n).rev() {
            let mut acc = y[i];
            for j in i + 1..n {
                acc -= lu[i * n + j] * x[(j, c)];
            }
            x[(i, c)] = acc / lu[i * n + i];
        }
    }
    Ok(x)
}

/// Convenience single right-hand-side solve.
pub fn solve_vec(a: &CMatrix, rhs: &[Complex64]) -> Result<CVector, NumlinError> {
    let rhs_mat = CMatrix {
        n_rows: rhs.len(),
        n_cols: 1,
        data: rhs.to_vec(),
    };
    let x = solve(a, &rhs_mat)?;
    Ok(x.data)
}

/// Inverse through the LU solver; only used on well-conditioned inputs.
pub fn inverse(a: &CMatrix) -> Result<CMatrix, NumlinError> {
    solve(a, &CMatrix::identity(a.n_rows()))
}

/// Determinant from the pivoted LU factorization.
pub fn det(a: &CMatrix) -> Complex64 {
    assert!(a.is_square());
    let n = a.n_rows;
    let mut lu = a.data.clone();
    let mut sign = 1.0;
    for col in 0..n {
        let mut piv_row = col;
        let mut piv_mag = lu[col * n + col].norm();
        for r in col + 1..n {
            let mag = lu[r * n + col].norm();
            if mag > piv_mag {
                piv_mag = mag;
                piv_row = r;
            }
        }
        if piv_mag == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if piv_row != col {
            for j in 0..n {
                lu.swap(col * n + j, piv_row * n + j);
            }
            sign = -sign;
        }
        let pivot = lu[col * n + col];
        for r in col + 1..n {
            let factor = lu[r * n + col] / pivot;
            for j in col + 1..n {
                let upd = factor * lu[col * n + j];
                lu[r * n + j] -= upd;
            }
        }
    }
    let mut d = Complex64::new(sign, 0.0);
    for i in 0..n {
        d *= lu[i * n + i];
    }
    d
}
