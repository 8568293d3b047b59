//! Eigensolvers: cyclic Jacobi for Hermitian matrices (values and vectors),
//! Hessenberg reduction plus shifted QR for general spectra (values only).

use super::{CMatrix, NumlinError};
use num_complex::Complex64;

#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    /// Sorted ascending by real part, then imaginary part. Hermitian input
    /// yields exactly real entries.
    pub eigenvalues: Vec<Complex64>,
    /// Unitary column eigenvectors; only produced by the Hermitian solver.
    pub eigenvectors: Option<CMatrix>,
}

/// Hermitian-defect bound relative to ||a||_F accepted by `eig_hermitian`.
pub const HERMITIAN_RTOL: f64 = 1e-12;

const JACOBI_MAX_SWEEPS: usize = 64;

/// Cyclic Jacobi diagonalization of a Hermitian matrix. The rotation that
/// annihilates a_pq absorbs the phase of the off-diagonal entry, so the
/// 2x2 subproblem reduces to the classical real symmetric case.
pub fn eig_hermitian(a: &CMatrix) -> Result<EigenDecomposition, NumlinError> {
    assert!(a.is_square(), "eig_hermitian requires a square matrix");
    let n = a.n_rows();
    let fro = a.frob_norm();
    let defect = a.sub(&a.adjoint()).frob_norm();
    let bound = HERMITIAN_RTOL * fro;
    if defect > bound {
        return Err(NumlinError::NotHermitian { defect, bound });
    }

    let mut m = a.clone();
    let mut v = CMatrix::identity(n);
    if n <= 1 {
        let eigenvalues = (0..n).map(|i| Complex64::new(m[(i, i)].re, 0.0)).collect();
        return Ok(EigenDecomposition {
            eigenvalues,
            eigenvectors: Some(v),
        });
    }

    let stop = 1e-14 * fro.max(f64::MIN_POSITIVE);
    let mut converged = false;
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off += m[(i, j)].norm_sqr();
                }
            }
        }
        if off.sqrt() <= stop {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = m[(p, q)];
                let mag = apq.norm();
                if mag <= stop / (n as f64) {
                    continue;
                }
                let phase = apq / mag;
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let tau = (aqq - app) / (2.0 * mag);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let cr = 1.0 / (1.0 + t * t).sqrt();
                let s = phase * (t * cr);
                // Right multiply by the rotation, then left multiply by its
                // conjugate transpose: columns first, rows second.
                for i in 0..n {
                    let mip = m[(i, p)];
                    let miq = m[(i, q)];
                    m[(i, p)] = mip * cr - miq * s.conj();
                    m[(i, q)] = mip * s + miq * cr;
                }
                for j in 0..n {
                    let mpj = m[(p, j)];
                    let mqj = m[(q, j)];
                    m[(p, j)] = mpj * cr - mqj * s;
                    m[(q, j)] = mpj * s.conj() + mqj * cr;
                }
                m[(p, q)] = Complex64::new(0.0, 0.0);
                m[(q, p)] = Complex64::new(0.0, 0.0);
                m[(p, p)] = Complex64::new(m[(p, p)].re, 0.0);
                m[(q, q)] = Complex64::new(m[(q, q)].re, 0.0);
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip * cr - viq * s.conj();
                    v[(i, q)] = vip * s + viq * cr;
                }
            }
        }
    }
    if !converged {
        // One last check: the final sweep may have pushed the off-diagonal
        // mass under the threshold.
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off += m[(i, j)].norm_sqr();
                }
            }
        }
        if off.sqrt() > stop {
            return Err(NumlinError::NoConvergence {
                cap: JACOBI_MAX_SWEEPS,
            });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.partial_cmp(&m[(j, j)].re).unwrap());
    let eigenvalues: Vec<Complex64> = order
        .iter()
        .map(|&i| Complex64::new(m[(i, i)].re, 0.0))
        .collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for i in 0..n {
            vectors[(i, new_col)] = v[(i, old_col)];
        }
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors: Some(vectors),
    })
}

/// Iteration cap for the shifted QR stage, proportional to the dimension.
pub const QR_ITERATION_CAP_PER_EIGENVALUE: usize = 60;

/// Eigenvalues of a general complex matrix: Householder reduction to upper
/// Hessenberg form followed by explicitly shifted QR with deflation.
/// Eigenvectors are not computed.
pub fn eig_general(a: &CMatrix) -> Result<EigenDecomposition, NumlinError> {
    assert!(a.is_square(), "eig_general requires a square matrix");
    let n = a.n_rows();
    if n == 0 {
        return Ok(EigenDecomposition {
            eigenvalues: vec![],
            eigenvectors: None,
        });
    }
    if n == 1 {
        return Ok(EigenDecomposition {
            eigenvalues: vec![a[(0, 0)]],
            eigenvectors: None,
        });
    }

    let mut h = a.clone();
    hessenberg_in_place(&mut h);

    let cap = QR_ITERATION_CAP_PER_EIGENVALUE * n;
    let mut eigenvalues: Vec<Complex64> = Vec::with_capacity(n);
    let mut hi = n - 1;
    let mut total_iters = 0usize;
    let mut stagnation = 0usize;

    loop {
        // Zero negligible subdiagonals, then find the active block [lo, hi].
        let mut lo = hi;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            let local = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            if sub <= f64::EPSILON * local || sub < f64::MIN_POSITIVE {
                h[(lo, lo - 1)] = Complex64::new(0.0, 0.0);
                break;
            }
            lo -= 1;
        }

        if lo == hi {
            eigenvalues.push(h[(hi, hi)]);
            if hi == 0 {
                break;
            }
            hi -= 1;
            stagnation = 0;
            continue;
        }
        if lo + 1 == hi {
            let (l1, l2) = eig_2x2(h[(lo, lo)], h[(lo, hi)], h[(hi, lo)], h[(hi, hi)]);
            eigenvalues.push(l1);
            eigenvalues.push(l2);
            if lo == 0 {
                break;
            }
            hi = lo - 1;
            stagnation = 0;
            continue;
        }

        if total_iters >= cap {
            return Err(NumlinError::NoConvergence { cap });
        }
        total_iters += 1;
        stagnation += 1;

        let shift = if stagnation % 16 == 15 {
            // Exceptional shift breaks rare symmetric stalls.
            h[(hi, hi)] + Complex64::new(0.75 * h[(hi, hi - 1)].norm(), 0.0)
        } else {
            wilkinson_shift(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };

        qr_step(&mut h, lo, hi, shift);
    }

    eigenvalues.sort_by(|x, y| {
        x.re.partial_cmp(&y.re)
            .unwrap()
            .then(x.im.partial_cmp(&y.im).unwrap())
    });
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors: None,
    })
}

fn hessenberg_in_place(h: &mut CMatrix) {
    let n = h.n_rows();
    for k in 0..n.saturating_sub(2) {
        let mut norm_sq = 0.0;
        for i in k + 1..n {
            norm_sq += h[(i, k)].norm_sqr();
        }
        let mut tail_sq = 0.0;
        for i in k + 2..n {
            tail_sq += h[(i, k)].norm_sqr();
        }
        if tail_sq <= f64::MIN_POSITIVE {
            continue;
        }
        let x0 = h[(k + 1, k)];
        let alpha = if x0.norm() > 0.0 {
            -(x0 / x0.norm()) * norm_sq.sqrt()
        } else {
            Complex64::new(-norm_sq.sqrt(), 0.0)
        };
        // Householder vector v = x - alpha e1, normalized.
        let mut v = vec![Complex64::new(0.0, 0.0); n - k - 1];
        v[0] = x0 - alpha;
        for i in k + 2..n {
            v[i - k - 1] = h[(i, k)];
        }
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vnorm <= f64::MIN_POSITIVE {
            continue;
        }
        for z in &mut v {
            *z /= vnorm;
        }
        // Left: rows k+1.. get (I - 2 v v*) applied.
        for j in k..n {
            let mut dot = Complex64::new(0.0, 0.0);
            for i in k + 1..n {
                dot += v[i - k - 1].conj() * h[(i, j)];
            }
            let dot2 = dot * 2.0;
            for i in k + 1..n {
                let upd = v[i - k - 1] * dot2;
                h[(i, j)] -= upd;
            }
        }
        // Right: columns k+1.. get the same reflector from the other side.
        for i in 0..n {
            let mut dot = Complex64::new(0.0, 0.0);
            for j in k + 1..n {
                dot += h[(i, j)] * v[j - k - 1];
            }
            let dot2 = dot * 2.0;
            for j in k + 1..n {
                let upd = dot2 * v[j - k - 1].conj();
                h[(i, j)] -= upd;
            }
        }
        for i in k + 2..n {
            h[(i, k)] = Complex64::new(0.0, 0.0);
        }
    }
}

fn eig_2x2(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> (Complex64, Complex64) {
    let half_tr = (a + d) * 0.5;
    let det = a * d - b * c;
    let disc = (half_tr * half_tr - det).sqrt();
    (half_tr + disc, half_tr - disc)
}

fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let (l1, l2) = eig_2x2(a, b, c, d);
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Complex Givens rotation [[c, s], [-conj(s), c]] with real c that maps
/// (x, y) to (r, 0).
fn givens(x: Complex64, y: Complex64) -> (f64, Complex64) {
    let xm = x.norm();
    let rho = (x.norm_sqr() + y.norm_sqr()).sqrt();
    if rho <= f64::MIN_POSITIVE {
        return (1.0, Complex64::new(0.0, 0.0));
    }
    if xm <= f64::MIN_POSITIVE {
        return (0.0, Complex64::new(1.0, 0.0));
    }
    let c = xm / rho;
    let s = (x / xm) * (y.conj() / rho);
    (c, s)
}

/// One explicit shifted QR sweep on the Hessenberg block [lo, hi]:
/// factor H - shift = QR by Givens rotations, then form RQ + shift.
fn qr_step(h: &mut CMatrix, lo: usize, hi: usize, shift: Complex64) {
    for i in lo..=hi {
        h[(i, i)] -= shift;
    }
    let mut rotations: Vec<(f64, Complex64)> = Vec::with_capacity(hi - lo);
    for i in lo..hi {
        let (c, s) = givens(h[(i, i)], h[(i + 1, i)]);
        rotations.push((c, s));
        for j in i..=hi {
            let hij = h[(i, j)];
            let hi1j = h[(i + 1, j)];
            h[(i, j)] = hij * c + hi1j * s;
            h[(i + 1, j)] = -hij * s.conj() + hi1j * c;
        }
        h[(i + 1, i)] = Complex64::new(0.0, 0.0);
    }
    for (idx, (c, s)) in rotations.iter().enumerate() {
        let i = lo + idx;
        let top = (i + 2).min(hi);
        for r in lo..=top {
            let hri = h[(r, i)];
            let hri1 = h[(r, i + 1)];
            h[(r, i)] = hri * *c + hri1 * s.conj();
            h[(r, i + 1)] = -hri * *s + hri1 * *c;
        }
    }
    for i in lo..=hi {
        h[(i, i)] += shift;
    }
}
