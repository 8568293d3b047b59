//! Maximal regularity certification toolkit for matrix evolution equations.
//!
//! Given a sectorial matrix generator A, the crate realizes the forward
//! operator f -> integral over [0, t] of A e^{-(t-s)A} f(s) ds and its
//! backward counterpart on the remaining time window, evaluates both through
//! time-domain quadrature and Fourier multipliers, and runs the experiments
//! that certify their commutation, norm equality under self-adjointness,
//! adjoint duality, multiplier bounds, and the extension to operator-valued
//! holomorphic calculus.

pub mod numlin;
pub mod semigroup;
pub mod signal;
pub mod maxreg;
pub mod funcalc;
pub mod cli;

pub use numlin::{CMatrix, CVector};
pub use semigroup::{Generator, Sign};
pub use signal::{Grid, Signal};
