//! Numerics for generalized Keller-Osserman theory on weighted radial models.
//!
//! The crate is `no_std` (with `alloc`) and covers:
//!
//! * [`function`]: univariate function families with exact derivatives and
//!   asymptotic exponents;
//! * [`structural`]: checks of the structural hypotheses on `phi`, `ell`,
//!   `f`, `b` and friends, including C-increasing estimates;
//! * [`transforms`]: the primitives `F`, `Fhat`, `K`, `Khat`, their inverses
//!   and the classification of Keller-Osserman integral conditions;
//! * [`geometry`]: comparison ODE, Laplacian and volume comparison and
//!   integral-curvature volume bounds on radial models;
//! * [`supersolution`]: blow-up (and global) radial barriers with a
//!   sigma search and residual certificates;
//! * [`counterexample`]: the glued entire subsolution when the integral
//!   condition fails;
//! * [`maxprin`]: weak maximum principle constants and the growth threshold.

#![no_std]
// `!(x > 0.0)` is deliberate all over: NaN has to fail the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod counterexample;
pub mod error;
pub mod function;
pub mod geometry;
pub mod grid;
pub mod math;
pub mod maxprin;
pub mod primitive;
pub mod quad;
pub mod structural;
pub mod supersolution;
pub mod transforms;

pub use error::{Error, Result};
pub use function::{Asym, FunctionSpec, RealFn};
pub use grid::LogGrid;

/// Version of this crate, recorded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
