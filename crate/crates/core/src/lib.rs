//! Numerical laboratory for the fourth-order nonlinear eigenvalue problem
//! `Δ²u = λ f(u)` on radial domains with Navier (hinged) boundary conditions
//! `u = Δu = 0`.
//!
//! The crate is `no_std` (it needs `alloc`) and covers:
//!
//! * [`nonlinearity`]: the exponential, power and MEMS families together with
//!   the auxiliary functions `g`, `H` and growth limits used by the a-priori
//!   estimates;
//! * [`bootstrap`]: integrability exponent recursions and the
//!   regularity-dimension predictor;
//! * [`radial`]: radial grids, the discrete Laplacian, Simpson quadrature and
//!   symbolic radial power calculus;
//! * [`branch`]: amplitude-parametrized Newton continuation of the minimal
//!   branch through the fold;
//! * [`stability`]: the smallest eigenvalue of the second-variation form;
//! * [`estimates`]: numerical certification of the integral inequalities
//!   satisfied by semi-stable solutions.
//!
//! IO, file formats and the command line live in the `navier-lab` crate.
#![cfg_attr(not(test), no_std)]
#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::excessive_precision,
    clippy::result_large_err
)]

extern crate alloc;

pub mod banded;
pub mod bootstrap;
pub mod branch;
pub mod estimates;
pub mod nonlinearity;
pub mod quadrature;
pub mod radial;
pub mod stability;

mod error;

pub use error::Error;
pub use nonlinearity::NonlinearityFamily;
pub use radial::{RadialField, RadialGrid};
