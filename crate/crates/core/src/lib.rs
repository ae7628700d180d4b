//! Finite-difference solver for the time-dependent nonlinear Schrödinger
//! equation
//!
//! ```text
//! i Ψ_t + a ∇²Ψ − V(r) Ψ + s |Ψ|² Ψ = 0
//! ```
//!
//! on uniform 1D/2D/3D grids, with the modulus-squared Dirichlet (MSD)
//! boundary condition and a handful of simpler comparison conditions.
//!
//! The crate is organised bottom-up:
//!
//! * [`field`]: grids, complex fields, boundary/interior classification and
//!   the central-difference Laplacian.
//! * [`nlse`]: equation coefficients and the interior right-hand side.
//! * [`bc`]: boundary-condition strategies that fill the boundary entries of
//!   a time derivative.
//! * [`integrate`]: RK4 / Euler steppers and time-step stability bounds.
//! * [`solutions`]: dark solitons, vortex profiles and constructed initial
//!   conditions.
//! * [`analysis`]: error metrics, vortex tracking and boundary diagnostics.

pub mod analysis;
pub mod bc;
pub mod error;
pub mod field;
pub mod integrate;
pub mod nlse;
pub mod solutions;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
