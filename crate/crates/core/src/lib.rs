//! Exact numerical toolkit for charger→battery ergotropy transfer in a
//! three-qubit cell.
//!
//! A two-qubit charger (prepared in a singlet) hands its extractable work to a
//! single-qubit battery under a piecewise-interpolated drive Hamiltonian. The
//! crate propagates the exact Schrödinger dynamics of that drive, synthesizes
//! the counter-diabatic correction that makes the transfer transitionless at
//! any speed, and scores the outcome with ergotropy, local-stability, and
//! energy-cost diagnostics.
//!
//! Layout:
//! - [`operator`]: dense complex linear algebra (Hermitian eigensystems,
//!   matrix exponentials, Kronecker products, partial traces).
//! - [`schedule`]: interpolation functions `(f, g)` with their derivatives and
//!   the boundary contract `f(0)=g(0)=0`, `f(τ)=g(τ)=1`.
//! - [`model`]: Pauli operators, the three static Hamiltonians, the drive
//!   `H(t)`, reference Hamiltonians, and the one-excitation sector reduction.
//! - [`spectral`]: gauge-tracked instantaneous eigensystems, eigenstate time
//!   derivatives, and the counter-diabatic Hamiltonian.
//! - [`dynamics`]: exponential-midpoint propagation with battery observables
//!   sampled along the trajectory.
//! - [`metrics`]: ergotropy, local-stability coefficient, and driving-cost
//!   functionals.
//! - [`selftest`]: the oracle checks exposed to the command-line `selftest`.

pub mod dynamics;
mod error;
pub mod metrics;
pub mod model;
pub mod operator;
pub mod schedule;
pub mod selftest;
pub mod spectral;
pub mod tol;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
