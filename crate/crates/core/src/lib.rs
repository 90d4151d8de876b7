//! Special solutions of the nonlinear von Neumann equation
//! `i rho-dot = [H[rho], rho]` built from Jacobi elliptic functions.
//!
//! A density operator of the form
//!
//! ```text
//! rho(t) = theta + cn(wt,k) A + sn(wt,k) B + dn(wt,k) X          (family 1)
//! rho(t) = theta + cn(wt,k) A + sn(wt,k)dn(wt,k) C + cn(wt,k)^2 D  (family 2)
//! ```
//!
//! solves the equation for a state-dependent Hamiltonian `H[.]` that is
//! linear in the state, provided the operator tuple closes under
//! commutation with fixed structure constants. This crate evaluates the
//! elliptic functions, validates candidate tuples, constructs the analytic
//! solutions and their Hamiltonians, re-derives the Hamiltonian
//! coefficients numerically from the projected operator equations,
//! integrates the equation of motion, and cross-checks everything against
//! conserved quantities.
//!
//! Module tour:
//!
//! * [`elliptic`] — sn, cn, dn and the quarter period K(k).
//! * [`algebra`] — Hermitian operators, commutators, spectra.
//! * [`superop`] — linear maps on operator space.
//! * [`solutions`] — the two validated solution families.
//! * [`coefficients`] — numeric re-derivation of the Hamiltonian
//!   coefficient systems.
//! * [`dynamics`] — adaptive integration, propagators, gauge transforms.
//! * [`scenarios`] — five ready-made physical examples.
//! * [`verify`] — the check battery behind the `verify` CLI command.

pub mod algebra;
pub mod coefficients;
pub mod dynamics;
pub mod eig;
pub mod elliptic;
pub mod error;
pub mod scenarios;
pub mod solutions;
pub mod superop;
pub mod verify;

pub use algebra::{
    anticommutator, commutator_i, conjugate_by_exponential, hermitian_spectrum, CMatrix,
    HermitianOperator, SpectrumRecord,
};
pub use elliptic::{complete_elliptic_k, jacobi_derivatives, jacobi_sncndn, EllipticModulus, EllipticTriple};
pub use error::{Error, Result};
pub use superop::{ComplementRule, OperatorMap};
