//! Bernstein operators with integer coefficients.
//!
//! The classical Bernstein operator `B_n` maps `f` on `[0,1]` to a degree-`n`
//! polynomial whose coefficients in the Bernstein basis are the sampled values
//! `f(k/n)`. Replacing each raw coefficient `f(k/n)·C(n,k)` by its floor gives
//! the Kantorovich integer modification; replacing it by a nearest integer
//! (under a tie-breaking rule) gives a second integer modification with better
//! simultaneous-approximation behaviour. This crate evaluates all three
//! operators and their derivatives in exact rational arithmetic, estimates
//! the moduli of smoothness that govern their convergence, and ships an
//! experiment harness that measures sup-norm errors against those bounds.
//!
//! Modules:
//! - [`numeric`]: exact rationals, big-integer binomials, high-precision reals
//! - [`functions`]: the catalog of test functions with analytic derivatives
//! - [`bernstein`]: the classical operator, basis, and derivative formulas
//! - [`integer`]: rounding rules and the integer-coefficient operators
//! - [`moduli`]: estimators for `omega_1` and the second Ditzian-Totik modulus
//! - [`experiments`]: error sweeps, bound ratios, hypothesis and necessity probes
//! - [`cli`]: the command-line front end

pub mod bernstein;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod functions;
pub mod integer;
pub mod moduli;
pub mod numeric;

pub use error::{Error, Result};
pub use numeric::{HighPrecisionReal, Rational};
