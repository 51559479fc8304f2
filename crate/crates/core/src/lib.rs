//! Exact-arithmetic toolkit for complete exponential sums modulo odd prime powers.
//!
//! The crate is organized around the chain of reductions that evaluates the
//! character sums `G(m, ℓ, c)` and `𝒞(m̃, ℓ₁, ℓ₂)` in closed form:
//!
//! - [`modarith`] — residue arithmetic mod prime powers, Legendre symbols,
//!   the ε(A, p^s) normalization factor, CRT splitting;
//! - [`padic`] — truncated p-adic logarithm, branch-consistent square roots
//!   via Hensel lifting, and finite-precision p-adic rationals;
//! - [`characters`] — primitive characters mod p^n as exact rational phases,
//!   the Postnikov unit α, Gauss sums;
//! - [`expsums`] — Ramanujan and Kloosterman sums, brute force and closed
//!   form, plus the reciprocity identity used to split composite moduli;
//! - [`statphase`] — the generic p-adic stationary-phase engine (linear and
//!   quadratic reduction) and the second-derivative-test bound;
//! - [`papersums`] — `G`, `𝒞` and `𝒦` in several independently computable
//!   forms, with support/bound predictions and the cancellation sweep.
//!
//! Everything is a pure function over immutable values; all evaluators can be
//! shared freely across threads.

pub mod characters;
pub mod expsums;
pub mod modarith;
pub mod padic;
pub mod papersums;
pub mod statphase;

mod error;

pub use error::{Error, Result};
pub use num_complex::Complex64;
