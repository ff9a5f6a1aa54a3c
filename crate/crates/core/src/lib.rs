//! Exact computations on the special fibres of regular models of the
//! modular curves X0(N), for N coprime to 6.
//!
//! The pipeline for one level runs
//! [`arith::factor_level`] → [`minimal::fiber_for_level`] →
//! [`divisors::solve_vm`] → [`selfint::finite_part`]. Everything is exact
//! rational arithmetic; floats appear only in reporting fields.

pub mod arith;
pub mod divisors;
pub mod error;
pub mod fiber;
pub mod linalg;
pub mod minimal;
pub mod oracle;
pub mod selfint;
pub mod verify;

pub use arith::{factor_level, invariants_of, FactoredLevel, Invariants, LevelBlock};
pub use divisors::{CuspSide, VerticalDivisor};
pub use error::{Error, Result};
pub use fiber::{ComponentIndex, ComponentKind, FiberComponent, FiberModel, ModelTag};
pub use linalg::{Rational, RationalMatrix, RationalVector};
pub use selfint::{finite_part, FinitePartResult, LogWeightedRational, PrimeCoefficient, SweepFilter};
pub use verify::{verify_level, VerificationReport};
