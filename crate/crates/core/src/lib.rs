//! Exact construction of a non-negative Schauder basis of `L1(0, ∞)` from
//! multi-interval Haar functions, expansion of dyadic step functions in that
//! basis, and checks of the accompanying inequalities.
//!
//! Everything on the `L1` side is exact rational arithmetic over dyadic
//! step functions; only `L_p` norms for `p ∉ {1, 2}` fall back to floats.

pub mod basis;
pub mod cli;
pub mod error;
pub mod haar;
pub mod rational;
pub mod stepfn;
pub mod verify;

pub use basis::{Basis, BasisBlock, BlockCoeffs, Expansion, ExpansionDocument, Permutation};
pub use error::Error;
pub use haar::HaarIndex;
pub use rational::Rational;
pub use stepfn::StepFunction;
pub use verify::VerifyReport;
