//! Robust safety certificates for differential inclusions.
//!
//! The crate checks barrier-function conditions for set-valued dynamics
//! under bounded perturbations, constructs a continuity modulus for the
//! right-hand side, synthesizes robustness margins, and searches for
//! solutions that escape a candidate safe set.

pub mod barrier;
pub mod checker;
pub mod cli;
pub mod config;
pub mod convexset;
pub mod error;
pub mod expr;
pub mod flow;
pub mod linalg;
pub mod modulus;
pub mod report;
pub mod scenarios;
pub mod svmap;

pub use convexset::ConvexCompactSet;
pub use error::{Error, Result};
