//! Differential testing of a candidate program against a reference.
//!
//! Cases are evaluated in a fixed order (samples, edge cases, random cases by
//! index) and the earliest disagreement is reported, so the outcome does not
//! depend on how many workers ran the cases.

mod compare;
mod shrink;
mod stress;

use thiserror::Error;

use crate::sandbox::SandboxError;

pub use compare::{compare_outputs, compare_with_input, CheckerError};
pub use shrink::shrink_failure;
pub use stress::{leading_cases, stress_test, Failure, StressConfig, StressOutcome};

#[derive(Debug, Error)]
pub enum StressError {
    #[error(transparent)]
    Sandbox(#[from] SandboxError),
    #[error(transparent)]
    Checker(#[from] CheckerError),
    #[error("worker pool: {0}")]
    Pool(String),
}
