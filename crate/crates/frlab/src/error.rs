use thiserror::Error;

use crate::lattice::Frequency;

#[derive(Debug, Error)]
pub enum LatticeError {
    #[error("shell {shell} exceeds the exact-arithmetic capacity (max {max})")]
    TruncationTooDeep { shell: usize, max: usize },
    #[error("integer overflow while processing {0}")]
    Overflow(Frequency),
    #[error("{0} is not in the constraint lattice")]
    NotInLattice(Frequency),
    #[error("{0} is parallel to sigma; projection is degenerate")]
    Degenerate(Frequency),
    #[error("lattice identity violated: {0}")]
    Violation(String),
}

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("symmetry violated at shell {shell}: {what} (deviation {deviation:e})")]
    Symmetry { shell: usize, what: &'static str, deviation: f64 },
    #[error("shell {shell} exceeds field truncation {n_max}")]
    OutOfRange { shell: usize, n_max: usize },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("invalid field data: {0}")]
    Invalid(String),
}

#[derive(Debug, Error)]
pub enum ParameterError {
    #[error("parameter out of range: {0}")]
    Range(String),
}

#[derive(Debug, Error)]
pub enum VerificationError {
    #[error("m = {m}, case {case}: {what} (deviation {deviation:e})")]
    Interaction { m: usize, case: usize, what: String, deviation: f64 },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}
