// Copyright 2026 fluxmol Contributors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors produced by the numerical engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid basis: {0}")]
    InvalidBasis(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is not Hermitian (max |H - H^dagger| = {defect:e})")]
    NotHermitian { defect: f64 },

    #[error("requested {requested} eigenvalues from a matrix of dimension {dim}")]
    TooManyLevels { requested: usize, dim: usize },

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("singular evaluation: {0}")]
    Singularity(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("fixed-point iteration did not converge after {iterations} iterations")]
    IterationFailure { iterations: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
