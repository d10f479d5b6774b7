// Copyright 2026 The qss Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

pub type Result<T> = std::result::Result<T, QssError>;

#[derive(Debug, Error)]
pub enum QssError {
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("modulus {0} is not a prime in [2, 65536]")]
    NotPrime(u32),
    #[error("field elements have different moduli ({0} vs {1})")]
    ModulusMismatch(u32, u32),
    #[error("evaluation points are not pairwise distinct")]
    DuplicatePoints,
    #[error("matrix is singular")]
    SingularMatrix,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("dimension {dim} exceeds the cap of {cap} amplitudes")]
    ShapeCapExceeded { dim: usize, cap: usize },
    #[error("partial trace needs at least one kept register")]
    EmptyKeepSet,
    #[error("operator is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("map is not a bijection on the basis labels")]
    NotBijective,
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("threshold ({t},{k}) violates no-cloning: need 2t > K")]
    CloningViolation { t: usize, k: usize },
    #[error("{0} participants exceeds the cap of 20")]
    ParticipantCapExceeded(usize),
    #[error("invalid access structure: {0}")]
    InvalidStructure(String),
    #[error("invalid scheme: {0}")]
    InvalidScheme(String),
    #[error("participant set {0:?} is not qualified")]
    NotQualified(Vec<usize>),
    #[error("participant set {0:?} is qualified")]
    IsQualified(Vec<usize>),
    #[error("residual system of the decoder is singular")]
    SingularResidual,
    #[error("parameter out of range: {0}")]
    ParamOutOfRange(String),
    #[error("Kraus operators are not trace preserving (deviation {0:.3e})")]
    NotTracePreserving(f64),
    #[error("unknown channel kind {0:?}")]
    UnknownKind(String),
    #[error("invalid channel family: {0}")]
    InvalidFamily(String),
    #[error("structure mismatch: {0}")]
    StructureMismatch(String),
    #[error("malformed descriptor: {0}")]
    Json(#[from] serde_json::Error),
}
