use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("cone requires at least one dual generator")]
    EmptyGenerators,

    #[error("e is not an interior direction: <d_{index}, e> = {value} <= 0")]
    EnotInterior { index: usize, value: f64 },

    #[error("dual generators do not span the space; the cone is not pointed")]
    NotPointed,

    #[error("generator {index} is zero (within tolerance)")]
    ZeroGenerator { index: usize },

    #[error("point set must be nonempty")]
    EmptyPointSet,

    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("variable x{index} out of range: expression has {n_vars} variable(s)")]
    VariableIndexOutOfRange { index: usize, n_vars: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("components {i} and {j} collide at the evaluation point (values within {tol}); the local-graph coderivative is undefined")]
    CollidingComponents { i: usize, j: usize, tol: f64 },

    #[error("anchor point is not weakly minimal in the image")]
    NotWeaklyMinimal,

    #[error("anchor point is not weakly maximal in the image")]
    NotWeaklyMaximal,

    #[error("point does not belong to the set")]
    PointNotInSet,

    #[error("iteration cap {cap} reached before tolerance {tol}")]
    ToleranceNotReached { cap: usize, tol: f64 },

    #[error("coordinate index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("grid dimension {n} exceeds the cap of {cap}; pass the override to proceed")]
    DimensionTooLarge { n: usize, cap: usize },

    #[error("point is not inside the feasible set")]
    NotInOmega,

    #[error("invalid problem file: {0}")]
    Problem(String),
}
