//! Toolkit for square-base hypergraph-product CSS LDPC codes.
//!
//! The crate covers the full pipeline: GF(2) linear algebra ([`gf2`]),
//! square base-matrix construction and certification ([`basegen`]),
//! the hypergraph product ([`hgp`]), Tanner-graph analysis ([`tanner`]),
//! circulant-permutation lifts with CSS congruence constraints ([`lift`]),
//! a degeneracy-aware BP decoder with OSD-lite repair ([`decoder`]), and
//! Monte Carlo frame-error-rate estimation ([`montecarlo`]).

pub mod basegen;
pub mod decoder;
pub mod gf2;
pub mod hgp;
pub mod lift;
pub mod montecarlo;
pub mod tanner;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("vector length {got} does not match expected {want}")]
    LengthMismatch { want: usize, got: usize },
    #[error("corank {corank} exceeds the exhaustive enumeration cap {cap}")]
    CorankTooLarge { corank: usize, cap: usize },
    #[error("unsupported geometry order q={q}; only q in {{2, 3}} is implemented")]
    UnsupportedOrder { q: u32 },
    #[error("edge switch requires entries at (0,0) and (s,s); {missing} is absent")]
    SwitchEntryAbsent { missing: String },
    #[error("infeasible search parameters: {reason}")]
    InfeasibleParameters { reason: String },
    #[error("search budget of {budget} moves exhausted; best score {best_score}")]
    BudgetExhausted { budget: u64, best_score: u64 },
    #[error("rows {x_row} of hx and {z_row} of hz share {overlap} columns (odd); code is not CSS-orthogonal")]
    OddOverlap { x_row: usize, z_row: usize, overlap: usize },
    #[error("no shift assigned to nonzero entry ({row}, {col}) on the {side} side")]
    MissingShift { side: &'static str, row: usize, col: usize },
    #[error("shift table line {line}: {reason}")]
    MalformedShiftRow { line: usize, reason: String },
    #[error("walk start assignment is infeasible: violation score {score}")]
    InfeasibleStart { score: u64 },
    #[error("matrix file {path}: {reason}")]
    MatrixFormat { path: String, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
