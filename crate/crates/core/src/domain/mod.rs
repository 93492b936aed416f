//! Discrete geometry and containers: grids, fields of states, quadrature,
//! test functions for weak-form residuals, and trajectories with persistence.

mod field;
mod grid;
mod io;
mod testfn;
mod trajectory;

pub use field::{neumaier_sum, Field};
pub use grid::{Grid, Topology};
pub use testfn::{
    nonnegative_scalar_catalogue, scalar_catalogue, vector_catalogue, ScalarEval, ScalarMode,
    ScalarTestFunction, TimeProfile, VectorEval, VectorTestFunction,
};
pub use trajectory::{EntropyMonotonicity, Trajectory};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DomainError {
    #[error("grid needs at least 4 cells per axis, got {0}")]
    TooFewCells(usize),
    #[error("grid dimension must be 1 or 2, got {0}")]
    BadDimension(usize),
    #[error("grid extent must be positive and finite, got {0}")]
    BadExtent(f64),
    #[error("field has {found} cells but the grid has {expected}")]
    CellCountMismatch { expected: usize, found: usize },
    #[error("cell {index}: {source}")]
    BadCell {
        index: usize,
        source: crate::thermo::ThermoError,
    },
    #[error("grids are not compatible: {0}")]
    GridMismatch(String),
    #[error("restriction requires an integer refinement ratio, got {fine} -> {coarse}")]
    BadRestriction { fine: usize, coarse: usize },
    #[error("trajectory times must start at 0 and increase strictly")]
    BadTimes,
    #[error("trajectory needs one field per checkpoint")]
    FieldCountMismatch,
    #[error("checkpoint {index}: mass {found} deviates from M0 = {expected} beyond 1e-10")]
    MassDrift {
        index: usize,
        expected: f64,
        found: f64,
    },
    #[error("checkpoint {index}: energy {found} exceeds the budget E0 = {budget}")]
    EnergyBudget {
        index: usize,
        budget: f64,
        found: f64,
    },
    #[error("{0} is not a checkpoint instant")]
    NotACheckpoint(f64),
    #[error("right limit at checkpoint {index}: {reason}")]
    BadRightLimit { index: usize, reason: String },
    #[error("persistence: {0}")]
    Persist(#[from] PersistError),
}

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed manifest: {0}")]
    Manifest(#[from] serde_json::Error),
    #[error("unsupported format version {0:?}")]
    UnsupportedVersion(String),
    #[error("endianness marker {0:?} does not match this reader (little)")]
    Endianness(String),
    #[error("field payload {path}: expected {expected} bytes, found {found}")]
    PayloadSize {
        path: String,
        expected: usize,
        found: usize,
    },
    #[error("manifest is inconsistent: {0}")]
    Inconsistent(String),
}
