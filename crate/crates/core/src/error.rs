use thiserror::Error;

/// Errors raised by the quantum probability toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("operator is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("operator is not unitary (residual {residual:.3e})")]
    NotUnitary { residual: f64 },

    #[error("operator is not an orthogonal projection (residual {residual:.3e})")]
    NotProjection { residual: f64 },

    #[error("not a density matrix: {reason}")]
    NotDensityMatrix { reason: String },

    #[error("eigensolver failed to converge")]
    NoConvergence,

    #[error("vector has zero norm")]
    ZeroVector,

    #[error("invalid projection-valued measure: {reason}")]
    InvalidPvm { reason: String },

    #[error("outcome {value} is not a value of the measurement")]
    UnknownOutcome { value: f64 },

    #[error("algebra is not commutative")]
    NotCommutative,

    #[error("observable does not commute with the conditioning algebra (residual {residual:.3e})")]
    IncompatibleConditioning { residual: f64 },

    #[error("every conditioning branch has zero probability")]
    AllBranchesNull,

    #[error("failed to resolve minimal projections after {attempts} attempts")]
    MinimalProjections { attempts: usize },

    #[error("outcome has zero probability at step {step}")]
    ZeroProbabilityOutcome { step: usize },

    #[error("at least two measurement steps are required")]
    TooFewSteps,

    #[error("axis {axis} out of range for {len} axes")]
    AxisOutOfRange { axis: usize, len: usize },

    #[error("events are not mutually exclusive (overlap {overlap:.3e})")]
    NotMutuallyExclusive { overlap: f64 },

    #[error("invalid classical joint distribution: {reason}")]
    InvalidJoint { reason: String },

    #[error("expected a qubit (dimension 2), found dimension {dim}")]
    NotQubit { dim: usize },

    #[error("grid resolution {resolution} is below the minimum of {min}")]
    ResolutionTooSmall { resolution: usize, min: usize },

    #[error("sample count must be at least one")]
    EmptySweep,

    #[error("invalid schedule: {reason}")]
    InvalidSchedule { reason: String },

    #[error("time interval [{s}, {t}] is not covered by the schedule")]
    OutOfSchedule { s: f64, t: f64 },

    #[error("invalid measurement plan: {reason}")]
    InvalidPlan { reason: String },

    #[error("invalid interaction model: {reason}")]
    InvalidModel { reason: String },

    #[error("chain dimension {dim} exceeds the cap of {cap}")]
    ChainTooLarge { dim: usize, cap: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
