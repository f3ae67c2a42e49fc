use thiserror::Error;

/// Failure modes of the geometry kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("metric is not positive definite at the evaluation point")]
    NotPositiveDefinite,
    #[error("complex structure is invalid: {0}")]
    InvalidComplexStructure(String),
    #[error("distinguished vector has vanishing length")]
    DegenerateVector,
    #[error("frame construction produced {found} vectors, expected {expected}")]
    IncompleteFrame { found: usize, expected: usize },
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("point lies outside the domain or too close to its boundary")]
    OutsideDomain,
    #[error("metric is not Kähler: dΩ residual {0:e}")]
    NotKahler(f64),
    #[error("potential fails positivity at r = {radius}")]
    NonPositivePotential { radius: f64 },
    #[error("dv must be nonzero")]
    ZeroDv,
    #[error("u violates the biconformal constraint (residual {0:e})")]
    ConstraintViolated(f64),
    #[error("quadrature did not converge on [{lo}, {hi}]")]
    QuadratureFailed { lo: f64, hi: f64 },
    #[error("profile is not admissible at s = {s}: {reason}")]
    InadmissibleProfile { s: f64, reason: String },
    #[error("ode solution left the admissible region at s = {s}")]
    OdeLeftDomain { s: f64 },
    #[error("step size underflow at s = {s}")]
    StepSizeUnderflow { s: f64 },
    #[error("metric is already flat")]
    AlreadyFlat,
    #[error("metric is not biconformally flat: {0}")]
    NotBiconformallyFlat(String),
    #[error("a must be positive")]
    NonPositiveCurvature,
    #[error("no principal frame: both relative divergences vanish")]
    NoPrincipalFrame,
    #[error("curvature is not of quasi-constant holomorphic type (residual {0:e})")]
    NotQch(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, GeometryError>;
