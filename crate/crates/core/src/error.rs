use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("vector is not normalized (norm = {norm})")]
    NotNormalized { norm: f64 },

    #[error("entries must be finite")]
    NonFinite,

    #[error("operator is not Hermitian (residual {residual:e})")]
    NotHermitian { residual: f64 },

    #[error("operator is not unitary (residual {residual:e})")]
    NotUnitary { residual: f64 },

    #[error("operator is not an orthogonal projector (residual {residual:e})")]
    NotProjector { residual: f64 },

    #[error("invalid density operator: {0}")]
    InvalidDensity(String),

    #[error("basis columns are not orthonormal (residual {residual:e})")]
    NonOrthonormalBasis { residual: f64 },

    #[error("correlation operator domain does not match the support of the density operator (residual {residual:e})")]
    SupportMismatch { residual: f64 },

    #[error("no twin exists: operator does not commute with the reduced density operator (commutator {commutator:e})")]
    NoTwinExists { commutator: f64 },

    #[error("operator does not commute with the reduced density operator (commutator {commutator:e})")]
    CommutationViolation { commutator: f64 },

    #[error("not equiprobability-certifiable: vectors do not lie in one common eigen-subspace")]
    NotCoResident,

    #[error("certification failed: residual {residual:e} exceeds {tolerance:e}")]
    CertificationFailed { residual: f64, tolerance: f64 },

    #[error("spectrum is not exactly rational (approximation error {error:e})")]
    InexactSpectrum { error: f64 },

    #[error("spectrum does not match the state: {0}")]
    SpectrumMismatch(String),

    #[error("ancilla dimension shortfall: need at least {needed}, have {available}")]
    DimensionShortfall { needed: usize, available: usize },

    #[error("projectors do not form an orthogonal resolution of the identity: {0}")]
    NotAResolution(String),

    #[error("selected branch has zero weight ({weight:e})")]
    ZeroWeight { weight: f64 },

    #[error("invalid event: {0}")]
    InvalidEvent(String),

    #[error("decomposition is not an orthogonal sum of the projector (residual {residual:e})")]
    NonOrthogonalDecomposition { residual: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("infeasible state specification: {0}")]
    InfeasibleSpec(String),

    #[error("unknown tolerance name `{0}`")]
    UnknownTolerance(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}
