use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is singular: smallest singular value {sigma_min:e} <= {tol:e}")]
    SingularInput { sigma_min: f64, tol: f64 },

    #[error("logarithm outside its domain: ||G - 1||_res = {norm} >= 1")]
    LogDomain { norm: f64 },

    #[error("kernel dimension is ambiguous: singular value {sigma:e} lies in the guard band ({tol:e}, {upper:e})")]
    IllConditioned { sigma: f64, tol: f64, upper: f64 },

    #[error("index {index} out of range for dimension {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("matrix is not orthogonal (residual {residual:e})")]
    NotOrthogonal { residual: f64 },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("eigenvalue clusters {a} and {b} are separated by less than twice the tolerance")]
    ClusterAmbiguity { a: f64, b: f64 },

    #[error("bad eigenvalue request: {0}")]
    BadSpec(String),

    #[error("degenerate spectrum: denominator {denominator:e} at ({i}, {j})")]
    DegenerateSpectrum { i: usize, j: usize, denominator: f64 },

    #[error("point is outside the section radius: distance {distance:e} >= radius {radius:e}")]
    OutsideRadius { distance: f64, radius: f64 },

    #[error("compressed witness is not invertible (smallest singular value {sigma_min:e})")]
    SingularCompression { sigma_min: f64 },

    #[error("numerical rank is ambiguous near the tolerance (singular value {sigma:e})")]
    RankAmbiguity { sigma: f64 },

    #[error("element lies in the complexified isotropy algebra (distance {distance:e})")]
    InKernel { distance: f64 },

    #[error("element is not in the polarization (residual {residual:e})")]
    NotInPolarization { residual: f64 },

    #[error("tangent vector is not in the reductive complement (residual {residual:e})")]
    NotInComplement { residual: f64 },

    #[error("quasi-particle vacuum is not unique (eigenvalues {lowest:e}, {next:e})")]
    VacuumDegeneracy { lowest: f64, next: f64 },

    #[error("{modes} modes exceed the Fock-space cap of {cap}")]
    CapExceeded { modes: usize, cap: usize },

    #[error("no trials requested")]
    NoTrials,

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
