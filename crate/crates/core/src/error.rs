use thiserror::Error;

/// Errors raised while building or solving a cut-cell Stokes problem.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("mesh needs at least 2 subdivisions per axis, got {0}")]
    MeshTooCoarse(usize),

    #[error("level-set gradient is undefined at ({0}, {1})")]
    DegeneratePoint(f64, f64),

    #[error("point ({0}, {1}) lies outside the reference element")]
    OutsideReference(f64, f64),

    #[error("quadrature degree {0} is not supported (1..={max})", max = crate::quadrature::MAX_TRIANGLE_DEGREE)]
    UnsupportedDegree(usize),

    #[error("zero set crosses {0} edges of element {1}")]
    AmbiguousCut(usize, usize),

    #[error("degenerate cut: fluid fraction {0:e} of the element")]
    DegenerateCut(f64),

    #[error("no cut element found: the interface does not meet the mesh")]
    NoInterface,

    #[error("multiplier dof {0} has an identically zero row")]
    SingularLayout(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("factorization failed: singular pivot at index {0:?}")]
    Singular(Option<usize>),

    #[error("solve rejected: relative residual {0:e} exceeds tolerance")]
    Residual(f64),

    #[error("power iteration did not converge after {iterations} iterations (last estimate {estimate})")]
    NoConvergence { iterations: usize, estimate: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("convergence slope needs at least 2 successful rows, got {0}")]
    TooFewRows(usize),

    #[error("ball reached the wall clearance at t = {0}")]
    Contact(f64),

    #[error("drag coefficient is not positive: {0}")]
    NonPositiveDrag(f64),

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
