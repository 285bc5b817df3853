use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("unsupported quadrature size {0} (supported: 1..={max})", max = crate::dg::MAX_QUADRATURE_NODES)]
    UnsupportedQuadrature(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("CFL number {cfl} exceeds the stable limit {limit} for degree {degree}")]
    Cfl { cfl: f64, limit: f64, degree: usize },

    #[error("non-finite value in element {element} at t = {time}")]
    NonFinite { element: usize, time: f64 },

    #[error("positivity lost in element {element} at t = {time}: rho = {rho}, p = {pressure}")]
    Positivity {
        element: usize,
        time: f64,
        rho: f64,
        pressure: f64,
    },

    #[error("filtered density is non-positive at x = {x} (value {value})")]
    FilteredPositivity { x: f64, value: f64 },

    #[error("vacuum is generated by the Riemann data")]
    Vacuum,

    #[error("Riemann pressure iteration failed to converge")]
    RiemannNoConvergence,

    #[error("kernel moment system is ill-conditioned (condition number {0:e})")]
    SingularKernel(f64),

    #[error("degenerate normalizer c_theta = {0:e}")]
    DegenerateNormalizer(f64),

    #[error("training diverged at epoch {epoch} (train mse {loss:e})")]
    Diverged {
        epoch: usize,
        loss: f64,
        history: Vec<(usize, f64, f64)>,
    },

    #[error("corrupt file: {0}")]
    Corrupt(String),

    #[error("unsupported format version {found} (expected {expected})")]
    VersionMismatch { expected: u32, found: u32 },

    #[error("shape mismatch in {layer}: expected {expected}, found {found}")]
    ShapeMismatch {
        layer: String,
        expected: String,
        found: String,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("degenerate interpolation abscissae")]
    DegenerateAbscissae,

    #[error("missing input {path}: {hint}")]
    MissingInput { path: PathBuf, hint: String },

    #[error("{path}:{line}: {message}")]
    Config {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
