use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("lattice must have at least one site")]
    NoSites,
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("hilbert space dimension {dimension} exceeds the cap of {cap}")]
    Capacity { dimension: u128, cap: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("occupation {occupation:?} is not a state of the {sites}-site, {particles}-particle basis")]
    NotInBasis {
        occupation: Vec<u8>,
        sites: usize,
        particles: usize,
    },
    #[error("eigendecomposition failed ({reason}) for energies {energies:?}, J = {hopping}, Γ = {interaction}")]
    Numerical {
        reason: String,
        energies: Vec<f64>,
        hopping: f64,
        interaction: f64,
    },
    #[error("realization {index}: {source}")]
    Realization {
        index: u64,
        #[source]
        source: Box<Error>,
    },
    #[error("the non-interacting oracle requires Γ = 0, got {0}")]
    Interacting(f64),
    #[error("matrix is not unitary: max |U†U - I| = {0:e}")]
    NotUnitary(f64),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid distribution: {0}")]
    Distribution(String),
    #[error("unknown layout tag {0:?}")]
    UnknownLayout(String),
    #[error("image: {0}")]
    Image(String),
    #[error("manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
