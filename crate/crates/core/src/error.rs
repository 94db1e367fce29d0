use thiserror::Error;

#[derive(Debug, Error)]
pub enum SmpbeError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("no atoms")]
    NoAtoms,
    #[error("invalid partition: {0}")]
    Partition(String),
    #[error("geometry: {0}")]
    Geometry(String),
    #[error("degenerate tetrahedron near ({:.6}, {:.6}, {:.6}): volume {volume:e}", location[0], location[1], location[2])]
    DegenerateTet { location: [f64; 3], volume: f64 },
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("evaluation point coincides with atom {atom}")]
    AtAtomCenter { atom: usize },
    #[error("transfer: {0}")]
    Transfer(String),
    #[error("point ({:.6}, {:.6}, {:.6}) lies outside the mesh", .0[0], .0[1], .0[2])]
    OutsideMesh([f64; 3]),
    #[error("line search failed after {halvings} halvings at Newton step {step}")]
    LineSearch { step: usize, halvings: usize },
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("{0}")]
    Unsupported(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SmpbeError>;
