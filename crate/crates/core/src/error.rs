use thiserror::Error;

/// Errors raised while building meshes, spaces, or solving the coupled problems.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh parameters: {0}")]
    MeshParams(String),
    #[error("malformed mesh: {0}")]
    MalformedMesh(String),
    #[error("mesh has no cells")]
    EmptyMesh,
    #[error("quadrature degree {degree} exceeds the supported maximum {max}")]
    QuadratureDegree { degree: usize, max: usize },
    #[error("invalid function space: {0}")]
    Space(String),
    #[error("singular element matrix on cell {cell} (degenerate cell?)")]
    SingularElement { cell: usize },
    #[error("invalid problem data: {0}")]
    Problem(String),
    #[error("linear solve failed: {0}")]
    Solver(String),
    #[error("incompatible configuration: {0}")]
    Incompatible(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
