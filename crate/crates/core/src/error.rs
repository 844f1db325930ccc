use thiserror::Error;

/// Errors produced while building meshes, assembling systems or running a simulation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid material: {0}")]
    InvalidMaterial(String),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("element error: {0}")]
    Element(String),

    #[error("moving least squares coverage insufficient at ({x:.6}, {y:.6}): {reason}")]
    MlsCoverage { x: f64, y: f64, reason: String },

    #[error("point location failed for ({x:.6}, {y:.6})")]
    PointLocation { x: f64, y: f64 },

    #[error("linear solve failed: {0}")]
    Solve(String),

    #[error("boundary condition error: {0}")]
    Boundary(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
