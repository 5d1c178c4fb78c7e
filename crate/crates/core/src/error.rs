use thiserror::Error;

/// Errors raised by the fracture toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("gradient bound violated: |F| = {norm:.6} exceeds M = {bound}")]
    GradientBound { norm: f64, bound: f64 },

    #[error("value bound violated: |y| = {norm:.6} exceeds M = {bound}")]
    ValueBound { norm: f64, bound: f64 },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("mesh mismatch: {0}")]
    MeshMismatch(String),

    #[error("continuity violated on closed facet {facet}: residual {residual:.3e} > {tolerance:.3e}")]
    Continuity {
        facet: usize,
        residual: f64,
        tolerance: f64,
    },

    #[error("invalid density: {0}")]
    InvalidDensity(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("unknown component id {id} (partition has {count} components)")]
    UnknownComponent { id: usize, count: usize },

    #[error("component mismatch: {0}")]
    ComponentMismatch(String),

    #[error("deformation is not piecewise rigid: cell {cell} has dist(F, SO(2)) = {dist:.3e} > {tol:.3e}")]
    NotPiecewiseRigid { cell: usize, dist: f64, tol: f64 },

    #[error("admissible range exceeded: {message} (largest admissible eps = {eps_max:.3e})")]
    EpsRange { message: String, eps_max: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
