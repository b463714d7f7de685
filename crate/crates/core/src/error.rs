use thiserror::Error;

/// Errors raised by shape construction, scene setup and the simulation loop.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid shape parameters: {0}")]
    InvalidShape(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("pose quaternion is not unit: |q| = {0}")]
    NonUnitQuaternion(f64),

    #[error("invalid material: {0}")]
    InvalidMaterial(String),

    #[error("invalid wall: {0}")]
    InvalidWall(String),

    #[error("neighbor search misconfigured: {0}")]
    NeighborConfig(String),

    #[error("coincident centers for spheres {0} and {1}")]
    CoincidentCenters(usize, usize),

    #[error("sphere center lies on the axis of cylinder wall {wall} and the sphere does not fit (radius {radius} >= wall radius {wall_radius})")]
    DegenerateCylinder {
        wall: usize,
        radius: f64,
        wall_radius: f64,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid scene: field `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("analysis failed: {0}")]
    Analysis(String),

    #[error("numerical blow-up at step {step}: particle {particle} has speed {speed} m/s (cap {cap} m/s)")]
    BlowUp {
        step: u64,
        particle: usize,
        speed: f64,
        cap: f64,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
