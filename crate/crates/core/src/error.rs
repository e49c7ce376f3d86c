use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate lattice")]
    DegenerateLattice,

    #[error("linear part is not orthogonal (deviation {0:e})")]
    NotOrthogonal(f64),

    #[error("not an orthogonal projector")]
    InvalidProjector,

    #[error("projected lattice is not discrete")]
    NonDiscreteProjection,

    #[error("invalid modulus {name} = {value}")]
    InvalidModulus { name: &'static str, value: f64 },

    #[error("moduli give no usable manifold (volume {0})")]
    DegenerateModuli(f64),

    #[error("{name} = {value} is outside [{lo}, {hi}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("no sign change on [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },

    #[error("resource bound exceeded: {0}")]
    ResourceBound(String),

    #[error("unusable mesh: {0}")]
    DegenerateMesh(String),

    #[error("point is not reachable in the mesh")]
    Unreachable,

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
