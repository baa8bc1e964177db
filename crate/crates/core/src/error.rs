use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },

    #[error("point {point:?} is outside the domain of model `{model}`")]
    Domain { model: String, point: Vec<f64> },

    #[error("node {0:?} has no full interior stencil")]
    Stencil(Vec<usize>),

    #[error("sampler acceptance rate {rate:e} fell below {floor:e} after {proposals} proposals")]
    Sampling {
        rate: f64,
        floor: f64,
        proposals: u64,
    },

    #[error("2-dilation {dilation} exceeds bound {bound} at x = {point:?}")]
    DilationViolated {
        point: Vec<f64>,
        dilation: f64,
        bound: f64,
    },

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("singular linear system at pivot {0}")]
    Singular(usize),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed patch file: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(values: &[f64], what: &str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::InvalidInput(format!(
            "{what}: non-finite entry at index {i}"
        ))),
        None => Ok(()),
    }
}
