use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {lhs:?} vs {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },
    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),
    #[error("gradient output must be a scalar, got shape {0:?}")]
    NotScalar(Vec<usize>),
    #[error("gradient output is not recorded on a tape")]
    NotOnTape,
    #[error("tensors from different tapes combined in {0}")]
    TapeMismatch(&'static str),
    #[error("{params} parameters but {grads} gradients")]
    Misaligned { params: usize, grads: usize },
    #[error("invalid network spec: {0}")]
    InvalidSpec(String),
    #[error("fusion weights leave the simplex by {0:e}")]
    OffSimplex(f64),
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("dataset of {available} items cannot hold two disjoint meta sets of {meta} items")]
    DatasetTooSmall { available: usize, meta: usize },
    #[error("inner update did not retain the graph of the fusion clone")]
    GraphNotRetained,
    #[error("non-finite {what} in {phase} step {step}")]
    NonFiniteLoss {
        phase: &'static str,
        step: usize,
        what: &'static str,
    },
    #[error("{metric} needs at least {min}x{min} pixels, got {height}x{width}")]
    ImageTooSmall {
        metric: &'static str,
        min: usize,
        height: usize,
        width: usize,
    },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("scene does not fit the canvas: {0}")]
    SceneTooLarge(String),
}
