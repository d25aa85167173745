use thiserror::Error;

/// Errors produced by the geometric pipeline.
///
/// Numerical residuals are carried in the variants so that a failure report
/// always names the quantity that broke and by how much.
#[derive(Debug, Error)]
pub enum AkgeoError {
    #[error("invalid algebra: {0}")]
    Algebra(String),

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("frame mismatch: operands live in frames `{left}` and `{right}`")]
    FrameMismatch { left: String, right: String },

    #[error("degree mismatch: expected {expected}, got {got}")]
    DegreeMismatch { expected: usize, got: usize },

    #[error("singular matrix: {0}")]
    SingularMatrix(String),

    #[error("invalid almost complex structure: |J^2 + I| = {residual:.3e}")]
    NotAlmostComplex { residual: f64 },

    #[error("metric is not positive definite (smallest eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("incompatible (g, J, omega) triple: residual {residual:.3e}")]
    IncompatibleTriple { residual: f64 },

    #[error("parameter outside the admissible domain: {0}")]
    Domain(String),

    #[error("frame is not orthonormal and J-adapted: {0}")]
    FrameNotAdapted(String),

    #[error("connection does not preserve the (1,0) bundle: residual {residual:.3e}")]
    NotComplexLinear { residual: f64 },

    #[error("internal oracle disagreement: {0}")]
    OracleDisagreement(String),

    #[error("pipeline stage `{stage}` failed: {source}")]
    Pipeline {
        stage: &'static str,
        #[source]
        source: Box<AkgeoError>,
    },

    #[error("cannot read `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot parse `{path}`: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("invalid manifold description: {0}")]
    SpecFile(String),
}

impl AkgeoError {
    /// Wraps an error with the pipeline stage it occurred in.
    pub fn at_stage(self, stage: &'static str) -> Self {
        AkgeoError::Pipeline {
            stage,
            source: Box::new(self),
        }
    }
}
