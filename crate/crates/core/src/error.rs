use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A loss, gradient, or state evaluation produced a non-finite value.
    #[error("non-finite value in `{context}`")]
    Numerical { context: String },

    /// Two parameter vectors (or a vector and an optimizer state) disagree on layout.
    #[error("layout mismatch: {0}")]
    Layout(String),

    /// A gradient with near-zero norm was passed where a direction is required.
    #[error("degenerate gradient (norm {norm:.3e}) for `{context}`")]
    DegenerateGradient { context: String, norm: f64 },

    /// A morphology graph violated a structural precondition.
    #[error("graph error: {0}")]
    Graph(String),

    /// The transport solver failed to converge within its iteration cap.
    #[error("solver did not converge for pair `{pair}` (last objective {objective:.6e})")]
    Solver { pair: String, objective: f64 },

    /// A distance matrix could not be normalized to similarities.
    #[error("normalization error: {0}")]
    Normalization(String),

    /// An invalid configuration value.
    #[error("config error: {0}")]
    Config(String),

    /// A tensor or observation bundle with an unexpected shape.
    #[error("shape error: {0}")]
    Shape(String),

    /// Dataset generation failed a quality gate.
    #[error("generation error for `{spec_id}`: {reason}")]
    Generation { spec_id: String, reason: String },

    /// An on-disk dataset failed validation.
    #[error("corrupt dataset: {0}")]
    CorruptDataset(String),

    /// A group sub-batch was empty.
    #[error("grouping error: {0}")]
    Grouping(String),

    /// Too few points for a statistic.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
