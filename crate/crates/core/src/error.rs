use thiserror::Error;

/// Errors raised anywhere in the estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid design: {0}")]
    InvalidDesign(String),

    #[error("invalid coefficient scheme: {0}")]
    InvalidScheme(String),

    #[error("response generation failed: {0}")]
    Generation(String),

    #[error("unknown model variant `{0}`")]
    Lookup(String),

    #[error("linear solver failed: {0}")]
    Solver(String),

    #[error("coefficients are not identifiable: {0}")]
    NonIdentifiable(String),

    #[error("maximum likelihood estimate does not exist: {0}")]
    NonExistence(String),

    #[error("degenerate adjustment: {0}")]
    DegenerateAdjustment(String),

    #[error("degenerate pilot: {0}")]
    DegeneratePilot(String),

    #[error("deconvolution kernel overflow: exponent {exponent:.1} (varsigma/h too large)")]
    KernelOverflow { exponent: f64 },

    #[error("bandwidth constraint violated: 2*M0^2*varsigma^2*c_h = {value:.4} >= 1")]
    BandwidthConstraint { value: f64 },

    #[error("link estimate is empty: no grid point has enough kernel mass")]
    EmptyEstimate,

    #[error("surrogate objective overflow at iteration {iteration}")]
    ObjectiveOverflow { iteration: usize },

    #[error("solver did not converge after {iterations} iterations (gradient inf-norm {grad_norm:.3e})")]
    NonConvergence { iterations: usize, grad_norm: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("rank deficient weighted Gram matrix: {0}")]
    Rank(String),

    #[error("split error: {0}")]
    Split(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wrap an error with the pipeline stage that produced it.
    pub fn at(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// The innermost error, with stage labels stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    /// Process exit code: 2 for configuration problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::Config(_)
            | Error::Schema(_)
            | Error::Parse { .. }
            | Error::Lookup(_)
            | Error::InvalidScheme(_)
            | Error::Split(_)
            | Error::Io(_) => 2,
            _ => 3,
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Schema(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
