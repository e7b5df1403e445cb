use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("catalog schema error at line {line}, column {column}: {message}")]
    Schema {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("catalog validation failed for `{entry}`: {rule}")]
    Validation { entry: String, rule: String },
    #[error("i/o error: {0}")]
    Io(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("logarithm of non-positive argument: {0}")]
    LogDomain(String),
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("neutral self-impedance is zero; Kron reduction is undefined")]
    SingularNeutral,
    #[error("conductor {index} touches ground: image distance {image} mm <= core radius {radius} mm")]
    ConductorTouchesGround { index: usize, image: f64, radius: f64 },
    #[error("unsupported geometry: {0}")]
    UnsupportedGeometry(String),
    #[error("bound violation: {0}")]
    BoundViolation(String),
    #[error("inconsistent starred values: {0}")]
    InconsistentStarredValues(String),
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// The innermost error, with stage wrappers removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.at(stage))
    }
}
