use std::fmt;

/// A location inside a scenario file or a standalone expression (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SourcePos {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for SourcePos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}", self.line, self.column)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("syntax error at {pos}: {message}")]
    Syntax { pos: SourcePos, message: String },

    #[error("semantic error at {pos}: {message}")]
    Semantic { pos: SourcePos, message: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("evaluation error at {point:?}: {message}")]
    Evaluation { point: Vec<f64>, message: String },

    #[error("domain error: finite-difference stencil at {point:?} leaves the domain")]
    Domain { point: Vec<f64> },

    #[error("resolution error at {point:?}: {message}; shrink fd_step")]
    Resolution { point: Vec<f64>, message: String },

    #[error("composition error: endpoint mismatch {distance:.3e} exceeds tolerance")]
    Composition { distance: f64 },

    #[error("path is not in C^phi for word {word}: |gamma(1) - phi(gamma(0))| = {distance:.3e}")]
    NotInCPhi { word: String, distance: f64 },

    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("connection is not equivariantly flat: residual {residual:.3e}")]
    NotFlat { residual: f64 },

    #[error("invalid character: {0}")]
    InvalidCharacter(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("conditioning error: condition number {condition:.3e}; shrink the ansatz")]
    Conditioning { condition: f64 },

    #[error("assumption violated: {0}")]
    AssumptionViolation(String),

    #[error("locality declaration error: {0}")]
    LocalityDeclaration(String),

    #[error("cocycle violation: residual {residual:.3e} at {point:?} ({detail})")]
    CocycleViolation {
        residual: f64,
        point: Vec<f64>,
        detail: String,
    },

    #[error("stage {stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn in_stage(self, stage: &str) -> Error {
        Error::Stage {
            stage: stage.to_string(),
            source: Box::new(self),
        }
    }

    /// Innermost stage name, if the error was raised inside a pipeline stage.
    pub fn stage(&self) -> Option<&str> {
        match self {
            Error::Stage { stage, source } => source.stage().or(Some(stage)),
            _ => None,
        }
    }

    /// A point attached to the error, when there is one.
    pub fn witness_point(&self) -> Option<&[f64]> {
        match self {
            Error::Evaluation { point, .. }
            | Error::Domain { point }
            | Error::Resolution { point, .. }
            | Error::CocycleViolation { point, .. } => Some(point),
            Error::Stage { source, .. } => source.witness_point(),
            _ => None,
        }
    }

    /// Stable machine-readable identifier used in reports and by the C ABI.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Syntax { .. } => "syntax",
            Error::Semantic { .. } => "semantic",
            Error::InvalidInput(_) => "invalid-input",
            Error::Evaluation { .. } => "evaluation",
            Error::Domain { .. } => "domain",
            Error::Resolution { .. } => "resolution",
            Error::Composition { .. } => "composition",
            Error::NotInCPhi { .. } => "not-in-c-phi",
            Error::Consistency(_) => "consistency",
            Error::NotFlat { .. } => "not-flat",
            Error::InvalidCharacter(_) => "invalid-character",
            Error::Precondition(_) => "precondition",
            Error::Conditioning { .. } => "conditioning",
            Error::AssumptionViolation(_) => "assumption-violation",
            Error::LocalityDeclaration(_) => "locality-declaration",
            Error::CocycleViolation { .. } => "cocycle-violation",
            Error::Stage { source, .. } => source.kind(),
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
