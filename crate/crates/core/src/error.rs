use thiserror::Error;

/// Errors raised across the crate.
///
/// Variants map onto the failure modes each operation documents; the CLI
/// turns them into exit codes through [`Error::exit_code`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("model mismatch: {0}")]
    ModelMismatch(String),
    #[error("invalid point: {0}")]
    InvalidPoint(String),
    #[error("degenerate segment: endpoints coincide")]
    DegenerateSegment,
    #[error("degenerate line: ideal endpoints coincide")]
    DegenerateLine,
    #[error("endpoint mismatch: {0}")]
    EndpointMismatch(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("element is {kind}, expected hyperbolic")]
    NotHyperbolic { kind: String },
    #[error("hypothesis not satisfied: {0}")]
    HypothesisNotSatisfied(String),
    #[error("unsupported horoball center: {0}")]
    UnsupportedCenter(String),
    #[error("horoball separation violated: {0}")]
    SeparationViolation(String),
    #[error("k1 census not certified within word-length cap {cap}; partial value {partial}")]
    K1Uncertified { partial: u64, cap: usize },
    #[error("no power g^k with k <= {k1} reaches displacement {threshold}")]
    K1TooSmall { k1: u64, threshold: f64 },
    #[error("n0 not certified within cap {cap}: {detail}")]
    N0Uncertified { cap: usize, detail: String },
    #[error("fixed-point dichotomy violated: {0}")]
    DichotomyViolation(String),
    #[error("axis endpoints preserved by the conjugator: the group is virtually cyclic along this axis")]
    VirtuallyCyclic,
    #[error("no hyperbolic element in the ball of radius {n_max}")]
    NotFound { n_max: usize },
    #[error("enumeration exceeded cap of {cap} elements after completing radius {completed}")]
    SizeCap { cap: usize, completed: usize, partial: Vec<u64> },
    #[error("relation found: {word} is the identity")]
    RelationFound { word: String },
    #[error("nesting condition fails: {0}")]
    NestingFailure(String),
    #[error("empty generating set")]
    EmptySet,
    #[error("matrix is not unimodular: {0}")]
    NonUnimodular(String),
    #[error("unknown preset: {0}")]
    UnknownPreset(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{stage}: {source}")]
    Stage { stage: String, source: Box<Error> },
}

impl Error {
    pub fn in_stage(self, stage: &str) -> Error {
        Error::Stage { stage: stage.to_string(), source: Box::new(self) }
    }

    /// 1 verification failure, 2 usage error, 3 cap / uncertified.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Stage { source, .. } => source.exit_code(),
            Error::UnknownPreset(_)
            | Error::Parse(_)
            | Error::NonUnimodular(_)
            | Error::ModelMismatch(_)
            | Error::InvalidPoint(_)
            | Error::DegenerateSegment
            | Error::DegenerateLine
            | Error::Precondition(_)
            | Error::EmptySet => 2,
            Error::K1Uncertified { .. }
            | Error::N0Uncertified { .. }
            | Error::SizeCap { .. }
            | Error::NotFound { .. } => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
