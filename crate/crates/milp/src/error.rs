use thiserror::Error;

pub type Result<T> = std::result::Result<T, MilpError>;

#[derive(Debug, Error)]
pub enum MilpError {
    #[error("model has no constraints")]
    EmptyModel,

    #[error("name `{0}` is declared twice")]
    NameCollision(String),

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("variable `{name}` has empty domain [{lo}, {hi}]")]
    EmptyDomain { name: String, lo: f64, hi: f64 },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unsupported model structure: {0}")]
    Unsupported(String),

    #[error("{count} binary variables exceed the solver bound of {bound}")]
    TooManyBinaries { count: usize, bound: usize },

    #[error("unknown formulation `{0}`")]
    UnknownFormulation(String),

    #[error(transparent)]
    Core(#[from] xlayer_core::Error),
}

pub(crate) fn parse_err(line: usize, msg: impl Into<String>) -> MilpError {
    MilpError::Parse {
        line,
        msg: msg.into(),
    }
}
