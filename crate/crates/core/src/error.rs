use thiserror::Error;

use crate::model::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed instance document: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("invalid instance: {}", join(.0))]
    Invalid(Vec<Violation>),

    #[error("failure probability {0} outside [0, 1)")]
    Probability(f64),

    #[error("unknown node `{0}`")]
    UnknownNode(String),

    #[error("no physical link between `{0}` and `{1}`")]
    UnknownLink(String, String),

    #[error("no logical link between `{0}` and `{1}`")]
    UnknownLogicalLink(String, String),

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("mapped endpoints `{0}` and `{1}` are physically disconnected")]
    Disconnected(String, String),

    #[error("logical link ({0}, {1}) has no route in the mapping")]
    Unmapped(String, String),

    #[error("spanning tree count {count} exceeds the enumeration limit {limit}")]
    TreeLimit { count: String, limit: usize },

    #[error("{terminals} terminals exceed the exact Steiner bound of {bound}")]
    TerminalBound { terminals: usize, bound: usize },

    #[error("terminals are not connected in the physical network")]
    TerminalsDisconnected,

    #[error("unknown {kind} `{name}`")]
    UnknownStrategy { kind: &'static str, name: String },

    #[error("generation: {0}")]
    Generation(String),
}

fn join(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}
