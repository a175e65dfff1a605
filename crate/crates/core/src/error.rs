use thiserror::Error;

use crate::sim::PartialMetrics;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("agent {agent} out of range (problem has {agents} agents)")]
    UnknownAgent { agent: usize, agents: usize },

    #[error("value index {value} is outside the domain of agent {agent} (size {size})")]
    OutOfDomain { agent: usize, value: usize, size: usize },

    #[error("agent {agent} has an empty domain")]
    EmptyDomain { agent: usize },

    #[error("constraint between agent {0} and itself")]
    SelfConstraint(usize),

    #[error("more than one constraint between agents {0} and {1}")]
    DuplicateConstraint(usize, usize),

    #[error("constraint ({a},{b}): {reason}")]
    BadCostTable { a: usize, b: usize, reason: String },

    #[error("context is missing an entry for agent {missing} (needed by agent {agent})")]
    MissingContextEntry { agent: usize, missing: usize },

    #[error("assignment covers {got} agents, problem has {expected}")]
    IncompleteAssignment { got: usize, expected: usize },

    #[error("constraint graph is disconnected: components {components:?}")]
    Disconnected { components: Vec<Vec<usize>> },

    #[error("invalid pseudo-tree: {}", .0.join("; "))]
    InvalidTree(Vec<String>),

    #[error("invalid heuristic entry: {0}")]
    InvalidHeuristic(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("protocol violation at agent {agent}: {reason}")]
    Protocol { agent: usize, reason: String },

    #[error("no termination within {cap} cycles (partial metrics: {partial:?})")]
    Timeout { cap: u64, partial: PartialMetrics },

    #[error("simulation stalled at cycle {cycle}: no messages in flight but agents {waiting:?} are still running")]
    Stalled { cycle: u64, waiting: Vec<usize> },

    #[error("search space of {size} leaves exceeds the cap of {cap}")]
    SearchSpaceTooLarge { size: f64, cap: f64 },

    #[error("malformed problem file: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
