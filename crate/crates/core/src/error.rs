use std::path::PathBuf;

use crate::topology::NodeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid topology: {node}: {reason}")]
    Topology { node: String, reason: String },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("node {0} does not exist in the topology")]
    UnknownNode(NodeId),

    #[error("power matrix has no entry for source {source_id} at observer region {observer}")]
    IncompleteMatrix { observer: usize, source_id: NodeId },

    #[error("interference list for region {0} supplied more than once")]
    DuplicateOwner(usize),

    #[error("no interference set supplied for region {0}")]
    MissingRegion(usize),

    #[error("cannot give {pinned} pinned nodes exclusive resources: frame offers {capacity} (slots x sub-channels)")]
    Infeasible { pinned: usize, capacity: usize },

    #[error("the dcaim scheme needs a slot schedule")]
    MissingSchedule,

    #[error("frame {got} charged out of order, ledger expects frame {expected}")]
    OutOfOrderFrame { expected: u64, got: u64 },

    #[error("scenario: {0}")]
    Scenario(String),

    #[error("override `{key}`: {reason}")]
    Override { key: String, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
