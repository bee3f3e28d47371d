use alloc::string::String;

use crate::cover::Verdict;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Shapes, layouts or ids that do not fit together.
    #[error("structural error: {0}")]
    Structural(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    /// A node did not receive a message it needs for the current round.
    #[error("protocol error: node {node} has no message from neighbour {neighbor}")]
    MissingMessage { node: usize, neighbor: usize },
    #[error("protocol error: nodes {0} and {1} do not overlap")]
    EmptyOverlap(usize, usize),
    #[error("cover rejected (connected: {}, h1 rank: {}, covers all objects: {})", .0.connected, .0.h1_rank, .0.covers_all)]
    CoverRejected(Verdict),
    #[error("degenerate input: {0}")]
    Degenerate(String),
}
