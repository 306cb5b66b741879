use alloc::string::String;

/// Errors raised by the solver core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TapError {
    #[error("node id {id} out of range for graph with {n} nodes")]
    NodeOutOfRange { id: u32, n: usize },
    #[error("invalid probability {value} for {what}")]
    InvalidProbability { what: &'static str, value: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("removed set is not closed under forward reachability (node {0} escapes)")]
    NotClosed(u32),
    #[error("triggering sampler returned {member} for node {node}, which is not an in-neighbor")]
    InvalidTrigger { node: u32, member: u32 },
    #[error("instance too large for exhaustive enumeration: {0}")]
    TooLarge(String),
    #[error("mismatch between oracle and configuration: {0}")]
    Mismatch(String),
}

pub type Result<T, E = TapError> = core::result::Result<T, E>;
