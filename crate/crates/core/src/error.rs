use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("instance has no links")]
    Empty,
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("link at position {position} has id {id}; ids must be contiguous from 0")]
    NonContiguousId { position: usize, id: usize },
    #[error("link {id} has non-finite coordinates")]
    NonFinite { id: usize },
    #[error("link {id} has zero length")]
    ZeroLength { id: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SinrError {
    /// The link cannot reach the SINR threshold even without interference.
    #[error("link {id} is dead: its power cannot overcome noise at threshold beta")]
    DeadLink { id: usize },
    #[error("power table has {got} entries for {expected} links")]
    PowerTableSize { expected: usize, got: usize },
    #[error("power for link {id} must be finite and > 0, got {value}")]
    NonPositivePower { id: usize, value: f64 },
    #[error("unknown link id {0}")]
    UnknownLink(usize),
    #[error("link set is empty")]
    EmptySet,
    #[error("exact max-average affectance supports at most {max} links, got {got}")]
    TooManyLinks { max: usize, got: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error("batch references unknown link id {0}")]
    UnknownLink(usize),
    #[error("packet batch is empty")]
    EmptyBatch,
    #[error("link {id} cannot be scheduled even alone")]
    Unschedulable { id: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArrivalError {
    #[error("gamma must lie in (0, 1], got {0}")]
    Gamma(f64),
    #[error("rate vector has {got} rates for {expected} links")]
    Size { expected: usize, got: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invariant violated at slot {slot}: {msg}")]
    Invariant { slot: u64, msg: String },
    #[error(transparent)]
    Sinr(#[from] SinrError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error("trace too short for a stability estimate: {got} slots, need {min}")]
    ShortTrace { got: usize, min: usize },
}
