use thiserror::Error;

/// Errors raised by state construction, circuit application, measurement and
/// protocol assembly.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("spatial label `{0}` is already registered")]
    RegistryCollision(String),

    #[error("mode ({spatial}, {pol}) registered twice")]
    DuplicateMode { spatial: String, pol: char },

    #[error("states live on different mode registries")]
    RegistryMismatch,

    #[error("unknown spatial label `{0}`")]
    UnknownSpatial(String),

    #[error("occupation vector has length {found}, registry has {expected} modes")]
    LengthMismatch { expected: usize, found: usize },

    #[error("superposition mixes total photon numbers {0} and {1}")]
    PhotonNumberMismatch(u32, u32),

    #[error("mode ({spatial}, {pol}) would hold {count} photons, cap is {cap}")]
    OccupancyOverflow {
        spatial: String,
        pol: char,
        count: u32,
        cap: u8,
    },

    #[error("cannot normalize the zero state")]
    ZeroState,

    #[error("invalid beam splitter wiring: {0}")]
    InvalidWiring(String),

    #[error("label `{0}` listed more than once")]
    DuplicateLabel(String),

    #[error("measured mode `{spatial}` holds {count} photons in some term, expected exactly 1")]
    NotSinglePhoton { spatial: String, count: u32 },

    #[error("pattern has {found} outcomes, expected {expected}")]
    WrongArity { expected: usize, found: usize },

    #[error("no correction restores the canonical state for pattern {0}")]
    Uncorrectable(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("m*N = {mn} exceeds the configured cap of {cap}")]
    CapExceeded { mn: usize, cap: usize },

    #[error("I/O failure: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
