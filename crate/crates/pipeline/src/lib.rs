//! A desk-scale MARF pipeline: sample loading, preprocessing, feature
//! extraction and classification services plus the SpeakerIdentApp
//! orchestrator. Every service keeps its state in atomics that its embedded
//! SNMP agent reads and writes through the MARF MIB tables.

pub mod app;
pub mod dsp;
pub mod features;
pub mod fixtures;
pub mod service;
pub mod stages;
pub mod store;
pub mod topology;
pub mod wav;
pub mod wire;

use thiserror::Error;

pub use app::{PipelineError, SpeakerIdentApp};
pub use features::{Algorithm, FeatureKind, FeatureVector};
pub use service::{ServiceCore, ServiceKind, Status};
pub use store::{ResultSet, TrainingSet};
pub use topology::{Topology, TopologyConfig, TransportMode};
pub use wav::Sample;

/// Service indexes of the demo topology, which are also the serviceTable
/// row indexes.
pub mod index {
    pub const SAMPLE_LOADING: u32 = 1;
    pub const PREPROCESSING: u32 = 2;
    pub const FEATURE_EXTRACTION: u32 = 3;
    pub const CLASSIFICATION: u32 = 4;
    pub const SPEAKER_IDENT_APP: u32 = 5;
    pub const STAGES: [u32; 4] = [SAMPLE_LOADING, PREPROCESSING, FEATURE_EXTRACTION, CLASSIFICATION];
}

/// A failure inside one pipeline stage.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum StageError {
    #[error("unsupported sample format: {0}")]
    UnsupportedFormat(String),
    #[error("malformed WAV data: {0}")]
    MalformedWav(String),
    #[error("degenerate signal")]
    DegenerateSignal,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("incompatible features: store holds {expected}, got {got}")]
    IncompatibleFeatures { expected: String, got: String },
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("service {0} is not up")]
    Unavailable(u32),
    #[error("storage failure: {0}")]
    Storage(String),
    #[error("service cannot handle request: {0}")]
    BadRequest(String),
    /// The stage could not be reached; never produced by a stage itself.
    #[error("transport failure: {0}")]
    Transport(String),
}
