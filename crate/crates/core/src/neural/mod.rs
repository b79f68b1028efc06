//! Multi-stream feed-forward classifier with hand-written backpropagation.

mod adam;
mod checkpoint;
mod model;
mod train;

pub use adam::AdamState;
pub use checkpoint::{read_checkpoint, write_checkpoint, NLCM_MAGIC, NLCM_VERSION};
pub use model::{bce_loss, ClassifierModel, Gradient, PROB_CLAMP};
pub use train::{train, TrainParams, TrainedClassifier};

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StreamKind {
    AbstractText,
    ClaimsText,
    DescriptionText,
    Citation1hop,
    Citation2hop,
    CpcSeq,
    CpcAvg,
}

impl StreamKind {
    pub const ALL: [StreamKind; 7] = [
        StreamKind::AbstractText,
        StreamKind::ClaimsText,
        StreamKind::DescriptionText,
        StreamKind::Citation1hop,
        StreamKind::Citation2hop,
        StreamKind::CpcSeq,
        StreamKind::CpcAvg,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StreamKind::AbstractText => "abstract_text",
            StreamKind::ClaimsText => "claims_text",
            StreamKind::DescriptionText => "description_text",
            StreamKind::Citation1hop => "citation_1hop",
            StreamKind::Citation2hop => "citation_2hop",
            StreamKind::CpcSeq => "cpc_seq",
            StreamKind::CpcAvg => "cpc_avg",
        }
    }

    /// Count-valued streams get `ln(1 + x)` applied to their input.
    pub fn is_count(self) -> bool {
        matches!(self, StreamKind::Citation1hop | StreamKind::Citation2hop)
    }
}

impl fmt::Display for StreamKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for StreamKind {
    type Err = NeuralError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StreamKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| NeuralError::InvalidConfig(format!("unknown stream kind {s:?}")))
    }
}

pub const DEFAULT_STREAM_WIDTH: usize = 64;
pub const DEFAULT_HIDDEN: [usize; 2] = [300, 64];
pub const DEFAULT_DROPOUT: f64 = 0.4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StreamSpec {
    pub kind: StreamKind,
    pub input_dim: usize,
    #[serde(default = "default_width")]
    pub width: usize,
    #[serde(default = "default_enabled")]
    pub enabled: bool,
}

fn default_width() -> usize {
    DEFAULT_STREAM_WIDTH
}

fn default_enabled() -> bool {
    true
}

impl StreamSpec {
    pub fn new(kind: StreamKind, input_dim: usize) -> Self {
        StreamSpec {
            kind,
            input_dim,
            width: DEFAULT_STREAM_WIDTH,
            enabled: true,
        }
    }

    pub fn with_width(mut self, width: usize) -> Self {
        self.width = width;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub streams: Vec<StreamSpec>,
    pub hidden: Vec<usize>,
    pub dropout: f64,
}

impl NetworkConfig {
    pub fn new(streams: Vec<StreamSpec>) -> Self {
        NetworkConfig {
            streams,
            hidden: DEFAULT_HIDDEN.to_vec(),
            dropout: DEFAULT_DROPOUT,
        }
    }

    pub fn validate(&self) -> Result<(), NeuralError> {
        let mut seen = std::collections::BTreeSet::new();
        for s in &self.streams {
            if !seen.insert(s.kind) {
                return Err(NeuralError::InvalidConfig(format!("stream {} declared twice", s.kind)));
            }
            if s.input_dim == 0 || s.width == 0 {
                return Err(NeuralError::InvalidConfig(format!("stream {} has a zero dimension", s.kind)));
            }
        }
        match self.streams.iter().find(|s| s.kind == StreamKind::AbstractText) {
            Some(s) if s.enabled => {}
            _ => return Err(NeuralError::InvalidConfig("abstract_text stream must be enabled".into())),
        }
        if self.hidden.contains(&0) {
            return Err(NeuralError::InvalidConfig("hidden width 0".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(NeuralError::InvalidConfig(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        Ok(())
    }

    pub fn stream(&self, kind: StreamKind) -> Option<&StreamSpec> {
        self.streams.iter().find(|s| s.kind == kind)
    }
}

/// One example's inputs: a dense vector per stream.
pub type StreamInputs = BTreeMap<StreamKind, Vec<f64>>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NeuralError {
    #[error("missing input for enabled stream {0}")]
    MissingStream(StreamKind),
    #[error("stream {stream}: expected input dimension {expected}, got {got}")]
    DimensionMismatch { stream: StreamKind, expected: usize, got: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("training data contains a single class")]
    SingleClass,
    #[error("empty batch")]
    EmptyBatch,
    #[error("non-finite gradient")]
    NonFiniteGradient,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}
