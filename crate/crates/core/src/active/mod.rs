//! Human-in-the-loop labeling: uncertainty-ranked queue with periodic retraining.

mod events;
mod session;

pub use events::{read_events, replay, write_events, EventKind, SessionEvent};
pub use session::{
    model_hash, rank_pool, ActiveLearningSession, AnnotatorPairKappa, Candidate, SessionConfig, SessionStats, SubmitOutcome,
    TrainOn, DEFAULT_RETRAIN_CADENCE,
};

use crate::corpus::Label;
use crate::svm::SvmError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ActiveError {
    #[error("unknown patent id {0:?}")]
    UnknownPatent(String),
    #[error("patent {0:?} is not in the session pool")]
    NotInPool(String),
    #[error("patent {patent_id:?} is already labeled {existing}")]
    LabelConflict {
        patent_id: String,
        existing: Label,
        existing_annotator: Option<String>,
    },
    #[error("patent {0:?} has no label to override")]
    NotLabeled(String),
    #[error("invalid session setup: {0}")]
    InvalidSetup(String),
    #[error(transparent)]
    Svm(#[from] SvmError),
    #[error("replay failed at event {seq}: {message}")]
    Replay { seq: u64, message: String },
    #[error("event log: {0}")]
    Log(String),
}
