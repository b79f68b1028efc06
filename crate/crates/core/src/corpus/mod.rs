//! Patent records, labels, ingestion and persistence.

mod cpc;
mod jsonl;
mod record;
mod store;
mod tsv;

pub use cpc::{CpcCode, CpcParseError};
pub use jsonl::{parse_jsonl, parse_labels_jsonl, write_jsonl, write_labels_jsonl};
pub use record::{validate, Difficulty, Label, LabelSource, LabeledExample, PatentRecord, TextField, Violation};
pub use store::{CorpusStore, Provenance, LABELS_FILE, PROVENANCE_FILE, RECORDS_FILE};
pub use tsv::{parse_patentsview_tsv, NamedStream, TsvColumns, TsvReport, TsvTables};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("line {line}: malformed JSON: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {message}")]
    Validation { line: usize, message: String },
    #[error("{file}, row {row}: {message}")]
    Format { file: String, row: usize, message: String },
    #[error("record {patent_id:?} is invalid: {}", .violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidRecord { patent_id: String, violations: Vec<Violation> },
    #[error("duplicate patent id {0:?}")]
    DuplicateId(String),
    #[error("unknown patent id {0:?}")]
    UnknownPatent(String),
    #[error("patent {patent_id:?} is already labeled {existing}")]
    LabelConflict { patent_id: String, existing: Label },
    #[error("invalid label for {patent_id:?}: {reason}")]
    InvalidLabel { patent_id: String, reason: String },
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}
