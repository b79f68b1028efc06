//! Citation/CPC/family indexes and seed expansion.

mod expand;
mod index;
mod khop;

pub use expand::{
    expand, expand_l1, expand_l2, read_id_file, sample_antiseeds, write_expansion, CpcLevel, ExpansionConfig,
    ExpansionResult, EXPANSION_FILES,
};
pub use index::{build_index, GraphIndex};
pub use khop::{khop_citation_codes, CodeMultiset, CodePath};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("unknown patent id {0:?}")]
    UnknownPatent(String),
    #[error("hop count must be 1 or 2, got {0}")]
    InvalidHops(u8),
    #[error("cannot sample {requested} anti-seeds from a pool of {available}")]
    SampleTooLarge { requested: usize, available: usize },
}
