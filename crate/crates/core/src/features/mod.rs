//! Featurization: tokens, tf-idf, embedding pooling, citation counts, PCA.

mod citation;
mod embedding;
mod pca;
mod sparse;
mod text;

pub use citation::{onehop_cpc_counts, twohop_pair_counts, CodeSpace};
pub use embedding::{
    cpc_avg_embedding, cpc_seq_embedding, mean_embedding, CpcTitles, EmbeddingTable, OovPolicy, EMBT_MAGIC,
    EMBT_VERSION,
};
pub use pca::{pca_fit, pca_project, pca_reconstruct, PcaProjection, DEFAULT_COMPONENTS, PCA_FORMAT_VERSION};
pub use sparse::SparseVector;
pub use text::{build_vocabulary, tfidf_vector, tokenize, StopWords, Vocabulary, VOCABULARY_FORMAT_VERSION};

use crate::graph::GraphError;

/// Default token budgets per text field.
pub const ABSTRACT_MAX_TOKENS: usize = 256;
pub const CLAIMS_MAX_TOKENS: usize = 512;
pub const DESCRIPTION_MAX_TOKENS: usize = 512;
pub const CPC_TITLE_MAX_TOKENS: usize = 16;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FeatureError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("PCA: {0}")]
    Pca(String),
    #[error("format: {0}")]
    Format(String),
}
