//! Named model variants: featurizer + classifier pairs that plug into
//! [`crate::eval`].

mod featurize;
mod fitted;

pub use featurize::{FittedFeatures, NeuralFeatures, TableSource, TextPair};
pub use fitted::{BoundModel, Classifier, FittedModel, SpecLearner, MODEL_FORMAT_VERSION};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::CorpusStore;
use crate::features::{
    CpcTitles, EmbeddingTable, FeatureError, ABSTRACT_MAX_TOKENS, CLAIMS_MAX_TOKENS, CPC_TITLE_MAX_TOKENS,
    DEFAULT_COMPONENTS, DESCRIPTION_MAX_TOKENS,
};
use crate::graph::GraphIndex;
use crate::neural::{NeuralError, StreamKind, TrainParams, DEFAULT_DROPOUT, DEFAULT_HIDDEN, DEFAULT_STREAM_WIDTH};
use crate::svm::{SmoParams, SvmError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelsError {
    #[error("unknown model spec {0:?}")]
    UnknownSpec(String),
    #[error("model needs {0}, which was not provided")]
    MissingResource(&'static str),
    #[error("unknown patent id {0:?}")]
    UnknownPatent(String),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Svm(#[from] SvmError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error("{0}")]
    Io(String),
    #[error("model file: {0}")]
    Format(String),
}

/// Which featurizer and classifier to use.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum ModelSpec {
    SvmTfidf,
    SvmW2v,
    SvmFastText,
    Svm1Hop,
    SvmTfidf1Hop,
    /// Enabled streams, in [`StreamKind`] order.
    Neural(Vec<StreamKind>),
}

fn stream_code(k: StreamKind) -> &'static str {
    match k {
        StreamKind::AbstractText => "1",
        StreamKind::ClaimsText => "2",
        StreamKind::DescriptionText => "3",
        StreamKind::Citation1hop => "4",
        StreamKind::Citation2hop => "4h2",
        StreamKind::CpcAvg => "5",
        StreamKind::CpcSeq => "5seq",
    }
}

fn parse_stream(s: &str) -> Option<StreamKind> {
    StreamKind::ALL
        .into_iter()
        .find(|&k| stream_code(k) == s)
        .or(match s {
            "4h1" => Some(StreamKind::Citation1hop),
            "5avg" => Some(StreamKind::CpcAvg),
            _ => None,
        })
        .or_else(|| s.parse().ok())
}

impl ModelSpec {
    pub fn is_neural(&self) -> bool {
        matches!(self, ModelSpec::Neural(_))
    }
}

impl FromStr for ModelSpec {
    type Err = ModelsError;

    /// `svm-tfidf`, `svm-w2v`, `svm-ft`, `svm-1hop`, `svm-tfidf-1hop`, or
    /// `neural:<streams>` with streams joined by `+` or `,`. Streams are
    /// given by number (1 abstract, 2 claims, 3 description, 4 or 4h2
    /// citations, 5 or 5seq CPC titles) or by name (`cpc_avg`, ...).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ModelsError::UnknownSpec(s.to_string());
        Ok(match s.trim() {
            "svm-tfidf" => ModelSpec::SvmTfidf,
            "svm-w2v" => ModelSpec::SvmW2v,
            "svm-ft" => ModelSpec::SvmFastText,
            "svm-1hop" => ModelSpec::Svm1Hop,
            "svm-tfidf-1hop" => ModelSpec::SvmTfidf1Hop,
            other => {
                let list = other.strip_prefix("neural:").ok_or_else(bad)?;
                let mut streams = Vec::new();
                for part in list.split(['+', ',']).map(str::trim) {
                    let k = parse_stream(part).ok_or_else(bad)?;
                    if streams.contains(&k) {
                        return Err(bad());
                    }
                    streams.push(k);
                }
                if !streams.contains(&StreamKind::AbstractText) {
                    return Err(ModelsError::UnknownSpec(format!("{s}: the abstract stream (1) is required")));
                }
                streams.sort();
                ModelSpec::Neural(streams)
            }
        })
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::SvmTfidf => f.write_str("svm-tfidf"),
            ModelSpec::SvmW2v => f.write_str("svm-w2v"),
            ModelSpec::SvmFastText => f.write_str("svm-ft"),
            ModelSpec::Svm1Hop => f.write_str("svm-1hop"),
            ModelSpec::SvmTfidf1Hop => f.write_str("svm-tfidf-1hop"),
            ModelSpec::Neural(streams) => {
                let codes: Vec<&str> = streams.iter().map(|&k| stream_code(k)).collect();
                write!(f, "neural:{}", codes.join("+"))
            }
        }
    }
}

impl From<ModelSpec> for String {
    fn from(s: ModelSpec) -> String {
        s.to_string()
    }
}

impl TryFrom<String> for ModelSpec {
    type Error = ModelsError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// Token budgets per text source.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TokenBudgets {
    pub abstract_text: usize,
    pub claims: usize,
    pub description: usize,
    /// Slots per CPC title in the place-wise average.
    pub cpc_title: usize,
    /// Budget for the concatenated titles of the sequence variant.
    pub cpc_seq: usize,
}

impl Default for TokenBudgets {
    fn default() -> Self {
        TokenBudgets {
            abstract_text: ABSTRACT_MAX_TOKENS,
            claims: CLAIMS_MAX_TOKENS,
            description: DESCRIPTION_MAX_TOKENS,
            cpc_title: CPC_TITLE_MAX_TOKENS,
            cpc_seq: 4 * CPC_TITLE_MAX_TOKENS,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NeuralParams {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub hidden: Vec<usize>,
    pub stream_width: usize,
    pub dropout: f64,
}

impl Default for NeuralParams {
    fn default() -> Self {
        let t = TrainParams::default();
        NeuralParams {
            epochs: t.epochs,
            batch_size: t.batch_size,
            learning_rate: t.lr,
            hidden: DEFAULT_HIDDEN.to_vec(),
            stream_width: DEFAULT_STREAM_WIDTH,
            dropout: DEFAULT_DROPOUT,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    pub svm: SmoParams,
    pub pca_components: usize,
    pub min_df: usize,
    pub tokens: TokenBudgets,
    pub neural: NeuralParams,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            svm: SmoParams::default(),
            pca_components: DEFAULT_COMPONENTS,
            min_df: 1,
            tokens: TokenBudgets::default(),
            neural: NeuralParams::default(),
        }
    }
}

/// Read-only inputs shared by every fit and prediction.
#[derive(Clone, Copy)]
pub struct Resources<'a> {
    pub corpus: &'a CorpusStore,
    pub index: &'a GraphIndex,
    /// Used by `svm-w2v` and by the neural text and CPC streams.
    pub word_vectors: Option<&'a EmbeddingTable>,
    /// Used by `svm-ft`.
    pub fasttext: Option<&'a EmbeddingTable>,
    pub cpc_titles: Option<&'a CpcTitles>,
}

impl<'a> Resources<'a> {
    pub fn new(corpus: &'a CorpusStore, index: &'a GraphIndex) -> Self {
        Resources {
            corpus,
            index,
            word_vectors: None,
            fasttext: None,
            cpc_titles: None,
        }
    }

    pub(crate) fn word_vectors(&self) -> Result<&'a EmbeddingTable, ModelsError> {
        self.word_vectors.ok_or(ModelsError::MissingResource("a word-vector table"))
    }

    pub(crate) fn fasttext(&self) -> Result<&'a EmbeddingTable, ModelsError> {
        self.fasttext.ok_or(ModelsError::MissingResource("a FastText table"))
    }

    pub(crate) fn cpc_titles(&self) -> Result<&'a CpcTitles, ModelsError> {
        self.cpc_titles.ok_or(ModelsError::MissingResource("CPC titles"))
    }
}
