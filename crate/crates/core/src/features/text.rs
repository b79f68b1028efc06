use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use super::sparse::SparseVector;
use super::FeatureError;

const STOPWORDS_EN_V1: &str = include_str!("../../data/stopwords_en_v1.txt");

/// Lowercases, splits on runs of non-alphanumeric characters, and keeps
/// tokens of at least two characters that are not purely digits.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().count() >= 2 && !t.chars().all(|c| c.is_numeric()))
        .map(str::to_lowercase)
        .collect()
}

/// A named, versioned stop-word list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StopWords {
    id: String,
    words: HashSet<String>,
}

impl StopWords {
    /// The bundled 179-word English list.
    pub fn english() -> Self {
        StopWords {
            id: "en-179-v1".into(),
            words: STOPWORDS_EN_V1.lines().map(str::trim).filter(|l| !l.is_empty()).map(str::to_string).collect(),
        }
    }

    pub fn none() -> Self {
        StopWords {
            id: "none".into(),
            words: HashSet::new(),
        }
    }

    pub fn custom(id: impl Into<String>, words: impl IntoIterator<Item = String>) -> Self {
        StopWords {
            id: id.into(),
            words: words.into_iter().collect(),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(token)
    }
}

pub const VOCABULARY_FORMAT_VERSION: u32 = 1;

/// Token -> column mapping with document frequencies.
///
/// Columns are assigned in lexicographic token order, so the same document
/// collection always yields the same layout regardless of document order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawVocabulary")]
pub struct Vocabulary {
    version: u32,
    stopwords: String,
    min_df: usize,
    total_documents: usize,
    tokens: Vec<String>,
    document_frequency: Vec<usize>,
    #[serde(skip)]
    columns: BTreeMap<String, usize>,
}

#[derive(Deserialize)]
struct RawVocabulary {
    version: u32,
    stopwords: String,
    min_df: usize,
    total_documents: usize,
    tokens: Vec<String>,
    document_frequency: Vec<usize>,
}

impl TryFrom<RawVocabulary> for Vocabulary {
    type Error = FeatureError;
    fn try_from(r: RawVocabulary) -> Result<Self, Self::Error> {
        if r.version != VOCABULARY_FORMAT_VERSION {
            return Err(FeatureError::Format(format!("unsupported vocabulary version {}", r.version)));
        }
        if r.tokens.len() != r.document_frequency.len() {
            return Err(FeatureError::Format("token and frequency lists differ in length".into()));
        }
        let columns = r.tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Ok(Vocabulary {
            version: r.version,
            stopwords: r.stopwords,
            min_df: r.min_df,
            total_documents: r.total_documents,
            tokens: r.tokens,
            document_frequency: r.document_frequency,
            columns,
        })
    }
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn column(&self, token: &str) -> Option<usize> {
        self.columns.get(token).copied()
    }

    pub fn token(&self, column: usize) -> Option<&str> {
        self.tokens.get(column).map(String::as_str)
    }

    pub fn document_frequency(&self, token: &str) -> Option<usize> {
        self.column(token).map(|c| self.document_frequency[c])
    }

    pub fn total_documents(&self) -> usize {
        self.total_documents
    }

    pub fn stopword_list(&self) -> &str {
        &self.stopwords
    }

    /// Smoothed inverse document frequency, `ln((1+N)/(1+df)) + 1`.
    pub fn idf(&self, column: usize) -> f64 {
        let n = self.total_documents as f64;
        let df = self.document_frequency[column] as f64;
        ((1.0 + n) / (1.0 + df)).ln() + 1.0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("vocabulary serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, FeatureError> {
        serde_json::from_str(s).map_err(|e| FeatureError::Format(e.to_string()))
    }
}

/// Keeps non-stopword tokens occurring in at least `min_df` documents.
pub fn build_vocabulary<D: AsRef<[String]>>(docs: &[D], stopwords: &StopWords, min_df: usize) -> Vocabulary {
    let min_df = min_df.max(1);
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in docs {
        let distinct: BTreeSet<&str> = doc.as_ref().iter().map(String::as_str).collect();
        for t in distinct {
            if !stopwords.contains(t) {
                *df.entry(t).or_default() += 1;
            }
        }
    }
    let (tokens, document_frequency): (Vec<String>, Vec<usize>) =
        df.into_iter().filter(|&(_, c)| c >= min_df).map(|(t, c)| (t.to_string(), c)).unzip();
    let columns = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
    Vocabulary {
        version: VOCABULARY_FORMAT_VERSION,
        stopwords: stopwords.id().to_string(),
        min_df,
        total_documents: docs.len(),
        tokens,
        document_frequency,
        columns,
    }
}

/// Raw term frequency times smoothed idf, L2-normalized. Out-of-vocabulary
/// tokens are ignored.
pub fn tfidf_vector(doc: &[String], vocab: &Vocabulary) -> SparseVector {
    let mut tf: BTreeMap<usize, f64> = BTreeMap::new();
    for t in doc {
        if let Some(c) = vocab.column(t) {
            *tf.entry(c).or_default() += 1.0;
        }
    }
    let pairs: Vec<(usize, f64)> = tf.into_iter().map(|(c, f)| (c, f * vocab.idf(c))).collect();
    let mut v = SparseVector::from_sorted(vocab.len(), pairs);
    v.normalize();
    v
}
