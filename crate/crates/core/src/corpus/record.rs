use std::collections::HashSet;
use std::fmt;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use super::cpc::CpcCode;
use super::CorpusError;

/// One patent document as ingested.
///
/// `cpc_codes` keeps the codes as they appeared in the source so that
/// [`validate`] can report malformed entries; use [`PatentRecord::cpc`] for
/// the parsed form.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatentRecord {
    #[serde(default)]
    pub patent_id: String,
    #[serde(default)]
    pub title: String,
    #[serde(default, rename = "abstract")]
    pub abstract_text: String,
    /// All claims, one per line.
    #[serde(default)]
    pub claims: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub cpc_codes: Vec<String>,
    #[serde(default)]
    pub citations: Vec<String>,
    /// Empty means the patent is its own family.
    #[serde(default)]
    pub family_id: String,
    #[serde(default)]
    pub grant_date: Option<NaiveDate>,
}

impl PatentRecord {
    pub fn new(patent_id: impl Into<String>) -> Self {
        PatentRecord {
            patent_id: patent_id.into(),
            title: String::new(),
            abstract_text: String::new(),
            claims: String::new(),
            description: String::new(),
            cpc_codes: Vec::new(),
            citations: Vec::new(),
            family_id: String::new(),
            grant_date: None,
        }
    }

    /// The syntactically valid CPC codes, in record order.
    pub fn cpc(&self) -> Vec<CpcCode> {
        self.cpc_codes.iter().filter_map(|c| c.parse().ok()).collect()
    }

    pub fn text(&self, field: TextField) -> &str {
        match field {
            TextField::Title => &self.title,
            TextField::Abstract => &self.abstract_text,
            TextField::Claims => &self.claims,
            TextField::Description => &self.description,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TextField {
    Title,
    Abstract,
    Claims,
    Description,
}

/// A single invariant violation found by [`validate`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub field: &'static str,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Checks the per-record invariants. Uniqueness of `patent_id` is a corpus
/// property and is checked by the store.
pub fn validate(record: &PatentRecord) -> Vec<Violation> {
    let mut out = Vec::new();
    if record.patent_id.trim().is_empty() {
        out.push(Violation {
            field: "patent_id",
            message: "must be non-empty".into(),
        });
    }
    for code in &record.cpc_codes {
        if let Err(e) = code.parse::<CpcCode>() {
            out.push(Violation {
                field: "cpc_codes",
                message: e.to_string(),
            });
        }
    }
    if !record.patent_id.is_empty() && record.citations.iter().any(|c| c == &record.patent_id) {
        out.push(Violation {
            field: "citations",
            message: format!("{} cites itself", record.patent_id),
        });
    }
    let mut seen = HashSet::new();
    if let Some(dup) = record.citations.iter().find(|c| !seen.insert(c.as_str())) {
        out.push(Violation {
            field: "citations",
            message: format!("duplicate citation {dup}"),
        });
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    /// +1 for positive, -1 for negative.
    pub fn sign(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => -1.0,
        }
    }

    pub fn flip(self) -> Label {
        match self {
            Label::Positive => Label::Negative,
            Label::Negative => Label::Positive,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Positive => "positive",
            Label::Negative => "negative",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Difficulty {
    Easy,
    Hard,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelSource {
    Seed,
    AntiSeed,
    Annotator,
}

/// The unit of training data.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawLabeledExample")]
pub struct LabeledExample {
    pub patent_id: String,
    pub label: Label,
    pub difficulty: Difficulty,
    pub source: LabelSource,
    pub annotator_id: Option<String>,
    pub labeled_at: DateTime<Utc>,
}

#[derive(Deserialize)]
struct RawLabeledExample {
    patent_id: String,
    label: Label,
    difficulty: Difficulty,
    source: LabelSource,
    #[serde(default)]
    annotator_id: Option<String>,
    labeled_at: DateTime<Utc>,
}

impl TryFrom<RawLabeledExample> for LabeledExample {
    type Error = CorpusError;
    fn try_from(r: RawLabeledExample) -> Result<Self, Self::Error> {
        let ex = LabeledExample {
            patent_id: r.patent_id,
            label: r.label,
            difficulty: r.difficulty,
            source: r.source,
            annotator_id: r.annotator_id,
            labeled_at: r.labeled_at,
        };
        ex.check()?;
        Ok(ex)
    }
}

impl LabeledExample {
    pub fn seed(patent_id: impl Into<String>, at: DateTime<Utc>) -> Self {
        LabeledExample {
            patent_id: patent_id.into(),
            label: Label::Positive,
            difficulty: Difficulty::Easy,
            source: LabelSource::Seed,
            annotator_id: None,
            labeled_at: at,
        }
    }

    pub fn anti_seed(patent_id: impl Into<String>, at: DateTime<Utc>) -> Self {
        LabeledExample {
            patent_id: patent_id.into(),
            label: Label::Negative,
            difficulty: Difficulty::Easy,
            source: LabelSource::AntiSeed,
            annotator_id: None,
            labeled_at: at,
        }
    }

    pub fn annotated(
        patent_id: impl Into<String>,
        label: Label,
        annotator_id: Option<String>,
        at: DateTime<Utc>,
    ) -> Self {
        LabeledExample {
            patent_id: patent_id.into(),
            label,
            difficulty: Difficulty::Hard,
            source: LabelSource::Annotator,
            annotator_id,
            labeled_at: at,
        }
    }

    /// Source/label/difficulty consistency.
    pub fn check(&self) -> Result<(), CorpusError> {
        let ok = match self.source {
            LabelSource::Seed => self.label == Label::Positive && self.difficulty == Difficulty::Easy,
            LabelSource::AntiSeed => self.label == Label::Negative && self.difficulty == Difficulty::Easy,
            LabelSource::Annotator => self.difficulty == Difficulty::Hard,
        };
        if self.patent_id.is_empty() {
            return Err(CorpusError::InvalidLabel {
                patent_id: String::new(),
                reason: "empty patent_id".into(),
            });
        }
        if ok {
            Ok(())
        } else {
            Err(CorpusError::InvalidLabel {
                patent_id: self.patent_id.clone(),
                reason: format!(
                    "source {:?} is inconsistent with label {} / difficulty {:?}",
                    self.source, self.label, self.difficulty
                ),
            })
        }
    }
}
