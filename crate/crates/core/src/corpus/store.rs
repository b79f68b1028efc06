use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::jsonl::{parse_jsonl, parse_labels_jsonl, write_jsonl, write_labels_jsonl};
use super::record::{validate, LabeledExample, PatentRecord};
use super::CorpusError;

pub const RECORDS_FILE: &str = "records.jsonl";
pub const LABELS_FILE: &str = "labels.jsonl";
pub const PROVENANCE_FILE: &str = "provenance.json";

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: String,
    pub record_count: usize,
    pub label_count: usize,
}

/// Validated records plus at most one label per patent.
///
/// Records are immutable once the store is built; labels may be appended.
#[derive(Clone, Debug, Default)]
pub struct CorpusStore {
    records: Vec<PatentRecord>,
    by_id: HashMap<String, usize>,
    labels: BTreeMap<String, LabeledExample>,
    source: String,
}

impl CorpusStore {
    pub fn from_records(records: Vec<PatentRecord>, source: impl Into<String>) -> Result<Self, CorpusError> {
        let mut by_id = HashMap::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            let violations = validate(r);
            if !violations.is_empty() {
                return Err(CorpusError::InvalidRecord {
                    patent_id: r.patent_id.clone(),
                    violations,
                });
            }
            if by_id.insert(r.patent_id.clone(), i).is_some() {
                return Err(CorpusError::DuplicateId(r.patent_id.clone()));
            }
        }
        Ok(CorpusStore {
            records,
            by_id,
            labels: BTreeMap::new(),
            source: source.into(),
        })
    }

    pub fn with_labels(mut self, labels: impl IntoIterator<Item = LabeledExample>) -> Result<Self, CorpusError> {
        for l in labels {
            self.add_label(l)?;
        }
        Ok(self)
    }

    pub fn get(&self, patent_id: &str) -> Option<&PatentRecord> {
        self.by_id.get(patent_id).map(|&i| &self.records[i])
    }

    pub fn contains(&self, patent_id: &str) -> bool {
        self.by_id.contains_key(patent_id)
    }

    /// Records in ingestion order.
    pub fn records(&self) -> &[PatentRecord] {
        &self.records
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.records.iter().map(|r| r.patent_id.as_str())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn label(&self, patent_id: &str) -> Option<&LabeledExample> {
        self.labels.get(patent_id)
    }

    /// Labels ordered by patent id.
    pub fn labels(&self) -> impl Iterator<Item = &LabeledExample> {
        self.labels.values()
    }

    pub fn label_count(&self) -> usize {
        self.labels.len()
    }

    pub fn add_label(&mut self, label: LabeledExample) -> Result<(), CorpusError> {
        label.check()?;
        if !self.contains(&label.patent_id) {
            return Err(CorpusError::UnknownPatent(label.patent_id));
        }
        if let Some(existing) = self.labels.get(&label.patent_id) {
            return Err(CorpusError::LabelConflict {
                patent_id: label.patent_id,
                existing: existing.label,
            });
        }
        self.labels.insert(label.patent_id.clone(), label);
        Ok(())
    }

    pub fn provenance(&self) -> Provenance {
        Provenance {
            source: self.source.clone(),
            record_count: self.records.len(),
            label_count: self.labels.len(),
        }
    }

    pub fn save(&self, dir: &Path) -> Result<(), CorpusError> {
        std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        let path = dir.join(RECORDS_FILE);
        write_jsonl(BufWriter::new(File::create(&path).map_err(|e| io(&path, e))?), &self.records)?;
        let path = dir.join(LABELS_FILE);
        write_labels_jsonl(BufWriter::new(File::create(&path).map_err(|e| io(&path, e))?), self.labels.values())?;
        let path = dir.join(PROVENANCE_FILE);
        let json = serde_json::to_string_pretty(&self.provenance()).expect("provenance serializes");
        std::fs::write(&path, json).map_err(|e| io(&path, e))
    }

    /// Loads a directory written by [`CorpusStore::save`]. The labels file is optional.
    pub fn load(dir: &Path) -> Result<Self, CorpusError> {
        let path = dir.join(RECORDS_FILE);
        let records = parse_jsonl(BufReader::new(File::open(&path).map_err(|e| io(&path, e))?))?;
        let source = std::fs::read_to_string(dir.join(PROVENANCE_FILE))
            .ok()
            .and_then(|s| serde_json::from_str::<Provenance>(&s).ok())
            .map(|p| p.source)
            .unwrap_or_else(|| dir.display().to_string());
        let store = CorpusStore::from_records(records, source)?;
        let path = dir.join(LABELS_FILE);
        if path.exists() {
            let labels = parse_labels_jsonl(BufReader::new(File::open(&path).map_err(|e| io(&path, e))?))?;
            store.with_labels(labels)
        } else {
            Ok(store)
        }
    }
}

fn io(path: &Path, e: std::io::Error) -> CorpusError {
    CorpusError::Io {
        context: path.display().to_string(),
        source: e,
    }
}
