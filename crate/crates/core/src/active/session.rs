use std::collections::{BTreeMap, BTreeSet, HashMap};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::events::{EventKind, SessionEvent};
use super::ActiveError;
use crate::corpus::{CorpusStore, Label, LabelSource, LabeledExample, TextField};
use crate::eval::cohens_kappa;
use crate::features::{build_vocabulary, tfidf_vector, tokenize, SparseVector, StopWords};
use crate::svm::{train_linear, LinearSvmModel, LinearSvmParams, SvmError};

pub const DEFAULT_RETRAIN_CADENCE: usize = 10;

/// Which labeled examples feed a retrain.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainOn {
    #[default]
    AllLabels,
    AnnotationsOnly,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfig {
    pub session_id: String,
    pub rng_seed: u64,
    pub retrain_cadence: usize,
    pub train_on: TrainOn,
    pub lambda: f64,
    pub epochs: usize,
    pub text_fields: Vec<TextField>,
    pub min_df: usize,
    /// Candidate ids to rank; `None` means every corpus patent.
    pub pool: Option<Vec<String>>,
}

impl Default for SessionConfig {
    fn default() -> Self {
        let svm = LinearSvmParams::default();
        SessionConfig {
            session_id: "session".into(),
            rng_seed: 0,
            retrain_cadence: DEFAULT_RETRAIN_CADENCE,
            train_on: TrainOn::AllLabels,
            lambda: svm.lambda,
            epochs: svm.epochs,
            text_fields: vec![TextField::Title, TextField::Abstract],
            min_df: 1,
            pool: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub patent_id: String,
    pub margin_distance: f64,
    pub decision_value: f64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubmitOutcome {
    pub retrained: bool,
    pub labels_total: usize,
    /// Set when the cadence was reached but retraining failed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub retrain_error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnotatorPairKappa {
    pub annotator_a: String,
    pub annotator_b: String,
    pub items: usize,
    pub kappa: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionStats {
    pub session_id: String,
    pub pool_size: usize,
    pub queue_length: usize,
    pub labels_total: usize,
    pub positives: usize,
    pub negatives: usize,
    pub labels_by_source: BTreeMap<LabelSource, usize>,
    pub labels_by_annotator: BTreeMap<String, usize>,
    /// Includes the initial training.
    pub retrain_count: usize,
    pub labels_since_retrain: usize,
    pub retrain_cadence: usize,
    pub rejected_judgments: usize,
    pub kappa: Vec<AnnotatorPairKappa>,
    pub model_hash: String,
}

/// SHA-256 over the dimension, weights and bias (little-endian bit patterns).
pub fn model_hash(model: &LinearSvmModel) -> String {
    let mut h = Sha256::new();
    h.update((model.weight.len() as u64).to_le_bytes());
    for w in &model.weight {
        h.update(w.to_le_bytes());
    }
    h.update(model.bias.to_le_bytes());
    hex::encode(h.finalize())
}

/// Pool ordered by ascending margin distance, ties by patent id.
pub fn rank_pool<'a>(
    model: &LinearSvmModel,
    features: &HashMap<String, SparseVector>,
    pool: impl IntoIterator<Item = &'a String>,
) -> Result<Vec<Candidate>, SvmError> {
    let mut out = Vec::new();
    for id in pool {
        let x = &features[id];
        out.push(Candidate {
            patent_id: id.clone(),
            margin_distance: model.margin_distance(x)?,
            decision_value: model.decision_value(x)?,
        });
    }
    out.sort_by(|a, b| {
        a.margin_distance
            .total_cmp(&b.margin_distance)
            .then_with(|| a.patent_id.cmp(&b.patent_id))
    });
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ActiveLearningSession {
    config: SessionConfig,
    labeled: Vec<LabeledExample>,
    label_pos: HashMap<String, usize>,
    pool: BTreeSet<String>,
    features: HashMap<String, SparseVector>,
    model: LinearSvmModel,
    queue: Vec<Candidate>,
    labels_since_retrain: usize,
    retrain_count: usize,
    events: Vec<SessionEvent>,
}

impl ActiveLearningSession {
    /// Trains on `seeds`, ranks the pool and logs the init event.
    pub fn init(corpus: &CorpusStore, seeds: Vec<LabeledExample>, config: SessionConfig) -> Result<Self, ActiveError> {
        if config.retrain_cadence == 0 {
            return Err(ActiveError::InvalidSetup("retrain cadence must be at least 1".into()));
        }
        if config.text_fields.is_empty() {
            return Err(ActiveError::InvalidSetup("no text fields configured".into()));
        }
        let mut label_pos = HashMap::new();
        for (i, ex) in seeds.iter().enumerate() {
            if !corpus.contains(&ex.patent_id) {
                return Err(ActiveError::UnknownPatent(ex.patent_id.clone()));
            }
            ex.check().map_err(|e| ActiveError::InvalidSetup(e.to_string()))?;
            if label_pos.insert(ex.patent_id.clone(), i).is_some() {
                return Err(ActiveError::InvalidSetup(format!("patent {:?} labeled twice", ex.patent_id)));
            }
        }
        let candidates: Vec<String> = match &config.pool {
            Some(ids) => ids.clone(),
            None => corpus.ids().map(str::to_string).collect(),
        };
        let mut pool = BTreeSet::new();
        for id in candidates {
            if !corpus.contains(&id) {
                return Err(ActiveError::UnknownPatent(id));
            }
            if !label_pos.contains_key(&id) {
                pool.insert(id);
            }
        }

        // Every corpus patent is featurized so ids outside a restricted pool
        // are reported as such rather than as unknown.
        let mut ids: Vec<&str> = corpus.ids().collect();
        ids.sort_unstable();
        let docs: Vec<Vec<String>> = ids
            .iter()
            .map(|id| {
                let rec = corpus.get(id).expect("id from corpus");
                config.text_fields.iter().flat_map(|&f| tokenize(rec.text(f))).collect()
            })
            .collect();
        let vocab = build_vocabulary(&docs, &StopWords::english(), config.min_df.max(1));
        let features = ids
            .iter()
            .zip(&docs)
            .map(|(id, doc)| (id.to_string(), tfidf_vector(doc, &vocab)))
            .collect();

        let mut s = ActiveLearningSession {
            config,
            labeled: seeds,
            label_pos,
            pool,
            features,
            model: LinearSvmModel {
                weight: Vec::new(),
                bias: 0.0,
                lambda: 0.0,
                epochs: 0,
                rng_seed: 0,
                examples: 0,
            },
            queue: Vec::new(),
            labels_since_retrain: 0,
            retrain_count: 0,
            events: Vec::new(),
        };
        let data = s.training_data(true);
        s.model = train_linear(&data, &s.svm_params())?;
        s.queue = rank_pool(&s.model, &s.features, &s.pool)?;
        s.retrain_count = 1;
        s.push_event(EventKind::Init {
            config: s.config.clone(),
            seed_examples: s.labeled.clone(),
            pool_size: s.pool.len(),
            model_hash: model_hash(&s.model),
        });
        Ok(s)
    }

    fn svm_params(&self) -> LinearSvmParams {
        LinearSvmParams {
            lambda: self.config.lambda,
            epochs: self.config.epochs,
            rng_seed: self.config.rng_seed,
        }
    }

    fn training_data(&self, initial: bool) -> Vec<(SparseVector, Label)> {
        self.labeled
            .iter()
            .filter(|ex| initial || self.config.train_on == TrainOn::AllLabels || ex.source == LabelSource::Annotator)
            .map(|ex| (self.features[&ex.patent_id].clone(), ex.label))
            .collect()
    }

    fn push_event(&mut self, kind: EventKind) {
        let seq = self.events.len() as u64;
        self.events.push(SessionEvent { seq, kind });
    }

    pub fn id(&self) -> &str {
        &self.config.session_id
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn labeled(&self) -> &[LabeledExample] {
        &self.labeled
    }

    pub fn label_of(&self, patent_id: &str) -> Option<&LabeledExample> {
        self.label_pos.get(patent_id).map(|&i| &self.labeled[i])
    }

    pub fn pool(&self) -> &BTreeSet<String> {
        &self.pool
    }

    pub fn queue(&self) -> &[Candidate] {
        &self.queue
    }

    pub fn model(&self) -> &LinearSvmModel {
        &self.model
    }

    pub fn features(&self, patent_id: &str) -> Option<&SparseVector> {
        self.features.get(patent_id)
    }

    pub fn labels_since_retrain(&self) -> usize {
        self.labels_since_retrain
    }

    pub fn retrain_count(&self) -> usize {
        self.retrain_count
    }

    pub fn events(&self) -> &[SessionEvent] {
        &self.events
    }

    /// The first `k` queue entries. Served items stay in the queue until labeled.
    pub fn next_candidates(&self, k: usize) -> &[Candidate] {
        &self.queue[..k.min(self.queue.len())]
    }

    pub fn submit_label(&mut self, patent_id: &str, label: Label, annotator_id: &str) -> Result<SubmitOutcome, ActiveError> {
        self.submit_label_at(patent_id, label, annotator_id, Utc::now())
    }

    /// Labels a pool item and retrains when the cadence is reached.
    ///
    /// A submission for an already-labeled patent is rejected with the
    /// existing label, and is logged as a judgment for agreement statistics.
    pub fn submit_label_at(
        &mut self,
        patent_id: &str,
        label: Label,
        annotator_id: &str,
        at: DateTime<Utc>,
    ) -> Result<SubmitOutcome, ActiveError> {
        if let Some(existing) = self.label_of(patent_id).cloned() {
            self.push_event(EventKind::Judgment {
                patent_id: patent_id.to_string(),
                label,
                annotator_id: annotator_id.to_string(),
                at,
                existing: existing.label,
            });
            return Err(ActiveError::LabelConflict {
                patent_id: patent_id.to_string(),
                existing: existing.label,
                existing_annotator: existing.annotator_id,
            });
        }
        if !self.features.contains_key(patent_id) {
            return Err(ActiveError::UnknownPatent(patent_id.to_string()));
        }
        if !self.pool.remove(patent_id) {
            return Err(ActiveError::NotInPool(patent_id.to_string()));
        }
        self.queue.retain(|c| c.patent_id != patent_id);
        self.label_pos.insert(patent_id.to_string(), self.labeled.len());
        self.labeled
            .push(LabeledExample::annotated(patent_id, label, Some(annotator_id.to_string()), at));
        self.labels_since_retrain += 1;
        self.push_event(EventKind::Label {
            patent_id: patent_id.to_string(),
            label,
            annotator_id: annotator_id.to_string(),
            at,
        });
        let (retrained, retrain_error) = match self.maybe_retrain() {
            Ok(r) => (r, None),
            Err(e) => {
                log::warn!("session {}: retrain failed: {e}", self.id());
                (false, Some(e.to_string()))
            }
        };
        Ok(SubmitOutcome {
            retrained,
            labels_total: self.labeled.len(),
            retrain_error,
        })
    }

    /// Retrains on the configured label set and re-ranks the whole pool
    /// once `retrain_cadence` labels have accumulated. Returns whether it did.
    pub fn maybe_retrain(&mut self) -> Result<bool, ActiveError> {
        if self.labels_since_retrain < self.config.retrain_cadence {
            return Ok(false);
        }
        let data = self.training_data(false);
        let model = train_linear(&data, &self.svm_params())?;
        let queue = rank_pool(&model, &self.features, &self.pool)?;
        self.model = model;
        self.queue = queue;
        self.labels_since_retrain = 0;
        self.retrain_count += 1;
        self.push_event(EventKind::Retrain {
            model_hash: model_hash(&self.model),
            training_examples: data.len(),
        });
        Ok(true)
    }

    /// Replaces an existing label after a disagreement has been resolved.
    /// The example becomes an annotator label; the model picks it up at the
    /// next retrain.
    pub fn override_label(
        &mut self,
        patent_id: &str,
        label: Label,
        annotator_id: &str,
        at: DateTime<Utc>,
    ) -> Result<(), ActiveError> {
        let &i = self
            .label_pos
            .get(patent_id)
            .ok_or_else(|| ActiveError::NotLabeled(patent_id.to_string()))?;
        let previous = self.labeled[i].label;
        self.labeled[i] = LabeledExample::annotated(patent_id, label, Some(annotator_id.to_string()), at);
        self.push_event(EventKind::Override {
            patent_id: patent_id.to_string(),
            label,
            annotator_id: annotator_id.to_string(),
            at,
            previous,
        });
        Ok(())
    }

    /// Cohen's kappa for every annotator pair that judged a common patent.
    /// The first accepted label and every rejected re-submission count as
    /// one judgment each; later judgments by the same annotator are ignored.
    pub fn annotator_kappas(&self) -> Vec<AnnotatorPairKappa> {
        let mut judged: BTreeMap<&str, BTreeMap<&str, Label>> = BTreeMap::new();
        for e in &self.events {
            let (pid, ann, label) = match &e.kind {
                EventKind::Label {
                    patent_id,
                    annotator_id,
                    label,
                    ..
                }
                | EventKind::Judgment {
                    patent_id,
                    annotator_id,
                    label,
                    ..
                } => (patent_id.as_str(), annotator_id.as_str(), *label),
                _ => continue,
            };
            judged.entry(pid).or_default().entry(ann).or_insert(label);
        }
        let mut pairs: BTreeMap<(&str, &str), (Vec<Label>, Vec<Label>)> = BTreeMap::new();
        for by_ann in judged.values() {
            let anns: Vec<(&&str, &Label)> = by_ann.iter().collect();
            for (i, (a, la)) in anns.iter().enumerate() {
                for (b, lb) in &anns[i + 1..] {
                    let e = pairs.entry((**a, **b)).or_default();
                    e.0.push(**la);
                    e.1.push(**lb);
                }
            }
        }
        pairs
            .into_iter()
            .map(|((a, b), (la, lb))| AnnotatorPairKappa {
                annotator_a: a.to_string(),
                annotator_b: b.to_string(),
                items: la.len(),
                kappa: cohens_kappa(&la, &lb).expect("paired judgments are non-empty and aligned"),
            })
            .collect()
    }

    pub fn stats(&self) -> SessionStats {
        let mut by_source = BTreeMap::new();
        let mut by_annotator = BTreeMap::new();
        let mut positives = 0;
        for ex in &self.labeled {
            *by_source.entry(ex.source).or_insert(0) += 1;
            if let Some(a) = &ex.annotator_id {
                *by_annotator.entry(a.clone()).or_insert(0) += 1;
            }
            positives += ex.label.is_positive() as usize;
        }
        SessionStats {
            session_id: self.config.session_id.clone(),
            pool_size: self.pool.len(),
            queue_length: self.queue.len(),
            labels_total: self.labeled.len(),
            positives,
            negatives: self.labeled.len() - positives,
            labels_by_source: by_source,
            labels_by_annotator: by_annotator,
            retrain_count: self.retrain_count,
            labels_since_retrain: self.labels_since_retrain,
            retrain_cadence: self.config.retrain_cadence,
            rejected_judgments: self
                .events
                .iter()
                .filter(|e| matches!(e.kind, EventKind::Judgment { .. }))
                .count(),
            kappa: self.annotator_kappas(),
            model_hash: model_hash(&self.model),
        }
    }
}
