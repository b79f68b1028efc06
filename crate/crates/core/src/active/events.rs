use std::io::{BufRead, Write};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::session::{ActiveLearningSession, SessionConfig};
use super::ActiveError;
use crate::corpus::{CorpusStore, Label, LabeledExample};

/// One line of the session log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub seq: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum EventKind {
    Init {
        config: SessionConfig,
        seed_examples: Vec<LabeledExample>,
        pool_size: usize,
        model_hash: String,
    },
    Label {
        patent_id: String,
        label: Label,
        annotator_id: String,
        at: DateTime<Utc>,
    },
    Retrain {
        model_hash: String,
        training_examples: usize,
    },
    /// A rejected submission for an already-labeled patent.
    Judgment {
        patent_id: String,
        label: Label,
        annotator_id: String,
        at: DateTime<Utc>,
        existing: Label,
    },
    Override {
        patent_id: String,
        label: Label,
        annotator_id: String,
        at: DateTime<Utc>,
        previous: Label,
    },
}

pub fn write_events<W: Write>(events: &[SessionEvent], mut w: W) -> std::io::Result<()> {
    for e in events {
        serde_json::to_writer(&mut w, e)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_events<R: BufRead>(r: R) -> Result<Vec<SessionEvent>, ActiveError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| ActiveError::Log(format!("line {}: {e}", i + 1)))?;
        if line.trim().is_empty() {
            continue;
        }
        let e: SessionEvent =
            serde_json::from_str(&line).map_err(|e| ActiveError::Log(format!("line {}: {e}", i + 1)))?;
        out.push(e);
    }
    Ok(out)
}

/// Rebuilds a session from its log by re-executing every mutation, then
/// checks that the regenerated log (including model hashes) is identical.
pub fn replay(corpus: &CorpusStore, events: &[SessionEvent]) -> Result<ActiveLearningSession, ActiveError> {
    let fail = |seq: u64, message: String| ActiveError::Replay { seq, message };
    let first = events.first().ok_or_else(|| fail(0, "empty log".into()))?;
    let EventKind::Init {
        config, seed_examples, ..
    } = &first.kind
    else {
        return Err(fail(first.seq, "log does not start with init".into()));
    };
    let mut s = ActiveLearningSession::init(corpus, seed_examples.clone(), config.clone())?;
    for e in &events[1..] {
        match &e.kind {
            EventKind::Init { .. } => return Err(fail(e.seq, "second init event".into())),
            EventKind::Retrain { .. } => {}
            EventKind::Label {
                patent_id,
                label,
                annotator_id,
                at,
            } => {
                s.submit_label_at(patent_id, *label, annotator_id, *at)
                    .map_err(|err| fail(e.seq, err.to_string()))?;
            }
            EventKind::Judgment {
                patent_id,
                label,
                annotator_id,
                at,
                ..
            } => {
                if s.submit_label_at(patent_id, *label, annotator_id, *at).is_ok() {
                    return Err(fail(e.seq, "judgment was accepted as a label".into()));
                }
            }
            EventKind::Override {
                patent_id,
                label,
                annotator_id,
                at,
                ..
            } => s
                .override_label(patent_id, *label, annotator_id, *at)
                .map_err(|err| fail(e.seq, err.to_string()))?,
        }
    }
    if let Some((got, want)) = s.events().iter().zip(events).find(|(a, b)| a != b) {
        return Err(fail(want.seq, format!("regenerated event differs: {got:?}")));
    }
    if s.events().len() != events.len() {
        return Err(fail(
            s.events().len().min(events.len()) as u64,
            format!("regenerated {} events, log has {}", s.events().len(), events.len()),
        ));
    }
    Ok(s)
}
