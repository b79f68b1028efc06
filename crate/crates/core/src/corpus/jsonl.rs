use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::record::{LabeledExample, PatentRecord};
use super::CorpusError;

fn parse_lines<T: DeserializeOwned, R: BufRead>(
    reader: R,
    mut check: impl FnMut(usize, &T) -> Result<(), CorpusError>,
) -> Result<Vec<T>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| CorpusError::Io {
            context: format!("reading line {line_no}"),
            source: e,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let item: T = serde_json::from_str(&line).map_err(|e| CorpusError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        check(line_no, &item)?;
        out.push(item);
    }
    Ok(out)
}

/// Reads one patent per line, in file order. Blank lines are ignored.
pub fn parse_jsonl<R: BufRead>(reader: R) -> Result<Vec<PatentRecord>, CorpusError> {
    parse_lines(reader, |line, r: &PatentRecord| {
        if r.patent_id.trim().is_empty() {
            Err(CorpusError::Validation {
                line,
                message: "missing patent_id".into(),
            })
        } else {
            Ok(())
        }
    })
}

pub fn write_jsonl<'a, W: Write>(
    mut w: W,
    records: impl IntoIterator<Item = &'a PatentRecord>,
) -> Result<(), CorpusError> {
    write_items(&mut w, records)
}

pub fn parse_labels_jsonl<R: BufRead>(reader: R) -> Result<Vec<LabeledExample>, CorpusError> {
    parse_lines(reader, |_, _: &LabeledExample| Ok(()))
}

pub fn write_labels_jsonl<'a, W: Write>(
    mut w: W,
    labels: impl IntoIterator<Item = &'a LabeledExample>,
) -> Result<(), CorpusError> {
    write_items(&mut w, labels)
}

fn write_items<'a, T: Serialize + 'a, W: Write>(
    w: &mut W,
    items: impl IntoIterator<Item = &'a T>,
) -> Result<(), CorpusError> {
    for item in items {
        let line = serde_json::to_string(item).expect("records serialize");
        writeln!(w, "{line}").map_err(|e| CorpusError::Io {
            context: "writing jsonl".into(),
            source: e,
        })?;
    }
    w.flush().map_err(|e| CorpusError::Io {
        context: "flushing jsonl".into(),
        source: e,
    })
}
