//! Adapter for PatentsView-style bulk tables.
//!
//! Each table is a tab-separated file with a header row. The patent table
//! drives the record set; CPC, citation and claim tables are joined onto it
//! by the patent id column. Rows whose key does not match a patent are
//! counted, not fatal.

use std::collections::HashMap;
use std::io::Read;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::record::PatentRecord;
use super::CorpusError;

/// Column names used to find fields in each table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TsvColumns {
    pub patent_id: String,
    pub title: String,
    pub abstract_text: String,
    pub claims: Option<String>,
    pub description: Option<String>,
    pub family_id: Option<String>,
    pub grant_date: Option<String>,
    pub cpc_code: String,
    pub citation_target: String,
    pub claim_text: String,
}

impl Default for TsvColumns {
    fn default() -> Self {
        TsvColumns {
            patent_id: "patent_id".into(),
            title: "patent_title".into(),
            abstract_text: "patent_abstract".into(),
            claims: None,
            description: None,
            family_id: None,
            grant_date: Some("patent_date".into()),
            cpc_code: "cpc_group".into(),
            citation_target: "citation_patent_id".into(),
            claim_text: "claim_text".into(),
        }
    }
}

pub struct NamedStream<'a> {
    pub name: String,
    pub reader: Box<dyn Read + 'a>,
}

impl<'a> NamedStream<'a> {
    pub fn new(name: impl Into<String>, reader: impl Read + 'a) -> Self {
        NamedStream {
            name: name.into(),
            reader: Box::new(reader),
        }
    }
}

pub struct TsvTables<'a> {
    pub patents: NamedStream<'a>,
    pub cpc: Option<NamedStream<'a>>,
    pub citations: Option<NamedStream<'a>>,
    /// One row per claim, concatenated in file order.
    pub claims: Option<NamedStream<'a>>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct TsvReport {
    pub unmatched_cpc_rows: usize,
    pub unmatched_citation_rows: usize,
    pub unmatched_claim_rows: usize,
    pub dropped_self_citations: usize,
    pub dropped_invalid_cpc: usize,
    pub warnings: Vec<String>,
}

struct Table {
    name: String,
    header: HashMap<String, usize>,
    rows: Vec<(usize, Vec<String>)>,
}

impl Table {
    fn read(stream: NamedStream<'_>) -> Result<Table, CorpusError> {
        let name = stream.name;
        let fmt_err = |row: usize, message: String| CorpusError::Format {
            file: name.clone(),
            row,
            message,
        };
        let mut rdr = csv::ReaderBuilder::new()
            .delimiter(b'\t')
            .has_headers(true)
            .from_reader(stream.reader);
        let header = rdr.headers().map_err(|e| fmt_err(1, e.to_string()))?.clone();
        if header.is_empty() || header.iter().all(|h| h.trim().is_empty()) {
            return Err(fmt_err(1, "missing header row".into()));
        }
        let header: HashMap<String, usize> =
            header.iter().enumerate().map(|(i, h)| (h.trim().to_string(), i)).collect();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| match e.kind() {
                csv::ErrorKind::UnequalLengths { pos, expected_len, len } => fmt_err(
                    pos.as_ref().map(|p| p.line() as usize).unwrap_or(0),
                    format!("expected {expected_len} columns, found {len}"),
                ),
                _ => fmt_err(e.position().map(|p| p.line() as usize).unwrap_or(0), e.to_string()),
            })?;
            let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
            rows.push((line, rec.iter().map(str::to_string).collect()));
        }
        Ok(Table { name, header, rows })
    }

    fn column(&self, col: &str) -> Result<usize, CorpusError> {
        self.header.get(col).copied().ok_or_else(|| CorpusError::Format {
            file: self.name.clone(),
            row: 1,
            message: format!("header has no column {col:?}"),
        })
    }

    fn optional_column(&self, col: &Option<String>) -> Result<Option<usize>, CorpusError> {
        col.as_deref().map(|c| self.column(c)).transpose()
    }
}

/// Joins the tables into records, one per patent-table row, in file order.
pub fn parse_patentsview_tsv(
    tables: TsvTables<'_>,
    cols: &TsvColumns,
) -> Result<(Vec<PatentRecord>, TsvReport), CorpusError> {
    let mut report = TsvReport::default();
    let patents = Table::read(tables.patents)?;
    let id_col = patents.column(&cols.patent_id)?;
    let title_col = patents.column(&cols.title)?;
    let abstract_col = patents.column(&cols.abstract_text)?;
    let claims_col = patents.optional_column(&cols.claims)?;
    let desc_col = patents.optional_column(&cols.description)?;
    let family_col = patents.optional_column(&cols.family_id)?;
    // The default date column is optional in practice; only a configured
    // non-default name must exist.
    let date_col = match &cols.grant_date {
        Some(c) if patents.header.contains_key(c) => Some(patents.header[c]),
        Some(c) if c != "patent_date" => return Err(patents.column(c).unwrap_err()),
        _ => None,
    };

    let mut records = Vec::with_capacity(patents.rows.len());
    let mut by_id: HashMap<String, usize> = HashMap::new();
    for (line, row) in &patents.rows {
        let id = row[id_col].trim().to_string();
        if id.is_empty() {
            return Err(CorpusError::Format {
                file: patents.name.clone(),
                row: *line,
                message: "empty patent id".into(),
            });
        }
        if by_id.contains_key(&id) {
            return Err(CorpusError::DuplicateId(id));
        }
        let mut r = PatentRecord::new(id.clone());
        r.title = row[title_col].clone();
        r.abstract_text = row[abstract_col].clone();
        if let Some(c) = claims_col {
            r.claims = row[c].clone();
        }
        if let Some(c) = desc_col {
            r.description = row[c].clone();
        }
        if let Some(c) = family_col {
            r.family_id = row[c].trim().to_string();
        }
        if let Some(c) = date_col {
            let raw = row[c].trim();
            if !raw.is_empty() {
                match NaiveDate::parse_from_str(raw, "%Y-%m-%d") {
                    Ok(d) => r.grant_date = Some(d),
                    Err(_) => report
                        .warnings
                        .push(format!("{}:{line}: unparseable date {raw:?}", patents.name)),
                }
            }
        }
        by_id.insert(id, records.len());
        records.push(r);
    }

    if let Some(stream) = tables.cpc {
        let t = Table::read(stream)?;
        let (kc, cc) = (t.column(&cols.patent_id)?, t.column(&cols.cpc_code)?);
        for (line, row) in &t.rows {
            let Some(&i) = by_id.get(row[kc].trim()) else {
                report.unmatched_cpc_rows += 1;
                continue;
            };
            let code = row[cc].trim();
            match code.parse::<super::CpcCode>() {
                Ok(c) => {
                    let c = c.to_string();
                    if !records[i].cpc_codes.contains(&c) {
                        records[i].cpc_codes.push(c);
                    }
                }
                Err(e) => {
                    report.dropped_invalid_cpc += 1;
                    report.warnings.push(format!("{}:{line}: {e}", t.name));
                }
            }
        }
    }

    if let Some(stream) = tables.citations {
        let t = Table::read(stream)?;
        let (kc, tc) = (t.column(&cols.patent_id)?, t.column(&cols.citation_target)?);
        for (_, row) in &t.rows {
            let Some(&i) = by_id.get(row[kc].trim()) else {
                report.unmatched_citation_rows += 1;
                continue;
            };
            let target = row[tc].trim().to_string();
            if target == records[i].patent_id {
                report.dropped_self_citations += 1;
            } else if !target.is_empty() && !records[i].citations.contains(&target) {
                records[i].citations.push(target);
            }
        }
    }

    if let Some(stream) = tables.claims {
        let t = Table::read(stream)?;
        let (kc, tc) = (t.column(&cols.patent_id)?, t.column(&cols.claim_text)?);
        for (_, row) in &t.rows {
            let Some(&i) = by_id.get(row[kc].trim()) else {
                report.unmatched_claim_rows += 1;
                continue;
            };
            let claims = &mut records[i].claims;
            if !claims.is_empty() {
                claims.push('\n');
            }
            claims.push_str(row[tc].trim());
        }
    }

    let unmatched = report.unmatched_cpc_rows + report.unmatched_citation_rows + report.unmatched_claim_rows;
    if unmatched > 0 {
        log::warn!("{unmatched} joined rows referenced unknown patent ids");
    }
    Ok((records, report))
}
