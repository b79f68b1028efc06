//! Precomputed token embedding tables and the poolers built on them.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use super::text::tokenize;
use super::FeatureError;
use crate::corpus::CpcCode;

pub const EMBT_MAGIC: &[u8; 4] = b"EMBT";
pub const EMBT_VERSION: u32 = 1;

/// What a lookup of an unknown token yields.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OovPolicy {
    /// The token contributes nothing.
    #[default]
    Skip,
    /// The token counts as a zero vector.
    Zero,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    name: String,
    dim: usize,
    vectors: HashMap<String, Vec<f32>>,
    oov: OovPolicy,
}

pub(crate) enum Resolved<'a> {
    Vector(&'a [f32]),
    Zero,
    Skip,
}

impl EmbeddingTable {
    pub fn new(name: impl Into<String>, dim: usize) -> Self {
        EmbeddingTable {
            name: name.into(),
            dim,
            vectors: HashMap::new(),
            oov: OovPolicy::Skip,
        }
    }

    pub fn with_oov(mut self, oov: OovPolicy) -> Self {
        self.oov = oov;
        self
    }

    pub fn insert(&mut self, token: impl Into<String>, vector: Vec<f32>) -> Result<(), FeatureError> {
        if vector.len() != self.dim {
            return Err(FeatureError::DimensionMismatch {
                expected: self.dim,
                got: vector.len(),
            });
        }
        self.vectors.insert(token.into(), vector);
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn oov_policy(&self) -> OovPolicy {
        self.oov
    }

    pub fn get(&self, token: &str) -> Option<&[f32]> {
        self.vectors.get(token).map(Vec::as_slice)
    }

    pub(crate) fn resolve(&self, token: &str) -> Resolved<'_> {
        match (self.vectors.get(token), self.oov) {
            (Some(v), _) => Resolved::Vector(v),
            (None, OovPolicy::Zero) => Resolved::Zero,
            (None, OovPolicy::Skip) => Resolved::Skip,
        }
    }

    /// Writes the binary `EMBT` format, entries sorted by token.
    pub fn write_binary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(EMBT_MAGIC)?;
        w.write_all(&EMBT_VERSION.to_le_bytes())?;
        w.write_all(&(self.dim as u32).to_le_bytes())?;
        w.write_all(&(self.vectors.len() as u64).to_le_bytes())?;
        let sorted: BTreeMap<&String, &Vec<f32>> = self.vectors.iter().collect();
        for (token, vec) in sorted {
            w.write_all(&(token.len() as u32).to_le_bytes())?;
            w.write_all(token.as_bytes())?;
            for x in vec {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        w.flush()
    }

    pub fn read_binary<R: Read>(name: impl Into<String>, mut r: R) -> Result<Self, FeatureError> {
        let mut magic = [0u8; 4];
        read_exact(&mut r, &mut magic)?;
        if &magic != EMBT_MAGIC {
            return Err(FeatureError::Format("not an EMBT embedding table".into()));
        }
        let version = read_u32(&mut r)?;
        if version != EMBT_VERSION {
            return Err(FeatureError::Format(format!("unsupported EMBT version {version}")));
        }
        let dim = read_u32(&mut r)? as usize;
        let mut buf8 = [0u8; 8];
        read_exact(&mut r, &mut buf8)?;
        let count = u64::from_le_bytes(buf8);
        let mut table = EmbeddingTable::new(name, dim);
        let mut row = vec![0u8; dim * 4];
        for _ in 0..count {
            let len = read_u32(&mut r)? as usize;
            let mut tok = vec![0u8; len];
            read_exact(&mut r, &mut tok)?;
            let tok = String::from_utf8(tok).map_err(|e| FeatureError::Format(format!("token is not UTF-8: {e}")))?;
            read_exact(&mut r, &mut row)?;
            let v = row.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
            table.vectors.insert(tok, v);
        }
        Ok(table)
    }

    /// Reads `word f1 f2 ...` lines. A leading `count dim` header line, as
    /// written by word2vec, is recognized and skipped.
    pub fn read_text<R: BufRead>(name: impl Into<String>, r: R) -> Result<Self, FeatureError> {
        let mut table: Option<EmbeddingTable> = None;
        let name = name.into();
        for (i, line) in r.lines().enumerate() {
            let line = line.map_err(|e| FeatureError::Format(e.to_string()))?;
            let mut parts = line.split_whitespace();
            let Some(word) = parts.next() else { continue };
            let rest: Vec<&str> = parts.collect();
            if i == 0 && rest.len() == 1 && word.parse::<u64>().is_ok() && rest[0].parse::<u64>().is_ok() {
                continue;
            }
            let v: Vec<f32> = rest
                .iter()
                .map(|s| s.parse::<f32>())
                .collect::<Result<_, _>>()
                .map_err(|e| FeatureError::Format(format!("line {}: {e}", i + 1)))?;
            let t = table.get_or_insert_with(|| EmbeddingTable::new(name.clone(), v.len()));
            t.insert(word, v).map_err(|e| FeatureError::Format(format!("line {}: {e}", i + 1)))?;
        }
        table.ok_or_else(|| FeatureError::Format("empty embedding file".into()))
    }
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<(), FeatureError> {
    r.read_exact(buf).map_err(|e| FeatureError::Format(format!("truncated table: {e}")))
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, FeatureError> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

/// Mean of the embeddings of the first `max_tokens` resolvable tokens.
///
/// Under [`OovPolicy::Zero`] unknown tokens are resolvable (as zero
/// vectors); under [`OovPolicy::Skip`] they are passed over. No resolvable
/// token gives the zero vector.
pub fn mean_embedding<S: AsRef<str>>(tokens: &[S], table: &EmbeddingTable, max_tokens: usize) -> Vec<f64> {
    let mut acc = vec![0.0f64; table.dim()];
    let mut used = 0usize;
    for t in tokens {
        if used >= max_tokens {
            break;
        }
        match table.resolve(t.as_ref()) {
            Resolved::Vector(v) => {
                for (a, &x) in acc.iter_mut().zip(v) {
                    *a += x as f64;
                }
                used += 1;
            }
            Resolved::Zero => used += 1,
            Resolved::Skip => {}
        }
    }
    if used > 0 {
        for a in &mut acc {
            *a /= used as f64;
        }
    }
    acc
}

/// Titles of CPC codes, keyed by canonical code string.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CpcTitles(BTreeMap<String, String>);

impl CpcTitles {
    pub fn insert(&mut self, code: &CpcCode, title: impl Into<String>) {
        self.0.insert(code.to_string(), title.into());
    }

    /// The exact code's title, falling back to its subclass title.
    pub fn title(&self, code: &CpcCode) -> Option<&str> {
        self.0
            .get(&code.to_string())
            .or_else(|| self.0.get(&code.subclass().to_string()))
            .map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// `code<TAB>title` lines; malformed codes are rejected.
    pub fn read_tsv<R: BufRead>(r: R) -> Result<Self, FeatureError> {
        let mut out = CpcTitles::default();
        for (i, line) in r.lines().enumerate() {
            let line = line.map_err(|e| FeatureError::Format(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let (code, title) = line
                .split_once('\t')
                .ok_or_else(|| FeatureError::Format(format!("line {}: expected code<TAB>title", i + 1)))?;
            let code: CpcCode = code.parse().map_err(|e| FeatureError::Format(format!("line {}: {e}", i + 1)))?;
            out.insert(&code, title.trim());
        }
        Ok(out)
    }

    pub fn write_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (code, title) in &self.0 {
            writeln!(w, "{code}\t{title}")?;
        }
        w.flush()
    }
}

/// Per-code title embeddings laid out in `max_tokens` slots (zero padded),
/// then averaged slot by slot across codes.
///
/// Returns `max_tokens` vectors of length `table.dim()`. Codes without a
/// title are skipped with a warning; no usable codes gives all zeros.
pub fn cpc_avg_embedding(
    codes: &[CpcCode],
    titles: &CpcTitles,
    table: &EmbeddingTable,
    max_tokens: usize,
) -> Vec<Vec<f64>> {
    let mut slots = vec![vec![0.0f64; table.dim()]; max_tokens];
    let mut used = 0usize;
    for code in codes {
        let Some(title) = titles.title(code) else {
            log::warn!("no title for CPC code {code}; skipped");
            continue;
        };
        used += 1;
        let mut slot = 0;
        for tok in tokenize(title) {
            if slot >= max_tokens {
                break;
            }
            match table.resolve(&tok) {
                Resolved::Vector(v) => {
                    for (a, &x) in slots[slot].iter_mut().zip(v) {
                        *a += x as f64;
                    }
                    slot += 1;
                }
                Resolved::Zero => slot += 1,
                Resolved::Skip => {}
            }
        }
    }
    if used > 0 {
        for s in &mut slots {
            for a in s.iter_mut() {
                *a /= used as f64;
            }
        }
    }
    slots
}

/// Concatenated title tokens of all codes, mean-pooled.
pub fn cpc_seq_embedding(codes: &[CpcCode], titles: &CpcTitles, table: &EmbeddingTable, max_tokens: usize) -> Vec<f64> {
    let tokens: Vec<String> = codes.iter().filter_map(|c| titles.title(c)).flat_map(tokenize).collect();
    mean_embedding(&tokens, table, max_tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> EmbeddingTable {
        let mut t = EmbeddingTable::new("toy", 2);
        t.insert("spade", vec![1.0, 0.0]).unwrap();
        t.insert("hinge", vec![0.0, 1.0]).unwrap();
        t.insert("door", vec![2.0, 2.0]).unwrap();
        t
    }

    #[test]
    fn mean_embedding_examples() {
        let t = table();
        assert_eq!(mean_embedding::<&str>(&[], &t, 8), vec![0.0, 0.0]);
        assert_eq!(mean_embedding(&["spade"], &t, 8), vec![1.0, 0.0]);
        assert_eq!(mean_embedding(&["spade", "hinge"], &t, 8), vec![0.5, 0.5]);
    }

    #[test]
    fn oov_policies() {
        let t = table();
        assert_eq!(mean_embedding(&["zzz", "spade"], &t, 8), vec![1.0, 0.0]);
        assert_eq!(mean_embedding(&["zzz", "zzz"], &t, 8), vec![0.0, 0.0]);
        let z = table().with_oov(OovPolicy::Zero);
        assert_eq!(mean_embedding(&["zzz", "spade"], &z, 8), vec![0.5, 0.0]);
    }

    #[test]
    fn truncation_counts_resolvable_tokens() {
        let t = table();
        assert_eq!(mean_embedding(&["zzz", "spade", "hinge"], &t, 1), vec![1.0, 0.0]);
    }

    #[test]
    fn binary_round_trip() {
        let t = table();
        let mut buf = Vec::new();
        t.write_binary(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"EMBT");
        assert_eq!(u32::from_le_bytes(buf[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(buf[8..12].try_into().unwrap()), 2);
        assert_eq!(u64::from_le_bytes(buf[12..20].try_into().unwrap()), 3);
        let back = EmbeddingTable::read_binary("toy", &buf[..]).unwrap();
        assert_eq!(back, t);
        assert!(EmbeddingTable::read_binary("x", &buf[..30]).is_err());
    }

    #[test]
    fn text_reader_with_and_without_header() {
        let plain = "spade 1 0\nhinge 0 1\n";
        let t = EmbeddingTable::read_text("t", plain.as_bytes()).unwrap();
        assert_eq!(t.dim(), 2);
        assert_eq!(t.get("hinge"), Some(&[0.0f32, 1.0][..]));
        let w2v = "2 2\nspade 1 0\nhinge 0 1\n";
        assert_eq!(EmbeddingTable::read_text("t", w2v.as_bytes()).unwrap(), t);
        assert!(EmbeddingTable::read_text("t", "a 1 2\nb 1\n".as_bytes()).is_err());
    }

    fn titles() -> CpcTitles {
        let mut t = CpcTitles::default();
        t.insert(&"A01B".parse().unwrap(), "Spade");
        t.insert(&"E05D".parse().unwrap(), "Hinge");
        t.insert(&"E05F".parse().unwrap(), "Door hinge");
        t
    }

    #[test]
    fn cpc_avg_examples() {
        let (t, ti) = (table(), titles());
        assert_eq!(cpc_avg_embedding(&[], &ti, &t, 3), vec![vec![0.0; 2]; 3]);
        let a: CpcCode = "A01B1/02".parse().unwrap();
        let one = cpc_avg_embedding(std::slice::from_ref(&a), &ti, &t, 3);
        assert_eq!(one, vec![vec![1.0, 0.0], vec![0.0, 0.0], vec![0.0, 0.0]]);
        let e: CpcCode = "E05D".parse().unwrap();
        let two = cpc_avg_embedding(&[a.clone(), e.clone()], &ti, &t, 3);
        assert_eq!(two, vec![vec![0.5, 0.5], vec![0.0, 0.0], vec![0.0, 0.0]]);
        let f: CpcCode = "E05F".parse().unwrap();
        let three = cpc_avg_embedding(&[f, a], &ti, &t, 3);
        assert_eq!(three[0], vec![1.5, 1.0]);
        assert_eq!(three[1], vec![0.0, 0.5]);
    }

    #[test]
    fn titles_tsv_round_trip() {
        let ti = titles();
        let mut buf = Vec::new();
        ti.write_tsv(&mut buf).unwrap();
        assert_eq!(CpcTitles::read_tsv(&buf[..]).unwrap(), ti);
        assert!(CpcTitles::read_tsv("1A0B\tx\n".as_bytes()).is_err());
    }
}
