use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::sparse::SparseVector;
use super::FeatureError;
use crate::corpus::CpcCode;
use crate::graph::{khop_citation_codes, CodePath, GraphIndex};

/// Ordered list of code paths (single subclasses or subclass pairs) that
/// defines the columns of a citation count vector. Frozen at training time.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "SpaceRepr", try_from = "SpaceRepr")]
pub struct CodeSpace {
    hops: u8,
    paths: Vec<CodePath>,
    column: HashMap<CodePath, usize>,
}

#[derive(Serialize, Deserialize)]
struct SpaceRepr {
    hops: u8,
    paths: Vec<Vec<CpcCode>>,
}

impl From<CodeSpace> for SpaceRepr {
    fn from(s: CodeSpace) -> Self {
        SpaceRepr {
            hops: s.hops,
            paths: s.paths.into_iter().map(|p| p.0).collect(),
        }
    }
}

impl TryFrom<SpaceRepr> for CodeSpace {
    type Error = FeatureError;
    fn try_from(r: SpaceRepr) -> Result<Self, Self::Error> {
        if r.paths.iter().any(|p| p.len() != r.hops as usize) {
            return Err(FeatureError::Format("code path length differs from hop count".into()));
        }
        Ok(CodeSpace::from_paths(r.hops, r.paths.into_iter().map(CodePath)))
    }
}

impl CodeSpace {
    fn from_paths(hops: u8, paths: impl IntoIterator<Item = CodePath>) -> Self {
        let paths: Vec<CodePath> = paths.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let column = paths.iter().enumerate().map(|(i, p)| (p.clone(), i)).collect();
        CodeSpace { hops, paths, column }
    }

    /// Subclass space for 1-hop counts.
    pub fn subclasses(codes: impl IntoIterator<Item = CpcCode>) -> Self {
        Self::from_paths(1, codes.into_iter().map(|c| CodePath(vec![c.subclass()])))
    }

    /// Ordered subclass-pair space for 2-hop counts.
    pub fn pairs(pairs: impl IntoIterator<Item = (CpcCode, CpcCode)>) -> Self {
        Self::from_paths(2, pairs.into_iter().map(|(a, b)| CodePath(vec![a.subclass(), b.subclass()])))
    }

    /// Every path observed along `hops`-step citations of the given patents.
    pub fn observed<'a>(
        patent_ids: impl IntoIterator<Item = &'a str>,
        hops: u8,
        index: &GraphIndex,
    ) -> Result<Self, FeatureError> {
        let mut all = BTreeSet::new();
        for id in patent_ids {
            all.extend(khop_citation_codes(id, hops, index)?.into_keys());
        }
        Ok(Self::from_paths(hops, all))
    }

    pub fn hops(&self) -> u8 {
        self.hops
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn paths(&self) -> &[CodePath] {
        &self.paths
    }

    pub fn column(&self, path: &CodePath) -> Option<usize> {
        self.column.get(path).copied()
    }
}

fn counts(patent_id: &str, index: &GraphIndex, space: &CodeSpace) -> Result<SparseVector, FeatureError> {
    let ms = khop_citation_codes(patent_id, space.hops, index)?;
    let pairs = ms
        .into_iter()
        .filter_map(|(path, n)| space.column(&path).map(|c| (c, n as f64)))
        .collect();
    Ok(SparseVector::from_pairs(space.len(), pairs))
}

/// Element i = number of directly cited patents carrying subclass i.
/// Subclasses outside the space are dropped. Not normalized.
pub fn onehop_cpc_counts(patent_id: &str, index: &GraphIndex, code_space: &CodeSpace) -> Result<SparseVector, FeatureError> {
    if code_space.hops != 1 {
        return Err(FeatureError::Format("onehop counts need a 1-hop code space".into()));
    }
    counts(patent_id, index, code_space)
}

/// Element (X, Y) = number of two-step citation paths whose first hop
/// carries subclass X and second hop subclass Y.
pub fn twohop_pair_counts(patent_id: &str, index: &GraphIndex, pair_space: &CodeSpace) -> Result<SparseVector, FeatureError> {
    if pair_space.hops != 2 {
        return Err(FeatureError::Format("two-hop counts need a pair space".into()));
    }
    counts(patent_id, index, pair_space)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{CorpusStore, PatentRecord};
    use crate::graph::build_index;

    fn rec(id: &str, codes: &[&str], cites: &[&str]) -> PatentRecord {
        let mut r = PatentRecord::new(id);
        r.cpc_codes = codes.iter().map(|s| s.to_string()).collect();
        r.citations = cites.iter().map(|s| s.to_string()).collect();
        r
    }

    fn code(s: &str) -> CpcCode {
        s.parse().unwrap()
    }

    #[test]
    fn onehop_examples() {
        let idx = build_index(
            &CorpusStore::from_records(
                vec![
                    rec("P", &[], &["Q", "R"]),
                    rec("Q", &["A01B1/02"], &[]),
                    rec("R", &["A01B3/04", "H04L9/00"], &[]),
                    rec("S", &[], &[]),
                ],
                "t",
            )
            .unwrap(),
        );
        let space = CodeSpace::subclasses([code("A01B"), code("E05D")]);
        assert_eq!(onehop_cpc_counts("S", &idx, &space).unwrap().nnz(), 0);
        let v = onehop_cpc_counts("P", &idx, &space).unwrap();
        assert_eq!(v.to_dense(), vec![2.0, 0.0]);
        assert!(onehop_cpc_counts("nope", &idx, &space).is_err());
    }

    #[test]
    fn twohop_example_chain() {
        let idx = build_index(
            &CorpusStore::from_records(
                vec![rec("P", &[], &["Q"]), rec("Q", &["A01B"], &["R"]), rec("R", &["E05D"], &[])],
                "t",
            )
            .unwrap(),
        );
        let space = CodeSpace::pairs([(code("A01B"), code("E05D")), (code("E05D"), code("A01B"))]);
        assert_eq!(twohop_pair_counts("P", &idx, &space).unwrap().to_dense(), vec![1.0, 0.0]);
        assert_eq!(twohop_pair_counts("R", &idx, &space).unwrap().nnz(), 0);
        let observed = CodeSpace::observed(["P", "Q", "R"], 2, &idx).unwrap();
        assert_eq!(observed.paths().iter().map(|p| p.to_string()).collect::<Vec<_>>(), ["A01B-E05D"]);
    }

    #[test]
    fn space_json_round_trip() {
        let space = CodeSpace::pairs([(code("A01B1/02"), code("E05D"))]);
        let json = serde_json::to_string(&space).unwrap();
        let back: CodeSpace = serde_json::from_str(&json).unwrap();
        assert_eq!(back, space);
    }
}
