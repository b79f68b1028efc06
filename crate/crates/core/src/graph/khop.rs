use std::collections::BTreeMap;
use std::fmt;

use crate::corpus::CpcCode;

use super::index::GraphIndex;
use super::GraphError;

/// A sequence of subclass-level codes along a citation path, printed as
/// `A01B-E05D`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CodePath(pub Vec<CpcCode>);

impl fmt::Display for CodePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("-")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

pub type CodeMultiset = BTreeMap<CodePath, usize>;

/// Subclass codes reached over outward citation paths of length `k`.
///
/// For k = 1 every directly cited patent contributes each of its distinct
/// subclasses once. For k = 2 every path P -> Q -> R contributes the cross
/// product of Q's and R's distinct subclasses, one count per pair per path.
pub fn khop_citation_codes(patent_id: &str, k: u8, index: &GraphIndex) -> Result<CodeMultiset, GraphError> {
    let start = index
        .node(patent_id)
        .ok_or_else(|| GraphError::UnknownPatent(patent_id.to_string()))?;
    let mut out = CodeMultiset::new();
    match k {
        1 => {
            for &q in index.forward_nodes(start) {
                for c in index.subclasses_of(q) {
                    *out.entry(CodePath(vec![c.clone()])).or_default() += 1;
                }
            }
        }
        2 => {
            for &q in index.forward_nodes(start) {
                let first = index.subclasses_of(q);
                if first.is_empty() {
                    continue;
                }
                for &r in index.forward_nodes(q) {
                    for a in first {
                        for b in index.subclasses_of(r) {
                            *out.entry(CodePath(vec![a.clone(), b.clone()])).or_default() += 1;
                        }
                    }
                }
            }
        }
        other => return Err(GraphError::InvalidHops(other)),
    }
    Ok(out)
}
