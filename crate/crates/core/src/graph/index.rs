use std::collections::{BTreeMap, HashMap};

use crate::corpus::{CorpusStore, CpcCode};

/// Dense patent index; ids are assigned in lexicographic order so that
/// sorting by index is sorting by id.
pub(crate) type Node = u32;

/// Citation, CPC and family relations over a corpus.
///
/// Adjacency lists only contain in-corpus patents; citations to ids outside
/// the corpus are kept in [`GraphIndex::dangling`].
#[derive(Clone, Debug, Default)]
pub struct GraphIndex {
    ids: Vec<String>,
    node_of: HashMap<String, Node>,
    forward: Vec<Vec<Node>>,
    reverse: Vec<Vec<Node>>,
    codes: Vec<Vec<CpcCode>>,
    subclasses: Vec<Vec<CpcCode>>,
    family: Vec<Option<String>>,
    cpc_to_patents: BTreeMap<CpcCode, Vec<Node>>,
    subclass_to_patents: BTreeMap<CpcCode, Vec<Node>>,
    family_to_patents: BTreeMap<String, Vec<Node>>,
    dangling: Vec<(String, String)>,
}

/// Builds the index. Deterministic: the result depends only on the set of
/// records, not their order.
pub fn build_index(corpus: &CorpusStore) -> GraphIndex {
    let mut ids: Vec<String> = corpus.ids().map(str::to_string).collect();
    ids.sort();
    let node_of: HashMap<String, Node> = ids.iter().enumerate().map(|(i, id)| (id.clone(), i as Node)).collect();
    let n = ids.len();
    let mut forward = vec![Vec::new(); n];
    let mut reverse = vec![Vec::new(); n];
    let mut codes = vec![Vec::new(); n];
    let mut subclasses = vec![Vec::new(); n];
    let mut family = vec![None; n];
    let mut cpc_to_patents: BTreeMap<CpcCode, Vec<Node>> = BTreeMap::new();
    let mut subclass_to_patents: BTreeMap<CpcCode, Vec<Node>> = BTreeMap::new();
    let mut family_to_patents: BTreeMap<String, Vec<Node>> = BTreeMap::new();
    let mut dangling = Vec::new();

    for (node, id) in ids.iter().enumerate() {
        let rec = corpus.get(id).expect("id came from the corpus");
        for target in &rec.citations {
            match node_of.get(target) {
                Some(&t) => {
                    forward[node].push(t);
                    reverse[t as usize].push(node as Node);
                }
                None => dangling.push((id.clone(), target.clone())),
            }
        }
        let mut full = rec.cpc();
        full.sort();
        full.dedup();
        let mut subs: Vec<CpcCode> = full.iter().map(CpcCode::subclass).collect();
        subs.sort();
        subs.dedup();
        for c in &full {
            cpc_to_patents.entry(c.clone()).or_default().push(node as Node);
        }
        for c in &subs {
            subclass_to_patents.entry(c.clone()).or_default().push(node as Node);
        }
        codes[node] = full;
        subclasses[node] = subs;
        if !rec.family_id.is_empty() {
            family[node] = Some(rec.family_id.clone());
            family_to_patents.entry(rec.family_id.clone()).or_default().push(node as Node);
        }
    }
    for list in forward.iter_mut().chain(reverse.iter_mut()) {
        list.sort_unstable();
        list.dedup();
    }
    if !dangling.is_empty() {
        log::warn!("{} citations point outside the corpus", dangling.len());
    }
    GraphIndex {
        ids,
        node_of,
        forward,
        reverse,
        codes,
        subclasses,
        family,
        cpc_to_patents,
        subclass_to_patents,
        family_to_patents,
        dangling,
    }
}

impl GraphIndex {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.node_of.contains_key(id)
    }

    /// All indexed ids, sorted.
    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub(crate) fn node(&self, id: &str) -> Option<Node> {
        self.node_of.get(id).copied()
    }

    pub(crate) fn id(&self, node: Node) -> &str {
        &self.ids[node as usize]
    }

    pub(crate) fn forward_nodes(&self, node: Node) -> &[Node] {
        &self.forward[node as usize]
    }

    pub(crate) fn reverse_nodes(&self, node: Node) -> &[Node] {
        &self.reverse[node as usize]
    }

    pub(crate) fn codes_of(&self, node: Node) -> &[CpcCode] {
        &self.codes[node as usize]
    }

    pub(crate) fn subclasses_of(&self, node: Node) -> &[CpcCode] {
        &self.subclasses[node as usize]
    }

    pub(crate) fn family_of(&self, node: Node) -> Option<&str> {
        self.family[node as usize].as_deref()
    }

    pub(crate) fn patents_with_code(&self, code: &CpcCode) -> &[Node] {
        self.cpc_to_patents.get(code).map(Vec::as_slice).unwrap_or(&[])
    }

    pub(crate) fn patents_with_subclass(&self, code: &CpcCode) -> &[Node] {
        self.subclass_to_patents.get(code).map(Vec::as_slice).unwrap_or(&[])
    }

    pub(crate) fn family_members(&self, family: &str) -> &[Node] {
        self.family_to_patents.get(family).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Outward in-corpus citations of `id`, sorted.
    pub fn cites(&self, id: &str) -> Option<Vec<&str>> {
        self.node(id).map(|n| self.forward_nodes(n).iter().map(|&t| self.id(t)).collect())
    }

    /// Patents citing `id`, sorted.
    pub fn cited_by(&self, id: &str) -> Option<Vec<&str>> {
        self.node(id).map(|n| self.reverse_nodes(n).iter().map(|&t| self.id(t)).collect())
    }

    /// Parsed, deduplicated full-level codes of `id`.
    pub fn codes(&self, id: &str) -> Option<&[CpcCode]> {
        self.node(id).map(|n| self.codes_of(n))
    }

    /// Distinct subclass-level codes of `id`.
    pub fn subclasses(&self, id: &str) -> Option<&[CpcCode]> {
        self.node(id).map(|n| self.subclasses_of(n))
    }

    pub fn forward_citations(&self) -> BTreeMap<String, Vec<String>> {
        self.adjacency(&self.forward)
    }

    pub fn reverse_citations(&self) -> BTreeMap<String, Vec<String>> {
        self.adjacency(&self.reverse)
    }

    fn adjacency(&self, lists: &[Vec<Node>]) -> BTreeMap<String, Vec<String>> {
        lists
            .iter()
            .enumerate()
            .filter(|(_, l)| !l.is_empty())
            .map(|(n, l)| (self.ids[n].clone(), l.iter().map(|&t| self.ids[t as usize].clone()).collect()))
            .collect()
    }

    pub fn cpc_to_patents(&self) -> BTreeMap<String, Vec<String>> {
        self.cpc_to_patents
            .iter()
            .map(|(c, l)| (c.to_string(), l.iter().map(|&t| self.ids[t as usize].clone()).collect()))
            .collect()
    }

    pub fn family_to_patents(&self) -> BTreeMap<String, Vec<String>> {
        self.family_to_patents
            .iter()
            .map(|(f, l)| (f.clone(), l.iter().map(|&t| self.ids[t as usize].clone()).collect()))
            .collect()
    }

    /// `(citing, cited)` pairs whose target is not in the corpus.
    pub fn dangling(&self) -> &[(String, String)] {
        &self.dangling
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::PatentRecord;

    fn rec(id: &str, codes: &[&str], cites: &[&str], fam: &str) -> PatentRecord {
        let mut r = PatentRecord::new(id);
        r.cpc_codes = codes.iter().map(|s| s.to_string()).collect();
        r.citations = cites.iter().map(|s| s.to_string()).collect();
        r.family_id = fam.into();
        r
    }

    #[test]
    fn empty_corpus() {
        let idx = build_index(&CorpusStore::default());
        assert!(idx.is_empty());
        assert!(idx.forward_citations().is_empty());
    }

    #[test]
    fn transpose_of_single_edge() {
        let store =
            CorpusStore::from_records(vec![rec("A", &[], &["B"], ""), rec("B", &[], &[], "")], "t").unwrap();
        let idx = build_index(&store);
        assert_eq!(idx.cited_by("B").unwrap(), vec!["A"]);
        assert_eq!(idx.cites("A").unwrap(), vec!["B"]);
    }

    #[test]
    fn five_record_fixture_matches_hand_built() {
        let store = CorpusStore::from_records(
            vec![
                rec("P5", &["E05D3/02"], &["P1", "X9"], "F2"),
                rec("P1", &["A01B1/02", "A01B1/024"], &["P2", "P3"], "F1"),
                rec("P2", &["A01B1/02"], &["P3"], ""),
                rec("P3", &["G06N3/08"], &[], "F1"),
                rec("P4", &["G06N3/08", "E05D3/02"], &["P3", "P5"], "F2"),
            ],
            "t",
        )
        .unwrap();
        let idx = build_index(&store);
        let m = |pairs: &[(&str, &[&str])]| -> BTreeMap<String, Vec<String>> {
            pairs
                .iter()
                .map(|(k, v)| (k.to_string(), v.iter().map(|s| s.to_string()).collect()))
                .collect()
        };
        assert_eq!(
            idx.forward_citations(),
            m(&[("P1", &["P2", "P3"]), ("P2", &["P3"]), ("P4", &["P3", "P5"]), ("P5", &["P1"])])
        );
        assert_eq!(
            idx.reverse_citations(),
            m(&[("P1", &["P5"]), ("P2", &["P1"]), ("P3", &["P1", "P2", "P4"]), ("P5", &["P4"])])
        );
        assert_eq!(
            idx.cpc_to_patents(),
            m(&[
                ("A01B1/02", &["P1", "P2"]),
                ("A01B1/024", &["P1"]),
                ("E05D3/02", &["P4", "P5"]),
                ("G06N3/08", &["P3", "P4"]),
            ])
        );
        assert_eq!(idx.family_to_patents(), m(&[("F1", &["P1", "P3"]), ("F2", &["P4", "P5"])]));
        assert_eq!(idx.dangling(), &[("P5".to_string(), "X9".to_string())]);
    }
}
