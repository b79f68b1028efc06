//! Generated corpora with a planted topic: two vocabulary clusters,
//! topic-correlated CPC codes, citation homophily, and a band of boundary
//! documents that mix both vocabularies.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use chrono::{DateTime, Duration, NaiveDate, TimeZone, Utc};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::active::{ActiveError, ActiveLearningSession, SessionConfig};
use crate::corpus::{CorpusError, CorpusStore, CpcCode, Label, LabeledExample, PatentRecord};
use crate::features::{CpcTitles, EmbeddingTable, StopWords};
use crate::graph::{build_index, expand, sample_antiseeds, ExpansionConfig, ExpansionResult, GraphIndex};

/// Where a generated patent sits relative to the planted topic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    CorePositive,
    BoundaryPositive,
    BoundaryNegative,
    CoreNegative,
}

impl Group {
    pub fn label(self) -> Label {
        match self {
            Group::CorePositive | Group::BoundaryPositive => Label::Positive,
            Group::BoundaryNegative | Group::CoreNegative => Label::Negative,
        }
    }

    /// Range of the fraction of on-topic content words.
    fn topic_share(self) -> (f64, f64) {
        match self {
            Group::CorePositive => (0.8, 1.0),
            Group::BoundaryPositive => (0.56, 0.72),
            Group::BoundaryNegative => (0.28, 0.44),
            Group::CoreNegative => (0.0, 0.2),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub rng_seed: u64,
    pub patents: usize,
    /// Fractions of core-positive, boundary-positive and boundary-negative
    /// patents; the rest are core negatives.
    pub core_positive: f64,
    pub boundary_positive: f64,
    pub boundary_negative: f64,
    /// Words per topic cluster.
    pub topic_vocabulary: usize,
    pub embedding_dim: usize,
    pub abstract_words: usize,
    pub claims_words: usize,
    pub description_words: usize,
    pub seeds: usize,
    /// Probability that a boundary patent carries a code from its own side.
    pub code_fidelity: f64,
    /// Probability that a citation stays on the citing patent's side.
    pub citation_homophily: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            rng_seed: 7,
            patents: 2000,
            core_positive: 0.25,
            boundary_positive: 0.13,
            boundary_negative: 0.22,
            topic_vocabulary: 2000,
            embedding_dim: 32,
            abstract_words: 50,
            claims_words: 120,
            description_words: 200,
            seeds: 250,
            code_fidelity: 0.95,
            citation_homophily: 0.85,
        }
    }
}

pub struct SyntheticCorpus {
    pub config: SynthConfig,
    pub corpus: CorpusStore,
    pub index: GraphIndex,
    pub groups: BTreeMap<String, Group>,
    pub seeds: BTreeSet<String>,
    pub word_vectors: EmbeddingTable,
    pub fasttext: EmbeddingTable,
    pub cpc_titles: CpcTitles,
}

const TOPIC_CODES: [&str; 12] = [
    "G06N3/04", "G06N3/045", "G06N3/08", "G06N3/084", "G06N5/02", "G06N5/04", "G06N7/01", "G06N20/00", "G06N20/10",
    "G06N20/20", "G06F40/30", "G06V10/82",
];
const BRIDGE_CODES: [&str; 6] = ["G06F16/35", "G06F16/90", "G06F17/18", "G06Q10/04", "G06T7/00", "H04L67/10"];
const OFF_TOPIC_CODES: [&str; 30] = [
    "A01B1/02", "A01B3/00", "A47J31/44", "B60K6/20", "B65D81/32", "C07D213/00", "E05D3/02", "E05D11/00", "F16H1/28",
    "F16H57/02", "F02M61/16", "H01M10/052", "A61K9/20", "A61B17/00", "B29C45/00", "C08L23/00", "E04B1/38", "F24F11/00",
    "G01N33/50", "H02K1/27", "B62D25/08", "D06F39/00", "F16K31/06", "B23K26/00", "H01L21/67", "A63B21/00", "B01D53/94",
    "E21B43/26", "G02B6/38", "H01R13/00",
];
const GENERIC: [&str; 20] = [
    "system", "method", "device", "apparatus", "unit", "module", "data", "signal", "first", "second", "plurality",
    "configured", "based", "component", "process", "element", "assembly", "means", "portion", "control",
];
const GLUE: [&str; 8] = ["the", "a", "of", "and", "to", "in", "with", "for"];

struct Vocab {
    on: Vec<String>,
    off: Vec<String>,
}

impl Vocab {
    fn word<'a>(&'a self, rng: &mut ChaCha8Rng, share: f64) -> &'a str {
        let side = if rng.random_bool(share) { &self.on } else { &self.off };
        side.choose(rng).expect("non-empty vocabulary")
    }
}

fn pseudo_words(rng: &mut ChaCha8Rng, n: usize, taken: &mut BTreeSet<String>, stop: &StopWords) -> Vec<String> {
    const C: &[u8] = b"bdfgklmnprstvz";
    const V: &[u8] = b"aeiou";
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let syllables = rng.random_range(2..=4);
        let mut w = String::new();
        for _ in 0..syllables {
            w.push(*C.choose(rng).unwrap() as char);
            w.push(*V.choose(rng).unwrap() as char);
        }
        if rng.random_bool(0.3) {
            w.push(*C.choose(rng).unwrap() as char);
        }
        if !stop.contains(&w) && taken.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

/// Content words drawn at `share`, with glue and generic words mixed in,
/// broken into sentences.
fn passage(rng: &mut ChaCha8Rng, vocab: &Vocab, share: f64, words: usize) -> String {
    let mut out = String::new();
    let mut in_sentence = 0;
    for i in 0..words {
        if in_sentence == 0 {
            if i > 0 {
                out.push_str(". ");
            }
            out.push_str("The ");
        } else {
            out.push(' ');
            if rng.random_bool(0.25) {
                out.push_str(GLUE.choose(rng).unwrap());
                out.push(' ');
            }
            if rng.random_bool(0.2) {
                out.push_str(GENERIC.choose(rng).unwrap());
                out.push(' ');
            }
        }
        out.push_str(vocab.word(rng, share));
        in_sentence += 1;
        if in_sentence >= rng.random_range(8..16) {
            in_sentence = 0;
        }
    }
    out.push('.');
    out
}

fn claims(rng: &mut ChaCha8Rng, vocab: &Vocab, share: f64, words: usize) -> String {
    let n = rng.random_range(3..=5);
    let per = (words / n).max(1);
    let mut lines = Vec::with_capacity(n);
    for i in 0..n {
        let noun = GENERIC[..4].choose(rng).unwrap();
        let body = passage(rng, vocab, share, per);
        let body = body.strip_prefix("The ").unwrap_or(&body);
        if i == 0 {
            lines.push(format!("1. A {noun} comprising {body}"));
        } else {
            lines.push(format!("{}. The {noun} of claim 1, wherein {body}", i + 1));
        }
    }
    lines.join("\n")
}

fn embedding_tables(cfg: &SynthConfig, vocab: &Vocab, rng: &mut ChaCha8Rng) -> (EmbeddingTable, EmbeddingTable) {
    let d = cfg.embedding_dim;
    let unit = Normal::new(0.0, 1.0).unwrap();
    let centroid = |rng: &mut ChaCha8Rng| {
        let v: Vec<f64> = (0..d).map(|_| unit.sample(rng)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.into_iter().map(|x| x / n).collect::<Vec<f64>>()
    };
    let mut tables = Vec::new();
    for name in ["word2vec", "fasttext"] {
        let on_c = centroid(rng);
        let off_c = centroid(rng);
        let noise = Normal::new(0.0, 0.35).unwrap();
        let mut t = EmbeddingTable::new(name, d);
        let put = |t: &mut EmbeddingTable, w: &str, c: Option<&[f64]>, rng: &mut ChaCha8Rng| {
            let v = (0..d)
                .map(|j| (c.map_or(0.0, |c| c[j]) + noise.sample(rng)) as f32)
                .collect();
            t.insert(w, v).expect("dimension matches");
        };
        for w in &vocab.on {
            put(&mut t, w, Some(&on_c), rng);
        }
        for w in &vocab.off {
            put(&mut t, w, Some(&off_c), rng);
        }
        for w in GENERIC {
            put(&mut t, w, None, rng);
        }
        tables.push(t);
    }
    let ft = tables.pop().unwrap();
    (tables.pop().unwrap(), ft)
}

fn code(s: &str) -> CpcCode {
    s.parse().expect("built-in code parses")
}

fn pick(rng: &mut ChaCha8Rng, list: &[&str], n: usize) -> Vec<String> {
    list.choose_multiple(rng, n).map(|s| s.to_string()).collect()
}

fn assign_codes(rng: &mut ChaCha8Rng, group: Group, fidelity: f64) -> Vec<String> {
    let mut out = match group {
        Group::CorePositive => {
            let n = rng.random_range(1..=3);
            let mut v = pick(rng, &TOPIC_CODES, n);
            if rng.random_bool(0.3) {
                v.extend(pick(rng, &BRIDGE_CODES, 1));
            }
            v
        }
        Group::BoundaryPositive | Group::BoundaryNegative => {
            let own_side = rng.random_bool(fidelity);
            let topic = (group == Group::BoundaryPositive) == own_side;
            let mut v = pick(rng, &BRIDGE_CODES, 1);
            v.extend(pick(rng, if topic { &TOPIC_CODES } else { &OFF_TOPIC_CODES }, 1));
            v
        }
        Group::CoreNegative => {
            let n = rng.random_range(1..=3);
            let mut v = pick(rng, &OFF_TOPIC_CODES, n);
            if rng.random_bool(0.03) {
                v.extend(pick(rng, &BRIDGE_CODES, 1));
            }
            v
        }
    };
    out.dedup();
    out
}

fn is_positive_side(g: Group) -> bool {
    g.label().is_positive()
}

/// Builds the corpus. Deterministic in `config`.
pub fn generate(config: &SynthConfig) -> Result<SyntheticCorpus, CorpusError> {
    let cfg = config;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let stop = StopWords::english();
    let mut taken: BTreeSet<String> = GENERIC.iter().chain(GLUE.iter()).map(|s| s.to_string()).collect();
    let vocab = Vocab {
        on: pseudo_words(&mut rng, cfg.topic_vocabulary, &mut taken, &stop),
        off: pseudo_words(&mut rng, cfg.topic_vocabulary, &mut taken, &stop),
    };
    let (word_vectors, fasttext) = embedding_tables(cfg, &vocab, &mut rng);

    let mut cpc_titles = CpcTitles::default();
    let title_words = |rng: &mut ChaCha8Rng, share: f64| -> String {
        let n = rng.random_range(5..=9);
        (0..n).map(|_| vocab.word(rng, share)).collect::<Vec<_>>().join(" ")
    };
    for c in TOPIC_CODES {
        cpc_titles.insert(&code(c), title_words(&mut rng, 1.0));
    }
    for c in BRIDGE_CODES {
        cpc_titles.insert(&code(c), title_words(&mut rng, 0.5));
    }
    for c in OFF_TOPIC_CODES {
        cpc_titles.insert(&code(c), title_words(&mut rng, 0.0));
    }

    let n = cfg.patents;
    let counts = [
        (cfg.core_positive * n as f64).round() as usize,
        (cfg.boundary_positive * n as f64).round() as usize,
        (cfg.boundary_negative * n as f64).round() as usize,
    ];
    let mut groups_in_order: Vec<Group> = Vec::with_capacity(n);
    for (g, c) in [Group::CorePositive, Group::BoundaryPositive, Group::BoundaryNegative].into_iter().zip(counts) {
        groups_in_order.extend(std::iter::repeat_n(g, c));
    }
    groups_in_order.truncate(n);
    groups_in_order.resize(n, Group::CoreNegative);
    // Position in the shuffled order doubles as grant order.
    groups_in_order.shuffle(&mut rng);
    let width = n.to_string().len().max(4);
    let ids: Vec<String> = {
        let mut numbers: Vec<usize> = (1..=n).collect();
        numbers.shuffle(&mut rng);
        numbers.into_iter().map(|k| format!("SYN{k:0width$}")).collect()
    };

    let base = NaiveDate::from_ymd_opt(2010, 1, 1).unwrap();
    let mut records = Vec::with_capacity(n);
    let mut family_of: Vec<String> = vec![String::new(); n];
    for p in 0..n {
        // Roughly one in ten patents joins the family of an earlier patent
        // from the same group.
        if p > 0 && rng.random_bool(0.1) {
            let mates: Vec<usize> = (0..p).filter(|&q| groups_in_order[q] == groups_in_order[p]).collect();
            if let Some(&q) = mates.choose(&mut rng) {
                if family_of[q].is_empty() {
                    family_of[q] = format!("FAM-{}", ids[q]);
                }
                family_of[p] = family_of[q].clone();
            }
        }
    }
    let mut by_side: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for p in 0..n {
        let g = groups_in_order[p];
        let (lo, hi) = g.topic_share();
        let share = rng.random_range(lo..=hi);
        let mut rec = PatentRecord::new(ids[p].clone());
        rec.title = title_words(&mut rng, share);
        rec.abstract_text = passage(&mut rng, &vocab, share, cfg.abstract_words);
        rec.claims = claims(&mut rng, &vocab, share, cfg.claims_words);
        rec.description = passage(&mut rng, &vocab, share, cfg.description_words);
        rec.cpc_codes = assign_codes(&mut rng, g, cfg.code_fidelity);
        rec.family_id = family_of[p].clone();
        rec.grant_date = Some(base + Duration::days(p as i64));

        let side = is_positive_side(g) as usize;
        let k = rng.random_range(2..=6);
        let mut cited = BTreeSet::new();
        for _ in 0..k {
            let s = if rng.random_bool(cfg.citation_homophily) { side } else { 1 - side };
            if let Some(&q) = by_side[s].choose(&mut rng) {
                cited.insert(ids[q].clone());
            }
        }
        rec.citations = cited.into_iter().collect();
        by_side[side].push(p);
        records.push(rec);
    }

    let groups: BTreeMap<String, Group> = ids.iter().cloned().zip(groups_in_order.iter().copied()).collect();
    let core: Vec<&String> = ids
        .iter()
        .zip(&groups_in_order)
        .filter(|(_, g)| **g == Group::CorePositive)
        .map(|(id, _)| id)
        .collect();
    let seeds: BTreeSet<String> = core.choose_multiple(&mut rng, cfg.seeds.min(core.len())).map(|s| s.to_string()).collect();

    let corpus = CorpusStore::from_records(records, format!("synthetic seed={}", cfg.rng_seed))?;
    let index = build_index(&corpus);
    Ok(SyntheticCorpus {
        config: cfg.clone(),
        corpus,
        index,
        groups,
        seeds,
        word_vectors,
        fasttext,
        cpc_titles,
    })
}

/// How to turn a synthetic corpus into labeled data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarvestPlan {
    pub antiseeds: usize,
    /// Annotations collected through the active-learning queue.
    pub annotations: usize,
    pub rng_seed: u64,
    pub expansion: ExpansionConfig,
}

impl Default for HarvestPlan {
    fn default() -> Self {
        HarvestPlan {
            antiseeds: 400,
            annotations: 360,
            rng_seed: 11,
            expansion: ExpansionConfig::default(),
        }
    }
}

pub struct Harvest {
    pub expansion: ExpansionResult,
    pub antiseeds: Vec<String>,
    /// Seeds (easy positive), anti-seeds (easy negative) and queue
    /// annotations (hard).
    pub examples: Vec<LabeledExample>,
    pub session: ActiveLearningSession,
}

pub const ORACLE_ANNOTATOR: &str = "oracle";

pub fn label_time(i: usize) -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap() + Duration::seconds(i as i64)
}

impl SyntheticCorpus {
    pub fn gold(&self, patent_id: &str) -> Option<Label> {
        self.groups.get(patent_id).map(|g| g.label())
    }

    /// Expands the seeds, samples anti-seeds outside L2, then labels the top
    /// of the uncertainty queue over L2 with the gold labels, one at a time.
    pub fn harvest(&self, plan: &HarvestPlan) -> Result<Harvest, ActiveError> {
        let expansion = expand(&self.seeds, &self.index, &plan.expansion)
            .map_err(|e| ActiveError::InvalidSetup(e.to_string()))?;
        let antiseeds = sample_antiseeds(&expansion.antiseed_pool, plan.antiseeds, plan.rng_seed)
            .map_err(|e| ActiveError::InvalidSetup(e.to_string()))?;
        let mut initial: Vec<LabeledExample> =
            self.seeds.iter().enumerate().map(|(i, id)| LabeledExample::seed(id, label_time(i))).collect();
        let offset = initial.len();
        initial.extend(antiseeds.iter().enumerate().map(|(i, id)| LabeledExample::anti_seed(id, label_time(offset + i))));
        let config = SessionConfig {
            session_id: "synthetic".into(),
            rng_seed: plan.rng_seed,
            pool: Some(expansion.l2.iter().cloned().collect()),
            ..SessionConfig::default()
        };
        let mut session = ActiveLearningSession::init(&self.corpus, initial, config)?;
        let start = session.labeled().len();
        for i in 0..plan.annotations {
            let Some(next) = session.next_candidates(1).first().map(|c| c.patent_id.clone()) else {
                break;
            };
            let gold = self.gold(&next).expect("pool ids come from the corpus");
            session.submit_label_at(&next, gold, ORACLE_ANNOTATOR, label_time(start + i))?;
        }
        let examples = session.labeled().to_vec();
        Ok(Harvest {
            expansion,
            antiseeds,
            examples,
            session,
        })
    }

    /// Writes `records.jsonl` (via the corpus store), both embedding tables,
    /// CPC titles, the seed list and the gold labels into `dir`.
    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        fs::create_dir_all(dir)?;
        self.corpus.save(dir).map_err(std::io::Error::other)?;
        self.word_vectors.write_binary(fs::File::create(dir.join("word2vec.embt"))?)?;
        self.fasttext.write_binary(fs::File::create(dir.join("fasttext.embt"))?)?;
        self.cpc_titles.write_tsv(fs::File::create(dir.join("cpc_titles.tsv"))?)?;
        let seeds: String = self.seeds.iter().map(|s| format!("{s}\n")).collect();
        fs::write(dir.join("seeds.txt"), seeds)?;
        let gold: String = self
            .groups
            .iter()
            .map(|(id, g)| {
                serde_json::json!({"patent_id": id, "label": g.label(), "group": g}).to_string() + "\n"
            })
            .collect();
        fs::write(dir.join("gold.jsonl"), gold)
    }
}
