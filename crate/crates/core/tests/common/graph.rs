//! Brute-force expansion and k-hop oracles over raw records.

use std::collections::{BTreeMap, BTreeSet};

use patland_core::corpus::{CorpusStore, CpcCode, PatentRecord};
use patland_core::graph::{
    build_index, expand, expand_l1, expand_l2, khop_citation_codes, CodePath, CpcLevel, ExpansionConfig,
};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CODES: [&str; 12] = [
    "A01B1/02", "A01B1/04", "A01B3/00", "E05D3/02", "E05D11/00", "G06N3/04", "G06N3/08", "G06N20/00", "H04L9/32",
    "H04L67/10", "F16H1/28", "A01B",
];

pub fn random_corpus(rng: &mut ChaCha8Rng) -> CorpusStore {
    let n: usize = rng.random_range(1..=50);
    let ids: Vec<String> = (0..n).map(|i| format!("P{i:02}")).collect();
    let families = rng.random_range(1..=n.div_ceil(2).max(1));
    let records = ids
        .iter()
        .map(|id| {
            let mut r = PatentRecord::new(id.clone());
            let k = rng.random_range(0..=3);
            r.cpc_codes = CODES.choose_multiple(rng, k).map(|s| s.to_string()).collect();
            let c = rng.random_range(0..=4);
            let mut cites: BTreeSet<String> = BTreeSet::new();
            for _ in 0..c {
                if rng.random_bool(0.15) {
                    cites.insert(format!("X{}", rng.random_range(0..5)));
                } else {
                    cites.insert(ids.choose(rng).unwrap().clone());
                }
            }
            cites.remove(id);
            r.citations = cites.into_iter().collect();
            if rng.random_bool(0.4) {
                r.family_id = format!("F{}", rng.random_range(0..families));
            }
            r
        })
        .collect();
    CorpusStore::from_records(records, "oracle").unwrap()
}

fn subclasses(r: &PatentRecord) -> BTreeSet<String> {
    r.cpc().iter().map(|c: &CpcCode| c.subclass().to_string()).collect()
}

fn codes(r: &PatentRecord, level: CpcLevel) -> BTreeSet<String> {
    match level {
        CpcLevel::Subgroup => r.cpc().iter().map(|c| c.to_string()).collect(),
        CpcLevel::Subclass => subclasses(r),
    }
}

pub fn brute_l1(corpus: &CorpusStore, seeds: &BTreeSet<String>, cfg: &ExpansionConfig) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for p in corpus.records() {
        let pc = codes(p, cfg.cpc_level);
        let hit = seeds.iter().any(|s| {
            let sr = corpus.get(s).unwrap();
            s == &p.patent_id
                || !codes(sr, cfg.cpc_level).is_disjoint(&pc)
                || sr.citations.contains(&p.patent_id)
                || (cfg.include_citing && p.citations.contains(s))
        });
        if hit {
            out.insert(p.patent_id.clone());
        }
    }
    out
}

pub fn brute_l2(corpus: &CorpusStore, l1: &BTreeSet<String>) -> BTreeSet<String> {
    let fams: BTreeSet<&str> = l1
        .iter()
        .map(|id| corpus.get(id).unwrap().family_id.as_str())
        .filter(|f| !f.is_empty())
        .collect();
    corpus
        .records()
        .iter()
        .filter(|r| l1.contains(&r.patent_id) || fams.contains(r.family_id.as_str()))
        .map(|r| r.patent_id.clone())
        .collect()
}

pub fn brute_khop(corpus: &CorpusStore, id: &str, k: u8) -> BTreeMap<Vec<String>, usize> {
    let mut out = BTreeMap::new();
    let cited = |r: &PatentRecord| -> Vec<String> {
        r.citations.iter().filter(|c| corpus.contains(c)).cloned().collect()
    };
    let start = corpus.get(id).unwrap();
    for q in cited(start) {
        let qr = corpus.get(&q).unwrap();
        if k == 1 {
            for a in subclasses(qr) {
                *out.entry(vec![a]).or_default() += 1;
            }
            continue;
        }
        for r in cited(qr) {
            let rr = corpus.get(&r).unwrap();
            for a in subclasses(qr) {
                for b in subclasses(rr) {
                    *out.entry(vec![a.clone(), b]).or_default() += 1;
                }
            }
        }
    }
    out
}

fn as_strings(ms: patland_core::graph::CodeMultiset) -> BTreeMap<Vec<String>, usize> {
    ms.into_iter()
        .map(|(CodePath(p), n)| (p.iter().map(|c| c.to_string()).collect(), n))
        .collect()
}

/// Runs expansion and k-hop against the oracles on `corpora` random
/// corpora, checking partition and monotonicity along the way.
pub fn run_suite(corpora: usize, rng_seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    for case in 0..corpora {
        let corpus = random_corpus(&mut rng);
        let index = build_index(&corpus);
        let ids: Vec<String> = corpus.ids().map(str::to_string).collect();
        let seeds: BTreeSet<String> = ids.iter().filter(|_| rng.random_bool(0.2)).cloned().collect();
        let more: BTreeSet<String> = seeds.iter().cloned().chain(ids.choose(&mut rng).cloned()).collect();
        for level in [CpcLevel::Subgroup, CpcLevel::Subclass] {
            for include_citing in [false, true] {
                let cfg = ExpansionConfig {
                    cpc_level: level,
                    include_citing,
                };
                let ctx = format!("corpus {case} ({} patents), {cfg:?}", ids.len());
                let got = expand(&seeds, &index, &cfg).map_err(|e| format!("{ctx}: {e}"))?;
                let l1 = brute_l1(&corpus, &seeds, &cfg);
                if got.l1 != l1 {
                    return Err(format!("{ctx}: L1 {:?} != oracle {:?}", got.l1, l1));
                }
                let l2 = brute_l2(&corpus, &l1);
                if got.l2 != l2 {
                    return Err(format!("{ctx}: L2 {:?} != oracle {:?}", got.l2, l2));
                }
                if !(seeds.is_subset(&got.l1) && got.l1.is_subset(&got.l2)) {
                    return Err(format!("{ctx}: seeds ⊆ L1 ⊆ L2 violated"));
                }
                let union: BTreeSet<String> = got.l2.union(&got.antiseed_pool).cloned().collect();
                if !got.l2.is_disjoint(&got.antiseed_pool) || union.len() != ids.len() {
                    return Err(format!("{ctx}: L2 and the anti-seed pool do not partition the corpus"));
                }
                let bigger = expand_l1(&more, &index, &cfg).map_err(|e| e.to_string())?;
                if !got.l1.is_subset(&bigger) {
                    return Err(format!("{ctx}: L1 not monotone in the seed set"));
                }
                let bigger2 = expand_l2(&bigger, &index).map_err(|e| e.to_string())?;
                if !got.l2.is_subset(&bigger2) {
                    return Err(format!("{ctx}: L2 not monotone in the seed set"));
                }
            }
        }
        let fine = expand_l1(&seeds, &index, &ExpansionConfig::default()).unwrap();
        let coarse = expand_l1(
            &seeds,
            &index,
            &ExpansionConfig {
                cpc_level: CpcLevel::Subclass,
                include_citing: false,
            },
        )
        .unwrap();
        if !fine.is_subset(&coarse) {
            return Err(format!("corpus {case}: subgroup L1 not within subclass L1"));
        }
        for id in &ids {
            for k in [1u8, 2] {
                let got = as_strings(khop_citation_codes(id, k, &index).map_err(|e| e.to_string())?);
                let want = brute_khop(&corpus, id, k);
                if got != want {
                    return Err(format!("corpus {case}, {id}, k={k}: {got:?} != oracle {want:?}"));
                }
            }
        }
    }
    Ok(())
}
