use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::index::{GraphIndex, Node};
use super::GraphError;

/// Granularity at which two patents "share" a CPC code.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CpcLevel {
    #[default]
    Subgroup,
    Subclass,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExpansionConfig {
    pub cpc_level: CpcLevel,
    /// Also pull in patents that cite a seed. Off by default.
    pub include_citing: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpansionResult {
    pub seeds: BTreeSet<String>,
    pub l1: BTreeSet<String>,
    pub l2: BTreeSet<String>,
    pub antiseed_pool: BTreeSet<String>,
}

fn nodes(ids: &BTreeSet<String>, index: &GraphIndex) -> Result<Vec<Node>, GraphError> {
    ids.iter()
        .map(|id| index.node(id).ok_or_else(|| GraphError::UnknownPatent(id.clone())))
        .collect()
}

fn to_ids(set: impl IntoIterator<Item = Node>, index: &GraphIndex) -> BTreeSet<String> {
    set.into_iter().map(|n| index.id(n).to_string()).collect()
}

/// Seeds plus every patent sharing a CPC code with a seed or cited by one.
pub fn expand_l1(
    seeds: &BTreeSet<String>,
    index: &GraphIndex,
    config: &ExpansionConfig,
) -> Result<BTreeSet<String>, GraphError> {
    let seed_nodes = nodes(seeds, index)?;
    let mut out: BTreeSet<Node> = seed_nodes.iter().copied().collect();
    for &s in &seed_nodes {
        match config.cpc_level {
            CpcLevel::Subgroup => {
                for c in index.codes_of(s) {
                    out.extend(index.patents_with_code(c));
                }
            }
            CpcLevel::Subclass => {
                for c in index.subclasses_of(s) {
                    out.extend(index.patents_with_subclass(c));
                }
            }
        }
        out.extend(index.forward_nodes(s));
        if config.include_citing {
            out.extend(index.reverse_nodes(s));
        }
    }
    Ok(to_ids(out, index))
}

/// `l1` plus all family members of its patents.
pub fn expand_l2(l1: &BTreeSet<String>, index: &GraphIndex) -> Result<BTreeSet<String>, GraphError> {
    let l1_nodes = nodes(l1, index)?;
    let mut out: BTreeSet<Node> = l1_nodes.iter().copied().collect();
    for &n in &l1_nodes {
        if let Some(f) = index.family_of(n) {
            out.extend(index.family_members(f));
        }
    }
    Ok(to_ids(out, index))
}

/// Runs seed -> L1 -> L2 and collects everything outside L2 as the anti-seed pool.
pub fn expand(
    seeds: &BTreeSet<String>,
    index: &GraphIndex,
    config: &ExpansionConfig,
) -> Result<ExpansionResult, GraphError> {
    let l1 = expand_l1(seeds, index, config)?;
    let l2 = expand_l2(&l1, index)?;
    let antiseed_pool = index.ids().iter().filter(|id| !l2.contains(*id)).cloned().collect();
    Ok(ExpansionResult {
        seeds: seeds.clone(),
        l1,
        l2,
        antiseed_pool,
    })
}

/// Uniform sample of `n` ids without replacement, returned sorted.
///
/// Uses ChaCha8 seeded from `rng_seed` over the pool in sorted order, so
/// samples are identical across platforms.
pub fn sample_antiseeds(pool: &BTreeSet<String>, n: usize, rng_seed: u64) -> Result<Vec<String>, GraphError> {
    if n > pool.len() {
        return Err(GraphError::SampleTooLarge {
            requested: n,
            available: pool.len(),
        });
    }
    let items: Vec<&String> = pool.iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut picked: Vec<usize> = index::sample(&mut rng, items.len(), n).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| items[i].clone()).collect())
}

pub const EXPANSION_FILES: [&str; 4] = ["seeds.txt", "l1.txt", "l2.txt", "antiseed_pool.txt"];

/// Writes the four sorted id files.
pub fn write_expansion(dir: &Path, result: &ExpansionResult) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let sets = [&result.seeds, &result.l1, &result.l2, &result.antiseed_pool];
    for (name, set) in EXPANSION_FILES.iter().zip(sets) {
        let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join(name))?);
        for id in set {
            writeln!(f, "{id}")?;
        }
        f.flush()?;
    }
    Ok(())
}

/// Reads a newline-delimited id file, ignoring blank lines.
pub fn read_id_file(path: &Path) -> std::io::Result<BTreeSet<String>> {
    Ok(std::fs::read_to_string(path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect())
}
