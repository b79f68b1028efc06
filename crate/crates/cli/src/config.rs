//! Run configuration: one TOML file plus command-line overrides.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use patland_core::active::SessionConfig;
use patland_core::corpus::TsvColumns;
use patland_core::eval::{DEFAULT_CURVE_SIZES, DEFAULT_FOLDS};
use patland_core::graph::ExpansionConfig;
use patland_core::models::{ModelParams, ModelSpec};
use serde::{Deserialize, Serialize};

pub const RESOLVED_CONFIG_FILE: &str = "resolved_config.toml";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub rng_seed: u64,
    pub out: PathBuf,
    pub corpus: CorpusPaths,
    pub embeddings: EmbeddingPaths,
    pub ingest: IngestConfig,
    pub expansion: ExpansionConfig,
    pub antiseed: AntiseedConfig,
    pub model: ModelConfig,
    pub eval: EvalConfig,
    pub service: ServiceConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            rng_seed: 0,
            out: PathBuf::from("out"),
            corpus: CorpusPaths::default(),
            embeddings: EmbeddingPaths::default(),
            ingest: IngestConfig::default(),
            expansion: ExpansionConfig::default(),
            antiseed: AntiseedConfig::default(),
            model: ModelConfig::default(),
            eval: EvalConfig::default(),
            service: ServiceConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusPaths {
    /// Directory written by `ingest` or `generate`.
    pub dir: Option<PathBuf>,
    /// Labeled examples (JSONL). Defaults to the corpus directory's labels.
    pub labels: Option<PathBuf>,
    /// Newline-separated seed patent ids.
    pub seeds: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingPaths {
    /// `.embt` binary or whitespace-separated text vectors.
    pub word_vectors: Option<PathBuf>,
    pub fasttext: Option<PathBuf>,
    /// Two-column TSV: code, title.
    pub cpc_titles: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IngestFormat {
    #[default]
    Jsonl,
    Tsv,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestConfig {
    pub format: IngestFormat,
    /// JSONL records file.
    pub records: Option<PathBuf>,
    /// PatentsView-style tables.
    pub patents: Option<PathBuf>,
    pub cpc: Option<PathBuf>,
    pub citations: Option<PathBuf>,
    pub claims: Option<PathBuf>,
    pub columns: TsvColumns,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AntiseedConfig {
    pub count: usize,
}

impl Default for AntiseedConfig {
    fn default() -> Self {
        AntiseedConfig { count: 1000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelSpec,
    pub params: ModelParams,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            kind: ModelSpec::SvmTfidf,
            params: ModelParams::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub k: usize,
    pub sizes: Vec<usize>,
    /// Landscape inclusion threshold; the model's default when unset.
    pub threshold: Option<f64>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            k: DEFAULT_FOLDS,
            sizes: DEFAULT_CURVE_SIZES.to_vec(),
            threshold: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub addr: String,
    /// Allowed browser origins; `*` allows any.
    pub cors_origins: Vec<String>,
    /// Event logs live here; sessions found on startup are replayed.
    pub data_dir: Option<PathBuf>,
    /// Settings for the session created from the seed file at startup.
    pub session: SessionConfig,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            addr: "127.0.0.1:8080".into(),
            cors_origins: vec!["http://localhost:5173".into()],
            data_dir: None,
            session: SessionConfig::default(),
        }
    }
}

/// Values given on the command line; each one set wins over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub corpus: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub seed_file: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub rng_seed: Option<u64>,
    pub model: Option<ModelSpec>,
    pub k: Option<usize>,
    pub sizes: Option<Vec<usize>>,
    pub threshold: Option<f64>,
}

impl RunConfig {
    /// Parses TOML and resolves relative paths against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text)?;
        cfg.rebase(base);
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        RunConfig::from_toml(&text, base).with_context(|| format!("invalid config {}", path.display()))
    }

    /// The file's values (or defaults) with `overrides` applied on top.
    pub fn resolve(path: Option<&Path>, overrides: &Overrides) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let o = overrides.clone();
        if o.corpus.is_some() {
            cfg.corpus.dir = o.corpus;
        }
        if o.labels.is_some() {
            cfg.corpus.labels = o.labels;
        }
        if o.seed_file.is_some() {
            cfg.corpus.seeds = o.seed_file;
        }
        if let Some(out) = o.out {
            cfg.out = out;
        }
        if let Some(s) = o.rng_seed {
            cfg.rng_seed = s;
        }
        if let Some(m) = o.model {
            cfg.model.kind = m;
        }
        if let Some(k) = o.k {
            cfg.eval.k = k;
        }
        if let Some(s) = o.sizes {
            cfg.eval.sizes = s;
        }
        if o.threshold.is_some() {
            cfg.eval.threshold = o.threshold;
        }
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        };
        if self.out.is_relative() {
            self.out = base.join(&self.out);
        }
        for p in [
            &mut self.corpus.dir,
            &mut self.corpus.labels,
            &mut self.corpus.seeds,
            &mut self.embeddings.word_vectors,
            &mut self.embeddings.fasttext,
            &mut self.embeddings.cpc_titles,
            &mut self.ingest.records,
            &mut self.ingest.patents,
            &mut self.ingest.cpc,
            &mut self.ingest.citations,
            &mut self.ingest.claims,
            &mut self.service.data_dir,
        ] {
            fix(p);
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("run config serializes to TOML")
    }

    /// Writes `resolved_config.toml` into the output directory.
    pub fn write_snapshot(&self) -> Result<()> {
        fs::create_dir_all(&self.out).with_context(|| format!("creating {}", self.out.display()))?;
        let path = self.out.join(RESOLVED_CONFIG_FILE);
        fs::write(&path, self.to_toml()).with_context(|| format!("writing {}", path.display()))
    }

    pub fn corpus_dir(&self) -> Result<&Path> {
        match &self.corpus.dir {
            Some(d) => Ok(d),
            None => bail!("no corpus directory; set corpus.dir or pass --corpus"),
        }
    }

    pub fn seed_file(&self) -> Result<&Path> {
        match &self.corpus.seeds {
            Some(p) => Ok(p),
            None => bail!("no seed file; set corpus.seeds or pass --seed-file"),
        }
    }
}
