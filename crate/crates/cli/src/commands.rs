//! Command implementations. Each writes `resolved_config.toml`, a JSON
//! result and (where it makes sense) a text table into the output directory.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand};
use patland_core::active::{read_events, replay, write_events};
use patland_core::corpus::{
    parse_jsonl, parse_labels_jsonl, parse_patentsview_tsv, validate, write_labels_jsonl, CorpusStore, Label,
    LabeledExample, NamedStream, TsvTables,
};
use patland_core::eval::{
    build_bundle, cohens_kappa_keyed, curve_csv, evaluate, format_table, learning_curve, Category, DatasetBundle,
};
use patland_core::features::{CpcTitles, EmbeddingTable};
use patland_core::graph::{build_index, expand, read_id_file, sample_antiseeds, write_expansion, GraphIndex};
use patland_core::models::{FittedFeatures, FittedModel, ModelSpec, Resources, SpecLearner};
use patland_core::synth::{generate, label_time, HarvestPlan, SynthConfig};
use serde::Serialize;
use serde_json::json;

use crate::config::{IngestFormat, Overrides, RunConfig};
use crate::service::{self, AppState};

#[derive(Parser, Debug)]
#[command(name = "patland", version, about = "Patent landscaping pipeline")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Default)]
pub struct GlobalArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Corpus directory (records.jsonl, labels.jsonl).
    #[arg(long, global = true)]
    pub corpus: Option<PathBuf>,
    /// Labeled examples (JSONL) instead of the corpus labels.
    #[arg(long, global = true)]
    pub labels: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed_file: Option<PathBuf>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub rng_seed: Option<u64>,
    /// svm-tfidf | svm-w2v | svm-ft | svm-1hop | svm-tfidf-1hop | neural:<streams>
    #[arg(long, global = true)]
    pub model: Option<ModelSpec>,
    /// Cross-validation folds.
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Learning-curve sizes, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    /// Landscape inclusion threshold on the model score.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub threshold: Option<f64>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Load JSONL records or PatentsView-style TSV tables into a corpus directory.
    Ingest {
        /// JSONL records file (overrides ingest.records).
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Seed -> L1 -> L2 expansion and the anti-seed pool.
    Expand,
    /// Sample anti-seeds from the pool and write seed/anti-seed examples.
    Antiseed {
        #[arg(long)]
        count: Option<usize>,
        /// Pool id file; computed by expansion when omitted.
        #[arg(long)]
        pool: Option<PathBuf>,
    },
    /// Fit the model's featurizer on the labeled patents.
    Featurize,
    /// Train a model on the category-balanced labeled set.
    Train {
        /// Use every labeled example instead of the balanced set.
        #[arg(long)]
        all_labels: bool,
    },
    /// k-fold evaluation on the balanced set plus holdout recall.
    Evaluate,
    /// Learning curve over nested balanced subsets.
    Curve,
    /// Cohen's kappa between two label files or over a session log.
    Kappa {
        #[arg(long, requires = "b", conflicts_with = "events")]
        a: Option<PathBuf>,
        #[arg(long, requires = "a")]
        b: Option<PathBuf>,
        /// Session event log; reports every annotator pair.
        #[arg(long)]
        events: Option<PathBuf>,
    },
    /// Run the annotation service.
    Serve {
        #[arg(long)]
        addr: Option<String>,
        #[arg(long)]
        data_dir: Option<PathBuf>,
        /// Create this session from the seed file (and anti-seeds) at startup.
        #[arg(long)]
        session_id: Option<String>,
        /// Anti-seed id file for the startup session.
        #[arg(long)]
        antiseeds: Option<PathBuf>,
    },
    /// Score the L2 set with a trained model.
    ExportLandscape {
        /// Directory written by `train` (defaults to <out>/model).
        #[arg(long)]
        model_dir: Option<PathBuf>,
        /// L2 id file; computed by expansion when omitted.
        #[arg(long)]
        l2: Option<PathBuf>,
    },
    /// Write a synthetic corpus with planted topic structure.
    Generate {
        #[arg(long)]
        patents: Option<usize>,
        /// Skip the simulated annotation session.
        #[arg(long)]
        no_harvest: bool,
    },
}

impl GlobalArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            corpus: self.corpus.clone(),
            labels: self.labels.clone(),
            seed_file: self.seed_file.clone(),
            out: self.out.clone(),
            rng_seed: self.rng_seed,
            model: self.model.clone(),
            k: self.k,
            sizes: self.sizes.clone(),
            threshold: self.threshold,
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let cfg = RunConfig::resolve(cli.global.config.as_deref(), &cli.global.overrides())?;
    match cli.command {
        Command::Ingest { input } => ingest(cfg, input),
        Command::Expand => expand_cmd(&cfg),
        Command::Antiseed { count, pool } => antiseed(cfg, count, pool),
        Command::Featurize => featurize(&cfg),
        Command::Train { all_labels } => train(&cfg, all_labels),
        Command::Evaluate => evaluate_cmd(&cfg),
        Command::Curve => curve(&cfg),
        Command::Kappa { a, b, events } => kappa(&cfg, a, b, events),
        Command::Serve {
            addr,
            data_dir,
            session_id,
            antiseeds,
        } => serve(cfg, addr, data_dir, session_id, antiseeds),
        Command::ExportLandscape { model_dir, l2 } => export_landscape(&cfg, model_dir, l2),
        Command::Generate { patents, no_harvest } => generate_cmd(cfg, cli.global.rng_seed, patents, no_harvest),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn start(cfg: &RunConfig) -> Result<()> {
    cfg.write_snapshot()
}

struct Loaded {
    corpus: CorpusStore,
    index: GraphIndex,
    word_vectors: Option<EmbeddingTable>,
    fasttext: Option<EmbeddingTable>,
    cpc_titles: Option<CpcTitles>,
}

impl Loaded {
    fn corpus_only(cfg: &RunConfig) -> Result<Self> {
        let dir = cfg.corpus_dir()?;
        let corpus = CorpusStore::load(dir).with_context(|| format!("loading corpus {}", dir.display()))?;
        let index = build_index(&corpus);
        Ok(Loaded {
            corpus,
            index,
            word_vectors: None,
            fasttext: None,
            cpc_titles: None,
        })
    }

    /// The corpus plus whichever embedding tables and titles are configured.
    fn all(cfg: &RunConfig) -> Result<Self> {
        let mut l = Loaded::corpus_only(cfg)?;
        let e = &cfg.embeddings;
        l.word_vectors = e.word_vectors.as_deref().map(|p| load_table("word_vectors", p)).transpose()?;
        l.fasttext = e.fasttext.as_deref().map(|p| load_table("fasttext", p)).transpose()?;
        l.cpc_titles = e
            .cpc_titles
            .as_deref()
            .map(|p| -> Result<CpcTitles> {
                let f = File::open(p).with_context(|| format!("opening {}", p.display()))?;
                CpcTitles::read_tsv(BufReader::new(f)).with_context(|| format!("reading {}", p.display()))
            })
            .transpose()?;
        Ok(l)
    }

    fn resources(&self) -> Resources<'_> {
        let mut r = Resources::new(&self.corpus, &self.index);
        r.word_vectors = self.word_vectors.as_ref();
        r.fasttext = self.fasttext.as_ref();
        r.cpc_titles = self.cpc_titles.as_ref();
        r
    }

    fn labels(&self, cfg: &RunConfig) -> Result<Vec<LabeledExample>> {
        let labels = match &cfg.corpus.labels {
            Some(p) => read_labels(p)?,
            None => self.corpus.labels().cloned().collect(),
        };
        ensure!(!labels.is_empty(), "no labeled examples; set corpus.labels or pass --labels");
        for ex in &labels {
            ensure!(self.corpus.contains(&ex.patent_id), "labeled patent {:?} is not in the corpus", ex.patent_id);
        }
        Ok(labels)
    }
}

fn load_table(name: &str, path: &Path) -> Result<EmbeddingTable> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let table = if path.extension().is_some_and(|e| e == "embt") {
        EmbeddingTable::read_binary(name, BufReader::new(f))
    } else {
        EmbeddingTable::read_text(name, BufReader::new(f))
    };
    table.with_context(|| format!("reading {}", path.display()))
}

fn read_labels(path: &Path) -> Result<Vec<LabeledExample>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    parse_labels_jsonl(BufReader::new(f)).with_context(|| format!("reading {}", path.display()))
}

fn read_ids(path: &Path) -> Result<BTreeSet<String>> {
    read_id_file(path).with_context(|| format!("reading {}", path.display()))
}

fn write_ids<'a>(path: &Path, ids: impl IntoIterator<Item = &'a String>) -> Result<()> {
    let text: String = ids.into_iter().map(|id| format!("{id}\n")).collect();
    write_text(path, &text)
}

fn ingest(cfg: RunConfig, input: Option<PathBuf>) -> Result<()> {
    let mut cfg = cfg;
    if input.is_some() {
        cfg.ingest.format = IngestFormat::Jsonl;
        cfg.ingest.records = input;
    }
    start(&cfg)?;
    let ing = &cfg.ingest;
    let open = |p: &Path| File::open(p).with_context(|| format!("opening {}", p.display()));
    let (records, source, tsv_report) = match ing.format {
        IngestFormat::Jsonl => {
            let Some(path) = &ing.records else { bail!("no records file; set ingest.records or pass --input") };
            let recs = parse_jsonl(BufReader::new(open(path)?)).with_context(|| format!("reading {}", path.display()))?;
            (recs, path.display().to_string(), None)
        }
        IngestFormat::Tsv => {
            let Some(patents) = &ing.patents else { bail!("ingest.patents is required for TSV input") };
            let stream = |p: &Option<PathBuf>| -> Result<Option<NamedStream<'static>>> {
                p.as_ref()
                    .map(|p| Ok(NamedStream::new(p.display().to_string(), BufReader::new(open(p)?))))
                    .transpose()
            };
            let tables = TsvTables {
                patents: NamedStream::new(patents.display().to_string(), BufReader::new(open(patents)?)),
                cpc: stream(&ing.cpc)?,
                citations: stream(&ing.citations)?,
                claims: stream(&ing.claims)?,
            };
            let (recs, report) = parse_patentsview_tsv(tables, &ing.columns)?;
            (recs, patents.display().to_string(), Some(report))
        }
    };
    let violations: Vec<_> = records.iter().flat_map(validate).collect();
    let mut corpus = CorpusStore::from_records(records, source)?;
    if let Some(p) = &cfg.corpus.labels {
        corpus = corpus.with_labels(read_labels(p)?)?;
    }
    corpus.save(&cfg.out)?;
    let summary = json!({
        "records": corpus.len(),
        "labels": corpus.label_count(),
        "violations": violations,
        "tsv": tsv_report,
    });
    write_json(&cfg.out.join("ingest.json"), &summary)?;
    println!(
        "ingested {} records ({} labels, {} violations) into {}",
        corpus.len(),
        corpus.label_count(),
        violations.len(),
        cfg.out.display()
    );
    Ok(())
}

fn expand_cmd(cfg: &RunConfig) -> Result<()> {
    start(cfg)?;
    let l = Loaded::corpus_only(cfg)?;
    let seeds = read_ids(cfg.seed_file()?)?;
    let result = expand(&seeds, &l.index, &cfg.expansion)?;
    write_expansion(&cfg.out, &result).context("writing expansion files")?;
    let summary = json!({
        "config": cfg.expansion,
        "seeds": result.seeds.len(),
        "l1": result.l1.len(),
        "l2": result.l2.len(),
        "antiseed_pool": result.antiseed_pool.len(),
        "corpus": l.corpus.len(),
    });
    write_json(&cfg.out.join("expansion.json"), &summary)?;
    println!(
        "seeds {}  L1 {}  L2 {}  anti-seed pool {}",
        result.seeds.len(),
        result.l1.len(),
        result.l2.len(),
        result.antiseed_pool.len()
    );
    Ok(())
}

fn antiseed(mut cfg: RunConfig, count: Option<usize>, pool: Option<PathBuf>) -> Result<()> {
    if let Some(c) = count {
        cfg.antiseed.count = c;
    }
    start(&cfg)?;
    let seeds = read_ids(cfg.seed_file()?)?;
    let pool = match pool {
        Some(p) => read_ids(&p)?,
        None => {
            let l = Loaded::corpus_only(&cfg)?;
            expand(&seeds, &l.index, &cfg.expansion)?.antiseed_pool
        }
    };
    let picked = sample_antiseeds(&pool, cfg.antiseed.count, cfg.rng_seed)?;
    write_ids(&cfg.out.join("antiseeds.txt"), &picked)?;
    let at = label_time(0);
    let examples: Vec<LabeledExample> = seeds
        .iter()
        .map(|id| LabeledExample::seed(id, at))
        .chain(picked.iter().map(|id| LabeledExample::anti_seed(id, at)))
        .collect();
    let path = cfg.out.join("examples.jsonl");
    write_labels_jsonl(BufWriter::new(File::create(&path)?), &examples)?;
    write_json(
        &cfg.out.join("antiseed.json"),
        &json!({"pool": pool.len(), "sampled": picked.len(), "rng_seed": cfg.rng_seed, "algorithm": "chacha8"}),
    )?;
    println!("sampled {} anti-seeds from a pool of {}", picked.len(), pool.len());
    Ok(())
}

fn featurize(cfg: &RunConfig) -> Result<()> {
    start(cfg)?;
    let l = Loaded::all(cfg)?;
    let labels = l.labels(cfg)?;
    let res = l.resources();
    let ids: Vec<&str> = labels.iter().map(|e| e.patent_id.as_str()).collect();
    let features = FittedFeatures::fit(&cfg.model.kind, &cfg.model.params, &res, &ids)?;
    write_json(&cfg.out.join("features.json"), &features)?;
    let dims: BTreeMap<String, usize> = match &features {
        FittedFeatures::Neural(nf) => nf.streams.iter().map(|&k| (k.to_string(), nf.input_dim(k))).collect(),
        f => [("svm".to_string(), f.svm_vector(&res, ids[0])?.dim())].into(),
    };
    write_json(
        &cfg.out.join("featurize.json"),
        &json!({"model": cfg.model.kind, "patents": ids.len(), "dimensions": dims}),
    )?;
    println!("{}: fitted on {} patents, dimensions {dims:?}", cfg.model.kind, ids.len());
    Ok(())
}

fn train(cfg: &RunConfig, all_labels: bool) -> Result<()> {
    start(cfg)?;
    let l = Loaded::all(cfg)?;
    let labels = if all_labels { l.labels(cfg)? } else { bundle(cfg, &l)?.balanced };
    let res = l.resources();
    let model = FittedModel::fit(&cfg.model.kind, &cfg.model.params, &res, &labels, cfg.rng_seed)?;
    let dir = cfg.out.join("model");
    model.save(&dir)?;
    let ids: Vec<&str> = labels.iter().map(|e| e.patent_id.as_str()).collect();
    let preds = model.predict(&res, &ids)?;
    let correct = preds.iter().zip(&labels).filter(|(p, e)| **p == e.label).count();
    let accuracy = correct as f64 / labels.len() as f64;
    write_json(
        &cfg.out.join("train.json"),
        &json!({"model": cfg.model.kind, "examples": labels.len(), "training_accuracy": accuracy, "model_dir": dir}),
    )?;
    println!("{}: trained on {} examples, training accuracy {accuracy:.3}", cfg.model.kind, labels.len());
    Ok(())
}

fn bundle(cfg: &RunConfig, l: &Loaded) -> Result<DatasetBundle> {
    let labels = l.labels(cfg)?;
    let b = build_bundle(&labels, cfg.rng_seed)?;
    let counts = |m: BTreeMap<Category, usize>| -> BTreeMap<String, usize> {
        Category::ALL.iter().map(|c| (c.to_string(), m.get(c).copied().unwrap_or(0))).collect()
    };
    write_json(
        &cfg.out.join("bundle.json"),
        &json!({"all": counts(b.counts.clone()), "balanced": counts(b.balanced_counts()), "holdout": counts(b.holdout_counts())}),
    )?;
    Ok(b)
}

fn learner<'a>(cfg: &RunConfig, l: &'a Loaded) -> SpecLearner<'a> {
    SpecLearner {
        spec: cfg.model.kind.clone(),
        params: cfg.model.params.clone(),
        resources: l.resources(),
    }
}

fn evaluate_cmd(cfg: &RunConfig) -> Result<()> {
    start(cfg)?;
    let l = Loaded::all(cfg)?;
    let b = bundle(cfg, &l)?;
    let report = evaluate(&learner(cfg, &l), &b, cfg.eval.k, cfg.rng_seed)?;
    let table = format_table(&[(cfg.model.kind.to_string(), report.clone())]);
    write_text(&cfg.out.join("report.json"), &(report.to_json() + "\n"))?;
    write_text(&cfg.out.join("report.txt"), &table)?;
    print!("{table}");
    Ok(())
}

fn curve(cfg: &RunConfig) -> Result<()> {
    start(cfg)?;
    let l = Loaded::all(cfg)?;
    let b = bundle(cfg, &l)?;
    let points = learning_curve(&learner(cfg, &l), &b, &cfg.eval.sizes, cfg.eval.k, cfg.rng_seed)?;
    let csv = curve_csv(&points);
    write_text(&cfg.out.join("curve.csv"), &csv)?;
    write_json(&cfg.out.join("curve.json"), &points)?;
    let rows: Vec<(String, _)> = points.iter().map(|p| (format!("{} @{}", cfg.model.kind, p.size), p.report.clone())).collect();
    let table = format_table(&rows);
    write_text(&cfg.out.join("curve.txt"), &table)?;
    print!("{table}");
    Ok(())
}

fn keyed(labels: &[LabeledExample]) -> BTreeMap<String, Label> {
    labels.iter().map(|e| (e.patent_id.clone(), e.label)).collect()
}

fn kappa(cfg: &RunConfig, a: Option<PathBuf>, b: Option<PathBuf>, events: Option<PathBuf>) -> Result<()> {
    start(cfg)?;
    let result = match (a, b, events) {
        (Some(a), Some(b), None) => {
            let (la, lb) = (keyed(&read_labels(&a)?), keyed(&read_labels(&b)?));
            let shared = la.keys().filter(|k| lb.contains_key(*k)).count();
            let k = cohens_kappa_keyed(&la, &lb)?;
            println!("kappa {k:.4} over {shared} shared patents");
            json!({"a": a, "b": b, "items": shared, "kappa": k})
        }
        (None, None, Some(path)) => {
            let l = Loaded::corpus_only(cfg)?;
            let f = File::open(&path).with_context(|| format!("opening {}", path.display()))?;
            let events = read_events(BufReader::new(f))?;
            let session = replay(&l.corpus, &events)?;
            let pairs = session.annotator_kappas();
            for p in &pairs {
                println!("{} / {}: kappa {:.4} over {} patents", p.annotator_a, p.annotator_b, p.kappa, p.items);
            }
            if pairs.is_empty() {
                println!("no patent was judged by two annotators");
            }
            json!({"events": path, "pairs": pairs})
        }
        _ => bail!("pass either --a and --b, or --events"),
    };
    write_json(&cfg.out.join("kappa.json"), &result)
}

fn serve(
    mut cfg: RunConfig,
    addr: Option<String>,
    data_dir: Option<PathBuf>,
    session_id: Option<String>,
    antiseeds: Option<PathBuf>,
) -> Result<()> {
    if let Some(a) = addr {
        cfg.service.addr = a;
    }
    if data_dir.is_some() {
        cfg.service.data_dir = data_dir;
    }
    if let Some(id) = session_id {
        cfg.service.session.session_id = id;
    }
    start(&cfg)?;
    let corpus = Arc::new(Loaded::corpus_only(&cfg)?.corpus);
    let state = Arc::new(AppState::new(corpus, cfg.service.data_dir.clone())?);
    let mut session = cfg.service.session.clone();
    if let Some(seed_file) = &cfg.corpus.seeds {
        if !state.session_ids().contains(&session.session_id) {
            let at = chrono::Utc::now();
            let mut examples: Vec<LabeledExample> =
                read_ids(seed_file)?.iter().map(|id| LabeledExample::seed(id, at)).collect();
            if let Some(p) = &antiseeds {
                examples.extend(read_ids(p)?.iter().map(|id| LabeledExample::anti_seed(id, at)));
            }
            if session.rng_seed == 0 {
                session.rng_seed = cfg.rng_seed;
            }
            let stats = state
                .create_session(examples, session)
                .map_err(|e| anyhow::anyhow!("creating the startup session: {}", e.message))?;
            println!("session {} ready: pool {}, {} labels", stats.session_id, stats.pool_size, stats.labels_total);
        }
    }
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(service::serve(state, &cfg.service.addr, &cfg.service.cors_origins))
}

#[derive(Serialize)]
struct LandscapeRow<'a> {
    patent_id: &'a str,
    score: f64,
    included: bool,
}

fn export_landscape(cfg: &RunConfig, model_dir: Option<PathBuf>, l2: Option<PathBuf>) -> Result<()> {
    start(cfg)?;
    let l = Loaded::all(cfg)?;
    let dir = model_dir.unwrap_or_else(|| cfg.out.join("model"));
    let model = FittedModel::load(&dir).with_context(|| format!("loading model {}", dir.display()))?;
    let l2 = match l2 {
        Some(p) => read_ids(&p)?,
        None => expand(&read_ids(cfg.seed_file()?)?, &l.index, &cfg.expansion)?.l2,
    };
    let threshold = cfg.eval.threshold.unwrap_or_else(|| model.default_threshold());
    let res = l.resources();
    let path = cfg.out.join("landscape.jsonl");
    let mut w = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
    let mut included = 0;
    for id in &l2 {
        let score = model.score(&res, id)?;
        let inc = model.label_for(score, threshold) == Label::Positive;
        included += inc as usize;
        serde_json::to_writer(&mut w, &LandscapeRow { patent_id: id, score, included: inc })?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    write_json(
        &cfg.out.join("landscape.json"),
        &json!({"model": model.spec, "threshold": threshold, "l2": l2.len(), "included": included}),
    )?;
    println!("{included} of {} L2 patents included at threshold {threshold}", l2.len());
    Ok(())
}

fn generate_cmd(mut cfg: RunConfig, rng_seed: Option<u64>, patents: Option<usize>, no_harvest: bool) -> Result<()> {
    let mut synth = SynthConfig::default();
    if let Some(s) = rng_seed {
        synth.rng_seed = s;
    }
    if let Some(n) = patents {
        synth.patents = n;
    }
    let plan = HarvestPlan::default();
    // Paths in the generated config are relative to the output directory.
    cfg.corpus.dir = Some(".".into());
    cfg.corpus.seeds = Some("seeds.txt".into());
    cfg.corpus.labels = None;
    cfg.embeddings.word_vectors = Some("word2vec.embt".into());
    cfg.embeddings.fasttext = Some("fasttext.embt".into());
    cfg.embeddings.cpc_titles = Some("cpc_titles.tsv".into());
    cfg.antiseed.count = plan.antiseeds;
    cfg.service.data_dir = Some("sessions".into());
    let out = cfg.out.clone();
    cfg.out = "runs".into();
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    write_text(&out.join("patland.toml"), &cfg.to_toml())?;

    let s = generate(&synth)?;
    s.write(&out).with_context(|| format!("writing {}", out.display()))?;
    let mut summary = json!({"synth": synth, "patents": s.corpus.len(), "seeds": s.seeds.len()});
    if !no_harvest {
        let h = s.harvest(&plan)?;
        let path = out.join(patland_core::corpus::LABELS_FILE);
        write_labels_jsonl(BufWriter::new(File::create(&path)?), &h.examples)?;
        let path = out.join("harvest_events.jsonl");
        write_events(h.session.events(), BufWriter::new(File::create(&path)?))?;
        summary["harvest"] = json!({"plan": plan, "l1": h.expansion.l1.len(), "l2": h.expansion.l2.len(), "labels": h.examples.len()});
    }
    write_json(&out.join("generate.json"), &summary)?;
    println!(
        "wrote {} synthetic patents to {} (run config: {})",
        s.corpus.len(),
        out.display(),
        out.join("patland.toml").display()
    );
    Ok(())
}
