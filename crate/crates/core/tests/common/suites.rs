//! Scenario checks shared by the integration tests and the acceptance
//! harness. Each returns a one-line summary on success.

use std::collections::BTreeSet;

use patland_core::active::{read_events, replay, write_events, ActiveLearningSession, EventKind, SessionConfig};
use patland_core::corpus::{Label, LabeledExample};
use patland_core::eval::{
    build_bundle, cohens_kappa, evaluate, kappa_from_counts, learning_curve, Category, DEFAULT_FOLDS, DatasetBundle, Learner,
    MetricsReport, ModelError, Predictor,
};
use patland_core::features::SparseVector;
use patland_core::models::{ModelParams, ModelSpec, Resources, SpecLearner};
use patland_core::neural::{ClassifierModel, NetworkConfig, StreamInputs, StreamKind, StreamSpec};
use patland_core::svm::{dual_objective, kkt_violation, solve_smo, train_smo_rbf, SmoParams};
use patland_core::synth::{generate, label_time, HarvestPlan, SynthConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{fd, qp};

fn to_label(s: f64) -> Label {
    if s > 0.0 {
        Label::Positive
    } else {
        Label::Negative
    }
}

/// Random SMO instances against the projected-gradient dual oracle, plus
/// the 8-point XOR set.
pub fn smo_suite(instances: usize, rng_seed: u64) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut worst_gap = 0.0f64;
    let mut worst_kkt = 0.0f64;
    for case in 0..instances {
        let n = rng.random_range(2..=12);
        let d = rng.random_range(1..=4);
        let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let mut y: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
        y[0] = 1.0;
        y[1] = -1.0;
        let gamma = rng.random_range(0.3..3.0);
        let c = rng.random_range(0.1..10.0);
        let data: Vec<(SparseVector, Label)> =
            pts.iter().zip(&y).map(|(p, &s)| (SparseVector::from_dense(p), to_label(s))).collect();
        let params = SmoParams {
            c,
            gamma: Some(gamma),
            ..Default::default()
        };
        let sol = solve_smo(&data, &params).map_err(|e| format!("case {case}: {e}"))?;
        let ours = dual_objective(&sol.alphas, &data, gamma);
        let oracle = qp::solve_dual(&qp::gram_rbf(&pts, gamma), &y, c, 20_000);
        let gap = (ours - oracle).abs();
        if gap > 1e-3 {
            return Err(format!("case {case}: dual {ours} vs oracle {oracle}"));
        }
        let kkt = kkt_violation(&sol.alphas, sol.bias, c, &data, gamma);
        if kkt > 1e-3 {
            return Err(format!("case {case}: KKT violation {kkt}"));
        }
        worst_gap = worst_gap.max(gap);
        worst_kkt = worst_kkt.max(kkt);
    }
    let mut xor = Vec::new();
    for (cx, cy) in [(1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)] {
        let y = to_label(cx * cy);
        xor.push((SparseVector::from_dense(&[cx, cy]), y));
        xor.push((SparseVector::from_dense(&[cx * 0.6, cy * 0.6]), y));
    }
    let params = SmoParams {
        c: 10.0,
        gamma: Some(1.0),
        ..Default::default()
    };
    let m = train_smo_rbf(&xor, &params).map_err(|e| format!("xor: {e}"))?;
    let correct = xor.iter().filter(|(x, y)| to_label(m.decision_value(x).unwrap()) == *y).count();
    if correct != xor.len() {
        return Err(format!("xor: {correct}/8 training points correct"));
    }
    Ok(format!(
        "{instances} instances, max dual gap {worst_gap:.2e}, max KKT violation {worst_kkt:.2e}; XOR 8/8"
    ))
}

/// Two streams (3 -> 4 and 3 -> 3), hidden [5, 4]: 97 parameters.
pub fn toy_network(seed: u64) -> (ClassifierModel, Vec<(StreamInputs, Label)>) {
    let mut cfg = NetworkConfig::new(vec![
        StreamSpec::new(StreamKind::AbstractText, 3).with_width(4),
        StreamSpec::new(StreamKind::Citation1hop, 3).with_width(3),
    ]);
    cfg.hidden = vec![5, 4];
    let mut model = ClassifierModel::init(cfg, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xfeed);
    // Nonzero biases so every ReLU sees both regimes.
    for p in model.params_mut().iter_mut() {
        if *p == 0.0 {
            *p = rng.random_range(-0.3..0.3);
        }
    }
    let data = (0..3)
        .map(|i| {
            let x: StreamInputs = [
                (StreamKind::AbstractText, (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()),
                (StreamKind::Citation1hop, (0..3).map(|_| rng.random_range(0..4) as f64).collect()),
            ]
            .into_iter()
            .collect();
            (x, if i == 1 { Label::Negative } else { Label::Positive })
        })
        .collect();
    (model, data)
}

/// Backward pass against central differences, with and without dropout.
pub fn gradcheck_suite(seeds: u64) -> Result<String, String> {
    let mut worst = 0.0f64;
    let mut params = 0;
    for seed in 0..seeds {
        let (model, data) = toy_network(seed);
        params = model.parameter_count();
        if params > 500 {
            return Err(format!("toy model has {params} parameters"));
        }
        let batch: Vec<(&StreamInputs, Label)> = data.iter().map(|(x, y)| (x, *y)).collect();
        for dropout_seed in [None, Some(seed + 100)] {
            let rng = || dropout_seed.map(ChaCha8Rng::seed_from_u64);
            let mut r = rng();
            let (_, grad) = model.loss_and_gradient(&batch, r.as_mut()).map_err(|e| e.to_string())?;
            let numeric = fd::central_difference(model.params(), 1e-4, |p| {
                let mut m = model.clone();
                m.params_mut().copy_from_slice(p);
                let mut r = rng();
                m.loss_and_gradient(&batch, r.as_mut()).unwrap().0
            });
            for (i, (a, n)) in grad.0.iter().zip(&numeric).enumerate() {
                let e = fd::relative_error(*a, *n, 1e-6);
                if e > 1e-4 {
                    return Err(format!("seed {seed} dropout {dropout_seed:?} param {i}: {a} vs {n} ({e:.2e})"));
                }
                worst = worst.max(e);
            }
        }
    }
    Ok(format!("{seeds} seeds x 2 dropout settings, {params} params, max rel err {worst:.2e}"))
}

pub fn examples_with_counts(hp: usize, hn: usize, ep: usize, en: usize) -> Vec<LabeledExample> {
    let t = label_time(0);
    let mut out = Vec::with_capacity(hp + hn + ep + en);
    out.extend((0..hp).map(|i| LabeledExample::annotated(format!("hp{i}"), Label::Positive, None, t)));
    out.extend((0..hn).map(|i| LabeledExample::annotated(format!("hn{i}"), Label::Negative, None, t)));
    out.extend((0..ep).map(|i| LabeledExample::seed(format!("ep{i}"), t)));
    out.extend((0..en).map(|i| LabeledExample::anti_seed(format!("en{i}"), t)));
    out
}

/// Category counts 395 / 754 / 2,020 / 56,093 give 1,580 balanced and
/// holdout 0 / 359 / 1,625 / 55,698, for several sampling seeds.
pub fn bundle_table() -> Result<String, String> {
    let all = examples_with_counts(395, 754, 2020, 56093);
    for seed in [0u64, 1, 42] {
        let b = build_bundle(&all, seed).map_err(|e| e.to_string())?;
        if b.balanced.len() != 1580 {
            return Err(format!("seed {seed}: balanced {}", b.balanced.len()));
        }
        let h = b.holdout_counts();
        let got: Vec<usize> = Category::ALL.iter().map(|c| h.get(c).copied().unwrap_or(0)).collect();
        if got != [0, 359, 1625, 55698] {
            return Err(format!("seed {seed}: holdout {got:?}"));
        }
        let ids: BTreeSet<&str> = b.balanced.iter().chain(&b.holdout).map(|e| e.patent_id.as_str()).collect();
        if ids.len() != all.len() || b.balanced.len() + b.holdout.len() != all.len() {
            return Err(format!("seed {seed}: balanced and holdout do not partition the input"));
        }
    }
    Ok("balanced 1580, holdout 0/359/1625/55698 for seeds 0, 1, 42".into())
}

/// 35 queue-head labels on a small synthetic corpus: 3 retrains after
/// initialization, and a log replay (through its JSONL form) that rebuilds
/// an identical session.
pub fn replay_suite() -> Result<String, String> {
    let synth = generate(&SynthConfig {
        patents: 300,
        seeds: 30,
        topic_vocabulary: 400,
        ..SynthConfig::default()
    })
    .map_err(|e| e.to_string())?;
    let t = label_time;
    let mut initial: Vec<LabeledExample> =
        synth.seeds.iter().enumerate().map(|(i, id)| LabeledExample::seed(id, t(i))).collect();
    let negatives: Vec<&String> = synth
        .groups
        .iter()
        .filter(|(id, g)| **g == patland_core::synth::Group::CoreNegative && !synth.seeds.contains(*id))
        .map(|(id, _)| id)
        .take(30)
        .collect();
    initial.extend(negatives.iter().enumerate().map(|(i, id)| LabeledExample::anti_seed(*id, t(100 + i))));
    let config = SessionConfig {
        session_id: "replay".into(),
        rng_seed: 5,
        ..SessionConfig::default()
    };
    let mut session = ActiveLearningSession::init(&synth.corpus, initial, config).map_err(|e| e.to_string())?;
    let mut flags = Vec::new();
    for i in 0..35 {
        let id = session.next_candidates(1)[0].patent_id.clone();
        let gold = synth.gold(&id).unwrap();
        let out = session
            .submit_label_at(&id, gold, if i % 2 == 0 { "ann-a" } else { "ann-b" }, t(1000 + i))
            .map_err(|e| e.to_string())?;
        flags.push(out.retrained);
    }
    let retrains = session.events().iter().filter(|e| matches!(e.kind, EventKind::Retrain { .. })).count();
    if retrains != 3 {
        return Err(format!("{retrains} retrain events after 35 labels"));
    }
    let fired: Vec<usize> = flags.iter().enumerate().filter(|(_, f)| **f).map(|(i, _)| i + 1).collect();
    if fired != [10, 20, 30] {
        return Err(format!("retrains fired on labels {fired:?}"));
    }
    let mut buf = Vec::new();
    write_events(session.events(), &mut buf).map_err(|e| e.to_string())?;
    let events = read_events(&buf[..]).map_err(|e| e.to_string())?;
    let rebuilt = replay(&synth.corpus, &events).map_err(|e| e.to_string())?;
    if rebuilt != session {
        return Err("replayed session differs from the original".into());
    }
    let same_bits = rebuilt
        .model()
        .weight
        .iter()
        .zip(&session.model().weight)
        .all(|(a, b)| a.to_bits() == b.to_bits());
    if !same_bits || rebuilt.stats() != session.stats() {
        return Err("replayed model or stats differ".into());
    }
    Ok(format!(
        "retrains on labels {fired:?}; replay of {} events identical (model {})",
        events.len(),
        &session.stats().model_hash[..12]
    ))
}

#[derive(Clone, Copy)]
pub enum Scripted {
    Oracle,
    AntiOracle,
    ConstantPositive,
}

/// Predicts from the gold label encoded in the id's first letter
/// (`h`/`e` then `p`/`n`).
pub struct ScriptedLearner(pub Scripted);
pub struct ScriptedModel(Scripted);

impl Learner for ScriptedLearner {
    type Model = ScriptedModel;
    fn fit(&self, _train: &[LabeledExample], _rng_seed: u64) -> Result<ScriptedModel, ModelError> {
        Ok(ScriptedModel(self.0))
    }
}

impl Predictor for ScriptedModel {
    fn predict(&self, ids: &[&str]) -> Result<Vec<Label>, ModelError> {
        Ok(ids
            .iter()
            .map(|id| {
                let gold = if id.as_bytes()[1] == b'p' {
                    Label::Positive
                } else {
                    Label::Negative
                };
                match self.0 {
                    Scripted::Oracle => gold,
                    Scripted::AntiOracle => gold.flip(),
                    Scripted::ConstantPositive => Label::Positive,
                }
            })
            .collect())
    }
}

fn cells(r: &MetricsReport) -> [f64; 7] {
    [r.hard_pos, r.hard_neg, r.easy_pos, r.easy_neg, r.hard_avg, r.easy_avg, r.overall]
}

/// Oracle / anti-oracle / constant models on a bundle, κ on the 2x2 table
/// (40, 10, 10, 40), and κ symmetry and relabeling invariance on random
/// label vectors.
pub fn metric_algebra(tables: usize, rng_seed: u64) -> Result<String, String> {
    let bundle: DatasetBundle =
        build_bundle(&examples_with_counts(20, 35, 50, 80), rng_seed).map_err(|e| e.to_string())?;
    let run = |s| evaluate(&ScriptedLearner(s), &bundle, 5, rng_seed).map_err(|e| e.to_string());
    let oracle = run(Scripted::Oracle)?;
    if cells(&oracle).iter().any(|&v| v != 1.0) {
        return Err(format!("oracle report {:?}", cells(&oracle)));
    }
    let recalls = |r: &MetricsReport| Category::ALL.map(|c| r.holdout.get(c));
    if recalls(&oracle).iter().flatten().any(|&v| v != 1.0) {
        return Err("oracle holdout recall below 1".into());
    }
    let anti = run(Scripted::AntiOracle)?;
    if cells(&anti).iter().any(|&v| v != 0.0) || recalls(&anti).iter().flatten().any(|&v| v != 0.0) {
        return Err(format!("anti-oracle report {:?}", cells(&anti)));
    }
    let constant = run(Scripted::ConstantPositive)?;
    if constant.hard_neg != 0.0 || constant.easy_neg != 0.0 {
        return Err(format!("constant-positive negative F1s {} {}", constant.hard_neg, constant.easy_neg));
    }
    let two_thirds = |v: f64| (v - 2.0 / 3.0).abs() < 1e-12;
    if !two_thirds(constant.hard_pos) || !two_thirds(constant.easy_pos) {
        return Err(format!("constant-positive positive F1s {} {}", constant.hard_pos, constant.easy_pos));
    }
    let curve = learning_curve(&ScriptedLearner(Scripted::Oracle), &bundle, &[80, 40, 8], 5, rng_seed)
        .map_err(|e| e.to_string())?;
    if curve.iter().any(|p| p.overall != 1.0) {
        return Err("oracle learning curve is not flat at 1.0".into());
    }

    let k = kappa_from_counts(40, 10, 10, 40).map_err(|e| e.to_string())?;
    if (k - 0.6).abs() > 1e-12 {
        return Err(format!("kappa(40,10,10,40) = {k}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    for t in 0..tables {
        let n = rng.random_range(2..60);
        let pa = rng.random_range(0.05..0.95);
        let agree = rng.random_range(0.0..1.0);
        let a: Vec<Label> = (0..n).map(|_| to_label(rng.random_range(0.0..1.0) - (1.0 - pa))).collect();
        let b: Vec<Label> = a.iter().map(|&l| if rng.random_bool(agree) { l } else { l.flip() }).collect();
        let ab = cohens_kappa(&a, &b).map_err(|e| e.to_string())?;
        let ba = cohens_kappa(&b, &a).map_err(|e| e.to_string())?;
        let fa: Vec<Label> = a.iter().map(|l| l.flip()).collect();
        let fb: Vec<Label> = b.iter().map(|l| l.flip()).collect();
        let ff = cohens_kappa(&fa, &fb).map_err(|e| e.to_string())?;
        if (ab - ba).abs() > 1e-12 || (ab - ff).abs() > 1e-12 {
            return Err(format!("table {t}: kappa {ab} / swapped {ba} / relabeled {ff}"));
        }
        if !(-1.0 - 1e-12..=1.0 + 1e-12).contains(&ab) {
            return Err(format!("table {t}: kappa {ab} outside [-1, 1]"));
        }
    }
    Ok(format!(
        "oracle 1.0, anti-oracle 0.0, constant-positive (+2/3, -0); kappa 0.6; {tables} random tables symmetric and relabel-invariant"
    ))
}

pub const BUNDLE_SEED: u64 = 3;
pub const CURVE_SEED: u64 = 5;

/// Neural settings used on the synthetic corpus.
pub fn desk_params() -> ModelParams {
    let mut p = ModelParams::default();
    p.neural.epochs = 60;
    p.neural.batch_size = 32;
    p.neural.learning_rate = 3e-3;
    p
}

pub struct EndToEnd {
    pub svm: Vec<(usize, f64)>,
    pub neural: Vec<(usize, f64)>,
    pub counts: String,
}

impl EndToEnd {
    pub fn at(curve: &[(usize, f64)], size: usize) -> f64 {
        curve.iter().find(|(s, _)| *s == size).map(|p| p.1).unwrap_or(f64::NAN)
    }
}

/// Generate -> expand -> anti-seeds -> queue annotation -> bundle ->
/// learning curves for SVM/tfidf and neural 1+2+5.
pub fn end_to_end(synth: &SynthConfig, sizes: &[usize]) -> Result<EndToEnd, String> {
    let s = generate(synth).map_err(|e| e.to_string())?;
    let harvest = s.harvest(&HarvestPlan::default()).map_err(|e| e.to_string())?;
    let bundle = build_bundle(&harvest.examples, BUNDLE_SEED).map_err(|e| e.to_string())?;
    let counts = Category::ALL
        .iter()
        .map(|c| format!("{c} {}", bundle.counts.get(c).copied().unwrap_or(0)))
        .collect::<Vec<_>>()
        .join(", ");
    let mut res = Resources::new(&s.corpus, &s.index);
    res.word_vectors = Some(&s.word_vectors);
    res.cpc_titles = Some(&s.cpc_titles);
    let curve = |spec: &str| -> Result<Vec<(usize, f64)>, String> {
        let learner = SpecLearner {
            spec: spec.parse::<ModelSpec>().map_err(|e| e.to_string())?,
            params: desk_params(),
            resources: res,
        };
        let points = learning_curve(&learner, &bundle, sizes, DEFAULT_FOLDS, CURVE_SEED).map_err(|e| format!("{spec}: {e}"))?;
        Ok(points.iter().map(|p| (p.size, p.overall)).collect())
    };
    Ok(EndToEnd {
        svm: curve("svm-tfidf")?,
        neural: curve("neural:1+2+5")?,
        counts,
    })
}
