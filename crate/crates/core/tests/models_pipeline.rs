mod common;

use patland_core::eval::{build_bundle, evaluate};
use patland_core::models::{Classifier, FittedModel, ModelParams, ModelSpec, ModelsError, Resources, SpecLearner};
use patland_core::synth::{generate, HarvestPlan, SyntheticCorpus, SynthConfig};

const SPECS: [&str; 8] = [
    "svm-tfidf",
    "svm-w2v",
    "svm-ft",
    "svm-1hop",
    "svm-tfidf-1hop",
    "neural:1+2+5",
    "neural:1+4+4h2",
    "neural:1+3+5seq",
];

fn small() -> SyntheticCorpus {
    generate(&SynthConfig {
        patents: 400,
        seeds: 60,
        topic_vocabulary: 400,
        ..SynthConfig::default()
    })
    .unwrap()
}

fn resources(s: &SyntheticCorpus) -> Resources<'_> {
    let mut r = Resources::new(&s.corpus, &s.index);
    r.word_vectors = Some(&s.word_vectors);
    r.fasttext = Some(&s.fasttext);
    r.cpc_titles = Some(&s.cpc_titles);
    r
}

fn params() -> ModelParams {
    let mut p = common::suites::desk_params();
    p.neural.epochs = 15;
    p.pca_components = 8;
    p
}

#[test]
fn every_spec_fits_saves_and_reloads() {
    let s = small();
    let res = resources(&s);
    let h = s
        .harvest(&HarvestPlan {
            antiseeds: 80,
            annotations: 60,
            ..HarvestPlan::default()
        })
        .unwrap();
    let train: Vec<_> = h.examples.iter().take(120).cloned().collect();
    let ids: Vec<&str> = s.corpus.ids().take(40).collect();
    let dir = tempfile::tempdir().unwrap();
    for spec in SPECS {
        let spec: ModelSpec = spec.parse().unwrap();
        let mut model = FittedModel::fit(&spec, &params(), &res, &train, 1).unwrap();
        let path = dir.path().join(spec.to_string().replace([':', '+'], "_"));
        model.save(&path).unwrap();
        let back = FittedModel::load(&path).unwrap();
        // Neural checkpoints store f32 weights.
        if let Classifier::Neural(m) = &mut model.classifier {
            m.params_mut().iter_mut().for_each(|p| *p = *p as f32 as f64);
        }
        assert_eq!(back, model, "{spec}");
        for id in &ids {
            let a = model.score(&res, id).unwrap();
            let b = back.score(&res, id).unwrap();
            assert_eq!(a.to_bits(), b.to_bits(), "{spec} {id}");
        }
        assert_eq!(model.predict(&res, &ids).unwrap(), back.predict(&res, &ids).unwrap());
    }
}

#[test]
fn missing_resources_are_reported() {
    let s = small();
    let bare = Resources::new(&s.corpus, &s.index);
    let train: Vec<_> = s
        .seeds
        .iter()
        .take(4)
        .map(|id| patland_core::corpus::LabeledExample::seed(id, patland_core::synth::label_time(0)))
        .collect();
    for spec in ["svm-w2v", "svm-ft", "neural:1+2"] {
        let err = FittedModel::fit(&spec.parse().unwrap(), &params(), &bare, &train, 0).unwrap_err();
        assert!(matches!(err, ModelsError::MissingResource(_)), "{spec}: {err}");
    }
}

#[test]
fn spec_learner_evaluates_a_bundle() {
    let s = small();
    let h = s
        .harvest(&HarvestPlan {
            antiseeds: 80,
            annotations: 80,
            ..HarvestPlan::default()
        })
        .unwrap();
    let bundle = build_bundle(&h.examples, 3).unwrap();
    let learner = SpecLearner {
        spec: "neural:1+2+5".parse().unwrap(),
        params: common::suites::desk_params(),
        resources: resources(&s),
    };
    let report = evaluate(&learner, &bundle, 3, 0).unwrap();
    assert!(report.overall > 0.8, "{}", report.overall);
    assert_eq!(report.fold_metrics.len(), 3);
}
