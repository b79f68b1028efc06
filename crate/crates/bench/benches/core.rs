use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use patland_core::corpus::{Label, TextField};
use patland_core::features::{build_vocabulary, tfidf_vector, tokenize, SparseVector, StopWords};
use patland_core::graph::{expand, khop_citation_codes, ExpansionConfig};
use patland_core::neural::{ClassifierModel, NetworkConfig, StreamInputs, StreamKind, StreamSpec};
use patland_core::svm::{solve_smo, SmoParams};
use patland_core::synth::{generate, SynthConfig, SyntheticCorpus};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn corpus() -> SyntheticCorpus {
    generate(&SynthConfig::default()).expect("synthetic corpus")
}

fn graph(c: &mut Criterion) {
    let syn = corpus();
    let cfg = ExpansionConfig::default();
    c.bench_function("expand/2000", |b| b.iter(|| expand(black_box(&syn.seeds), &syn.index, &cfg).unwrap()));
    let ids: Vec<&String> = syn.index.ids().iter().take(200).collect();
    c.bench_function("khop2/200", |b| {
        b.iter(|| {
            for id in &ids {
                black_box(khop_citation_codes(id, 2, &syn.index).unwrap());
            }
        })
    });
}

fn tfidf(c: &mut Criterion) {
    let syn = corpus();
    let stop = StopWords::english();
    let docs: Vec<Vec<String>> = syn
        .corpus
        .records()
        .iter()
        .map(|r| tokenize(r.text(TextField::Claims)).into_iter().filter(|t| !stop.contains(t)).collect())
        .collect();
    c.bench_function("vocabulary/2000", |b| b.iter(|| build_vocabulary(black_box(&docs), &stop, 1)));
    let vocab = build_vocabulary(&docs, &stop, 1);
    c.bench_function("tfidf/2000", |b| {
        b.iter(|| docs.iter().map(|d| tfidf_vector(d, &vocab).nnz()).sum::<usize>())
    });
}

fn smo(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let data: Vec<(SparseVector, Label)> = (0..400)
        .map(|i| {
            let label = if i % 2 == 0 { Label::Positive } else { Label::Negative };
            let shift = label.sign() * 0.5;
            let x: Vec<f64> = (0..20).map(|_| rng.random_range(-1.0..1.0) + shift).collect();
            (SparseVector::from_dense(&x), label)
        })
        .collect();
    let params = SmoParams::default();
    let mut group = c.benchmark_group("smo");
    group.sample_size(10);
    group.bench_function("rbf/400x20", |b| b.iter(|| solve_smo(black_box(&data), &params).unwrap()));
    group.finish();
}

fn neural(c: &mut Criterion) {
    let cfg = NetworkConfig::new(vec![
        StreamSpec::new(StreamKind::AbstractText, 300),
        StreamSpec::new(StreamKind::ClaimsText, 300),
        StreamSpec::new(StreamKind::Citation1hop, 600),
    ]);
    let model = ClassifierModel::init(cfg, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let data: Vec<(StreamInputs, Label)> = (0..32)
        .map(|i| {
            let x: StreamInputs = [
                (StreamKind::AbstractText, (0..300).map(|_| rng.random_range(-1.0..1.0)).collect()),
                (StreamKind::ClaimsText, (0..300).map(|_| rng.random_range(-1.0..1.0)).collect()),
                (StreamKind::Citation1hop, (0..600).map(|_| rng.random_range(0..3) as f64).collect()),
            ]
            .into_iter()
            .collect();
            (x, if i % 2 == 0 { Label::Positive } else { Label::Negative })
        })
        .collect();
    let batch: Vec<(&StreamInputs, Label)> = data.iter().map(|(x, y)| (x, *y)).collect();
    c.bench_function("neural/forward", |b| b.iter(|| model.predict_proba(black_box(&data[0].0)).unwrap()));
    c.bench_function("neural/backward32", |b| {
        b.iter_batched(
            || ChaCha8Rng::seed_from_u64(5),
            |mut r| model.loss_and_gradient(&batch, Some(&mut r)).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, graph, tfidf, smo, neural);
criterion_main!(benches);
