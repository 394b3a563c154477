use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use utterancesmith::dataset::synthetic_dataset;
use utterancesmith::generation::paraphrase_rule_based;
use utterancesmith::selection::select_sentences;
use utterancesmith::text::kmeans;
use utterancesmith::{CandidateSentence, ClassifierModel, Embedder, HashEmbedder, SelectionConfig, SynonymLexicon};

const SEED: &str = "list all the open invoices for my account";
const OTHERS: &[&str] = &[
    "list all the open invoices for my account",
    "show me every unpaid invoice",
    "get the invoices that are still open",
    "find open invoices for this customer",
];

fn candidates(size: usize) -> Vec<CandidateSentence> {
    let lexicon = SynonymLexicon::builtin();
    OTHERS
        .iter()
        .flat_map(|s| paraphrase_rule_based(s, &lexicon, size, 1).unwrap())
        .take(size)
        .map(|t| CandidateSentence::new(&t, "rule", SEED, "get:/invoices"))
        .collect()
}

fn embed(c: &mut Criterion) {
    let embedder = HashEmbedder::default();
    c.bench_function("embed/sentence", |b| b.iter(|| embedder.embed(black_box(SEED))));
}

fn selection(c: &mut Criterion) {
    let embedder = HashEmbedder::default();
    let mut group = c.benchmark_group("select");
    for size in [10, 40, 80] {
        let pool = candidates(size);
        assert_eq!(pool.len(), size);
        let config = SelectionConfig {
            target_size: 10,
            ..SelectionConfig::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(pool.len()), &pool, |b, pool| {
            b.iter(|| select_sentences(pool, SEED, &config, &embedder))
        });
    }
    group.finish();
}

fn clustering(c: &mut Criterion) {
    let embedder = HashEmbedder::default();
    let data = synthetic_dataset(2022);
    let points: Vec<Vec<f64>> = data.rows.iter().map(|r| embedder.embed(&r.text).values().to_vec()).collect();
    let mut group = c.benchmark_group("kmeans");
    for k in [2, 8] {
        group.bench_with_input(BenchmarkId::from_parameter(k), &k, |b, &k| b.iter(|| kmeans(&points, k, 0).unwrap()));
    }
    group.finish();
}

fn training(c: &mut Criterion) {
    let train = synthetic_dataset(2022).train_set();
    c.bench_function("train/synthetic", |b| b.iter(|| ClassifierModel::train(black_box(&train)).unwrap()));
}

criterion_group!(benches, embed, selection, clustering, training);
criterion_main!(benches);
