use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use hgoe::baseline::{build_document_index, score_bm25};
use hgoe::corpus::preprocess;
use hgoe::indexer::{build_index, profile_documents};
use hgoe::keywords::extract_keywords;
use hgoe::ranking::Searcher;
use hgoe::{IndexConfig, RwsParams, TargetKind};
use hgoe_bench::bench_collection;

fn bench_keyword_extraction(c: &mut Criterion) {
    let collection = bench_collection(1);
    let tokens = preprocess(&collection.documents[0].text);
    c.bench_function("keywords/extract_single_doc", |b| {
        b.iter(|| extract_keywords("d", &tokens, 0.3, 4).unwrap())
    });
}

fn bench_index_build(c: &mut Criterion) {
    let mut group = c.benchmark_group("index/build");
    group.sample_size(10);
    for docs in [500usize, 2_000] {
        let collection = bench_collection(docs);
        group.bench_with_input(BenchmarkId::from_parameter(docs), &collection, |b, coll| {
            b.iter(|| build_index(&coll.documents, &IndexConfig::default(), None, None).unwrap())
        });
    }
    group.finish();
}

fn bench_random_walk_query(c: &mut Criterion) {
    let collection = bench_collection(2_000);
    let (graph, _) =
        build_index(&collection.documents, &IndexConfig::default(), None, None).unwrap();
    let searcher = Searcher::new(&graph, RwsParams::default());
    let topic = &collection.tasks["docs"].topics[0];
    let query = topic.keyword_query.as_ref().unwrap();
    c.bench_function("ranking/ad_hoc_document_query", |b| {
        b.iter(|| searcher.ad_hoc_document_retrieval("bench", query).unwrap())
    });
}

fn bench_bm25_query(c: &mut Criterion) {
    let collection = bench_collection(2_000);
    let profiles = profile_documents(&collection.documents, &IndexConfig::default()).unwrap();
    let index = build_document_index(&profiles).unwrap();
    let topic = &collection.tasks["docs"].topics[0];
    let terms = preprocess(topic.keyword_query.as_ref().unwrap());
    c.bench_function("baseline/bm25_query", |b| {
        b.iter(|| score_bm25("bench", &terms, &index, TargetKind::DocumentEdge, 1.2, 0.75))
    });
}

criterion_group!(
    benches,
    bench_keyword_extraction,
    bench_index_build,
    bench_random_walk_query,
    bench_bm25_query
);
criterion_main!(benches);
