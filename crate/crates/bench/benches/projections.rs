use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sscosamp_bench::{dictionary, sparse_signal, K};
use sscosamp_core::projection::Backend;
use sscosamp_core::sensing::SignalStructure;
use sscosamp_core::{Dictionary, ProjectionConfig};

fn projections(c: &mut Criterion) {
    let dict = dictionary();
    let config = ProjectionConfig::default();
    let mut group = c.benchmark_group("project");
    group.sample_size(20);
    for structure in [SignalStructure::Clustered, SignalStructure::Separated { h_min: 16 }] {
        let w = sparse_signal(&dict, structure, 5);
        for backend in [Backend::Omp, Backend::Cosamp, Backend::L1] {
            let id = BenchmarkId::new(backend.as_str(), structure.name());
            group.bench_with_input(id, &w, |b, w| {
                b.iter(|| backend.project_best_effort(&dict, black_box(w), K, &config).unwrap())
            });
        }
    }
    group.finish();

    let small = Dictionary::build(8, 16).unwrap();
    let w = sparse_signal(&small, SignalStructure::Separated { h_min: 4 }, 1);
    c.bench_function("project/oracle/8x16", |b| {
        b.iter(|| Backend::Oracle.project(&small, black_box(&w), 2, &config).unwrap())
    });
}

criterion_group!(benches, projections);
criterion_main!(benches);
