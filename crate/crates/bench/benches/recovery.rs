use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sscosamp_bench::{dictionary, instance, K};
use sscosamp_core::projection::Backend;
use sscosamp_core::recovery::{recover, RecoveryConfig};
use sscosamp_core::sensing::SignalStructure;

fn recovery(c: &mut Criterion) {
    let dict = dictionary();
    let mut group = c.benchmark_group("recover");
    group.sample_size(10);
    let structure = SignalStructure::Separated { h_min: 16 };
    for m in [128, 256] {
        let inst = instance(&dict, m, structure, 7).unwrap();
        for backend in [Backend::Omp, Backend::Cosamp] {
            let config = RecoveryConfig::new(K, backend);
            group.bench_with_input(BenchmarkId::new(backend.as_str(), m), &inst, |b, inst| {
                b.iter(|| recover(&inst.a, &dict, &inst.y, &config).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, recovery);
criterion_main!(benches);
