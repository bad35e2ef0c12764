use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use cohist::inference::{find_contrary_inferences, SearchParams};
use cohist::support_sim::{check_axiom2, CatalogEntry};
use cohist::{build_support_model, three_box_fixture, SupportOptions};

fn bench(c: &mut Criterion) {
    let s = three_box_fixture();
    let catalog: Vec<CatalogEntry> = ["C1", "C2", "Ch0"]
        .iter()
        .map(|n| CatalogEntry::new(*n, s.family(n).unwrap().clone()))
        .collect();

    let mut group = c.benchmark_group("build_support_model");
    group.sample_size(10);
    for n in [10_000usize, 100_000] {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            let opts = SupportOptions::new(n, 7);
            b.iter(|| build_support_model(catalog.clone(), &[1.0, 1.0, 1.0], &s.rho, &opts).unwrap())
        });
    }
    group.finish();

    let model = build_support_model(catalog.clone(), &[1.0, 1.0, 1.0], &s.rho, &SupportOptions::new(100_000, 7)).unwrap();
    c.bench_function("check_axiom2/100k", |b| b.iter(|| check_axiom2(&model).unwrap()));

    let mut group = c.benchmark_group("find_contrary");
    group.sample_size(10);
    group.bench_function("dim3_1000_trials", |b| {
        b.iter(|| find_contrary_inferences(&SearchParams::new(3, 1000, 1)).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
