use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use twonn::{two_nearest_accelerated, two_nearest_brute};
use twonn_bench::cube;

fn search(c: &mut Criterion) {
    let mut group = c.benchmark_group("two_nearest");
    group.sample_size(10);
    for (d, n) in [(2, 5000), (5, 5000), (10, 5000), (20, 2000)] {
        let g = cube(d, n);
        let label = format!("d{d}_n{n}");
        group.bench_with_input(BenchmarkId::new("brute", &label), &g, |b, g| {
            b.iter(|| two_nearest_brute(&g.points, &g.metric).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("kdtree", &label), &g, |b, g| {
            b.iter(|| two_nearest_accelerated(&g.points, &g.metric).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, search);
criterion_main!(benches);
