use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dqsync::registration::{icp, SpatialIndex};
use dqsync::{dqgpm, solve, spectral_init, Pose, SolverConfig};
use dqsync_bench::{instance, scan_pair};

fn spectral(c: &mut Criterion) {
    let mut group = c.benchmark_group("spectral_init");
    for n in [50, 100, 200] {
        let (_, problem) = instance(n, 0.3, 5.0, 0.05);
        group.bench_with_input(BenchmarkId::from_parameter(n), &problem, |b, p| b.iter(|| spectral_init(p, 1).unwrap()));
    }
    group.finish();
}

fn refine(c: &mut Criterion) {
    let (_, problem) = instance(100, 0.3, 5.0, 0.05);
    let x0 = spectral_init(&problem, 1).unwrap();
    let d = SolverConfig::default();
    c.bench_function("dqgpm/100", |b| b.iter(|| dqgpm(&problem, &x0, d.max_iters, d.change_tol, None).unwrap()));
}

fn full(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve");
    for (p, sr, st) in [(0.05, 1.0, 0.01), (0.3, 5.0, 0.05), (0.3, 10.0, 0.1)] {
        let (_, problem) = instance(100, p, sr, st);
        let config = SolverConfig::default();
        group.bench_function(format!("n100_p{p}_{sr}deg"), |b| b.iter(|| solve(&problem, &config, None).unwrap()));
    }
    group.finish();
}

fn pairwise_icp(c: &mut Criterion) {
    let (a, b) = scan_pair(5_000);
    let index = SpatialIndex::new(&a.points);
    c.bench_function("kdtree/build_5000", |bch| bch.iter(|| SpatialIndex::new(&a.points)));
    c.bench_function("icp/5000", |bch| bch.iter(|| icp(&b.points, &a.points, &Pose::IDENTITY, 300, 1e-9).unwrap()));
    c.bench_function("kdtree/query_5000", |bch| bch.iter(|| b.points.iter().filter_map(|q| index.nearest(q)).count()));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = spectral, refine, full, pairwise_icp
}
criterion_main!(benches);
