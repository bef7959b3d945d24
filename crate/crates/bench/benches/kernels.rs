use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use pavlov::dynamics::Configuration;
use pavlov::graph::maximum_matching;
use pavlov::schedulers::{drive, matrix_for, SchedulerSpec};
use pavlov::verify::{convergence_experiment, ExperimentMode, PermFamily};
use pavlov_bench::{cycle, sparse_random};

fn bench_gf2(c: &mut Criterion) {
    let mut group = c.benchmark_group("gf2");
    for n in [16usize, 64, 256] {
        let g = cycle(n);
        let order: Vec<usize> = (0..g.m()).map(|i| 3 * i % g.m()).collect();
        group.bench_with_input(BenchmarkId::new("nilpotency", n), &n, |b, _| {
            b.iter(|| {
                let m = matrix_for(&g, black_box(&order)).unwrap();
                black_box(m.is_nilpotent())
            })
        });
    }
    group.finish();
}

fn bench_dynamics(c: &mut Criterion) {
    let mut group = c.benchmark_group("dynamics");
    for n in [256usize, 1024] {
        let g = cycle(n);
        group.bench_with_input(BenchmarkId::new("random_edge_run", n), &n, |b, _| {
            b.iter(|| {
                let mut sched = SchedulerSpec::RandomEdge.build(&g, 7, 0).unwrap();
                let out = drive(
                    &g,
                    &mut sched,
                    black_box(&Configuration::ones(n)),
                    10 * n,
                    false,
                    false,
                )
                .unwrap();
                black_box(out.steps_taken)
            })
        });
    }
    group.finish();
}

fn bench_matching(c: &mut Criterion) {
    let mut group = c.benchmark_group("matching");
    for n in [100usize, 200] {
        let g = sparse_random(n, 11);
        group.bench_with_input(BenchmarkId::new("blossom", n), &n, |b, _| {
            b.iter(|| black_box(maximum_matching(black_box(&g))).size())
        });
    }
    group.finish();
}

fn bench_experiment(c: &mut Criterion) {
    c.bench_function("experiment_id_n64_100samples", |b| {
        b.iter(|| {
            convergence_experiment(
                &[64],
                &[PermFamily::Id],
                100,
                black_box(1),
                ExperimentMode::NodeDaemon,
            )
            .unwrap()
        })
    });
}

criterion_group!(
    benches,
    bench_gf2,
    bench_dynamics,
    bench_matching,
    bench_experiment
);
criterion_main!(benches);
