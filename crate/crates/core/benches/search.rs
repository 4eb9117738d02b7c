//! Single-worker versus full-pool timings for the data-parallel paths.
//! Built with `--no-default-features`, both variants run sequentially.

use std::hint::black_box;

use anm_core::harness::run_bq_grid;
use anm_core::par::with_jobs;
use anm_core::{exhaustive_search, sample_anm, AnmSpec, Dag, NoiseSpec, ScoreConfig};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn three_node_data(n: usize) -> anm_core::Dataset {
    let dag = Dag::new(3, &[(0, 1), (0, 2), (1, 2)]).unwrap();
    let mut rng = anm_core::simgen::rng_from_seed(11);
    let spec = AnmSpec::random(dag, 0.39, 0.4, NoiseSpec::Gaussian { sd: 1.0 }, &mut rng).unwrap();
    sample_anm(&spec, n, 12).unwrap()
}

fn pools() -> [(&'static str, usize); 2] {
    [("sequential", 1), ("parallel", 0)]
}

fn exhaustive(c: &mut Criterion) {
    let data = three_node_data(300);
    let cfg = ScoreConfig::default();
    let mut group = c.benchmark_group("exhaustive_3_nodes");
    group.sample_size(10);
    for (name, jobs) in pools() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &jobs, |b, &jobs| {
            b.iter(|| with_jobs(jobs, || exhaustive_search(black_box(&data), &cfg).unwrap()))
        });
    }
    group.finish();
}

fn grid(c: &mut Criterion) {
    let cfg = ScoreConfig::default();
    let mut group = c.benchmark_group("bq_grid_3x3x4");
    group.sample_size(10);
    for (name, jobs) in pools() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &jobs, |b, &jobs| {
            b.iter(|| {
                with_jobs(jobs, || {
                    run_bq_grid(&[-1.0, 0.0, 1.0], &[0.5, 1.0, 2.0], 200, 4, &cfg, black_box(3)).unwrap()
                })
            })
        });
    }
    group.finish();
}

criterion_group!(benches, exhaustive, grid);
criterion_main!(benches);
