use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use edgecast_core::{
    average_bandwidth_by_requesters, average_bandwidth_exact, average_bandwidth_mc, build_penalized_model,
    multi_start_solve, solve_convex_subproblem, solve_exact_multicast, zipf_popularity, CccpConfig, DeviceSpec, Instance,
    Route, ServicePolicy, TaskSpec, DEFAULT_ENUM_CAP, DEFAULT_STATE_CAP,
};

fn instance(tasks: usize, devices: usize, cache_bits: f64) -> Instance {
    let specs: Vec<TaskSpec> = (0..tasks)
        .map(|i| {
            let input = 1e6 + 14e6 * i as f64 / (tasks.max(2) - 1) as f64;
            TaskSpec::new(input, 10.0, 2.0 * input).unwrap()
        })
        .collect();
    let device = DeviceSpec::new(1.1e11, 1.7e3, cache_bits, 0.1).unwrap();
    let popularity = zipf_popularity(tasks, 1.0).unwrap();
    Instance::new(specs, vec![device; devices], vec![popularity; devices], 0.02, 1e-27).unwrap()
}

/// Alternates local computing and edge computing across tasks.
fn mixed_policy(inst: &Instance) -> ServicePolicy {
    let mut p = ServicePolicy::mec(inst);
    for k in 0..inst.device_count() {
        for f in (0..inst.task_count()).step_by(2) {
            p.set(k, f, Route::LocalCompute);
        }
    }
    p
}

fn bandwidth(c: &mut Criterion) {
    let mut group = c.benchmark_group("bandwidth");
    for (f, k) in [(10, 2), (10, 4), (20, 4)] {
        let inst = instance(f, k, 0.0);
        let policy = mixed_policy(&inst);
        group.bench_with_input(BenchmarkId::new("states", format!("F{f}K{k}")), &inst, |b, inst| {
            b.iter(|| average_bandwidth_exact(black_box(inst), &policy, DEFAULT_STATE_CAP).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("requester_sets", format!("F{f}K{k}")), &inst, |b, inst| {
            b.iter(|| average_bandwidth_by_requesters(black_box(inst), &policy).unwrap())
        });
    }
    let inst = instance(50, 10, 0.0);
    let policy = mixed_policy(&inst);
    group.bench_function("monte_carlo_10k/F50K10", |b| {
        b.iter(|| average_bandwidth_mc(black_box(&inst), &policy, 10_000, 0).unwrap())
    });
    group.finish();
}

fn exact(c: &mut Criterion) {
    let mut group = c.benchmark_group("exact");
    group.sample_size(10);
    for (f, k) in [(3, 2), (4, 2), (5, 2)] {
        let inst = instance(f, k, 8e6);
        group.bench_with_input(BenchmarkId::from_parameter(format!("F{f}K{k}")), &inst, |b, inst| {
            b.iter(|| solve_exact_multicast(black_box(inst), DEFAULT_ENUM_CAP, DEFAULT_STATE_CAP).unwrap())
        });
    }
    group.finish();
}

fn subproblem(c: &mut Criterion) {
    let mut group = c.benchmark_group("convex_subproblem");
    for f in [5, 10, 20] {
        let inst = instance(f, 2, 4e7);
        let model = build_penalized_model(&inst, 1e4, DEFAULT_STATE_CAP).unwrap();
        let surrogate = model.linearize_at(&model.mec_point());
        group.bench_function(BenchmarkId::from_parameter(format!("F{f}K2")), |b| {
            b.iter(|| solve_convex_subproblem(black_box(&surrogate), 1e-6, 5000))
        });
    }
    group.finish();
}

fn cccp(c: &mut Criterion) {
    let mut group = c.benchmark_group("multi_start");
    group.sample_size(10);
    let config = CccpConfig {
        restarts: 4,
        ..CccpConfig::default()
    };
    for f in [5, 10] {
        let inst = instance(f, 2, 4e7);
        group.bench_with_input(BenchmarkId::from_parameter(format!("F{f}K2")), &inst, |b, inst| {
            b.iter(|| multi_start_solve(black_box(inst), &config).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bandwidth, exact, subproblem, cccp);
criterion_main!(benches);
