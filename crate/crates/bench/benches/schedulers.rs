use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use gdc_bench::{trace_driven, uniform};
use gdc_core::exact::{solve_exact_with, SolverBudget};
use gdc_core::schedulers::{run_online, Policy, SchedulerConfig};

fn online(c: &mut Criterion) {
    let mut group = c.benchmark_group("online");
    for (name, inst) in [
        ("uniform-16x48-u100", uniform(16, 48, 1.0, 7)),
        ("trace-100x120-u100", trace_driven(100, 120, 1.0, 7)),
    ] {
        for policy in Policy::ALL {
            let config = SchedulerConfig::new(policy).with_seed(7);
            group.bench_with_input(
                BenchmarkId::new(policy.short_name(), name),
                &inst,
                |b, inst| b.iter(|| run_online(black_box(inst), &config).unwrap()),
            );
        }
    }
    group.finish();
}

fn exact(c: &mut Criterion) {
    let mut group = c.benchmark_group("exact");
    group.sample_size(10);
    let budget = SolverBudget {
        max_nodes: 200_000,
        ..SolverBudget::default()
    };
    for util in [0.1, 0.3, 0.5] {
        let inst = uniform(16, 24, util, 3);
        group.bench_with_input(BenchmarkId::new("uniform-16x24", util), &inst, |b, inst| {
            b.iter(|| solve_exact_with(black_box(inst), budget).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, online, exact);
criterion_main!(benches);
