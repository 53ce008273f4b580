use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use splitword::experiments::{tail_bound_experiment, Sampling};
use splitword::reconstruct::theorem_b_step;
use splitword::schedule::build_schedule;
use splitword::Execution;

fn modes() -> [(&'static str, Execution); 2] {
    [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)]
}

fn coupled_step(c: &mut Criterion) {
    let schedule = build_schedule(&"ratios:[2^12],N=2".parse().unwrap()).unwrap();
    let mut group = c.benchmark_group("coupled_step_4096");
    group.sample_size(10);
    for (name, exec) in modes() {
        let sampling = Sampling::new(20_000, 1).with_exec(exec);
        group.bench_function(name, |b| b.iter(|| black_box(theorem_b_step(&schedule, 0, &sampling).unwrap())));
    }
    group.finish();
}

fn orbit_tail(c: &mut Criterion) {
    let schedule = build_schedule(&"const:r=2,depth=6,N=2".parse().unwrap()).unwrap();
    let mut group = c.benchmark_group("orbit_tail_len64");
    group.sample_size(10);
    for (name, exec) in modes() {
        let sampling = Sampling::new(5_000, 1).with_exec(exec);
        group.bench_function(name, |b| b.iter(|| black_box(tail_bound_experiment(&schedule, -6, None, &sampling).unwrap())));
    }
    group.finish();
}

criterion_group!(benches, coupled_step, orbit_tail);
criterion_main!(benches);
