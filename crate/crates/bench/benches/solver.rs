use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qpulse::dynamics::{assemble_static_superoperator, LindbladSpec};
use qpulse::{integrate_master_equation, SimulationOptions};
use qpulse_bench::{chain_channels, chain_drive, chain_model};

fn simulate_chain(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulate_chain");
    group.sample_size(10);
    for nq in [1usize, 2, 3, 4] {
        let model = chain_model(nq);
        let (lib, deck) = chain_drive(nq);
        let cfg = chain_channels(nq);
        let opts = SimulationOptions::default();
        group.bench_with_input(BenchmarkId::from_parameter(nq), &nq, |b, _| {
            b.iter(|| integrate_master_equation(&model, &LindbladSpec::none(), &cfg, &deck, &lib, &opts).unwrap())
        });
    }
    group.finish();
}

fn assemble_superoperator(c: &mut Criterion) {
    let mut group = c.benchmark_group("assemble_static_superoperator");
    for nq in [2usize, 4, 6] {
        let model = chain_model(nq);
        group.bench_with_input(BenchmarkId::from_parameter(nq), &nq, |b, _| {
            b.iter(|| assemble_static_superoperator(&model, &LindbladSpec::none()).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, simulate_chain, assemble_superoperator);
criterion_main!(benches);
