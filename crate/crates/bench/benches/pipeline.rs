use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use emachine::derivation::derive_epsilon_machine;
use emachine::information::{block_entropy, excess_entropy_estimate};
use emachine::oracle::verify_all;
use emachine::process::Alphabet;
use emachine::reconstruction::{count_windows, reconstruct};
use emachine_bench::{preset, sample};

fn bench_information(c: &mut Criterion) {
    let golden = preset("golden-mean");
    c.bench_function("block_entropy golden-mean L=12", |b| {
        b.iter(|| block_entropy(black_box(&golden), 12).unwrap())
    });
    c.bench_function("excess_entropy golden-mean L=6", |b| {
        b.iter(|| excess_entropy_estimate(black_box(&golden), 6).unwrap())
    });
}

fn bench_derivation(c: &mut Criterion) {
    let golden = preset("golden-mean");
    let even = preset("even-process");
    c.bench_function("derive golden-mean K=6 L=6", |b| {
        b.iter(|| derive_epsilon_machine(black_box(&golden), 6, 6, 1e-9).unwrap())
    });
    c.bench_function("derive even-process K=8 L=4", |b| {
        b.iter(|| derive_epsilon_machine(black_box(&even), 8, 4, 1e-9).unwrap())
    });
}

fn bench_oracle(c: &mut Criterion) {
    let coin = preset("fair-coin");
    c.bench_function("verify fair-coin K=3 L=3 (Bell 4140)", |b| {
        b.iter(|| verify_all(black_box(&coin), 3, 3).unwrap())
    });
}

fn bench_reconstruction(c: &mut Criterion) {
    let data = sample("golden-mean", 100_000);
    let alphabet = Alphabet::binary();
    c.bench_function("count_windows 1e5 K=3 L=3", |b| {
        b.iter_batched(
            || data.clone(),
            |d| count_windows(&d, 3, 3).unwrap(),
            BatchSize::LargeInput,
        )
    });
    c.bench_function("reconstruct golden-mean 1e5 K=3 L=3", |b| {
        b.iter_batched(
            || data.clone(),
            |d| reconstruct(&d, &alphabet, 3, 3, 0.05, 10).unwrap(),
            BatchSize::LargeInput,
        )
    });
}

criterion_group!(
    benches,
    bench_information,
    bench_derivation,
    bench_oracle,
    bench_reconstruction
);
criterion_main!(benches);
