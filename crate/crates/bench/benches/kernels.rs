//! Benchmarks for the hot kernels: the radix-2 FFT across sizes (the
//! sub-quadratic scaling is the headline), the naive DFT for contrast, the
//! Welch coherence similarity on rating-style columns, and k-means.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use std::hint::black_box;

use cohrec::cluster::kmeans;
use cohrec::spectral::{cohr_sim, dft_naive, fft, WelchParams};
use cohrec_bench::{complex_noise, rating_column, real_noise};

fn bench_fft_sizes(c: &mut Criterion) {
    let mut group = c.benchmark_group("fft");
    for &size in &[256usize, 1024, 4096, 8192, 16384] {
        let input = complex_noise(size, size as u64);
        group.throughput(Throughput::Elements(size as u64));
        group.bench_with_input(BenchmarkId::from_parameter(size), &input, |b, input| {
            b.iter(|| fft(black_box(input)).unwrap());
        });
    }
    group.finish();
}

fn bench_naive_dft(c: &mut Criterion) {
    let mut group = c.benchmark_group("dft_naive");
    for &size in &[256usize, 1024] {
        let input = complex_noise(size, size as u64);
        group.bench_with_input(BenchmarkId::from_parameter(size), &input, |b, input| {
            b.iter(|| dft_naive(black_box(input)).unwrap());
        });
    }
    group.finish();
}

fn bench_cohr_sim(c: &mut Criterion) {
    let mut group = c.benchmark_group("cohr_sim");
    for &len in &[64usize, 256, 1024] {
        let x = rating_column(len, 0.1, 1);
        let y = rating_column(len, 0.1, 2);
        let params = WelchParams::for_signal_len(len);
        group.bench_with_input(BenchmarkId::from_parameter(len), &len, |b, _| {
            b.iter(|| cohr_sim(black_box(&x), black_box(&y), &params).unwrap());
        });
    }
    group.finish();
}

fn bench_kmeans(c: &mut Criterion) {
    let points: Vec<Vec<f64>> = (0..100).map(|i| real_noise(64, i as u64)).collect();
    c.bench_function("kmeans_100x64_k10", |b| {
        b.iter(|| kmeans(black_box(&points), 10, 7, 300, 1e-6).unwrap());
    });
}

criterion_group!(
    benches,
    bench_fft_sizes,
    bench_naive_dft,
    bench_cohr_sim,
    bench_kmeans
);
criterion_main!(benches);
