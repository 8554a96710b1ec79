use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use shadowup::curve::design_agcwd;
use shadowup::noise::plain_histogram;
use shadowup::{decompose, enhance, enhance_baseline_agcwd, gaussian_filter, EnhanceConfig, SolverConfig};
use shadowup_bench::{scene, value_channel};

fn bench_decompose(c: &mut Criterion) {
    let mut group = c.benchmark_group("decompose");
    group.sample_size(10);
    for size in [64, 128, 256] {
        let v = value_channel(size);
        group.bench_with_input(BenchmarkId::from_parameter(size), &v, |b, v| {
            b.iter(|| decompose(v, &SolverConfig::default()).unwrap())
        });
    }
    group.finish();
}

fn bench_gaussian(c: &mut Criterion) {
    let v = value_channel(256);
    c.bench_function("gaussian_filter/256/sigma3", |b| b.iter(|| gaussian_filter(&v, 3.0).unwrap()));
}

fn bench_curve(c: &mut Criterion) {
    let v = value_channel(256);
    let hist = plain_histogram(&v, 200).unwrap();
    c.bench_function("design_agcwd", |b| b.iter(|| design_agcwd(&hist, 0.5, 200).unwrap()));
}

fn bench_enhance(c: &mut Criterion) {
    let mut group = c.benchmark_group("enhance");
    group.sample_size(10);
    let img = scene(256);
    let cfg = EnhanceConfig::default();
    group.bench_function("proposed/256", |b| b.iter(|| enhance(&img, &cfg).unwrap()));
    group.bench_function("agcwd/256", |b| b.iter(|| enhance_baseline_agcwd(&img, &cfg).unwrap()));
    group.finish();
}

criterion_group!(benches, bench_decompose, bench_gaussian, bench_curve, bench_enhance);
criterion_main!(benches);
