use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sadi_core::features::FeatureSpec;
use sadi_core::synthetic::{generate, SyntheticConfig};
use sadi_core::{build_features, decompose, fit_gbdt, BoostParams, LossSpec};

fn series(days: usize) -> sadi_core::Dataset {
    let cfg = SyntheticConfig {
        days,
        spell_start_day: days / 2,
        ..SyntheticConfig::default()
    };
    generate(&cfg, 1).unwrap().dataset
}

fn bench_decompose(c: &mut Criterion) {
    let mut g = c.benchmark_group("decompose");
    for days in [90, 365] {
        let ds = series(days);
        g.bench_with_input(BenchmarkId::from_parameter(days), &ds, |b, ds| {
            b.iter(|| decompose(black_box(ds.load()), 28 * 24, 24).unwrap())
        });
    }
    g.finish();
}

fn bench_features(c: &mut Criterion) {
    let ds = series(180);
    let spec = FeatureSpec::with_weather(&["temperature"], 48);
    c.bench_function("features/180d", |b| b.iter(|| build_features(black_box(&ds), &spec).unwrap()));
}

fn bench_gbdt(c: &mut Criterion) {
    let ds = series(120);
    let fm = build_features(&ds, &FeatureSpec::with_weather(&["temperature"], 48)).unwrap();
    let rows = fm.complete_rows();
    let x = fm.matrix.select_rows(&rows);
    let y: Vec<f64> = rows.iter().map(|&i| ds.load()[i]).collect();
    let mut g = c.benchmark_group("gbdt_fit");
    g.sample_size(10);
    for depth in [1, 6] {
        let params = BoostParams {
            rounds: 50,
            max_depth: depth,
            ..BoostParams::default()
        };
        g.bench_with_input(BenchmarkId::new("depth", depth), &params, |b, p| {
            b.iter(|| fit_gbdt(black_box(&x), &y, &LossSpec::SquaredError, None, p).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, bench_decompose, bench_features, bench_gbdt);
criterion_main!(benches);
