use sadi_core::data::{split_days, Column, Dataset};
use sadi_core::features::FeatureSpec;
use sadi_core::metrics::{evaluate, DayForecast, MetricSettings};
use sadi_core::persist::{from_bytes, to_bytes};
use sadi_core::{train, train_sadi, ForecastModel, Mode, SaDIConfig};

/// Hourly line + temperature bump + daily sine, noise free.
fn line_bump_sine(days: usize) -> Dataset {
    let n = days * 24;
    let ts = (0..n as i64).map(|i| 1_609_459_200 + 3600 * i).collect();
    let temp: Vec<f64> = (0..n)
        .map(|i| {
            let d = (i / 24) as f64;
            22.0 + 6.0 * (d / 9.0).sin() + 3.0 * (d / 2.3).cos()
        })
        .collect();
    let load = (0..n)
        .map(|i| {
            let t = i as f64;
            let hour = (i % 24) as f64;
            500.0 + 0.02 * t + 15.0 * (temp[i] - 26.0).max(0.0) + 40.0 * (std::f64::consts::TAU * hour / 24.0).sin()
        })
        .collect();
    Dataset::new(ts, load, vec![Column::new("temperature", temp)], 0).unwrap()
}

fn hourly_config() -> SaDIConfig {
    SaDIConfig {
        features: FeatureSpec::with_weather(&["temperature"], 48),
        ..SaDIConfig::default()
    }
}

#[test]
fn components_capture_synthetic_parts() {
    let ds = line_bump_sine(120);
    let model = train_sadi(&ds, &hourly_config()).unwrap();
    let rows = 24 * 10..ds.len();
    let pred = model.predict(&ds, rows.clone()).unwrap();
    let window = ds.slice(rows);
    let days: Vec<DayForecast> = split_days(&window)
        .unwrap()
        .days
        .iter()
        .map(|d| DayForecast {
            date: Some(d.date),
            actual: window.load()[d.range()].to_vec(),
            predicted: pred[d.range()].to_vec(),
        })
        .collect();
    let report = evaluate(&days, &MetricSettings::default()).unwrap();
    assert!(report.nrmse_d < 0.02, "in-sample nRMSE_d {}", report.nrmse_d);
    // the bump is driven by temperature, which only the additive model sees
    let t = model.gam.shape_of("temperature").unwrap();
    assert!(t.eval(32.0) - t.eval(20.0) > 20.0);
}

#[test]
fn saved_models_predict_identically() {
    let ds = line_bump_sine(60);
    let mut cfg = hourly_config();
    cfg.period.rounds = 60;
    cfg.baseline.rounds = 60;
    cfg.gam.boost.rounds = 60;
    for mode in [Mode::Sadi, Mode::PlainGbdt, Mode::EvlGbdt] {
        let model = train(&ds, &cfg, mode).unwrap();
        let bytes = to_bytes(&model).unwrap();
        let back: ForecastModel = from_bytes(&bytes).unwrap();
        assert_eq!(back, model);
        let rows = 24 * 10..ds.len();
        let a = model.predict_range(&ds, rows.clone()).unwrap();
        let b = back.predict_range(&ds, rows).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
        // same inputs give the same file
        assert_eq!(to_bytes(&train(&ds, &cfg, mode).unwrap()).unwrap(), bytes);
    }
}

#[test]
fn future_rows_without_load_are_forecastable() {
    let ds = line_bump_sine(60);
    let model = train(&ds.slice(0..24 * 59), &hourly_config(), Mode::Sadi).unwrap();
    // blank the final day's load; features only look 48 points back
    let mut load = ds.load().to_vec();
    load[24 * 59..].iter_mut().for_each(|v| *v = f64::NAN);
    let future = ds.with_load(load).unwrap();
    let p = model.predict_range(&future, 24 * 59..ds.len()).unwrap();
    let truth = &ds.load()[24 * 59..];
    for (a, b) in p.iter().zip(truth) {
        assert!((a - b).abs() / b < 0.05);
    }
}
