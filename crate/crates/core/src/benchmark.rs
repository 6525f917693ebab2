//! Head-to-head comparison on the seeded synthetic series: SaDI against the
//! single-model baselines, plus the two ablations.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::SaDIConfig;
use crate::data::{format_value, split_days};
use crate::error::Result;
use crate::extremes::bin_labels;
use crate::metrics::{evaluate, DayForecast, EvalReport};
use crate::persist::write_atomic;
use crate::pipeline::{train, without_feature_engineering, Mode};
use crate::synthetic::{generate, SyntheticSeries};

pub const NO_DECOMPOSE: &str = "no-decompose";
pub const NO_FEATURES: &str = "no-features";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelScore {
    pub model: String,
    pub nrmse_d: f64,
    pub mape_d: f64,
    pub sr_curve: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinRmse {
    pub bin: usize,
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    /// One entry per compared model; `NaN` for an empty bin.
    pub rmse: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkReport {
    pub seed: u64,
    pub test_days: usize,
    pub train_rows: usize,
    pub models: Vec<ModelScore>,
    pub ablation: Vec<ModelScore>,
    pub bins: Vec<BinRmse>,
}

impl BenchmarkReport {
    pub fn score(&self, model: &str) -> Option<&ModelScore> {
        self.models.iter().chain(&self.ablation).find(|m| m.model == model)
    }

    /// Relative nRMSE_d reduction of SaDI against `baseline`.
    pub fn improvement_over(&self, baseline: &str) -> Option<f64> {
        let sadi = self.score(Mode::Sadi.name())?.nrmse_d;
        let other = self.score(baseline)?.nrmse_d;
        Some(1.0 - sadi / other)
    }

    fn table(rows: &[ModelScore]) -> String {
        let mut s = String::from("model,nrmse_d,mape_d\n");
        for r in rows {
            let _ = writeln!(s, "{},{},{}", r.model, r.nrmse_d, r.mape_d);
        }
        s
    }

    pub fn comparison_csv(&self) -> String {
        Self::table(&self.models)
    }

    pub fn ablation_csv(&self) -> String {
        Self::table(&self.ablation)
    }

    pub fn sr_curve_csv(score: &ModelScore) -> String {
        let mut s = String::from("eta,success_rate\n");
        for (eta, sr) in &score.sr_curve {
            let _ = writeln!(s, "{eta},{sr}");
        }
        s
    }

    pub fn per_bin_csv(&self) -> String {
        let mut s = String::from("bin,lower,upper,count");
        for m in &self.models {
            let _ = write!(s, ",rmse_{}", m.model);
        }
        s.push('\n');
        for b in &self.bins {
            let _ = write!(s, "{},{},{},{}", b.bin, b.lower, b.upper, b.count);
            for r in &b.rmse {
                let _ = write!(s, ",{}", format_value(*r, None));
            }
            s.push('\n');
        }
        s
    }

    /// Plain-text summary.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "test_days = {}", self.test_days);
        let _ = writeln!(s, "train_rows = {}", self.train_rows);
        for m in self.models.iter().chain(&self.ablation) {
            let _ = writeln!(s, "[{}]\nnrmse_d = {:.6}\nmape_d = {:.6}", m.model, m.nrmse_d, m.mape_d);
        }
        for base in [Mode::PlainGbdt.name(), Mode::EvlGbdt.name(), NO_DECOMPOSE, NO_FEATURES] {
            if let Some(g) = self.improvement_over(base) {
                let _ = writeln!(s, "[improvement.{base}]\nnrmse_d = {g:.6}");
            }
        }
        s
    }

    /// Writes every artifact into `dir` and returns the paths.
    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let mut files = vec![
            ("report.txt".to_string(), self.summary()),
            ("comparison.csv".to_string(), self.comparison_csv()),
            ("ablation.csv".to_string(), self.ablation_csv()),
            ("per_bin_rmse.csv".to_string(), self.per_bin_csv()),
        ];
        for m in &self.models {
            files.push((format!("sr_curve_{}.csv", m.model), Self::sr_curve_csv(m)));
        }
        let mut out = Vec::with_capacity(files.len());
        for (name, text) in files {
            let path = dir.join(name);
            write_atomic(&path, text.as_bytes())?;
            out.push(path);
        }
        Ok(out)
    }
}

/// The config actually used on synthetic data: feature lags follow the
/// generator's sampling.
pub fn benchmark_config(cfg: &SaDIConfig) -> SaDIConfig {
    let mut out = cfg.clone();
    let j = cfg.synthetic.offset_points;
    for r in &mut out.features.rolling {
        r.offset_points = j;
    }
    for d in &mut out.features.differences {
        d.offset_points = j;
    }
    out
}

fn score(name: &str, series: &SyntheticSeries, pred: &[f64], cfg: &SaDIConfig) -> Result<(ModelScore, EvalReport)> {
    let test = series.dataset.slice(series.test_start..series.dataset.len());
    let split = split_days(&test)?;
    let days: Vec<DayForecast> = split
        .days
        .iter()
        .map(|d| DayForecast {
            date: Some(d.date),
            actual: test.load()[d.range()].to_vec(),
            predicted: pred[d.range()].to_vec(),
        })
        .collect();
    let report = evaluate(&days, &cfg.metrics)?;
    Ok((
        ModelScore {
            model: name.to_string(),
            nrmse_d: report.nrmse_d,
            mape_d: report.mape_d,
            sr_curve: report.sr_curve.clone(),
        },
        report,
    ))
}

/// Generates the seeded series, trains every compared model on the
/// pre-test rows and scores them on the heat-wave test window.
pub fn run_benchmark(cfg: &SaDIConfig, seed: u64) -> Result<BenchmarkReport> {
    let cfg = benchmark_config(cfg);
    cfg.validate()?;
    let series = generate(&cfg.synthetic, seed)?;
    let ds = &series.dataset;
    let train_ds = ds.slice(0..series.test_start);
    let test_rows = series.test_start..ds.len();
    let ablated = without_feature_engineering(&cfg);

    let variants: Vec<(String, &SaDIConfig, Mode)> = vec![
        (Mode::Sadi.name().into(), &cfg, Mode::Sadi),
        (Mode::PlainGbdt.name().into(), &cfg, Mode::PlainGbdt),
        (Mode::EvlGbdt.name().into(), &cfg, Mode::EvlGbdt),
        (NO_DECOMPOSE.into(), &cfg, Mode::EtlGbdt),
        (NO_FEATURES.into(), &ablated, Mode::Sadi),
    ];
    let predictions: Vec<Result<Vec<f64>>> = std::thread::scope(|s| {
        let handles: Vec<_> = variants
            .iter()
            .map(|(name, c, mode)| {
                let train_ds = &train_ds;
                let rows = test_rows.clone();
                s.spawn(move || {
                    log::info!("benchmark: training {name}");
                    train(train_ds, c, *mode)?.predict_range(ds, rows)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("benchmark fit panicked")).collect()
    });
    let mut scores = Vec::new();
    let mut preds = Vec::new();
    for ((name, _, _), p) in variants.iter().zip(predictions) {
        let p = p?;
        scores.push(score(name, &series, &p, &cfg)?.0);
        preds.push(p);
    }

    let actual = &ds.load()[test_rows.clone()];
    let binning = bin_labels(actual, cfg.extremes.bin_count)?;
    let bins = (0..cfg.extremes.bin_count)
        .map(|b| {
            let members: Vec<usize> = (0..actual.len()).filter(|&i| binning.assignment[i] == b).collect();
            let rmse = preds[..3]
                .iter()
                .map(|p| {
                    if members.is_empty() {
                        f64::NAN
                    } else {
                        let sse: f64 = members.iter().map(|&i| (p[i] - actual[i]).powi(2)).sum();
                        (sse / members.len() as f64).sqrt()
                    }
                })
                .collect();
            BinRmse {
                bin: b,
                lower: binning.edges[b],
                upper: binning.edges[b + 1],
                count: members.len(),
                rmse,
            }
        })
        .collect();

    let ablation = vec![scores[0].clone(), scores[3].clone(), scores[4].clone()];
    scores.truncate(3);
    Ok(BenchmarkReport {
        seed,
        test_days: cfg.synthetic.test_days,
        train_rows: train_ds.len(),
        models: scores,
        ablation,
        bins,
    })
}
