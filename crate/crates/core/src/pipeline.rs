//! End-to-end training and prediction: decompose the training load, fit one
//! model per component and forecast by summation. Also the single-model
//! baselines used for comparison.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::SaDIConfig;
use crate::data::Dataset;
use crate::decomposition::decompose;
use crate::error::{Error, Result};
use crate::features::{build_features, FeatureGroup, FeatureSpec, TemporalSpec};
use crate::gam::{fit_gam, GamModel};
use crate::gbdt::{fit_gbdt, GbdtModel};
use crate::losses::{EvlParams, LossSpec};
use crate::matrix::ColumnMatrix;
use crate::trend::{fit_linear, TrendMode, TrendModel};

/// Which forecaster to train.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Decomposition with trend, additive and period models.
    #[default]
    Sadi,
    /// One boosted ensemble on raw load with squared error.
    PlainGbdt,
    /// One boosted ensemble on raw load with the extreme value loss.
    EvlGbdt,
    /// One boosted ensemble on raw load with the triggered loss weights
    /// (SaDI without decomposition).
    EtlGbdt,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Sadi, Mode::PlainGbdt, Mode::EvlGbdt, Mode::EtlGbdt];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Sadi => "sadi",
            Mode::PlainGbdt => "plain-gbdt",
            Mode::EvlGbdt => "evl-gbdt",
            Mode::EtlGbdt => "etl-gbdt",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Mode> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown mode `{s}`")))
    }
}

/// In-sample fit quality of one component model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentStats {
    pub rows: usize,
    pub rmse: f64,
}

impl ComponentStats {
    fn new(target: &[f64], fitted: &[f64]) -> Self {
        let n = target.len().max(1) as f64;
        let sse: f64 = target.iter().zip(fitted).map(|(y, p)| (y - p).powi(2)).sum();
        ComponentStats {
            rows: target.len(),
            rmse: (sse / n).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingStats {
    pub filled_points: usize,
    pub dropped_rows: usize,
    pub trend: ComponentStats,
    pub gam: ComponentStats,
    pub period: ComponentStats,
    pub total: ComponentStats,
}

/// The composite decomposition model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaDIModel {
    pub window_lt: usize,
    pub window_st: usize,
    pub interval_secs: i64,
    pub fill_max_gap: usize,
    pub features: FeatureSpec,
    pub trend_mode: TrendMode,
    /// Epoch seconds at which the time index is zero.
    pub time_origin: i64,
    pub trend: TrendModel,
    pub gam: GamModel,
    pub period: GbdtModel,
    /// SHA-256 of the training data shared by all three component fits.
    pub fingerprint: String,
    pub stats: TrainingStats,
}

/// A single boosted ensemble on raw load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleModel {
    pub mode: Mode,
    pub interval_secs: i64,
    pub fill_max_gap: usize,
    pub features: FeatureSpec,
    pub loss: LossSpec,
    pub gbdt: GbdtModel,
    pub fingerprint: String,
    pub stats: ComponentStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ForecastModel {
    Sadi(SaDIModel),
    Single(SingleModel),
}

impl ForecastModel {
    pub fn mode(&self) -> Mode {
        match self {
            ForecastModel::Sadi(_) => Mode::Sadi,
            ForecastModel::Single(s) => s.mode,
        }
    }

    pub fn features(&self) -> &FeatureSpec {
        match self {
            ForecastModel::Sadi(m) => &m.features,
            ForecastModel::Single(m) => &m.features,
        }
    }

    pub fn fingerprint(&self) -> &str {
        match self {
            ForecastModel::Sadi(m) => &m.fingerprint,
            ForecastModel::Single(m) => &m.fingerprint,
        }
    }

    /// Forecasts for `rows` of `ds`, which must carry enough history before
    /// them for every feature.
    pub fn predict_range(&self, ds: &Dataset, rows: Range<usize>) -> Result<Vec<f64>> {
        match self {
            ForecastModel::Sadi(m) => Ok(m.predict_components(ds, rows)?.total()),
            ForecastModel::Single(m) => m.predict_range(ds, rows),
        }
    }
}

/// SHA-256 over the sampling, timestamps, load and covariates.
pub fn fingerprint(ds: &Dataset) -> String {
    let mut h = Sha256::new();
    h.update(ds.interval_secs().to_le_bytes());
    h.update(ds.utc_offset_secs().to_le_bytes());
    for t in ds.timestamps() {
        h.update(t.to_le_bytes());
    }
    for v in ds.load() {
        h.update(v.to_bits().to_le_bytes());
    }
    for c in ds.covariates() {
        h.update(c.name.as_bytes());
        h.update([0u8]);
        for v in &c.values {
            h.update(v.to_bits().to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

/// Forward-fills and checks that the training load is complete.
fn prepare_training(ds: &Dataset, max_gap: usize) -> Result<(Dataset, usize)> {
    let (filled, count) = ds.forward_fill(max_gap)?;
    if count > 0 {
        log::info!("forward-filled {count} missing values");
    }
    let missing = filled.missing_load();
    if missing > 0 {
        return Err(Error::Data(format!(
            "training load has {missing} missing values at the series edges"
        )));
    }
    Ok((filled, count))
}

fn pick(values: &[f64], rows: &[usize]) -> Vec<f64> {
    rows.iter().map(|&i| values[i]).collect()
}

fn time_index(ds: &Dataset, origin: i64, rows: &[usize]) -> ColumnMatrix {
    let t = rows
        .iter()
        .map(|&i| (ds.timestamps()[i] - origin) as f64 / 86_400.0)
        .collect();
    ColumnMatrix::new(vec!["time_index".into()], vec![t]).expect("single column")
}

/// Fits the three component models on one decomposition of the training load.
pub fn train_sadi(ds: &Dataset, cfg: &SaDIConfig) -> Result<SaDIModel> {
    cfg.validate()?;
    let (ds, filled_points) = prepare_training(ds, cfg.data.fill_max_gap)?;
    let (window_lt, window_st) = cfg.decomposition.windows(ds.points_per_day());
    let parts = decompose(ds.load(), window_lt, window_st)?;
    let fm = build_features(&ds, &cfg.features)?;
    let rows = fm.complete_rows();
    if rows.len() < 2 {
        return Err(Error::Empty("no training rows with complete features".into()));
    }
    let x = fm.matrix.select_rows(&rows);
    let gam_x = x.select_columns(&fm.names_in(&cfg.gam.feature_groups))?;
    let time_origin = ds.timestamps()[0];
    let trend_x = match cfg.trend.mode {
        TrendMode::Features => x.clone(),
        TrendMode::TimeIndex => time_index(&ds, time_origin, &rows),
    };
    let y_lt = pick(&parts.long_term, &rows);
    let y_st = pick(&parts.short_term, &rows);
    let y_s = pick(&parts.period, &rows);
    let etl = LossSpec::Etl(cfg.etl.clone());

    let (trend, gam, period) = std::thread::scope(|s| {
        let trend = s.spawn(|| fit_linear(&trend_x, &y_lt).map_err(|e| e.in_component("trend")));
        let gam = s.spawn(|| fit_gam(&gam_x, &y_st, &etl, &cfg.gam.boost).map_err(|e| e.in_component("gam")));
        let period = fit_gbdt(&x, &y_s, &LossSpec::SquaredError, None, &cfg.period)
            .map_err(|e| e.in_component("period"));
        (
            trend.join().expect("trend fit panicked"),
            gam.join().expect("gam fit panicked"),
            period,
        )
    });
    let (trend, gam, period) = (trend?, gam?, period?);

    let f_lt = trend.predict(&trend_x)?;
    let f_st = gam.predict(&gam_x)?;
    let f_s = period.predict(&x)?;
    let total: Vec<f64> = (0..rows.len()).map(|k| f_lt[k] + f_st[k] + f_s[k]).collect();
    let stats = TrainingStats {
        filled_points,
        dropped_rows: fm.dropped_rows(),
        trend: ComponentStats::new(&y_lt, &f_lt),
        gam: ComponentStats::new(&y_st, &f_st),
        period: ComponentStats::new(&y_s, &f_s),
        total: ComponentStats::new(&pick(ds.load(), &rows), &total),
    };
    log::info!(
        "trained on {} rows: component rmse trend {:.4} gam {:.4} period {:.4}",
        rows.len(),
        stats.trend.rmse,
        stats.gam.rmse,
        stats.period.rmse
    );
    Ok(SaDIModel {
        window_lt,
        window_st,
        interval_secs: ds.interval_secs(),
        fill_max_gap: cfg.data.fill_max_gap,
        features: cfg.features.clone(),
        trend_mode: cfg.trend.mode,
        time_origin,
        trend,
        gam,
        period,
        fingerprint: fingerprint(&ds),
        stats,
    })
}

/// Fits one ensemble on raw load. `mode` must not be [`Mode::Sadi`].
pub fn train_single(ds: &Dataset, cfg: &SaDIConfig, mode: Mode) -> Result<SingleModel> {
    cfg.validate()?;
    let (ds, _) = prepare_training(ds, cfg.data.fill_max_gap)?;
    let fm = build_features(&ds, &cfg.features)?;
    let rows = fm.complete_rows();
    if rows.len() < 2 {
        return Err(Error::Empty("no training rows with complete features".into()));
    }
    let x = fm.matrix.select_rows(&rows);
    let y = pick(ds.load(), &rows);
    let (loss, weights) = match mode {
        Mode::Sadi => return Err(Error::Parameter("sadi is not a single-model mode".into())),
        Mode::PlainGbdt => (LossSpec::SquaredError, None),
        Mode::EvlGbdt => {
            let n = y.len() as f64;
            let mu = y.iter().sum::<f64>() / n;
            let sigma = (y.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / n).sqrt();
            let p = EvlParams {
                mu,
                sigma,
                k: cfg.evl.k,
                lambda1: cfg.evl.lambda1,
            };
            (LossSpec::Evl(p), None)
        }
        Mode::EtlGbdt => (LossSpec::Etl(cfg.etl.clone()), Some(cfg.etl.weights(&x)?)),
    };
    let gbdt = fit_gbdt(&x, &y, &loss, weights.as_deref(), &cfg.baseline).map_err(|e| e.in_component("gbdt"))?;
    let fitted = gbdt.predict(&x)?;
    Ok(SingleModel {
        mode,
        interval_secs: ds.interval_secs(),
        fill_max_gap: cfg.data.fill_max_gap,
        features: cfg.features.clone(),
        loss,
        gbdt,
        fingerprint: fingerprint(&ds),
        stats: ComponentStats::new(&y, &fitted),
    })
}

pub fn train(ds: &Dataset, cfg: &SaDIConfig, mode: Mode) -> Result<ForecastModel> {
    match mode {
        Mode::Sadi => Ok(ForecastModel::Sadi(train_sadi(ds, cfg)?)),
        other => Ok(ForecastModel::Single(train_single(ds, cfg, other)?)),
    }
}

/// Feature rows for prediction; every requested row must be complete.
fn prediction_features(
    ds: &Dataset,
    spec: &FeatureSpec,
    interval_secs: i64,
    max_gap: usize,
    rows: Range<usize>,
) -> Result<ColumnMatrix> {
    if ds.interval_secs() != interval_secs {
        return Err(Error::Schema(format!(
            "model expects {interval_secs}s sampling, data has {}s",
            ds.interval_secs()
        )));
    }
    if rows.start >= rows.end || rows.end > ds.len() {
        return Err(Error::Range(format!(
            "rows {}..{} outside dataset of {} rows",
            rows.start,
            rows.end,
            ds.len()
        )));
    }
    let (ds, _) = ds.forward_fill(max_gap)?;
    let fm = build_features(&ds, spec)?;
    let rows: Vec<usize> = rows.collect();
    let missing = fm.incomplete_columns(&rows);
    if !missing.is_empty() {
        return Err(Error::InsufficientHistory { columns: missing });
    }
    Ok(fm.matrix.select_rows(&rows))
}

/// Per-component forecasts.
#[derive(Debug, Clone, PartialEq)]
pub struct Components {
    pub long_term: Vec<f64>,
    pub short_term: Vec<f64>,
    pub period: Vec<f64>,
}

impl Components {
    pub fn total(&self) -> Vec<f64> {
        self.long_term
            .iter()
            .zip(&self.short_term)
            .zip(&self.period)
            .map(|((a, b), c)| a + b + c)
            .collect()
    }
}

impl SaDIModel {
    /// Trend, additive and period forecasts for `rows` of `ds`.
    pub fn predict_components(&self, ds: &Dataset, rows: Range<usize>) -> Result<Components> {
        let x = prediction_features(ds, &self.features, self.interval_secs, self.fill_max_gap, rows.clone())?;
        let trend_x = match self.trend_mode {
            TrendMode::Features => x.clone(),
            TrendMode::TimeIndex => time_index(ds, self.time_origin, &rows.collect::<Vec<_>>()),
        };
        Ok(Components {
            long_term: self.trend.predict(&trend_x)?,
            short_term: self.gam.predict(&x)?,
            period: self.period.predict(&x)?,
        })
    }

    pub fn predict(&self, ds: &Dataset, rows: Range<usize>) -> Result<Vec<f64>> {
        Ok(self.predict_components(ds, rows)?.total())
    }
}

impl SingleModel {
    pub fn predict_range(&self, ds: &Dataset, rows: Range<usize>) -> Result<Vec<f64>> {
        let x = prediction_features(ds, &self.features, self.interval_secs, self.fill_max_gap, rows)?;
        self.gbdt.predict(&x)
    }
}

/// The feature-engineering ablation: weather passthrough and the raw time of
/// day only, without calendar encodings, rolling statistics or differences.
pub fn without_feature_engineering(cfg: &SaDIConfig) -> SaDIConfig {
    let mut out = cfg.clone();
    out.features = FeatureSpec {
        temporal: TemporalSpec {
            time_of_day: true,
            ..TemporalSpec::none()
        },
        nwp_passthrough: cfg.features.nwp_passthrough.clone(),
        rolling: Vec::new(),
        differences: Vec::new(),
        holidays: Vec::new(),
    };
    out.gam.feature_groups = vec![FeatureGroup::Weather];
    out
}
