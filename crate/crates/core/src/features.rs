//! Feature engineering: calendar features, weather passthrough, rolling
//! load statistics and covariate differences.
//!
//! Every load-derived feature for row `t` only reads load at or before
//! `t - offset`, with `offset >= points_per_day`, so a forecast for day `T`
//! never depends on load that is not yet observed.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use chrono::{Datelike, NaiveDate, Timelike, Weekday};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::matrix::ColumnMatrix;

/// Window statistic used by rolling load features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    Mean,
    Median,
    Min,
    Max,
    Std,
    Skew,
    Q025,
    Q075,
}

impl Aggregation {
    pub const ALL: [Aggregation; 8] = [
        Aggregation::Mean,
        Aggregation::Median,
        Aggregation::Min,
        Aggregation::Max,
        Aggregation::Std,
        Aggregation::Skew,
        Aggregation::Q025,
        Aggregation::Q075,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Aggregation::Mean => "mean",
            Aggregation::Median => "median",
            Aggregation::Min => "min",
            Aggregation::Max => "max",
            Aggregation::Std => "std",
            Aggregation::Skew => "skew",
            Aggregation::Q025 => "q025",
            Aggregation::Q075 => "q075",
        }
    }

    /// Evaluates the statistic on ascending-sorted, finite values.
    pub fn eval_sorted(self, sorted: &[f64]) -> f64 {
        match self {
            Aggregation::Mean => mean(sorted),
            Aggregation::Median => quantile_sorted(sorted, 0.5),
            Aggregation::Min => sorted[0],
            Aggregation::Max => sorted[sorted.len() - 1],
            Aggregation::Std => sample_std(sorted),
            Aggregation::Skew => skewness(sorted),
            Aggregation::Q025 => quantile_sorted(sorted, 0.025),
            Aggregation::Q075 => quantile_sorted(sorted, 0.075),
        }
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation (n - 1 denominator); 0 for a single value.
pub fn sample_std(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    let ss: f64 = v.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (v.len() - 1) as f64).sqrt()
}

/// Adjusted Fisher-Pearson skewness. Returns 0 for fewer than three values
/// or a (numerically) constant window.
pub fn skewness(v: &[f64]) -> f64 {
    let n = v.len();
    if n < 3 {
        return 0.0;
    }
    let m = mean(v);
    let (m2, m3) = v.iter().fold((0.0, 0.0), |(a, b), x| {
        let d = x - m;
        (a + d * d, b + d * d * d)
    });
    let (m2, m3) = (m2 / n as f64, m3 / n as f64);
    let scale = v.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(f64::MIN_POSITIVE);
    if m2 <= (1e-14 * scale).powi(2) {
        return 0.0;
    }
    let g1 = m3 / m2.powf(1.5);
    let nf = n as f64;
    (nf * (nf - 1.0)).sqrt() / (nf - 2.0) * g1
}

/// Empirical quantile by linear interpolation between order statistics.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Which calendar features to emit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TemporalSpec {
    pub year: bool,
    pub month: bool,
    pub day: bool,
    pub day_of_week: bool,
    pub time_of_day: bool,
    pub is_workday: bool,
    pub is_holiday: bool,
    pub is_weekend: bool,
    /// sin/cos pairs for month, day of month, day of week and time of day.
    pub cyclic: bool,
}

impl Default for TemporalSpec {
    fn default() -> Self {
        TemporalSpec {
            year: true,
            month: true,
            day: true,
            day_of_week: true,
            time_of_day: true,
            is_workday: true,
            is_holiday: true,
            is_weekend: true,
            cyclic: true,
        }
    }
}

impl TemporalSpec {
    pub fn none() -> Self {
        TemporalSpec {
            year: false,
            month: false,
            day: false,
            day_of_week: false,
            time_of_day: false,
            is_workday: false,
            is_holiday: false,
            is_weekend: false,
            cyclic: false,
        }
    }
}

/// Rolling load statistics over `window_days` days ending `offset_points`
/// samples before the row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RollingSpec {
    pub window_days: usize,
    pub offset_points: usize,
    pub aggregations: Vec<Aggregation>,
}

impl RollingSpec {
    pub fn column_name(&self, agg: Aggregation) -> String {
        format!("load_win_{}_offset_{}_{}", self.window_days, self.offset_points, agg.name())
    }
}

/// `covariate[t] - covariate[t - offset_points]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferenceSpec {
    pub covariate: String,
    pub offset_points: usize,
}

impl DifferenceSpec {
    pub fn column_name(&self) -> String {
        format!("{}_diff_offset_{}", self.covariate, self.offset_points)
    }
}

/// The full feature-engineering recipe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureSpec {
    pub temporal: TemporalSpec,
    pub nwp_passthrough: Vec<String>,
    pub rolling: Vec<RollingSpec>,
    pub differences: Vec<DifferenceSpec>,
    pub holidays: Vec<NaiveDate>,
}

pub const DEFAULT_OFFSET_POINTS: usize = 192;

impl Default for FeatureSpec {
    fn default() -> Self {
        FeatureSpec {
            temporal: TemporalSpec::default(),
            nwp_passthrough: Vec::new(),
            rolling: [1, 7]
                .into_iter()
                .map(|window_days| RollingSpec {
                    window_days,
                    offset_points: DEFAULT_OFFSET_POINTS,
                    aggregations: Aggregation::ALL.to_vec(),
                })
                .collect(),
            differences: Vec::new(),
            holidays: Vec::new(),
        }
    }
}

impl FeatureSpec {
    /// Weather passthrough plus a difference feature for each named
    /// covariate, on top of the default calendar and rolling grid.
    pub fn with_weather(covariates: &[&str], offset_points: usize) -> Self {
        let mut spec = FeatureSpec::default();
        for r in &mut spec.rolling {
            r.offset_points = offset_points;
        }
        spec.nwp_passthrough = covariates.iter().map(|c| c.to_string()).collect();
        spec.differences = covariates
            .iter()
            .map(|c| DifferenceSpec {
                covariate: c.to_string(),
                offset_points,
            })
            .collect();
        spec
    }

    /// Checks the spec against a dataset's sampling and covariates.
    pub fn validate(&self, ds: &Dataset) -> Result<()> {
        let m = ds.points_per_day();
        for r in &self.rolling {
            if r.window_days == 0 {
                return Err(Error::Spec("rolling window_days must be >= 1".into()));
            }
            if r.offset_points < m {
                return Err(Error::Causality(format!(
                    "rolling offset {} is below one day ({m} points)",
                    r.offset_points
                )));
            }
            if r.aggregations.is_empty() {
                return Err(Error::Spec("rolling spec without aggregations".into()));
            }
        }
        for d in &self.differences {
            if d.offset_points == 0 {
                return Err(Error::Spec(format!("difference offset for `{}` must be >= 1", d.covariate)));
            }
            if ds.covariate(&d.covariate).is_none() {
                return Err(Error::UnknownName(d.covariate.clone()));
            }
        }
        for c in &self.nwp_passthrough {
            if ds.covariate(c).is_none() {
                return Err(Error::UnknownName(c.clone()));
            }
        }
        let names = self.column_names();
        if names.is_empty() {
            return Err(Error::Spec("feature spec produces no columns".into()));
        }
        for (i, n) in names.iter().enumerate() {
            if names[..i].iter().any(|(o, _)| o == &n.0) {
                return Err(Error::Spec(format!("duplicate output column `{}`", n.0)));
            }
        }
        Ok(())
    }

    /// Output column names with their groups, in emission order.
    pub fn column_names(&self) -> Vec<(String, FeatureGroup)> {
        let mut out: Vec<(String, FeatureGroup)> = temporal_names(&self.temporal)
            .into_iter()
            .map(|n| (n.to_string(), FeatureGroup::Temporal))
            .collect();
        out.extend(self.nwp_passthrough.iter().map(|n| (n.clone(), FeatureGroup::Weather)));
        for r in &self.rolling {
            out.extend(r.aggregations.iter().map(|a| (r.column_name(*a), FeatureGroup::Rolling)));
        }
        out.extend(self.differences.iter().map(|d| (d.column_name(), FeatureGroup::Difference)));
        out
    }
}

/// Provenance of a feature column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureGroup {
    Temporal,
    Weather,
    Rolling,
    Difference,
}

fn temporal_names(t: &TemporalSpec) -> Vec<&'static str> {
    let mut names = Vec::new();
    let flags = [
        (t.year, "year"),
        (t.month, "month"),
        (t.day, "day"),
        (t.day_of_week, "day_of_week"),
        (t.time_of_day, "time_of_day"),
        (t.is_workday, "is_workday"),
        (t.is_holiday, "is_holiday"),
        (t.is_weekend, "is_weekend"),
    ];
    names.extend(flags.iter().filter(|f| f.0).map(|f| f.1));
    if t.cyclic {
        names.extend([
            "month_sin",
            "month_cos",
            "day_of_month_sin",
            "day_of_month_cos",
            "day_of_week_sin",
            "day_of_week_cos",
            "time_of_day_sin",
            "time_of_day_cos",
        ]);
    }
    names
}

fn days_in_month(date: NaiveDate) -> u32 {
    let (y, m) = (date.year(), date.month());
    let next = if m == 12 {
        NaiveDate::from_ymd_opt(y + 1, 1, 1)
    } else {
        NaiveDate::from_ymd_opt(y, m + 1, 1)
    };
    next.and_then(|n| n.pred_opt()).map_or(31, |d| d.day())
}

/// Calendar columns for every row, in [`TemporalSpec`] order.
pub fn temporal_features(ds: &Dataset, spec: &TemporalSpec, holidays: &[NaiveDate]) -> Vec<(String, Vec<f64>)> {
    let holidays: BTreeSet<NaiveDate> = holidays.iter().copied().collect();
    let names = temporal_names(spec);
    let mut cols: Vec<Vec<f64>> = vec![Vec::with_capacity(ds.len()); names.len()];
    let m = ds.points_per_day() as f64;
    let step = ds.interval_secs() as f64;
    for i in 0..ds.len() {
        let dt = ds.civil_time(i);
        let date = dt.date();
        let weekend = matches!(date.weekday(), Weekday::Sat | Weekday::Sun);
        let holiday = holidays.contains(&date);
        let dow = date.weekday().num_days_from_monday() as f64;
        let slot = (dt.num_seconds_from_midnight() as f64 / step).floor();
        let dom = date.day() as f64 / days_in_month(date) as f64;
        let month = date.month() as f64;
        for (col, name) in cols.iter_mut().zip(&names) {
            let v = match *name {
                "year" => date.year() as f64,
                "month" => month,
                "day" => date.day() as f64,
                "day_of_week" => dow,
                "time_of_day" => slot,
                "is_workday" => f64::from(u8::from(!weekend && !holiday)),
                "is_holiday" => f64::from(u8::from(holiday)),
                "is_weekend" => f64::from(u8::from(weekend)),
                "month_sin" => (2.0 * PI * month / 12.0).sin(),
                "month_cos" => (2.0 * PI * month / 12.0).cos(),
                "day_of_month_sin" => (2.0 * PI * dom).sin(),
                "day_of_month_cos" => (2.0 * PI * dom).cos(),
                "day_of_week_sin" => (2.0 * PI * dow / 7.0).sin(),
                "day_of_week_cos" => (2.0 * PI * dow / 7.0).cos(),
                "time_of_day_sin" => (2.0 * PI * slot / m).sin(),
                "time_of_day_cos" => (2.0 * PI * slot / m).cos(),
                _ => unreachable!("unknown temporal column {name}"),
            };
            col.push(v);
        }
    }
    names.into_iter().map(String::from).zip(cols).collect()
}

/// Rolling statistics of the load. Row `t` aggregates
/// `load[t - offset - window_days * m + 1 ..= t - offset]`; rows without a
/// full, gap-free window hold `NaN`.
pub fn rolling_features(ds: &Dataset, spec: &RollingSpec) -> Result<Vec<(String, Vec<f64>)>> {
    let m = ds.points_per_day();
    if spec.offset_points < m {
        return Err(Error::Causality(format!(
            "rolling offset {} is below one day ({m} points)",
            spec.offset_points
        )));
    }
    if spec.window_days == 0 {
        return Err(Error::Spec("rolling window_days must be >= 1".into()));
    }
    let load = ds.load();
    let n = load.len();
    let w = spec.window_days * m;
    let j = spec.offset_points;
    let mut cols = vec![vec![f64::NAN; n]; spec.aggregations.len()];
    let first = j + w - 1;
    if first >= n {
        return Ok(names_with(spec, cols));
    }

    // Sliding window kept sorted; missing values are counted, not stored.
    let mut sorted: Vec<f64> = Vec::with_capacity(w);
    let mut missing = 0usize;
    let push = |sorted: &mut Vec<f64>, missing: &mut usize, v: f64| {
        if v.is_nan() {
            *missing += 1;
        } else {
            let at = sorted.partition_point(|x| x.total_cmp(&v).is_lt());
            sorted.insert(at, v);
        }
    };
    for &v in &load[..w] {
        push(&mut sorted, &mut missing, v);
    }
    for t in first..n {
        let end = t - j;
        if t > first {
            let out = load[end - w];
            if out.is_nan() {
                missing -= 1;
            } else {
                let at = sorted.partition_point(|x| x.total_cmp(&out).is_lt());
                sorted.remove(at);
            }
            push(&mut sorted, &mut missing, load[end]);
        }
        if missing == 0 {
            for (col, agg) in cols.iter_mut().zip(&spec.aggregations) {
                col[t] = agg.eval_sorted(&sorted);
            }
        }
    }
    Ok(names_with(spec, cols))
}

fn names_with(spec: &RollingSpec, cols: Vec<Vec<f64>>) -> Vec<(String, Vec<f64>)> {
    spec.aggregations
        .iter()
        .map(|a| spec.column_name(*a))
        .zip(cols)
        .collect()
}

/// Difference of a covariate against its value `offset_points` samples
/// earlier; the first `offset_points` rows are `NaN`.
pub fn difference_features(ds: &Dataset, covariate: &str, offset_points: usize) -> Result<Vec<f64>> {
    let values = ds
        .covariate(covariate)
        .ok_or_else(|| Error::UnknownName(covariate.to_string()))?;
    if offset_points == 0 {
        return Err(Error::Spec("difference offset must be >= 1".into()));
    }
    Ok((0..values.len())
        .map(|t| {
            if t < offset_points {
                f64::NAN
            } else {
                values[t] - values[t - offset_points]
            }
        })
        .collect())
}

/// Feature table aligned to dataset rows, with a completeness flag per row.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub matrix: ColumnMatrix,
    pub groups: Vec<FeatureGroup>,
    pub complete: Vec<bool>,
}

impl FeatureMatrix {
    /// Rows where every feature is available.
    pub fn complete_rows(&self) -> Vec<usize> {
        (0..self.complete.len()).filter(|&i| self.complete[i]).collect()
    }

    pub fn dropped_rows(&self) -> usize {
        self.complete.iter().filter(|c| !**c).count()
    }

    /// Names of the columns in `groups`, in matrix order.
    pub fn names_in(&self, groups: &[FeatureGroup]) -> Vec<String> {
        self.matrix
            .names()
            .iter()
            .zip(&self.groups)
            .filter(|(_, g)| groups.contains(g))
            .map(|(n, _)| n.clone())
            .collect()
    }

    /// Columns that hold a missing value on any of `rows`.
    pub fn incomplete_columns(&self, rows: &[usize]) -> Vec<String> {
        self.matrix
            .names()
            .iter()
            .zip(self.matrix.columns())
            .filter(|(_, c)| rows.iter().any(|&i| c[i].is_nan()))
            .map(|(n, _)| n.clone())
            .collect()
    }
}

/// Assembles every feature group in spec order.
pub fn build_features(ds: &Dataset, spec: &FeatureSpec) -> Result<FeatureMatrix> {
    spec.validate(ds)?;
    let mut names = Vec::new();
    let mut columns = Vec::new();
    let mut groups = Vec::new();
    for (n, c) in temporal_features(ds, &spec.temporal, &spec.holidays) {
        names.push(n);
        columns.push(c);
        groups.push(FeatureGroup::Temporal);
    }
    for c in &spec.nwp_passthrough {
        names.push(c.clone());
        columns.push(ds.covariate(c).expect("validated").to_vec());
        groups.push(FeatureGroup::Weather);
    }
    for r in &spec.rolling {
        for (n, c) in rolling_features(ds, r)? {
            names.push(n);
            columns.push(c);
            groups.push(FeatureGroup::Rolling);
        }
    }
    for d in &spec.differences {
        names.push(d.column_name());
        columns.push(difference_features(ds, &d.covariate, d.offset_points)?);
        groups.push(FeatureGroup::Difference);
    }
    let complete = (0..ds.len())
        .map(|i| columns.iter().all(|c| !c[i].is_nan()))
        .collect::<Vec<_>>();
    let dropped = complete.iter().filter(|c| !**c).count();
    if dropped > 0 {
        log::debug!("{dropped} of {} rows have incomplete features", ds.len());
    }
    let matrix = ColumnMatrix::new(names, columns)?;
    Ok(FeatureMatrix {
        matrix,
        groups,
        complete,
    })
}
