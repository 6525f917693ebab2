//! Load series data model, CSV ingestion and chronological slicing.

use std::io::{Read, Write};
use std::ops::Range;
use std::path::Path;

use chrono::{DateTime, FixedOffset, NaiveDate, NaiveDateTime, TimeZone, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

const SECONDS_PER_DAY: i64 = 86_400;

/// A named, timestamp-aligned covariate column.
#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub values: Vec<f64>,
}

impl Column {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        Column {
            name: name.into(),
            values,
        }
    }
}

/// A regularly sampled load series with aligned covariates.
///
/// Timestamps are UTC epoch seconds; calendar features are derived in the
/// civil time given by a fixed UTC offset. Missing load values are stored
/// as `NaN`. The dataset is immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    timestamps: Vec<i64>,
    load: Vec<f64>,
    covariates: Vec<Column>,
    interval_secs: i64,
    utc_offset_secs: i32,
}

impl Dataset {
    /// Builds a dataset, inferring the sample interval from the first two
    /// timestamps and enforcing it everywhere else.
    pub fn new(
        timestamps: Vec<i64>,
        load: Vec<f64>,
        covariates: Vec<Column>,
        utc_offset_secs: i32,
    ) -> Result<Self> {
        if timestamps.len() < 2 {
            return Err(Error::Data(
                "at least two rows are needed to infer the sample interval".into(),
            ));
        }
        let interval = timestamps[1] - timestamps[0];
        Self::with_interval(timestamps, load, covariates, interval, utc_offset_secs)
    }

    /// Builds a dataset with an explicit sample interval.
    pub fn with_interval(
        timestamps: Vec<i64>,
        load: Vec<f64>,
        covariates: Vec<Column>,
        interval_secs: i64,
        utc_offset_secs: i32,
    ) -> Result<Self> {
        if interval_secs <= 0 {
            return Err(Error::Data(format!(
                "sample interval must be positive, got {interval_secs}s"
            )));
        }
        if SECONDS_PER_DAY % interval_secs != 0 {
            return Err(Error::Data(format!(
                "sample interval {interval_secs}s does not divide a day"
            )));
        }
        if FixedOffset::east_opt(utc_offset_secs).is_none() {
            return Err(Error::Parameter(format!(
                "utc offset {utc_offset_secs}s out of range"
            )));
        }
        check_len("load column", timestamps.len(), load.len())?;
        for (i, c) in covariates.iter().enumerate() {
            check_len("covariate column", timestamps.len(), c.values.len())?;
            if covariates[..i].iter().any(|o| o.name == c.name) {
                return Err(Error::Data(format!("duplicate covariate `{}`", c.name)));
            }
        }
        for (row, pair) in timestamps.windows(2).enumerate() {
            let delta = pair[1] - pair[0];
            if delta == 0 {
                return Err(Error::DuplicateTimestamp {
                    row: row + 1,
                    timestamp: pair[1],
                });
            }
            if delta != interval_secs {
                return Err(Error::IrregularSpacing {
                    row: row + 1,
                    expected: interval_secs,
                    found: delta,
                });
            }
        }
        Ok(Dataset {
            timestamps,
            load,
            covariates,
            interval_secs,
            utc_offset_secs,
        })
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn timestamps(&self) -> &[i64] {
        &self.timestamps
    }

    pub fn load(&self) -> &[f64] {
        &self.load
    }

    pub fn covariates(&self) -> &[Column] {
        &self.covariates
    }

    pub fn covariate(&self, name: &str) -> Option<&[f64]> {
        self.covariates
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.values.as_slice())
    }

    pub fn interval_secs(&self) -> i64 {
        self.interval_secs
    }

    pub fn utc_offset_secs(&self) -> i32 {
        self.utc_offset_secs
    }

    /// Samples per calendar day (`m`).
    pub fn points_per_day(&self) -> usize {
        (SECONDS_PER_DAY / self.interval_secs) as usize
    }

    pub fn offset(&self) -> FixedOffset {
        FixedOffset::east_opt(self.utc_offset_secs).expect("validated at construction")
    }

    /// Civil date-time of row `i`.
    pub fn civil_time(&self, i: usize) -> NaiveDateTime {
        self.offset()
            .timestamp_opt(self.timestamps[i], 0)
            .single()
            .expect("fixed offsets are unambiguous")
            .naive_local()
    }

    /// Returns the rows in `range` as a new dataset.
    pub fn slice(&self, range: Range<usize>) -> Dataset {
        Dataset {
            timestamps: self.timestamps[range.clone()].to_vec(),
            load: self.load[range.clone()].to_vec(),
            covariates: self
                .covariates
                .iter()
                .map(|c| Column::new(c.name.clone(), c.values[range.clone()].to_vec()))
                .collect(),
            interval_secs: self.interval_secs,
            utc_offset_secs: self.utc_offset_secs,
        }
    }

    /// Index of the first row at or after `instant`, if any.
    pub fn position_at_or_after(&self, instant: i64) -> Option<usize> {
        let idx = self.timestamps.partition_point(|&t| t < instant);
        (idx < self.len()).then_some(idx)
    }

    /// Returns a copy with the load column replaced.
    pub fn with_load(&self, load: Vec<f64>) -> Result<Dataset> {
        check_len("load column", self.len(), load.len())?;
        Ok(Dataset {
            load,
            ..self.clone()
        })
    }

    /// Count of missing load values.
    pub fn missing_load(&self) -> usize {
        self.load.iter().filter(|v| v.is_nan()).count()
    }

    /// Repairs interior runs of missing values of at most `max_gap` points by
    /// carrying the previous value forward, for the load and every covariate.
    ///
    /// Leading and trailing runs are left untouched: a trailing run is the
    /// normal shape of a forecast horizon whose load is not yet known.
    /// Interior runs longer than `max_gap` are an error.
    pub fn forward_fill(&self, max_gap: usize) -> Result<(Dataset, usize)> {
        let mut filled = 0;
        let load = fill_column(&self.load, max_gap, &mut filled)?;
        let mut covariates = Vec::with_capacity(self.covariates.len());
        for c in &self.covariates {
            covariates.push(Column::new(
                c.name.clone(),
                fill_column(&c.values, max_gap, &mut filled)?,
            ));
        }
        Ok((
            Dataset {
                load,
                covariates,
                ..self.clone()
            },
            filled,
        ))
    }
}

fn fill_column(values: &[f64], max_gap: usize, filled: &mut usize) -> Result<Vec<f64>> {
    let mut out = values.to_vec();
    let Some(first) = values.iter().position(|v| !v.is_nan()) else {
        return Ok(out);
    };
    let last = values.iter().rposition(|v| !v.is_nan()).unwrap_or(first);
    let mut i = first;
    while i <= last {
        if out[i].is_nan() {
            let start = i;
            while out[i].is_nan() {
                i += 1;
            }
            let len = i - start;
            if len > max_gap {
                return Err(Error::MissingGap {
                    row: start,
                    len,
                    max: max_gap,
                });
            }
            let prev = out[start - 1];
            out[start..i].iter_mut().for_each(|v| *v = prev);
            *filled += len;
        } else {
            i += 1;
        }
    }
    Ok(out)
}

/// Maps CSV header names onto dataset roles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CsvSchema {
    pub timestamp_column: String,
    pub load_column: String,
    /// Covariate columns to keep; `None` keeps every other column.
    pub covariates: Option<Vec<String>>,
    /// Civil-time offset used for naive timestamps and calendar features.
    pub utc_offset_minutes: i32,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema {
            timestamp_column: "timestamp".into(),
            load_column: "load".into(),
            covariates: None,
            utc_offset_minutes: 0,
        }
    }
}

/// Reads and validates a CSV file.
pub fn ingest_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    read_csv(file, schema)
}

/// Reads and validates CSV content. Rows are sorted by timestamp; duplicate
/// timestamps and irregular spacing are rejected.
pub fn read_csv<R: Read>(reader: R, schema: &CsvSchema) -> Result<Dataset> {
    let offset_secs = schema.utc_offset_minutes * 60;
    let offset = FixedOffset::east_opt(offset_secs).ok_or_else(|| {
        Error::Parameter(format!(
            "utc offset {} minutes out of range",
            schema.utc_offset_minutes
        ))
    })?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let ts_idx = find(&schema.timestamp_column)?;
    let load_idx = find(&schema.load_column)?;
    let cov_idx: Vec<(String, usize)> = match &schema.covariates {
        Some(names) => names
            .iter()
            .map(|n| find(n).map(|i| (n.clone(), i)))
            .collect::<Result<_>>()?,
        None => headers
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != ts_idx && *i != load_idx)
            .map(|(i, h)| (h.to_string(), i))
            .collect(),
    };

    let mut rows: Vec<(i64, f64, Vec<f64>)> = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        let row = line + 1;
        let ts = parse_timestamp(&record[ts_idx], &offset)
            .ok_or_else(|| Error::Data(format!("row {row}: bad timestamp `{}`", &record[ts_idx])))?;
        let load = parse_value(&record[load_idx])
            .ok_or_else(|| Error::Data(format!("row {row}: bad load `{}`", &record[load_idx])))?;
        let covs = cov_idx
            .iter()
            .map(|(name, i)| {
                parse_value(&record[*i])
                    .ok_or_else(|| Error::Data(format!("row {row}: bad `{name}` value")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push((ts, load, covs));
    }
    rows.sort_by_key(|r| r.0);

    let timestamps: Vec<i64> = rows.iter().map(|r| r.0).collect();
    let load: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let covariates = cov_idx
        .iter()
        .enumerate()
        .map(|(k, (name, _))| Column::new(name.clone(), rows.iter().map(|r| r.2[k]).collect()))
        .collect();
    Dataset::new(timestamps, load, covariates, offset_secs)
}

fn parse_value(field: &str) -> Option<f64> {
    if field.is_empty() || field.eq_ignore_ascii_case("nan") {
        return Some(f64::NAN);
    }
    field.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Parses epoch seconds, RFC 3339, or a naive ISO-8601 date-time read in
/// the civil offset.
pub fn parse_timestamp(field: &str, offset: &FixedOffset) -> Option<i64> {
    if let Ok(secs) = field.parse::<i64>() {
        return Some(secs);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(field) {
        return Some(dt.timestamp());
    }
    const NAIVE: [&str; 4] = [
        "%Y-%m-%dT%H:%M:%S",
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M",
    ];
    NAIVE.iter().find_map(|fmt| {
        NaiveDateTime::parse_from_str(field, fmt)
            .ok()
            .and_then(|n| offset.from_local_datetime(&n).single())
            .map(|dt| dt.timestamp())
    })
}

/// Formats a timestamp as RFC 3339 in the given civil offset.
pub fn format_timestamp(ts: i64, offset: &FixedOffset) -> String {
    offset
        .timestamp_opt(ts, 0)
        .single()
        .map(|dt| dt.to_rfc3339())
        .unwrap_or_else(|| ts.to_string())
}

/// Formats a value with the CSV conventions: empty for missing, shortest
/// round-trip decimal when `precision` is `None`.
pub fn format_value(v: f64, precision: Option<usize>) -> String {
    if v.is_nan() {
        String::new()
    } else {
        match precision {
            Some(p) => format!("{v:.p$}"),
            None => format!("{v}"),
        }
    }
}

/// Writes the dataset back out using the ingestion conventions.
pub fn write_csv<W: Write>(ds: &Dataset, writer: W, schema: &CsvSchema, precision: Option<usize>) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec![schema.timestamp_column.clone(), schema.load_column.clone()];
    header.extend(ds.covariates.iter().map(|c| c.name.clone()));
    w.write_record(&header)?;
    let offset = ds.offset();
    for i in 0..ds.len() {
        let mut rec = vec![
            format_timestamp(ds.timestamps[i], &offset),
            format_value(ds.load[i], precision),
        ];
        rec.extend(ds.covariates.iter().map(|c| format_value(c.values[i], precision)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// One full civil day of samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DaySlice {
    pub day_index: usize,
    pub date: NaiveDate,
    pub start: usize,
    pub len: usize,
}

impl DaySlice {
    pub fn range(&self) -> Range<usize> {
        self.start..self.start + self.len
    }
}

/// Result of [`split_days`]: the full days plus counts of boundary points
/// that did not belong to a complete day.
#[derive(Debug, Clone, PartialEq)]
pub struct DaySplit {
    pub days: Vec<DaySlice>,
    pub dropped_leading: usize,
    pub dropped_trailing: usize,
}

impl DaySplit {
    pub fn dropped(&self) -> usize {
        self.dropped_leading + self.dropped_trailing
    }
}

/// Groups rows into complete civil days, dropping partial days at either end.
pub fn split_days(ds: &Dataset) -> Result<DaySplit> {
    let m = ds.points_per_day();
    if ds.len() < m {
        return Err(Error::Empty(format!(
            "{} points is less than one day of {m}",
            ds.len()
        )));
    }
    let first = (0..ds.len().min(m))
        .find(|&i| ds.civil_time(i).num_seconds_from_midnight() == 0)
        .ok_or_else(|| Error::Empty("no sample falls on a civil midnight".into()))?;
    let count = (ds.len() - first) / m;
    if count == 0 {
        return Err(Error::Empty("no complete day in dataset".into()));
    }
    let days = (0..count)
        .map(|k| {
            let start = first + k * m;
            DaySlice {
                day_index: k,
                date: ds.civil_time(start).date(),
                start,
                len: m,
            }
        })
        .collect();
    let dropped_trailing = ds.len() - first - count * m;
    if first + dropped_trailing > 0 {
        log::info!("split_days dropped {first} leading and {dropped_trailing} trailing points");
    }
    Ok(DaySplit {
        days,
        dropped_leading: first,
        dropped_trailing,
    })
}

/// Splits at `cutoff` (epoch seconds): rows strictly before go left, the
/// rest go right.
pub fn chrono_split(ds: &Dataset, cutoff: i64) -> Result<(Dataset, Dataset)> {
    let first = ds.timestamps[0];
    let last = *ds.timestamps.last().expect("dataset is non-empty");
    if cutoff <= first || cutoff > last {
        return Err(Error::Range(format!(
            "cutoff {cutoff} outside ({first}, {last}]"
        )));
    }
    let idx = ds.timestamps.partition_point(|&t| t < cutoff);
    Ok((ds.slice(0..idx), ds.slice(idx..ds.len())))
}
