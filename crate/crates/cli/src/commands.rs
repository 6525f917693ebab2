use std::fmt::Write as _;
use std::path::Path;

use chrono::FixedOffset;
use sadi_core::data::{format_timestamp, format_value, parse_timestamp, write_csv};
use sadi_core::extremes::{self, bin_labels_with};
use sadi_core::metrics::DayForecast;
use sadi_core::persist::write_atomic;
use sadi_core::{
    build_features, decompose as decompose_series, evaluate as score, ingest_csv, load_model, run_benchmark,
    save_model, split_days, Dataset, Error, ForecastModel, Mode, Result, SaDIConfig,
};

/// Column read by `evaluate` and `detect-extremes`, written by `predict`.
pub const PREDICTION: &str = "prediction";

fn csv_bytes<I>(header: &[&str], rows: I) -> Result<Vec<u8>>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn write_all(dir: &Path, files: Vec<(String, Vec<u8>)>) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, bytes) in files {
        write_atomic(dir.join(name), &bytes)?;
    }
    Ok(())
}

fn parse_cutoff(cfg: &SaDIConfig, cutoff: Option<&str>) -> Result<Option<i64>> {
    let offset = FixedOffset::east_opt(cfg.data.schema.utc_offset_minutes * 60)
        .ok_or_else(|| Error::Config("utc_offset_minutes out of range".into()))?;
    cutoff
        .map(|c| parse_timestamp(c, &offset).ok_or_else(|| Error::Parameter(format!("cannot parse cutoff `{c}`"))))
        .transpose()
}

/// Reads `path` and repairs interior gaps; edge gaps must not remain.
fn read_complete(cfg: &SaDIConfig, path: &Path) -> Result<(Dataset, usize)> {
    let (ds, filled) = ingest_csv(path, &cfg.data.schema)?.forward_fill(cfg.data.fill_max_gap)?;
    let missing = ds.missing_load();
    if missing > 0 {
        return Err(Error::Data(format!("{missing} load values missing at the series edges")));
    }
    Ok((ds, filled))
}

fn prediction_column(ds: &Dataset) -> Result<&[f64]> {
    ds.covariate(PREDICTION).ok_or_else(|| Error::MissingColumn(PREDICTION.into()))
}

pub fn ingest(cfg: &SaDIConfig, input: &Path, out: &Path) -> Result<()> {
    let raw = ingest_csv(input, &cfg.data.schema)?;
    let (ds, filled) = raw.forward_fill(cfg.data.fill_max_gap)?;
    let mut bytes = Vec::new();
    write_csv(&ds, &mut bytes, &cfg.data.schema, None)?;
    write_atomic(out, &bytes)?;
    println!("rows = {}", ds.len());
    println!("interval_secs = {}", ds.interval_secs());
    println!("filled = {filled}");
    println!("missing_load = {}", ds.missing_load());
    Ok(())
}

pub fn decompose(cfg: &SaDIConfig, input: &Path, out: &Path) -> Result<()> {
    let (ds, _) = read_complete(cfg, input)?;
    let (lt, st) = cfg.decomposition.windows(ds.points_per_day());
    let parts = decompose_series(ds.load(), lt, st)?;
    let offset = ds.offset();
    let rows = (0..ds.len()).map(|i| {
        vec![
            format_timestamp(ds.timestamps()[i], &offset),
            format_value(ds.load()[i], None),
            format_value(parts.long_term[i], None),
            format_value(parts.short_term[i], None),
            format_value(parts.period[i], None),
        ]
    });
    let bytes = csv_bytes(&["timestamp", "original", "long_term", "short_term", "period"], rows)?;
    write_atomic(out, &bytes)
}

pub fn features(cfg: &SaDIConfig, input: &Path, out: &Path) -> Result<()> {
    let (ds, _) = ingest_csv(input, &cfg.data.schema)?.forward_fill(cfg.data.fill_max_gap)?;
    let fm = build_features(&ds, &cfg.features)?;
    let names = fm.matrix.names();
    let mut header = vec!["timestamp"];
    header.extend(names.iter().map(String::as_str));
    let offset = ds.offset();
    let rows = (0..ds.len()).map(|i| {
        let mut r = vec![format_timestamp(ds.timestamps()[i], &offset)];
        r.extend(fm.matrix.columns().iter().map(|c| format_value(c[i], None)));
        r
    });
    let bytes = csv_bytes(&header, rows)?;
    write_atomic(out, &bytes)?;
    log::info!("{} feature columns, {} incomplete rows", names.len(), fm.dropped_rows());
    Ok(())
}

pub fn train(cfg: &SaDIConfig, input: &Path, out: &Path, mode: Mode, cutoff: Option<&str>) -> Result<()> {
    let cutoff = parse_cutoff(cfg, cutoff)?;
    let mut ds = ingest_csv(input, &cfg.data.schema)?;
    if let Some(c) = cutoff {
        ds = sadi_core::chrono_split(&ds, c)?.0;
    }
    let model = sadi_core::train(&ds, cfg, mode)?;
    save_model(&model, out)?;
    println!("mode = {mode}");
    println!("rows = {}", ds.len());
    println!("fingerprint = {}", model.fingerprint());
    Ok(())
}

pub fn predict(cfg: &SaDIConfig, model: &Path, input: &Path, out: &Path, cutoff: Option<&str>) -> Result<()> {
    let cutoff = parse_cutoff(cfg, cutoff)?;
    let model = load_model(model)?;
    let ds = ingest_csv(input, &cfg.data.schema)?;
    let start = match cutoff {
        Some(c) => ds
            .position_at_or_after(c)
            .ok_or_else(|| Error::Range(format!("cutoff {c} is after the last row")))?,
        None => 0,
    };
    let rows = start..ds.len();
    let load_col = cfg.data.schema.load_column.as_str();
    let mut header = vec!["timestamp", load_col, PREDICTION];
    let mut columns = Vec::new();
    match &model {
        ForecastModel::Sadi(m) => {
            let c = m.predict_components(&ds, rows.clone())?;
            columns.push(c.total());
            columns.extend([c.long_term, c.short_term, c.period]);
            header.extend(["long_term", "short_term", "period"]);
        }
        ForecastModel::Single(m) => columns.push(m.predict_range(&ds, rows.clone())?),
    }
    let offset = ds.offset();
    let out_rows = rows.enumerate().map(|(k, i)| {
        let mut r = vec![format_timestamp(ds.timestamps()[i], &offset), format_value(ds.load()[i], None)];
        r.extend(columns.iter().map(|c| format_value(c[k], None)));
        r
    });
    let bytes = csv_bytes(&header, out_rows)?;
    write_atomic(out, &bytes)
}

pub fn evaluate(cfg: &SaDIConfig, input: &Path, out: &Path) -> Result<()> {
    let ds = ingest_csv(input, &cfg.data.schema)?;
    let pred = prediction_column(&ds)?;
    let split = split_days(&ds)?;
    let days: Vec<DayForecast> = split
        .days
        .iter()
        .filter(|d| d.range().all(|i| ds.load()[i].is_finite() && pred[i].is_finite()))
        .map(|d| DayForecast {
            date: Some(d.date),
            actual: ds.load()[d.range()].to_vec(),
            predicted: pred[d.range()].to_vec(),
        })
        .collect();
    let skipped = split.days.len() - days.len();
    if skipped > 0 {
        log::warn!("{skipped} days with missing values skipped");
    }
    let report = score(&days, &cfg.metrics)?;

    let mut text = String::new();
    let _ = writeln!(text, "days = {}", report.days);
    let _ = writeln!(text, "skipped_days = {skipped}");
    let _ = writeln!(text, "nrmse_d = {}", report.nrmse_d);
    let _ = writeln!(text, "mape_d = {}", report.mape_d);
    let _ = writeln!(text, "[success_rate]");
    for (eta, sr) in &report.sr_curve {
        let _ = writeln!(text, "\"{eta}\" = {sr}");
    }
    let per_day = report.per_day.iter().map(|d| {
        vec![
            d.day_index.to_string(),
            d.date.map(|x| x.to_string()).unwrap_or_default(),
            d.nrmse.to_string(),
            d.mape.to_string(),
            d.excluded.to_string(),
        ]
    });
    let curve = report.sr_curve.iter().map(|(e, s)| vec![e.to_string(), s.to_string()]);
    print!("{text}");
    write_all(
        out,
        vec![
            ("report.txt".into(), text.clone().into_bytes()),
            ("per_day.csv".into(), csv_bytes(&["day_index", "date", "nrmse", "mape", "excluded"], per_day)?),
            ("sr_curve.csv".into(), csv_bytes(&["eta", "success_rate"], curve)?),
        ],
    )
}

fn file_stem(feature: &str) -> String {
    feature
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '_' })
        .collect()
}

pub fn explain(model: &Path, out: &Path) -> Result<()> {
    let model = match load_model(model)? {
        ForecastModel::Sadi(m) => m,
        ForecastModel::Single(m) => {
            return Err(Error::Parameter(format!(
                "explain needs a sadi model, got {}",
                m.mode
            )))
        }
    };
    let gam = &model.gam;
    let mut files = Vec::new();
    let mut summary = Vec::new();
    for shape in &gam.shapes {
        // each value holds up to and including its breakpoint
        let rows = shape.values.iter().enumerate().map(|(i, v)| {
            let bp = shape.breakpoints.get(i).map_or("inf".to_string(), |b| b.to_string());
            vec![bp, v.to_string()]
        });
        let name = format!("shape_{}.csv", file_stem(&shape.feature));
        files.push((name.clone(), csv_bytes(&["breakpoint", "value"], rows)?));
        let lo = shape.values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = shape.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        summary.push(vec![
            shape.feature.clone(),
            name,
            shape.breakpoints.len().to_string(),
            lo.to_string(),
            hi.to_string(),
            (hi - lo).to_string(),
        ]);
    }
    files.push((
        "shapes.csv".into(),
        csv_bytes(&["feature", "file", "breakpoints", "min", "max", "range"], summary)?,
    ));

    let mut text = String::new();
    let _ = writeln!(text, "[gam]");
    let _ = writeln!(text, "intercept = {}", gam.intercept);
    let _ = writeln!(text, "residual_mean = {}", gam.residual_mean);
    let _ = writeln!(text, "residual_std = {}", gam.residual_std);
    let _ = writeln!(text, "[trend]");
    let _ = writeln!(text, "intercept = {}", model.trend.intercept);
    let _ = writeln!(text, "ridge = {}", model.trend.ridge);
    let _ = writeln!(text, "[trend.weights]");
    for (n, w) in model.trend.feature_names.iter().zip(&model.trend.weights) {
        let _ = writeln!(text, "\"{n}\" = {w}");
    }
    files.push(("summary.txt".into(), text.into_bytes()));
    write_all(out, files)
}

pub fn detect_extremes(cfg: &SaDIConfig, input: &Path, out: &Path) -> Result<()> {
    let ds = ingest_csv(input, &cfg.data.schema)?;
    let pred = prediction_column(&ds)?;
    let rows: Vec<usize> = (0..ds.len())
        .filter(|&i| ds.load()[i].is_finite() && pred[i].is_finite())
        .collect();
    let y: Vec<f64> = rows.iter().map(|&i| ds.load()[i]).collect();
    let p: Vec<f64> = rows.iter().map(|&i| pred[i]).collect();
    let set = extremes::detect_extremes(&y, &p, &cfg.extremes)?;
    let offset = ds.offset();
    let assignment = bin_labels_with(&y, cfg.extremes.bin_count, cfg.extremes.scheme)?.assignment;
    let members = set.members.iter().map(|&k| {
        let i = rows[k];
        vec![
            format_timestamp(ds.timestamps()[i], &offset),
            y[k].to_string(),
            p[k].to_string(),
            assignment[k].to_string(),
        ]
    });
    let bins = set.bins.iter().map(|b| {
        vec![
            b.bin.to_string(),
            b.lower.to_string(),
            b.upper.to_string(),
            b.count.to_string(),
            b.mass.to_string(),
            b.error_norm.to_string(),
            b.rare.to_string(),
            b.poorly_predicted.to_string(),
            b.extreme().to_string(),
        ]
    });
    println!("points = {}", y.len());
    println!("extreme = {}", set.members.len());
    write_all(
        out,
        vec![
            ("members.csv".into(), csv_bytes(&["timestamp", "load", PREDICTION, "bin"], members)?),
            (
                "bins.csv".into(),
                csv_bytes(
                    &["bin", "lower", "upper", "count", "mass", "error_norm", "rare", "poorly_predicted", "extreme"],
                    bins,
                )?,
            ),
        ],
    )
}

pub fn benchmark(cfg: &SaDIConfig, seed: u64, out: &Path) -> Result<()> {
    let report = run_benchmark(cfg, seed)?;
    report.write_to(out)?;
    print!("{}", report.summary());
    Ok(())
}
