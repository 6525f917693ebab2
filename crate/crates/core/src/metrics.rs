//! Daily forecast metrics: normalised RMSE, MAPE and the success rate.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Root mean squared relative error over one day.
pub fn nrmse_day(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_len("forecast day", y.len(), yhat.len())?;
    if y.is_empty() {
        return Err(Error::Empty("empty day".into()));
    }
    let mut acc = 0.0;
    for (i, (a, p)) in y.iter().zip(yhat).enumerate() {
        if *a == 0.0 {
            return Err(Error::ZeroTarget { index: i });
        }
        let r = (a - p) / a;
        acc += r * r;
    }
    Ok((acc / y.len() as f64).sqrt())
}

/// Mean absolute relative error over one day.
pub fn mape_day(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_len("forecast day", y.len(), yhat.len())?;
    if y.is_empty() {
        return Err(Error::Empty("empty day".into()));
    }
    let mut acc = 0.0;
    for (i, (a, p)) in y.iter().zip(yhat).enumerate() {
        if *a == 0.0 {
            return Err(Error::ZeroTarget { index: i });
        }
        acc += ((a - p) / a).abs();
    }
    Ok(acc / y.len() as f64)
}

fn check_eta(eta: f64) -> Result<()> {
    if eta >= 0.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("eta must be >= 0, got {eta}")))
    }
}

fn rate(errors: &[f64], eta: f64) -> f64 {
    errors.iter().filter(|e| **e <= eta).count() as f64 / errors.len() as f64
}

/// Fraction of days whose nRMSE is at most `eta`.
pub fn success_rate(days: &[(&[f64], &[f64])], eta: f64) -> Result<f64> {
    check_eta(eta)?;
    if days.is_empty() {
        return Err(Error::Data("success rate over zero days".into()));
    }
    let errors = days
        .iter()
        .map(|(y, p)| nrmse_day(y, p))
        .collect::<Result<Vec<_>>>()?;
    Ok(rate(&errors, eta))
}

/// Success rate at each threshold of an ascending grid.
pub fn sr_curve(days: &[(&[f64], &[f64])], etas: &[f64]) -> Result<Vec<(f64, f64)>> {
    if days.is_empty() {
        return Err(Error::Data("success rate over zero days".into()));
    }
    let errors = days
        .iter()
        .map(|(y, p)| nrmse_day(y, p))
        .collect::<Result<Vec<_>>>()?;
    curve_from_errors(&errors, etas)
}

fn curve_from_errors(errors: &[f64], etas: &[f64]) -> Result<Vec<(f64, f64)>> {
    for e in etas {
        check_eta(*e)?;
    }
    if etas.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Parameter("eta grid must be sorted ascending".into()));
    }
    Ok(etas.iter().map(|&eta| (eta, rate(errors, eta))).collect())
}

/// Evaluation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricSettings {
    pub eta_grid: Vec<f64>,
    /// Points with `|y|` below this fraction of the day's mean absolute load
    /// are left out of that day's metrics.
    pub zero_floor: f64,
}

impl Default for MetricSettings {
    fn default() -> Self {
        MetricSettings {
            eta_grid: (1..=20).map(|k| k as f64 / 100.0).collect(),
            zero_floor: 1e-6,
        }
    }
}

/// Actual and forecast load for one day.
#[derive(Debug, Clone, PartialEq)]
pub struct DayForecast {
    pub date: Option<NaiveDate>,
    pub actual: Vec<f64>,
    pub predicted: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DayScore {
    pub day_index: usize,
    pub date: Option<NaiveDate>,
    pub nrmse: f64,
    pub mape: f64,
    /// Points left out by the zero floor.
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub days: usize,
    pub nrmse_d: f64,
    pub mape_d: f64,
    pub per_day: Vec<DayScore>,
    pub sr_curve: Vec<(f64, f64)>,
}

/// Scores every day and aggregates the daily means and success-rate curve.
pub fn evaluate(days: &[DayForecast], settings: &MetricSettings) -> Result<EvalReport> {
    let mut per_day = Vec::with_capacity(days.len());
    for (k, d) in days.iter().enumerate() {
        check_len("forecast day", d.actual.len(), d.predicted.len())?;
        let scale = d.actual.iter().map(|v| v.abs()).sum::<f64>() / d.actual.len().max(1) as f64;
        let floor = settings.zero_floor * scale;
        let (y, p): (Vec<f64>, Vec<f64>) = d
            .actual
            .iter()
            .zip(&d.predicted)
            .filter(|(a, _)| a.abs() >= floor && **a != 0.0)
            .map(|(a, p)| (*a, *p))
            .unzip();
        let excluded = d.actual.len() - y.len();
        if excluded > 0 {
            log::warn!("day {k}: {excluded} near-zero load points excluded from metrics");
        }
        if y.is_empty() {
            log::warn!("day {k}: no usable points, skipped");
            continue;
        }
        per_day.push(DayScore {
            day_index: k,
            date: d.date,
            nrmse: nrmse_day(&y, &p)?,
            mape: mape_day(&y, &p)?,
            excluded,
        });
    }
    if per_day.is_empty() {
        return Err(Error::Data("no scorable days".into()));
    }
    let n = per_day.len() as f64;
    let errors: Vec<f64> = per_day.iter().map(|d| d.nrmse).collect();
    Ok(EvalReport {
        days: per_day.len(),
        nrmse_d: errors.iter().sum::<f64>() / n,
        mape_d: per_day.iter().map(|d| d.mape).sum::<f64>() / n,
        sr_curve: curve_from_errors(&errors, &settings.eta_grid)?,
        per_day,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn nrmse_examples() {
        assert_eq!(nrmse_day(&[5.0, 7.0], &[5.0, 7.0]).unwrap(), 0.0);
        assert!((nrmse_day(&[100.0, 100.0], &[110.0, 90.0]).unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(nrmse_day(&[1.0], &[1.0, 2.0]).unwrap_err().class(), "shape.mismatch");
        assert!(matches!(nrmse_day(&[1.0, 0.0], &[1.0, 2.0]), Err(Error::ZeroTarget { index: 1 })));
    }

    #[test]
    fn mape_examples() {
        assert_eq!(mape_day(&[5.0], &[5.0]).unwrap(), 0.0);
        assert!((mape_day(&[100.0, 100.0], &[110.0, 90.0]).unwrap() - 0.1).abs() < 1e-15);
        assert!((mape_day(&[100.0, 200.0], &[110.0, 190.0]).unwrap() - 0.075).abs() < 1e-15);
    }

    #[test]
    fn success_rate_examples() {
        let y = [100.0, 100.0];
        let good = [105.0, 95.0]; // 0.05
        let bad = [120.0, 80.0]; // 0.2
        let days: Vec<(&[f64], &[f64])> = vec![(&y, &good), (&y, &bad)];
        assert_eq!(success_rate(&days, 0.1).unwrap(), 0.5);
        assert_eq!(success_rate(&days, 0.01).unwrap(), 0.0);
        let perfect: Vec<(&[f64], &[f64])> = vec![(&y, &y)];
        assert_eq!(success_rate(&perfect, 1e-9).unwrap(), 1.0);
        assert_eq!(success_rate(&[], 0.1).unwrap_err().class(), "data.invalid");
        assert_eq!(success_rate(&days, -1.0).unwrap_err().class(), "param.invalid");
    }

    #[test]
    fn curve_limits() {
        let y = [100.0, 100.0];
        let p = [110.0, 90.0];
        let days: Vec<(&[f64], &[f64])> = vec![(&y, &p)];
        let c = sr_curve(&days, &[0.0, 0.1, f64::INFINITY]).unwrap();
        assert_eq!(c[0].1, 0.0);
        assert_eq!(c[2].1, 1.0);
        assert_eq!(sr_curve(&days, &[0.1]).unwrap()[0].1, success_rate(&days, 0.1).unwrap());
        assert!(sr_curve(&days, &[0.2, 0.1]).is_err());
    }

    #[test]
    fn zero_floor_excludes_points() {
        let d = DayForecast {
            date: None,
            actual: vec![100.0, 0.0, 100.0],
            predicted: vec![110.0, 5.0, 90.0],
        };
        let r = evaluate(&[d], &MetricSettings::default()).unwrap();
        assert_eq!(r.per_day[0].excluded, 1);
        assert!((r.nrmse_d - 0.1).abs() < 1e-15);
    }

    #[test]
    fn perfect_evaluation() {
        let d = DayForecast {
            date: None,
            actual: vec![3.0; 24],
            predicted: vec![3.0; 24],
        };
        let r = evaluate(&[d.clone(), d], &MetricSettings::default()).unwrap();
        assert_eq!(r.nrmse_d, 0.0);
        assert_eq!(r.mape_d, 0.0);
        assert!(r.sr_curve.iter().all(|(_, s)| *s == 1.0));
    }

    proptest! {
        #[test]
        fn scale_invariance(
            pairs in prop::collection::vec((1f64..1000.0, 1f64..1000.0), 1..50),
            c in prop_oneof![0.001f64..1000.0, -1000f64..-0.001],
        ) {
            let y: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let p: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let ys: Vec<f64> = y.iter().map(|v| v * c).collect();
            let ps: Vec<f64> = p.iter().map(|v| v * c).collect();
            let a = nrmse_day(&y, &p).unwrap();
            let b = nrmse_day(&ys, &ps).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
            let a = mape_day(&y, &p).unwrap();
            let b = mape_day(&ys, &ps).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }

        #[test]
        fn sr_order_invariant_and_monotone(
            errs in prop::collection::vec(1f64..200.0, 1..20),
            etas in prop::collection::vec(0f64..0.5, 1..10),
        ) {
            let y = vec![100.0; 4];
            let preds: Vec<Vec<f64>> = errs.iter().map(|e| vec![100.0 + e * 0.3; 4]).collect();
            let mut days: Vec<(&[f64], &[f64])> = preds.iter().map(|p| (y.as_slice(), p.as_slice())).collect();
            let mut etas = etas;
            etas.sort_by(f64::total_cmp);
            let c = sr_curve(&days, &etas).unwrap();
            prop_assert!(c.windows(2).all(|w| w[1].1 >= w[0].1));
            days.reverse();
            prop_assert_eq!(sr_curve(&days, &etas).unwrap(), c);
        }
    }
}
