//! Additive decomposition of a load series into long-term trend, short-term
//! trend and period by two cascaded centered moving averages.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// The three additive components of a series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecomposedSeries {
    pub long_term: Vec<f64>,
    pub short_term: Vec<f64>,
    pub period: Vec<f64>,
    pub window_lt: usize,
    pub window_st: usize,
}

impl DecomposedSeries {
    pub fn len(&self) -> usize {
        self.long_term.len()
    }

    pub fn is_empty(&self) -> bool {
        self.long_term.is_empty()
    }
}

/// Centered moving average. Near the edges the window is clipped to the
/// available samples, so the output has the input's length.
///
/// For an even window the extra sample sits on the right.
pub fn moving_average(series: &[f64], window: usize) -> Result<Vec<f64>> {
    if window == 0 {
        return Err(Error::Parameter("moving average window must be >= 1".into()));
    }
    if series.is_empty() {
        return Err(Error::Parameter("moving average of an empty series".into()));
    }
    if let Some(i) = series.iter().position(|v| !v.is_finite()) {
        return Err(Error::Parameter(format!("non-finite value at index {i}")));
    }
    let n = series.len();
    let left = (window - 1) / 2;
    let right = window - 1 - left;
    // Prefix sums of the series shifted by its first value: a constant
    // series then averages to itself exactly.
    let base = series[0];
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for &v in series {
        acc += v - base;
        prefix.push(acc);
    }
    Ok((0..n)
        .map(|i| {
            let lo = i.saturating_sub(left);
            let hi = (i + right).min(n - 1);
            base + (prefix[hi + 1] - prefix[lo]) / (hi + 1 - lo) as f64
        })
        .collect())
}

/// Splits `series` into long-term trend (moving average with `window_lt`),
/// short-term trend (moving average of the remainder with `window_st`) and
/// period (what is left).
pub fn decompose(series: &[f64], window_lt: usize, window_st: usize) -> Result<DecomposedSeries> {
    if window_st == 0 || window_lt <= window_st {
        return Err(Error::Parameter(format!(
            "need window_lt > window_st >= 1, got {window_lt} and {window_st}"
        )));
    }
    if series.len() < window_lt {
        return Err(Error::Parameter(format!(
            "series of length {} is shorter than window_lt {window_lt}",
            series.len()
        )));
    }
    let long_term = moving_average(series, window_lt)?;
    let remainder: Vec<f64> = series.iter().zip(&long_term).map(|(y, lt)| y - lt).collect();
    let short_term = moving_average(&remainder, window_st)?;
    let period = remainder.iter().zip(&short_term).map(|(r, st)| r - st).collect();
    Ok(DecomposedSeries {
        long_term,
        short_term,
        period,
        window_lt,
        window_st,
    })
}

/// Elementwise sum of the components.
pub fn recompose(d: &DecomposedSeries) -> Result<Vec<f64>> {
    recompose_parts(&d.long_term, &d.short_term, &d.period)
}

pub fn recompose_parts(long_term: &[f64], short_term: &[f64], period: &[f64]) -> Result<Vec<f64>> {
    check_len("short_term component", long_term.len(), short_term.len())?;
    check_len("period component", long_term.len(), period.len())?;
    Ok(long_term
        .iter()
        .zip(short_term)
        .zip(period)
        .map(|((a, b), c)| a + b + c)
        .collect())
}
