//! Quantile binning of feature columns for histogram split search.

use crate::error::{Error, Result};
use crate::matrix::ColumnMatrix;

/// Candidate split thresholds for one feature. A value `x` falls in bin
/// `b` when `thresholds[b-1] < x <= thresholds[b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBins {
    pub thresholds: Vec<f64>,
}

impl FeatureBins {
    /// Builds at most `max_bins` bins. With no more distinct values than
    /// bins, every distinct value gets its own bin and the thresholds are
    /// the midpoints between neighbours.
    pub fn from_values(values: &[f64], max_bins: usize) -> FeatureBins {
        let mut sorted: Vec<f64> = values.iter().copied().filter(|v| !v.is_nan()).collect();
        sorted.sort_by(f64::total_cmp);
        let mut distinct: Vec<(f64, usize)> = Vec::new();
        for v in sorted.iter().copied() {
            match distinct.last_mut() {
                Some((last, count)) if *last == v => *count += 1,
                _ => distinct.push((v, 1)),
            }
        }
        let mut thresholds = Vec::new();
        if distinct.len() <= max_bins {
            for pair in distinct.windows(2) {
                thresholds.push(midpoint(pair[0].0, pair[1].0));
            }
        } else {
            let per_bin = sorted.len() as f64 / max_bins as f64;
            let mut seen = 0usize;
            let mut next_cut = per_bin;
            for (k, &(v, count)) in distinct.iter().enumerate() {
                seen += count;
                if k + 1 < distinct.len() && seen as f64 >= next_cut && thresholds.len() + 1 < max_bins {
                    thresholds.push(midpoint(v, distinct[k + 1].0));
                    while next_cut <= seen as f64 {
                        next_cut += per_bin;
                    }
                }
            }
        }
        FeatureBins { thresholds }
    }

    pub fn n_bins(&self) -> usize {
        self.thresholds.len() + 1
    }

    #[inline]
    pub fn bin(&self, x: f64) -> u16 {
        self.thresholds.partition_point(|t| *t < x) as u16
    }
}

/// Midpoint strictly below `b`, so that `a <= mid < b`.
fn midpoint(a: f64, b: f64) -> f64 {
    let mid = a + (b - a) / 2.0;
    if mid < b {
        mid
    } else {
        a
    }
}

/// Feature matrix mapped to bin indices, column-major.
#[derive(Debug, Clone)]
pub struct BinnedMatrix {
    pub bins: Vec<FeatureBins>,
    pub codes: Vec<Vec<u16>>,
    pub rows: usize,
}

impl BinnedMatrix {
    pub fn build(matrix: &ColumnMatrix, max_bins: usize) -> Result<BinnedMatrix> {
        if !(2..=u16::MAX as usize).contains(&max_bins) {
            return Err(Error::Parameter(format!("histogram_bins must be in 2..=65535, got {max_bins}")));
        }
        let mut bins = Vec::with_capacity(matrix.n_cols());
        let mut codes = Vec::with_capacity(matrix.n_cols());
        for (j, col) in matrix.columns().iter().enumerate() {
            if let Some(i) = col.iter().position(|v| v.is_nan()) {
                return Err(Error::Data(format!(
                    "missing value in feature `{}` at training row {i}",
                    matrix.names()[j]
                )));
            }
            let fb = FeatureBins::from_values(col, max_bins);
            codes.push(col.iter().map(|&v| fb.bin(v)).collect());
            bins.push(fb);
        }
        Ok(BinnedMatrix {
            bins,
            codes,
            rows: matrix.n_rows(),
        })
    }
}
