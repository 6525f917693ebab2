//! Extreme-event labelling: label bins that are both rare and badly
//! predicted by a baseline forecaster.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BinScheme {
    #[default]
    EqualWidth,
    EqualFrequency,
}

/// How the per-bin error norm is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorNorm {
    /// `(sum |e|^p)^(1/p)` over bin members.
    #[default]
    Raw,
    /// `(mean |e|^p)^(1/p)` over bin members.
    SizeNormalized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtremeEventConfig {
    pub bin_count: usize,
    /// Rarity threshold on bin probability mass.
    pub epsilon: f64,
    /// Threshold on the bin error norm.
    pub delta: f64,
    /// Norm order.
    pub p: f64,
    pub scheme: BinScheme,
    pub norm: ErrorNorm,
}

impl Default for ExtremeEventConfig {
    fn default() -> Self {
        ExtremeEventConfig {
            bin_count: 20,
            epsilon: 0.05,
            delta: 1000.0,
            p: 2.0,
            scheme: BinScheme::EqualWidth,
            norm: ErrorNorm::Raw,
        }
    }
}

impl ExtremeEventConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bin_count < 2 {
            return Err(Error::Parameter("bin_count must be >= 2".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(Error::Parameter(format!("epsilon must be in (0, 1], got {}", self.epsilon)));
        }
        if !(self.delta >= 0.0) {
            return Err(Error::Parameter(format!("delta must be >= 0, got {}", self.delta)));
        }
        if !(self.p >= 1.0) {
            return Err(Error::Parameter(format!("p must be >= 1, got {}", self.p)));
        }
        Ok(())
    }
}

/// Bin assignment of every label and the bin edges.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Binning {
    /// `bin_count + 1` ascending edges; the last bin is closed above.
    pub edges: Vec<f64>,
    pub assignment: Vec<usize>,
    pub masses: Vec<f64>,
    pub counts: Vec<usize>,
}

/// Equal-width bins over `[min(y), max(y)]`.
pub fn bin_labels(y: &[f64], bin_count: usize) -> Result<Binning> {
    bin_labels_with(y, bin_count, BinScheme::EqualWidth)
}

pub fn bin_labels_with(y: &[f64], bin_count: usize, scheme: BinScheme) -> Result<Binning> {
    if bin_count < 2 {
        return Err(Error::Parameter("bin_count must be >= 2".into()));
    }
    if y.is_empty() {
        return Err(Error::Data("no labels to bin".into()));
    }
    if let Some(i) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::Data(format!("non-finite label at index {i}")));
    }
    let lo = y.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return Err(Error::Data("constant labels fall in a single bin".into()));
    }
    let edges: Vec<f64> = match scheme {
        BinScheme::EqualWidth => {
            let width = (hi - lo) / bin_count as f64;
            (0..=bin_count)
                .map(|k| if k == bin_count { hi } else { lo + width * k as f64 })
                .collect()
        }
        BinScheme::EqualFrequency => {
            let mut s = y.to_vec();
            s.sort_by(f64::total_cmp);
            (0..=bin_count)
                .map(|k| crate::features::quantile_sorted(&s, k as f64 / bin_count as f64))
                .collect()
        }
    };
    let assignment: Vec<usize> = y
        .iter()
        .map(|&v| {
            // bins are [e_k, e_{k+1}); the last also takes its upper edge
            let k = edges[1..bin_count].partition_point(|e| *e <= v);
            k.min(bin_count - 1)
        })
        .collect();
    let mut counts = vec![0usize; bin_count];
    for &b in &assignment {
        counts[b] += 1;
    }
    let masses = counts.iter().map(|&c| c as f64 / y.len() as f64).collect();
    Ok(Binning {
        edges,
        assignment,
        masses,
        counts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinDiagnostics {
    pub bin: usize,
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    pub mass: f64,
    pub error_norm: f64,
    pub rare: bool,
    pub poorly_predicted: bool,
}

impl BinDiagnostics {
    pub fn extreme(&self) -> bool {
        self.rare && self.poorly_predicted
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtremeEventSet {
    pub members: Vec<usize>,
    pub bins: Vec<BinDiagnostics>,
}

/// Flags every label in a bin with mass below `epsilon` whose baseline error
/// norm exceeds `delta`.
pub fn detect_extremes(y: &[f64], preds: &[f64], cfg: &ExtremeEventConfig) -> Result<ExtremeEventSet> {
    cfg.validate()?;
    check_len("baseline predictions", y.len(), preds.len())?;
    let binning = bin_labels_with(y, cfg.bin_count, cfg.scheme)?;
    let mut power_sums = vec![0.0; cfg.bin_count];
    for ((a, p), &b) in y.iter().zip(preds).zip(&binning.assignment) {
        power_sums[b] += (p - a).abs().powf(cfg.p);
    }
    let bins: Vec<BinDiagnostics> = (0..cfg.bin_count)
        .map(|b| {
            let count = binning.counts[b];
            let mass = binning.masses[b];
            let sum = match cfg.norm {
                ErrorNorm::Raw => power_sums[b],
                ErrorNorm::SizeNormalized if count > 0 => power_sums[b] / count as f64,
                ErrorNorm::SizeNormalized => 0.0,
            };
            let error_norm = sum.powf(1.0 / cfg.p);
            BinDiagnostics {
                bin: b,
                lower: binning.edges[b],
                upper: binning.edges[b + 1],
                count,
                mass,
                error_norm,
                rare: mass < cfg.epsilon,
                poorly_predicted: error_norm > cfg.delta,
            }
        })
        .collect();
    let members = binning
        .assignment
        .iter()
        .enumerate()
        .filter(|(_, &b)| bins[b].extreme())
        .map(|(i, _)| i)
        .collect();
    Ok(ExtremeEventSet { members, bins })
}
