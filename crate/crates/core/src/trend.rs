//! Long-term trend model: ordinary least squares with an intercept.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::matrix::ColumnMatrix;

/// Ridge added to the normal equations when they are not positive definite.
pub const RIDGE_FALLBACK: f64 = 1e-8;

/// What the trend is regressed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TrendMode {
    /// The full feature vector.
    #[default]
    Features,
    /// Elapsed time only.
    TimeIndex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendModel {
    pub feature_names: Vec<String>,
    pub weights: Vec<f64>,
    pub intercept: f64,
    /// Whether the ridge fallback was needed.
    pub ridge: bool,
}

/// Least squares via the normal equations on standardised columns. Constant
/// columns get weight zero; a singular system is retried with a tiny ridge.
pub fn fit_linear(features: &ColumnMatrix, target: &[f64]) -> Result<TrendModel> {
    let n = features.n_rows();
    let p = features.n_cols();
    check_len("trend target", n, target.len())?;
    if n < p + 1 {
        return Err(Error::Data(format!("{n} rows cannot determine {p} weights and an intercept")));
    }
    if features.columns().iter().flatten().chain(target).any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite value in trend training data".into()));
    }
    let y_mean = target.iter().sum::<f64>() / n as f64;

    let mut means = vec![0.0; p];
    let mut scales = vec![0.0; p];
    let mut active = Vec::new();
    for (j, col) in features.columns().iter().enumerate() {
        let m = col.iter().sum::<f64>() / n as f64;
        let s = (col.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n as f64).sqrt();
        means[j] = m;
        scales[j] = s;
        if s > 1e-12 * m.abs().max(1.0) {
            active.push(j);
        }
    }

    let k = active.len();
    let mut weights = vec![0.0; p];
    let mut ridge = false;
    if k > 0 {
        let z = DMatrix::from_fn(n, k, |i, c| {
            let j = active[c];
            (features.column(j)[i] - means[j]) / scales[j]
        });
        let yc = DVector::from_iterator(n, target.iter().map(|v| v - y_mean));
        let xtx = z.tr_mul(&z);
        let xty = z.tr_mul(&yc);
        let solution = match xtx.clone().cholesky().filter(|_| well_conditioned(&xtx)) {
            Some(ch) => ch.solve(&xty),
            None => {
                ridge = true;
                let scale = xtx.diagonal().max().max(1.0);
                let reg = xtx + DMatrix::identity(k, k) * (RIDGE_FALLBACK * scale);
                reg.cholesky()
                    .ok_or_else(|| Error::Data("normal equations are singular even with ridge".into()))?
                    .solve(&xty)
            }
        };
        for (c, &j) in active.iter().enumerate() {
            weights[j] = solution[c] / scales[j];
        }
    }
    let intercept = y_mean - weights.iter().zip(&means).map(|(w, m)| w * m).sum::<f64>();
    if !intercept.is_finite() || weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::Data("trend fit produced non-finite weights".into()));
    }
    Ok(TrendModel {
        feature_names: features.names().to_vec(),
        weights,
        intercept,
        ridge,
    })
}

/// Rejects systems whose Cholesky pivots collapse relative to the diagonal.
fn well_conditioned(xtx: &DMatrix<f64>) -> bool {
    match xtx.clone().cholesky() {
        Some(ch) => {
            let l = ch.l();
            let max_diag = xtx.diagonal().max();
            (0..l.nrows()).all(|i| l[(i, i)] * l[(i, i)] > 1e-10 * max_diag)
        }
        None => false,
    }
}

impl TrendModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.intercept + self.weights.iter().zip(row).map(|(w, x)| w * x).sum::<f64>()
    }

    pub fn predict(&self, features: &ColumnMatrix) -> Result<Vec<f64>> {
        let idx = features.resolve(&self.feature_names)?;
        Ok((0..features.n_rows())
            .map(|i| {
                self.intercept
                    + self
                        .weights
                        .iter()
                        .zip(&idx)
                        .map(|(w, &j)| w * features.column(j)[i])
                        .sum::<f64>()
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn single(x: Vec<f64>) -> ColumnMatrix {
        ColumnMatrix::new(vec!["x".into()], vec![x]).unwrap()
    }

    #[test]
    fn exact_line_recovery() {
        let x: Vec<f64> = (0..20).map(|i| i as f64 * 0.5 - 3.0).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v + 5.0).collect();
        let m = fit_linear(&single(x), &y).unwrap();
        assert!((m.weights[0] - 3.0).abs() < 1e-8);
        assert!((m.intercept - 5.0).abs() < 1e-8);
        assert!(!m.ridge);
    }

    #[test]
    fn constant_target_is_intercept_only() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let m = fit_linear(&single(x), &[4.5; 10]).unwrap();
        assert!(m.weights[0].abs() < 1e-12);
        assert!((m.intercept - 4.5).abs() < 1e-12);
    }

    #[test]
    fn duplicate_columns_use_ridge() {
        let x: Vec<f64> = (0..30).map(|i| (i as f64).sqrt()).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let m = ColumnMatrix::new(vec!["a".into(), "b".into()], vec![x.clone(), x.clone()]).unwrap();
        let fit = fit_linear(&m, &y).unwrap();
        assert!(fit.ridge);
        assert!(fit.weights.iter().all(|w| w.is_finite()));
        // rank-deficiency oracle: only the sum of the duplicated weights is identified
        assert!((fit.weights[0] + fit.weights[1] - 2.0).abs() < 1e-6);
        let pred = fit.predict(&m).unwrap();
        for (p, t) in pred.iter().zip(&y) {
            assert!((p - t).abs() < 1e-6);
        }
    }

    #[test]
    fn too_few_rows() {
        let m = ColumnMatrix::new(vec!["a".into(), "b".into()], vec![vec![1.0, 2.0], vec![3.0, 1.0]]).unwrap();
        assert_eq!(fit_linear(&m, &[1.0, 2.0]).unwrap_err().class(), "data.invalid");
    }

    #[test]
    fn prediction_behaviour() {
        let zero = TrendModel {
            feature_names: vec!["x".into()],
            weights: vec![0.0],
            intercept: 2.0,
            ridge: false,
        };
        assert_eq!(zero.predict(&single(vec![1.0, 1e6])).unwrap(), vec![2.0, 2.0]);

        let x: Vec<f64> = (0..15).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| v * v).collect();
        let m = fit_linear(&single(x.clone()), &y).unwrap();
        let fitted = m.predict(&single(x)).unwrap();
        assert_eq!(fitted[3], m.predict_row(&[3.0]));
        let far = m.predict_row(&[28.0]);
        assert!(far.is_finite());
        assert!((far - (m.intercept + 28.0 * m.weights[0])).abs() < 1e-9);
        let renamed = ColumnMatrix::new(vec!["z".into()], vec![vec![1.0]]).unwrap();
        assert_eq!(m.predict(&renamed).unwrap_err().class(), "schema.mismatch");
    }

    proptest! {
        #[test]
        fn residuals_are_orthogonal(
            rows in prop::collection::vec((-10f64..10.0, -10f64..10.0, -5f64..5.0, -1f64..1.0), 12..80)
        ) {
            let a: Vec<f64> = rows.iter().map(|r| r.0).collect();
            let b: Vec<f64> = rows.iter().map(|r| r.1 * 100.0 + 2000.0).collect();
            let c: Vec<f64> = rows.iter().map(|r| r.2).collect();
            let y: Vec<f64> = rows.iter().map(|r| r.0 * 1.5 - r.2 + r.3 * 4.0 + r.0 * r.2).collect();
            let m = ColumnMatrix::new(vec!["a".into(), "b".into(), "c".into()], vec![a, b, c]).unwrap();
            let fit = fit_linear(&m, &y).unwrap();
            prop_assume!(!fit.ridge);
            let pred = fit.predict(&m).unwrap();
            let resid: Vec<f64> = y.iter().zip(&pred).map(|(t, p)| t - p).collect();
            let rnorm = resid.iter().map(|r| r * r).sum::<f64>().sqrt();
            prop_assert!(resid.iter().sum::<f64>().abs() <= 1e-6 * rnorm.max(1.0) * (y.len() as f64).sqrt());
            for col in m.columns() {
                let dot: f64 = resid.iter().zip(col).map(|(r, x)| r * x).sum();
                let cnorm = col.iter().map(|x| x * x).sum::<f64>().sqrt();
                prop_assert!(dot.abs() <= 1e-6 * rnorm.max(1.0) * cnorm);
            }
        }

        #[test]
        fn prediction_is_affine(
            x in prop::collection::vec(-100f64..100.0, 3),
            z in prop::collection::vec(-100f64..100.0, 3),
            alpha in -2f64..2.0,
        ) {
            let m = TrendModel {
                feature_names: vec!["a".into(), "b".into(), "c".into()],
                weights: vec![0.3, -2.0, 7.5],
                intercept: 11.0,
                ridge: false,
            };
            let mix: Vec<f64> = x.iter().zip(&z).map(|(u, v)| alpha * u + (1.0 - alpha) * v).collect();
            let lhs = m.predict_row(&mix);
            let rhs = alpha * m.predict_row(&x) + (1.0 - alpha) * m.predict_row(&z);
            prop_assert!((lhs - rhs).abs() < 1e-9 * (1.0 + lhs.abs()));
        }
    }
}
