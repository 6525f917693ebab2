//! Additive model `phi_0 + sum_q phi_q(x_q)` extracted from a depth-1
//! boosted ensemble.
//!
//! Every stump splits one feature, so the ensemble regroups by feature into
//! piecewise-constant shape functions. Each shape is mean-centered over the
//! training rows and the offsets move into the intercept.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::gbdt::{fit_gbdt, BoostParams, GbdtModel, Node};
use crate::losses::LossSpec;
use crate::matrix::ColumnMatrix;

/// Piecewise-constant curve. Segment `i` covers
/// `(breakpoints[i-1], breakpoints[i]]`; the outer segments extend to
/// infinity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeFunction {
    pub feature: String,
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
    /// Contribution for a missing input.
    pub missing_value: f64,
}

impl ShapeFunction {
    pub fn zero(feature: impl Into<String>) -> Self {
        ShapeFunction {
            feature: feature.into(),
            breakpoints: vec![],
            values: vec![0.0],
            missing_value: 0.0,
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        if x.is_nan() {
            self.missing_value
        } else {
            self.values[self.breakpoints.partition_point(|b| *b < x)]
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }

    /// Builds the sum of `(threshold, left, right, default_left)` stumps.
    pub fn from_stumps(feature: impl Into<String>, stumps: &[(f64, f64, f64, bool)]) -> Self {
        let mut breakpoints: Vec<f64> = stumps.iter().map(|s| s.0).collect();
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();
        // segment i lies below breakpoints[i]; the last lies above all
        let values = (0..=breakpoints.len())
            .map(|i| {
                stumps
                    .iter()
                    .map(|&(t, l, r, _)| match breakpoints.get(i) {
                        Some(&upper) if upper <= t => l,
                        _ => r,
                    })
                    .sum()
            })
            .collect();
        let missing_value = stumps.iter().map(|&(_, l, r, dl)| if dl { l } else { r }).sum();
        ShapeFunction {
            feature: feature.into(),
            breakpoints,
            values,
            missing_value,
        }
    }

    fn shift(&mut self, by: f64) {
        self.values.iter_mut().for_each(|v| *v -= by);
        self.missing_value -= by;
    }
}

/// Per-feature decomposition of one prediction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Contributions {
    pub intercept: f64,
    pub values: Vec<f64>,
    pub prediction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GamModel {
    pub intercept: f64,
    pub feature_names: Vec<String>,
    pub shapes: Vec<ShapeFunction>,
    pub residual_mean: f64,
    pub residual_std: f64,
}

impl GamModel {
    /// Converts a depth-1 ensemble. `train` and `targets` are the rows it was
    /// fitted on; they fix the centering and the residual statistics.
    pub fn from_gbdt(model: &GbdtModel, train: &ColumnMatrix, targets: &[f64]) -> Result<GamModel> {
        check_len("targets", train.n_rows(), targets.len())?;
        let lr = model.learning_rate;
        let p = model.feature_names.len();
        let mut stumps: Vec<Vec<(f64, f64, f64, bool)>> = vec![Vec::new(); p];
        let mut intercept = model.base_score;
        for tree in &model.trees {
            match tree.nodes.as_slice() {
                [Node::Leaf { value }] => intercept += lr * value,
                [Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    default_left,
                    ..
                }, rest @ ..]
                    if rest.len() == 2 =>
                {
                    let leaf = |k: usize| match tree.nodes[k] {
                        Node::Leaf { value } => Ok(value),
                        _ => Err(Error::Parameter("additive conversion needs depth-1 trees".into())),
                    };
                    stumps[*feature].push((*threshold, lr * leaf(*left)?, lr * leaf(*right)?, *default_left));
                }
                _ => return Err(Error::Parameter("additive conversion needs depth-1 trees".into())),
            }
        }
        let idx = train.resolve(&model.feature_names)?;
        let n = train.n_rows();
        let mut shapes = Vec::with_capacity(p);
        for (q, name) in model.feature_names.iter().enumerate() {
            let mut shape = if stumps[q].is_empty() {
                ShapeFunction::zero(name.clone())
            } else {
                ShapeFunction::from_stumps(name.clone(), &stumps[q])
            };
            if n > 0 && !shape.is_zero() {
                let col = train.column(idx[q]);
                let center = col.iter().map(|&x| shape.eval(x)).sum::<f64>() / n as f64;
                shape.shift(center);
                intercept += center;
            }
            shapes.push(shape);
        }
        let mut gam = GamModel {
            intercept,
            feature_names: model.feature_names.clone(),
            shapes,
            residual_mean: 0.0,
            residual_std: 0.0,
        };
        if n > 0 {
            let pred = gam.predict(train)?;
            let resid: Vec<f64> = targets.iter().zip(&pred).map(|(y, p)| y - p).collect();
            let mean = resid.iter().sum::<f64>() / n as f64;
            let var = resid.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n as f64;
            gam.residual_mean = mean;
            gam.residual_std = var.sqrt();
        }
        Ok(gam)
    }

    pub fn shape_of(&self, feature: &str) -> Result<&ShapeFunction> {
        self.shapes
            .iter()
            .find(|s| s.feature == feature)
            .ok_or_else(|| Error::UnknownName(feature.to_string()))
    }

    /// Contributions for a row in model feature order.
    pub fn contributions(&self, row: &[f64]) -> Result<Contributions> {
        check_len("row", self.shapes.len(), row.len())?;
        let values: Vec<f64> = self.shapes.iter().zip(row).map(|(s, &x)| s.eval(x)).collect();
        let prediction = self.intercept + values.iter().sum::<f64>();
        Ok(Contributions {
            intercept: self.intercept,
            values,
            prediction,
        })
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.intercept + self.shapes.iter().zip(row).map(|(s, &x)| s.eval(x)).sum::<f64>()
    }

    pub fn predict(&self, features: &ColumnMatrix) -> Result<Vec<f64>> {
        let idx = features.resolve(&self.feature_names)?;
        Ok((0..features.n_rows())
            .map(|i| {
                self.intercept
                    + self
                        .shapes
                        .iter()
                        .zip(&idx)
                        .map(|(s, &j)| s.eval(features.column(j)[i]))
                        .sum::<f64>()
            })
            .collect())
    }
}

/// Fits depth-1 boosted trees with `loss` and converts them. ETL weights are
/// computed from the loss's external columns in `features`.
pub fn fit_gam(features: &ColumnMatrix, targets: &[f64], loss: &LossSpec, params: &BoostParams) -> Result<GamModel> {
    Ok(fit_gam_with_source(features, targets, loss, params)?.0)
}

/// As [`fit_gam`], also returning the underlying ensemble.
pub fn fit_gam_with_source(
    features: &ColumnMatrix,
    targets: &[f64],
    loss: &LossSpec,
    params: &BoostParams,
) -> Result<(GamModel, GbdtModel)> {
    if params.max_depth != 1 {
        return Err(Error::Parameter(format!(
            "additive model requires max_depth = 1, got {}",
            params.max_depth
        )));
    }
    let weights = match loss {
        LossSpec::Etl(p) => Some(p.weights(features)?),
        _ => None,
    };
    let gbdt = fit_gbdt(features, targets, loss, weights.as_deref(), params)?;
    let gam = GamModel::from_gbdt(&gbdt, features, targets)?;
    Ok((gam, gbdt))
}
