//! Per-sample losses for second-order boosting: squared error, the
//! external-variable triggered loss (ETL) and the extreme value loss (EVL)
//! baseline.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::matrix::ColumnMatrix;

/// Smallest hessian handed to the tree learner.
pub const HESSIAN_FLOOR: f64 = 1e-6;

/// Clamp for `u` inside the logarithm of the EVL penalty.
pub const EVL_LOG_FLOOR: f64 = 1e-12;

/// Parameters of the triggered loss: weights over external features and the
/// trigger threshold, in the units of the weighted sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EtlParams {
    pub lambdas: BTreeMap<String, f64>,
    pub threshold: f64,
}

impl Default for EtlParams {
    fn default() -> Self {
        EtlParams {
            lambdas: BTreeMap::from([("temperature".to_string(), 1.0)]),
            threshold: 26.0,
        }
    }
}

impl EtlParams {
    pub fn validate(&self) -> Result<()> {
        if let Some((name, l)) = self.lambdas.iter().find(|(_, l)| !(**l >= 0.0) || !l.is_finite()) {
            return Err(Error::Config(format!("lambda for `{name}` must be finite and >= 0, got {l}")));
        }
        if !self.lambdas.values().any(|l| *l > 0.0) {
            return Err(Error::Config("ETL needs at least one positive lambda".into()));
        }
        if !self.threshold.is_finite() {
            return Err(Error::Config("ETL threshold must be finite".into()));
        }
        Ok(())
    }

    /// Per-row weights from the named external columns of `features`.
    pub fn weights(&self, features: &ColumnMatrix) -> Result<Vec<f64>> {
        let mut columns = Vec::with_capacity(self.lambdas.len());
        for name in self.lambdas.keys() {
            columns.push(
                features
                    .column_by_name(name)
                    .map_err(|_| Error::UnknownFeature(name.clone()))?,
            );
        }
        let lambdas: Vec<f64> = self.lambdas.values().copied().collect();
        etl_weights(&columns, &lambdas, self.threshold)
    }
}

/// Parameters of the EVL baseline. The extreme bound is `mu + k * sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvlParams {
    pub mu: f64,
    pub sigma: f64,
    pub k: f64,
    pub lambda1: f64,
}

impl EvlParams {
    pub fn epsilon(&self) -> f64 {
        self.mu + self.k * self.sigma
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) {
            return Err(Error::Config(format!("EVL sigma must be > 0, got {}", self.sigma)));
        }
        if !(self.lambda1 >= 0.0) {
            return Err(Error::Config(format!("EVL lambda1 must be >= 0, got {}", self.lambda1)));
        }
        if !(self.epsilon() > 0.0) {
            return Err(Error::Config(format!(
                "EVL bound mu + k*sigma must be > 0, got {}",
                self.epsilon()
            )));
        }
        Ok(())
    }
}

/// Loss selection for boosting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossSpec {
    #[default]
    SquaredError,
    Etl(EtlParams),
    Evl(EvlParams),
}

impl LossSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            LossSpec::SquaredError => Ok(()),
            LossSpec::Etl(p) => p.validate(),
            LossSpec::Evl(p) => p.validate(),
        }
    }

    /// Per-sample `(value, grad, hess)` at `pred`. `weight` is the sample
    /// weight; only the squared-error family uses it.
    #[inline]
    pub fn value_grad_hess(&self, pred: f64, target: f64, weight: f64) -> (f64, f64, f64) {
        match self {
            LossSpec::SquaredError | LossSpec::Etl(_) => etl_value_grad_hess(pred, target, weight),
            LossSpec::Evl(p) => evl_value_grad_hess(pred, target, p),
        }
    }
}

/// Trigger score: 1 up to the threshold, then `2 / (1 + exp(-(t - k)))`.
/// Continuous at `k`, non-decreasing, bounded by 2.
pub fn score_function(t: f64, k: f64) -> f64 {
    if t > k {
        2.0 / (1.0 + (-(t - k)).exp())
    } else {
        1.0
    }
}

/// ETL sample weights `S(sum_q lambda_q * x_q, k)` for each row of the
/// given external columns.
pub fn etl_weights(columns: &[&[f64]], lambdas: &[f64], k: f64) -> Result<Vec<f64>> {
    check_len("ETL lambdas", columns.len(), lambdas.len())?;
    let n = columns.first().map_or(0, |c| c.len());
    for c in columns {
        check_len("ETL external column", n, c.len())?;
    }
    Ok((0..n)
        .map(|i| {
            let t: f64 = columns.iter().zip(lambdas).map(|(c, l)| l * c[i]).sum();
            score_function(t, k)
        })
        .collect())
}

/// Weighted squared error `w * (pred - target)^2` with its derivatives.
#[inline]
pub fn etl_value_grad_hess(pred: f64, target: f64, weight: f64) -> (f64, f64, f64) {
    let r = pred - target;
    (weight * r * r, 2.0 * weight * r, 2.0 * weight)
}

/// Extreme degree of a prediction relative to the bound `mu + k * sigma`.
pub fn evl_u(pred: f64, params: &EvlParams) -> Result<f64> {
    params.validate()?;
    Ok(extreme_degree(pred, params.epsilon()))
}

#[inline]
fn extreme_degree(pred: f64, eps: f64) -> f64 {
    if pred > eps {
        (pred - eps) / pred
    } else {
        0.0
    }
}

/// Absolute error plus `lambda1 * (-u ln u)` with `u` clamped inside the log.
///
/// The absolute term contributes subgradient 0 at `pred == target`; the
/// returned hessian is floored at [`HESSIAN_FLOOR`].
#[inline]
pub fn evl_value_grad_hess(pred: f64, target: f64, p: &EvlParams) -> (f64, f64, f64) {
    let r = pred - target;
    let abs_grad = if r > 0.0 {
        1.0
    } else if r < 0.0 {
        -1.0
    } else {
        0.0
    };
    let eps = p.epsilon();
    let (mut value, mut grad, mut hess) = (r.abs(), abs_grad, 0.0);
    if pred > eps && p.lambda1 > 0.0 {
        let u = (pred - eps) / pred;
        let du = eps / (pred * pred);
        let d2u = -2.0 * eps / (pred * pred * pred);
        let (pen, dpen, d2pen) = if u > EVL_LOG_FLOOR {
            (-u * u.ln(), -u.ln() - 1.0, -1.0 / u)
        } else {
            let c = -EVL_LOG_FLOOR.ln();
            (u * c, c, 0.0)
        };
        value += p.lambda1 * pen;
        grad += p.lambda1 * dpen * du;
        hess += p.lambda1 * (d2pen * du * du + dpen * d2u);
    }
    (value, grad, hess.max(HESSIAN_FLOOR))
}
