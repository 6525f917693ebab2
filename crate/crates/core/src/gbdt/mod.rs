//! Gradient-boosted regression trees with second-order leaf values and
//! histogram split search.
//!
//! Each round evaluates the loss gradient and hessian at the current
//! predictions and grows one tree maximising
//! `G_L^2/(H_L+l) + G_R^2/(H_R+l) - G^2/(H+l)`, with leaf values
//! `-G/(H+l)`. Depth-1 trees give an additive model (see [`crate::gam`]).

mod histogram;
mod tree;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use histogram::{BinnedMatrix, FeatureBins};
pub use tree::{Node, RegressionTree};

use crate::error::{check_len, Error, Result};
use crate::losses::LossSpec;
use crate::matrix::ColumnMatrix;

/// Boosting hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoostParams {
    pub rounds: usize,
    pub max_depth: usize,
    /// Leaf budget for best-first growth; 0 means only depth limits the tree.
    pub max_leaves: usize,
    pub min_samples_leaf: usize,
    pub learning_rate: f64,
    pub min_gain: f64,
    pub lambda_l2: f64,
    pub histogram_bins: usize,
    /// Row fraction drawn per round (1.0 disables sampling).
    pub subsample: f64,
    /// Feature fraction drawn per round (1.0 disables sampling).
    pub colsample: f64,
    pub seed: u64,
}

impl Default for BoostParams {
    fn default() -> Self {
        BoostParams {
            rounds: 500,
            max_depth: 6,
            max_leaves: 0,
            min_samples_leaf: 20,
            learning_rate: 0.05,
            min_gain: 0.0,
            lambda_l2: 1.0,
            histogram_bins: 255,
            subsample: 1.0,
            colsample: 1.0,
            seed: 0,
        }
    }
}

impl BoostParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Parameter(m));
        if self.rounds == 0 {
            return bad("rounds must be >= 1".into());
        }
        if self.max_depth == 0 {
            return bad("max_depth must be >= 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad(format!("learning_rate must be in (0, 1], got {}", self.learning_rate));
        }
        if !(self.lambda_l2 >= 0.0) || !(self.min_gain >= 0.0) {
            return bad("lambda_l2 and min_gain must be >= 0".into());
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) || !(self.colsample > 0.0 && self.colsample <= 1.0) {
            return bad("subsample and colsample must be in (0, 1]".into());
        }
        if self.histogram_bins < 2 {
            return bad("histogram_bins must be >= 2".into());
        }
        Ok(())
    }

    fn grow_params(&self) -> tree::GrowParams {
        tree::GrowParams {
            max_depth: self.max_depth,
            max_leaves: if self.max_leaves == 0 {
                usize::MAX
            } else {
                self.max_leaves
            },
            min_samples_leaf: self.min_samples_leaf,
            min_gain: self.min_gain,
            lambda_l2: self.lambda_l2,
        }
    }
}

/// A fitted ensemble: `base_score + learning_rate * sum(tree(x))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    pub base_score: f64,
    pub learning_rate: f64,
    pub feature_names: Vec<String>,
    pub trees: Vec<RegressionTree>,
    /// Mean training loss after each round.
    pub training_loss: Vec<f64>,
}

impl GbdtModel {
    /// Prediction for a row in model feature order.
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let raw: f64 = self.trees.iter().map(|t| t.predict_row(row)).sum();
        self.base_score + self.learning_rate * raw
    }

    /// Predictions for every row of `features`, matching columns by name.
    pub fn predict(&self, features: &ColumnMatrix) -> Result<Vec<f64>> {
        let idx = features.resolve(&self.feature_names)?;
        let cols: Vec<&[f64]> = idx.iter().map(|&j| features.column(j)).collect();
        let mut row = vec![0.0; cols.len()];
        Ok((0..features.n_rows())
            .map(|i| {
                for (slot, c) in row.iter_mut().zip(&cols) {
                    *slot = c[i];
                }
                self.predict_row(&row)
            })
            .collect())
    }
}

/// Grows a single tree on precomputed gradients and hessians.
pub fn fit_tree(features: &ColumnMatrix, grad: &[f64], hess: &[f64], params: &BoostParams) -> Result<RegressionTree> {
    if features.n_rows() == 0 {
        return Err(Error::Data("cannot fit a tree on zero rows".into()));
    }
    check_len("gradient", features.n_rows(), grad.len())?;
    check_len("hessian", features.n_rows(), hess.len())?;
    if let Some(i) = hess.iter().position(|h| !(*h > 0.0)) {
        return Err(Error::LossContract(format!("hessian at row {i} is {} (must be > 0)", hess[i])));
    }
    let data = BinnedMatrix::build(features, params.histogram_bins)?;
    let rows = (0..features.n_rows() as u32).collect();
    let all: Vec<usize> = (0..features.n_cols()).collect();
    Ok(tree::grow(&data, grad, hess, rows, &all, &params.grow_params()))
}

/// Loss-minimising constant prediction.
fn base_score(loss: &LossSpec, targets: &[f64], weights: &[f64]) -> f64 {
    match loss {
        LossSpec::SquaredError | LossSpec::Etl(_) => {
            let (num, den) = targets
                .iter()
                .zip(weights)
                .fold((0.0, 0.0), |(n, d), (y, w)| (n + w * y, d + w));
            num / den
        }
        LossSpec::Evl(_) => {
            let mut s = targets.to_vec();
            s.sort_by(f64::total_cmp);
            let n = s.len();
            if n % 2 == 1 {
                s[n / 2]
            } else {
                (s[n / 2 - 1] + s[n / 2]) / 2.0
            }
        }
    }
}

/// Resets every leaf to the median residual of its rows, the usual leaf
/// output for absolute-error objectives whose hessian carries no scale.
fn renew_leaves(tree: &mut RegressionTree, features: &ColumnMatrix, targets: &[f64], pred: &[f64], rows: &[u32]) {
    let mut residuals: Vec<Vec<f64>> = vec![Vec::new(); tree.nodes.len()];
    for &i in rows {
        let i = i as usize;
        let leaf = tree.leaf_index_with(|f| features.column(f)[i]);
        residuals[leaf].push(targets[i] - pred[i]);
    }
    for (node, mut r) in tree.nodes.iter_mut().zip(residuals) {
        if let (Node::Leaf { value }, false) = (node, r.is_empty()) {
            r.sort_by(f64::total_cmp);
            *value = crate::features::quantile_sorted(&r, 0.5);
        }
    }
}

/// Fits a boosted ensemble.
///
/// `weights` are per-row sample weights for the squared-error family
/// (ETL weights come from [`crate::losses::etl_weights`]); `None` means all
/// ones. ETL requires explicit weights.
pub fn fit_gbdt(
    features: &ColumnMatrix,
    targets: &[f64],
    loss: &LossSpec,
    weights: Option<&[f64]>,
    params: &BoostParams,
) -> Result<GbdtModel> {
    params.validate()?;
    loss.validate()?;
    let n = features.n_rows();
    if n == 0 {
        return Err(Error::Data("cannot fit on zero rows".into()));
    }
    check_len("targets", n, targets.len())?;
    if let Some(i) = targets.iter().position(|v| !v.is_finite()) {
        return Err(Error::Data(format!("non-finite target at row {i}")));
    }
    let weights: Vec<f64> = match (weights, loss) {
        (Some(w), _) => {
            check_len("sample weights", n, w.len())?;
            if let Some(i) = w.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
                return Err(Error::Data(format!("sample weight at row {i} must be positive")));
            }
            w.to_vec()
        }
        (None, LossSpec::Etl(_)) => {
            return Err(Error::LossContract("ETL fit requires sample weights".into()));
        }
        (None, _) => vec![1.0; n],
    };

    let data = BinnedMatrix::build(features, params.histogram_bins)?;
    let base = base_score(loss, targets, &weights);
    let mut pred = vec![base; n];
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut trees = Vec::with_capacity(params.rounds);
    let mut training_loss = Vec::with_capacity(params.rounds);
    let grow = params.grow_params();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let all_rows: Vec<u32> = (0..n as u32).collect();
    let all_features: Vec<usize> = (0..features.n_cols()).collect();

    for _ in 0..params.rounds {
        for i in 0..n {
            let (_, g, h) = loss.value_grad_hess(pred[i], targets[i], weights[i]);
            grad[i] = g;
            hess[i] = h;
        }
        let rows = if params.subsample < 1.0 {
            let k = ((n as f64 * params.subsample).ceil() as usize).max(1);
            let mut r: Vec<u32> = sample(&mut rng, n, k).into_iter().map(|i| i as u32).collect();
            r.sort_unstable();
            r
        } else {
            all_rows.clone()
        };
        let cols = if params.colsample < 1.0 && !all_features.is_empty() {
            let m = all_features.len();
            let k = ((m as f64 * params.colsample).ceil() as usize).max(1);
            let mut c = sample(&mut rng, m, k).into_vec();
            c.sort_unstable();
            c
        } else {
            all_features.clone()
        };
        let mut tree = tree::grow(&data, &grad, &hess, rows.clone(), &cols, &grow);
        if matches!(loss, LossSpec::Evl(_)) {
            renew_leaves(&mut tree, features, targets, &pred, &rows);
        }
        let mut total = 0.0;
        for i in 0..n {
            let out = tree.predict_with(|f| features.column(f)[i]);
            pred[i] += params.learning_rate * out;
            total += loss.value_grad_hess(pred[i], targets[i], weights[i]).0;
        }
        training_loss.push(total / n as f64);
        trees.push(tree);
    }

    Ok(GbdtModel {
        base_score: base,
        learning_rate: params.learning_rate,
        feature_names: features.names().to_vec(),
        trees,
        training_loss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::{etl_value_grad_hess, EtlParams};
    use rand::{Rng, SeedableRng};

    fn matrix(cols: Vec<Vec<f64>>) -> ColumnMatrix {
        let names = (0..cols.len()).map(|j| format!("f{j}")).collect();
        ColumnMatrix::new(names, cols).unwrap()
    }

    fn loose(depth: usize, rounds: usize) -> BoostParams {
        BoostParams {
            rounds,
            max_depth: depth,
            min_samples_leaf: 1,
            lambda_l2: 0.0,
            learning_rate: 1.0,
            ..BoostParams::default()
        }
    }

    fn squared_grads(pred: f64, y: &[f64]) -> (Vec<f64>, Vec<f64>) {
        y.iter().map(|t| {
            let (_, g, h) = etl_value_grad_hess(pred, *t, 1.0);
            (g, h)
        }).unzip()
    }

    #[test]
    fn equal_targets_give_single_leaf() {
        let x = matrix(vec![vec![1.0, 2.0, 3.0, 4.0]]);
        let model = fit_gbdt(&x, &[5.0; 4], &LossSpec::SquaredError, None, &loose(3, 2)).unwrap();
        assert_eq!(model.base_score, 5.0);
        for t in &model.trees {
            assert_eq!(t.nodes, vec![Node::Leaf { value: 0.0 }]);
        }
    }

    #[test]
    fn two_point_split() {
        let x = matrix(vec![vec![0.0, 1.0]]);
        let y = [0.0, 10.0];
        let (g, h) = squared_grads(5.0, &y);
        let tree = fit_tree(&x, &g, &h, &loose(1, 1)).unwrap();
        // exhaustive: the only threshold is between 0 and 1
        match &tree.nodes[0] {
            Node::Split { feature, threshold, left, right, .. } => {
                assert_eq!((*feature, *threshold), (0, 0.5));
                assert_eq!(tree.nodes[*left], Node::Leaf { value: -5.0 });
                assert_eq!(tree.nodes[*right], Node::Leaf { value: 5.0 });
            }
            n => panic!("expected a split, got {n:?}"),
        }
    }

    #[test]
    fn forced_leaf_value() {
        let x = matrix(vec![vec![1.0, 1.0, 1.0]]);
        let g = [0.3, -1.2, 2.0];
        let h = [1.0, 0.5, 2.5];
        let p = BoostParams { lambda_l2: 1.5, ..loose(2, 1) };
        let tree = fit_tree(&x, &g, &h, &p).unwrap();
        let want = -(0.3 - 1.2 + 2.0) / (1.0 + 0.5 + 2.5 + 1.5);
        assert_eq!(tree.nodes, vec![Node::Leaf { value: want }]);
    }

    #[test]
    fn tree_errors() {
        let x = matrix(vec![vec![0.0, 1.0]]);
        assert_eq!(fit_tree(&x, &[1.0, 1.0], &[1.0, 0.0], &loose(1, 1)).unwrap_err().class(), "loss.contract");
        let empty = matrix(vec![vec![]]);
        assert_eq!(fit_tree(&empty, &[], &[], &loose(1, 1)).unwrap_err().class(), "data.invalid");
    }

    #[test]
    fn zero_rounds_rejected() {
        let x = matrix(vec![vec![0.0, 1.0]]);
        let p = BoostParams { rounds: 0, ..BoostParams::default() };
        assert_eq!(fit_gbdt(&x, &[0.0, 1.0], &LossSpec::SquaredError, None, &p).unwrap_err().class(), "param.invalid");
    }

    #[test]
    fn nan_in_training_features_rejected() {
        let x = matrix(vec![vec![0.0, f64::NAN]]);
        let err = fit_gbdt(&x, &[0.0, 1.0], &LossSpec::SquaredError, None, &loose(1, 1)).unwrap_err();
        assert_eq!(err.class(), "data.invalid");
    }

    #[test]
    fn step_function_converges() {
        let xs: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = xs.iter().map(|x| if *x < 4.0 { 1.0 } else if *x < 7.0 { 5.0 } else { -2.0 }).collect();
        let p = BoostParams { learning_rate: 0.5, ..loose(3, 60) };
        let model = fit_gbdt(&matrix(vec![xs]), &y, &LossSpec::SquaredError, None, &p).unwrap();
        let rmse = model.training_loss.last().unwrap().sqrt();
        assert!(rmse < 1e-6, "rmse {rmse}");
    }

    #[test]
    fn unit_etl_weights_match_squared_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cols: Vec<Vec<f64>> = (0..3).map(|_| (0..80).map(|_| rng.random_range(0.0..10.0)).collect()).collect();
        let y: Vec<f64> = (0..80).map(|i| cols[0][i] * 2.0 - cols[2][i] + rng.random_range(-1.0..1.0)).collect();
        let x = matrix(cols);
        let p = BoostParams { rounds: 20, max_depth: 3, min_samples_leaf: 3, ..BoostParams::default() };
        let sq = fit_gbdt(&x, &y, &LossSpec::SquaredError, None, &p).unwrap();
        let etl = fit_gbdt(&x, &y, &LossSpec::Etl(EtlParams::default()), Some(&vec![1.0; 80]), &p).unwrap();
        assert_eq!(sq, etl);
    }

    #[test]
    fn predict_consistency_and_schema() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let cols: Vec<Vec<f64>> = (0..2).map(|_| (0..50).map(|_| rng.random_range(-5.0..5.0)).collect()).collect();
        let y: Vec<f64> = (0..50).map(|i| cols[0][i].sin() + cols[1][i]).collect();
        let x = matrix(cols);
        let p = BoostParams { rounds: 15, max_depth: 2, min_samples_leaf: 2, ..BoostParams::default() };
        let m = fit_gbdt(&x, &y, &LossSpec::SquaredError, None, &p).unwrap();
        let batch = m.predict(&x).unwrap();
        for (i, b) in batch.iter().enumerate() {
            // loop oracle: base + lr * sum of per-tree traversals
            let row = x.row(i);
            let mut acc = 0.0;
            for t in &m.trees {
                acc += t.predict_row(&row);
            }
            assert_eq!(*b, m.base_score + m.learning_rate * acc);
        }
        // reordered columns still resolve by name
        let swapped = x.select_columns(&["f1", "f0"]).unwrap();
        assert_eq!(m.predict(&swapped).unwrap(), batch);
        let missing = x.select_columns(&["f0"]).unwrap();
        assert_eq!(m.predict(&missing).unwrap_err().class(), "schema.mismatch");
    }

    #[test]
    fn zero_tree_model_predicts_base() {
        let m = GbdtModel {
            base_score: 3.5,
            learning_rate: 0.1,
            feature_names: vec!["a".into()],
            trees: vec![],
            training_loss: vec![],
        };
        let x = ColumnMatrix::new(vec!["a".into()], vec![vec![1.0, 2.0]]).unwrap();
        assert_eq!(m.predict(&x).unwrap(), vec![3.5, 3.5]);
    }

    #[test]
    fn single_stump_traversal() {
        let m = GbdtModel {
            base_score: 1.0,
            learning_rate: 0.5,
            feature_names: vec!["a".into()],
            trees: vec![RegressionTree {
                nodes: vec![
                    Node::Split { feature: 0, threshold: 2.0, left: 1, right: 2, default_left: false, gain: 1.0 },
                    Node::Leaf { value: -4.0 },
                    Node::Leaf { value: 6.0 },
                ],
                depth: 1,
            }],
            training_loss: vec![],
        };
        assert_eq!(m.predict_row(&[1.0]), 1.0 + 0.5 * -4.0);
        assert_eq!(m.predict_row(&[2.5]), 1.0 + 0.5 * 6.0);
        assert_eq!(m.predict_row(&[f64::NAN]), 1.0 + 0.5 * 6.0);
    }

    #[test]
    fn missing_routes_to_heavier_child() {
        let x = matrix(vec![vec![0.0, 0.0, 0.0, 1.0]]);
        let y = [0.0, 0.0, 0.0, 10.0];
        let (g, h) = squared_grads(2.5, &y);
        let tree = fit_tree(&x, &g, &h, &loose(1, 1)).unwrap();
        assert!(matches!(tree.nodes[0], Node::Split { default_left: true, .. }));
    }

    #[test]
    fn subsampling_is_seeded() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cols: Vec<Vec<f64>> = (0..4).map(|_| (0..100).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
        let y: Vec<f64> = (0..100).map(|i| cols[1][i] * 3.0).collect();
        let x = matrix(cols);
        let p = BoostParams { rounds: 10, max_depth: 2, min_samples_leaf: 2, subsample: 0.6, colsample: 0.5, seed: 42, ..BoostParams::default() };
        let a = fit_gbdt(&x, &y, &LossSpec::SquaredError, None, &p).unwrap();
        let b = fit_gbdt(&x, &y, &LossSpec::SquaredError, None, &p).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn max_leaves_caps_growth() {
        let xs: Vec<f64> = (0..64).map(f64::from).collect();
        let y: Vec<f64> = xs.iter().map(|x| (x * 0.7).sin() * 10.0).collect();
        let p = BoostParams { max_leaves: 5, ..loose(6, 1) };
        let m = fit_gbdt(&matrix(vec![xs]), &y, &LossSpec::SquaredError, None, &p).unwrap();
        assert_eq!(m.trees[0].n_leaves(), 5);
    }
}
