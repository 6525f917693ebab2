use serde::{Deserialize, Serialize};

use super::histogram::BinnedMatrix;

/// A node of a regression tree. Rows with `x[feature] <= threshold` go left;
/// missing values follow `default_left`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        default_left: bool,
        gain: f64,
    },
}

/// Binary regression tree stored as a flat node array rooted at index 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<Node>,
    pub depth: usize,
}

impl RegressionTree {
    pub fn leaf(value: f64) -> Self {
        RegressionTree {
            nodes: vec![Node::Leaf { value }],
            depth: 0,
        }
    }

    /// Raw leaf output for a row given in model feature order.
    #[inline]
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.predict_with(|f| row[f])
    }

    #[inline]
    pub fn predict_with(&self, value_of: impl Fn(usize) -> f64) -> f64 {
        match self.nodes[self.leaf_index_with(value_of)] {
            Node::Leaf { value } => value,
            Node::Split { .. } => unreachable!("leaf_index_with ends on a leaf"),
        }
    }

    /// Index of the leaf node a row falls into.
    #[inline]
    pub fn leaf_index_with(&self, value_of: impl Fn(usize) -> f64) -> usize {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                Node::Leaf { .. } => return idx,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    default_left,
                    ..
                } => {
                    let x = value_of(*feature);
                    idx = if x.is_nan() {
                        if *default_left {
                            *left
                        } else {
                            *right
                        }
                    } else if x <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    /// Splits as `(feature, threshold)` in node order.
    pub fn splits(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Split { feature, threshold, .. } => Some((*feature, *threshold)),
            Node::Leaf { .. } => None,
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct GrowParams {
    pub max_depth: usize,
    pub max_leaves: usize,
    pub min_samples_leaf: usize,
    pub min_gain: f64,
    pub lambda_l2: f64,
}

#[derive(Debug, Clone, Copy)]
struct Split {
    feature: usize,
    bin: usize,
    gain: f64,
    left_hess: f64,
    right_hess: f64,
}

struct Open {
    node: usize,
    rows: Vec<u32>,
    depth: usize,
    split: Option<Split>,
}

#[inline]
fn score(g: f64, h: f64, lambda: f64) -> f64 {
    g * g / (h + lambda)
}

#[inline]
pub(crate) fn leaf_value(g: f64, h: f64, lambda: f64) -> f64 {
    -g / (h + lambda)
}

/// Grows one tree best-first on the given rows. Among equal gains the lowest
/// feature index, then the lowest threshold, wins.
pub(crate) fn grow(
    data: &BinnedMatrix,
    grad: &[f64],
    hess: &[f64],
    rows: Vec<u32>,
    features: &[usize],
    p: &GrowParams,
) -> RegressionTree {
    let (g, h) = sums(&rows, grad, hess);
    let mut nodes = vec![Node::Leaf {
        value: leaf_value(g, h, p.lambda_l2),
    }];
    let mut depth = 0;
    let root_split = if p.max_depth > 0 {
        best_split(data, grad, hess, &rows, features, p)
    } else {
        None
    };
    let mut open = vec![Open {
        node: 0,
        rows,
        depth: 0,
        split: root_split,
    }];
    let mut leaves = 1;
    while leaves < p.max_leaves {
        // highest gain; earliest node among ties
        let Some(pick) = open
            .iter()
            .enumerate()
            .filter_map(|(k, o)| o.split.map(|s| (k, s.gain, o.node)))
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.2.cmp(&a.2)))
            .map(|x| x.0)
        else {
            break;
        };
        let cand = open.swap_remove(pick);
        let split = cand.split.expect("filtered");
        let codes = &data.codes[split.feature];
        let (left_rows, right_rows): (Vec<u32>, Vec<u32>) = cand
            .rows
            .iter()
            .partition(|&&r| (codes[r as usize] as usize) <= split.bin);
        let left = nodes.len();
        let right = left + 1;
        for child_rows in [&left_rows, &right_rows] {
            let (cg, ch) = sums(child_rows, grad, hess);
            nodes.push(Node::Leaf {
                value: leaf_value(cg, ch, p.lambda_l2),
            });
        }
        nodes[cand.node] = Node::Split {
            feature: split.feature,
            threshold: data.bins[split.feature].thresholds[split.bin],
            left,
            right,
            default_left: split.left_hess >= split.right_hess,
            gain: split.gain,
        };
        leaves += 1;
        let child_depth = cand.depth + 1;
        depth = depth.max(child_depth);
        for (node, child_rows) in [(left, left_rows), (right, right_rows)] {
            let split = if child_depth < p.max_depth {
                best_split(data, grad, hess, &child_rows, features, p)
            } else {
                None
            };
            open.push(Open {
                node,
                rows: child_rows,
                depth: child_depth,
                split,
            });
        }
    }
    RegressionTree { nodes, depth }
}

fn sums(rows: &[u32], grad: &[f64], hess: &[f64]) -> (f64, f64) {
    rows.iter().fold((0.0, 0.0), |(g, h), &r| {
        (g + grad[r as usize], h + hess[r as usize])
    })
}

fn best_split(
    data: &BinnedMatrix,
    grad: &[f64],
    hess: &[f64],
    rows: &[u32],
    features: &[usize],
    p: &GrowParams,
) -> Option<Split> {
    if rows.len() < 2 * p.min_samples_leaf.max(1) {
        return None;
    }
    let (g_total, h_total) = sums(rows, grad, hess);
    let parent = score(g_total, h_total, p.lambda_l2);
    let n_total = rows.len();
    let mut best: Option<Split> = None;
    let mut hist_g = Vec::new();
    let mut hist_h = Vec::new();
    let mut hist_n = Vec::new();
    for &f in features {
        let nb = data.bins[f].n_bins();
        if nb < 2 {
            continue;
        }
        hist_g.clear();
        hist_g.resize(nb, 0.0);
        hist_h.clear();
        hist_h.resize(nb, 0.0);
        hist_n.clear();
        hist_n.resize(nb, 0usize);
        let codes = &data.codes[f];
        for &r in rows {
            let b = codes[r as usize] as usize;
            hist_g[b] += grad[r as usize];
            hist_h[b] += hess[r as usize];
            hist_n[b] += 1;
        }
        let (mut gl, mut hl, mut nl) = (0.0, 0.0, 0usize);
        for b in 0..nb - 1 {
            gl += hist_g[b];
            hl += hist_h[b];
            nl += hist_n[b];
            let nr = n_total - nl;
            if hist_n[b] == 0 || nl < p.min_samples_leaf.max(1) {
                continue;
            }
            if nr < p.min_samples_leaf.max(1) {
                break;
            }
            let gr = g_total - gl;
            let hr = h_total - hl;
            let gain = score(gl, hl, p.lambda_l2) + score(gr, hr, p.lambda_l2) - parent;
            if gain > p.min_gain && best.is_none_or(|s| gain > s.gain) {
                best = Some(Split {
                    feature: f,
                    bin: b,
                    gain,
                    left_hess: hl,
                    right_hess: hr,
                });
            }
        }
    }
    best
}
