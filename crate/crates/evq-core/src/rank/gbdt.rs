//! Gradient boosting with squared error: exact greedy splits over the
//! midpoints of sorted unique feature values, mean-residual leaves.
//! Squared error keeps every boosting step hand-checkable: the training
//! MSE is provably non-increasing for any learning rate in (0, 2).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::GbdtParams;
use crate::{Error, Result};

use super::features::{FeatureVector, FEATURE_REGISTRY, REGISTRY_VERSION};

/// A binary regression tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Leaf { value: f64 },
    Split { feature: usize, threshold: f64, left: Box<TreeNode>, right: Box<TreeNode> },
}

impl TreeNode {
    pub fn eval(&self, fv: &[f64]) -> f64 {
        match self {
            TreeNode::Leaf { value } => *value,
            TreeNode::Split { feature, threshold, left, right } => {
                if fv[*feature] < *threshold {
                    left.eval(fv)
                } else {
                    right.eval(fv)
                }
            }
        }
    }

    fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    /// True when every leaf is exactly zero.
    pub fn is_zero(&self) -> bool {
        match self {
            TreeNode::Leaf { value } => *value == 0.0,
            TreeNode::Split { left, right, .. } => left.is_zero() && right.is_zero(),
        }
    }
}

/// The additive ensemble: `predict = base + lr · Σ tree(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GBDTModel {
    pub registry_version: u32,
    pub base: f64,
    pub lr: f64,
    pub trees: Vec<TreeNode>,
}

impl GBDTModel {
    pub fn save(&self, path: &Path) -> Result<()> {
        let json =
            serde_json::to_string(self).map_err(|e| Error::Internal(e.to_string()))?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: GBDTModel =
            serde_json::from_str(&text).map_err(|e| Error::BadArtifact(e.to_string()))?;
        if model.registry_version != REGISTRY_VERSION {
            return Err(Error::BadArtifact(format!(
                "feature registry version {} (expected {})",
                model.registry_version, REGISTRY_VERSION
            )));
        }
        Ok(model)
    }
}

/// Training result with the per-round training MSE curve.
#[derive(Debug, Clone)]
pub struct GbdtTrainOutcome {
    pub model: GBDTModel,
    pub mse_curve: Vec<f64>,
}

/// Fits the ensemble to binary (or real) labels by residual boosting.
pub fn gbdt_train(
    samples: &[(FeatureVector, f64)],
    config: &GbdtParams,
) -> Result<GbdtTrainOutcome> {
    if samples.len() < 2 {
        return Err(Error::invalid("gbdt training needs at least two samples"));
    }
    let n = samples.len();
    let xs: Vec<&[f64]> = samples.iter().map(|(fv, _)| fv.0.as_slice()).collect();
    if xs.iter().any(|x| x.len() != FEATURE_REGISTRY.len()) {
        return Err(Error::invalid("feature vector does not match the registry"));
    }
    let ys: Vec<f64> = samples.iter().map(|(_, y)| *y).collect();

    let base = ys.iter().sum::<f64>() / n as f64;
    let mut preds = vec![base; n];
    let mut trees = Vec::with_capacity(config.n_trees);
    let mut mse_curve = Vec::with_capacity(config.n_trees);

    for _ in 0..config.n_trees {
        let residuals: Vec<f64> = ys.iter().zip(&preds).map(|(y, p)| y - p).collect();
        let idx: Vec<usize> = (0..n).collect();
        let tree = fit_tree(&xs, &residuals, &idx, config.max_depth, config.min_leaf);
        for (i, p) in preds.iter_mut().enumerate() {
            *p += config.lr * tree.eval(xs[i]);
        }
        debug_assert!(tree.depth() <= config.max_depth);
        trees.push(tree);
        mse_curve.push(
            ys.iter()
                .zip(&preds)
                .map(|(y, p)| (y - p) * (y - p))
                .sum::<f64>()
                / n as f64,
        );
    }
    Ok(GbdtTrainOutcome {
        model: GBDTModel { registry_version: REGISTRY_VERSION, base, lr: config.lr, trees },
        mse_curve,
    })
}

fn mean(values: &[f64], idx: &[usize]) -> f64 {
    idx.iter().map(|&i| values[i]).sum::<f64>() / idx.len() as f64
}

fn sse(values: &[f64], idx: &[usize]) -> f64 {
    let m = mean(values, idx);
    idx.iter().map(|&i| (values[i] - m) * (values[i] - m)).sum()
}

fn fit_tree(
    xs: &[&[f64]],
    residuals: &[f64],
    idx: &[usize],
    depth_left: usize,
    min_leaf: usize,
) -> TreeNode {
    if depth_left == 0 || idx.len() < 2 * min_leaf {
        return TreeNode::Leaf { value: mean(residuals, idx) };
    }
    let parent_sse = sse(residuals, idx);
    let mut best: Option<(f64, usize, f64)> = None; // (gain, feature, threshold)
    for feature in 0..xs[0].len() {
        let mut values: Vec<f64> = idx.iter().map(|&i| xs[i][feature]).collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        values.dedup();
        for w in values.windows(2) {
            let threshold = (w[0] + w[1]) / 2.0;
            let (mut left, mut right) = (Vec::new(), Vec::new());
            for &i in idx {
                if xs[i][feature] < threshold {
                    left.push(i);
                } else {
                    right.push(i);
                }
            }
            if left.len() < min_leaf || right.len() < min_leaf {
                continue;
            }
            let gain = parent_sse - sse(residuals, &left) - sse(residuals, &right);
            let better = match best {
                None => true,
                // strict improvement only; ties keep the ear(lier) split
                Some((bg, bf, bt)) => {
                    gain > bg + 1e-12
                        || ((gain - bg).abs() <= 1e-12 && (feature, threshold) < (bf, bt))
                }
            };
            if better && gain > 1e-12 {
                best = Some((gain, feature, threshold));
            }
        }
    }
    match best {
        None => TreeNode::Leaf { value: mean(residuals, idx) },
        Some((_, feature, threshold)) => {
            let (mut left, mut right) = (Vec::new(), Vec::new());
            for &i in idx {
                if xs[i][feature] < threshold {
                    left.push(i);
                } else {
                    right.push(i);
                }
            }
            TreeNode::Split {
                feature,
                threshold,
                left: Box::new(fit_tree(xs, residuals, &left, depth_left - 1, min_leaf)),
                right: Box::new(fit_tree(xs, residuals, &right, depth_left - 1, min_leaf)),
            }
        }
    }
}

/// `base + lr · Σ leaf values` along each tree's root-to-leaf path.
/// Errors when the vector does not match the registry.
pub fn gbdt_predict(model: &GBDTModel, fv: &FeatureVector) -> Result<f64> {
    if fv.0.len() != FEATURE_REGISTRY.len() || model.registry_version != REGISTRY_VERSION {
        return Err(Error::invalid(
            "feature vector/model do not match the feature registry",
        ));
    }
    Ok(model.base + model.lr * model.trees.iter().map(|t| t.eval(&fv.0)).sum::<f64>())
}
