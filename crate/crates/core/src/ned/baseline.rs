use alloc::vec;
use alloc::vec::Vec;

use super::{argmax, NedEmbedder, NedInstance};
use crate::error::check_len;
use crate::math::{dot, sigmoid};
use crate::{Error, Result};

/// `[x1; x2; x1⊙x2; |x1−x2|]`.
pub fn baseline_features(x1: &[f64], x2: &[f64]) -> Result<Vec<f64>> {
    check_len(x1.len(), x2.len())?;
    let mut f = Vec::with_capacity(4 * x1.len());
    f.extend_from_slice(x1);
    f.extend_from_slice(x2);
    f.extend(x1.iter().zip(x2).map(|(a, b)| a * b));
    f.extend(x1.iter().zip(x2).map(|(a, b)| (a - b).abs()));
    Ok(f)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineWeights {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl BaselineWeights {
    pub fn zeros(dim: usize) -> Self {
        Self { weights: vec![0.0; dim], bias: 0.0 }
    }

    pub fn probability(&self, features: &[f64]) -> Result<f64> {
        check_len(self.weights.len(), features.len())?;
        Ok(sigmoid(dot(&self.weights, features) + self.bias))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticConfig {
    pub steps: usize,
    pub learning_rate: f64,
    /// Penalty `λ/2·‖w‖²`; the bias is not penalized.
    pub l2: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self { steps: 500, learning_rate: 0.5, l2: 1e-4 }
    }
}

/// Mean binary log loss plus the L2 penalty, and its gradient
/// `(∂w, ∂b)`.
pub fn logistic_loss_and_grad(
    w: &BaselineWeights,
    features: &[Vec<f64>],
    labels: &[bool],
    l2: f64,
) -> Result<(f64, Vec<f64>, f64)> {
    check_len(features.len(), labels.len())?;
    if features.is_empty() {
        return Err(Error::EmptyInput("training set"));
    }
    let n = features.len() as f64;
    let mut gw = vec![0.0; w.weights.len()];
    let mut gb = 0.0;
    let mut loss = 0.0;
    for (x, &y) in features.iter().zip(labels) {
        check_len(w.weights.len(), x.len())?;
        let z = dot(&w.weights, x) + w.bias;
        // log(1 + e^{-z}) for positives, log(1 + e^{z}) for negatives
        let signed = if y { -z } else { z };
        loss += softplus(signed);
        let d = sigmoid(z) - if y { 1.0 } else { 0.0 };
        gw.iter_mut().zip(x).for_each(|(g, xi)| *g += d * xi / n);
        gb += d / n;
    }
    let penalty: f64 = w.weights.iter().map(|v| v * v).sum::<f64>() * l2 / 2.0;
    gw.iter_mut().zip(&w.weights).for_each(|(g, v)| *g += l2 * v);
    Ok((loss / n + penalty, gw, gb))
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + libm::log1p(libm::exp(-x))
    } else {
        libm::log1p(libm::exp(x))
    }
}

/// Full-batch gradient descent from zero weights.
pub fn fit_logistic(features: &[Vec<f64>], labels: &[bool], config: &LogisticConfig) -> Result<BaselineWeights> {
    check_len(features.len(), labels.len())?;
    if features.is_empty() {
        return Err(Error::EmptyInput("training set"));
    }
    if labels.iter().all(|&y| y) || labels.iter().all(|&y| !y) {
        return Err(Error::InvalidArgument("logistic regression needs both positive and negative examples".into()));
    }
    let mut w = BaselineWeights::zeros(features[0].len());
    for step in 0..config.steps {
        let (loss, gw, gb) = logistic_loss_and_grad(&w, features, labels, config.l2)?;
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch: step + 1, batch: 0 });
        }
        w.weights.iter_mut().zip(&gw).for_each(|(p, g)| *p -= config.learning_rate * g);
        w.bias -= config.learning_rate * gb;
    }
    Ok(w)
}

fn instance_features(instance: &NedInstance, embedder: &dyn NedEmbedder) -> Result<Vec<Vec<f64>>> {
    instance.validate()?;
    let m = embedder.mention(&instance.mention, &instance.context)?;
    instance.candidates.iter().map(|c| baseline_features(&m, &embedder.candidate(&c.title, &c.description)?)).collect()
}

/// Gold candidates are positives and every other candidate a negative.
pub fn baseline_train(
    instances: &[NedInstance],
    embedder: &dyn NedEmbedder,
    config: &LogisticConfig,
) -> Result<BaselineWeights> {
    if instances.is_empty() {
        return Err(Error::EmptyInput("training set"));
    }
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for inst in instances {
        for (i, f) in instance_features(inst, embedder)?.into_iter().enumerate() {
            features.push(f);
            labels.push(i == inst.gold);
        }
    }
    fit_logistic(&features, &labels, config)
}

/// `prior + p_classifier` per candidate, unnormalized.
pub fn baseline_scores(
    instance: &NedInstance,
    weights: &BaselineWeights,
    embedder: &dyn NedEmbedder,
) -> Result<Vec<f64>> {
    instance_features(instance, embedder)?
        .iter()
        .zip(&instance.candidates)
        .map(|(f, c)| Ok(c.prior + weights.probability(f)?))
        .collect()
}

pub fn baseline_predict(
    instance: &NedInstance,
    weights: &BaselineWeights,
    embedder: &dyn NedEmbedder,
) -> Result<usize> {
    let scores = baseline_scores(instance, weights, embedder)?;
    argmax(&scores).ok_or(Error::EmptyInput("candidate set"))
}
