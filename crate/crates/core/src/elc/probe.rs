use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::ElcInstance;
use crate::math::{dot, Matrix};
use crate::typer::{Representation, TypingModel};
use crate::{rng, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self { epochs: 4, learning_rate: 0.5, batch_size: 32, seed: 0 }
    }
}

/// Softmax classifier over frozen features.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeWeights {
    pub labels: Vec<String>,
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl ProbeWeights {
    pub fn zeros(labels: Vec<String>, dim: usize) -> Self {
        let n = labels.len();
        Self { labels, weights: Matrix::zeros(n, dim), bias: vec![0.0; n] }
    }

    fn logits(&self, x: &[f64]) -> Vec<f64> {
        (0..self.labels.len()).map(|c| dot(self.weights.row(c), x) + self.bias[c]).collect()
    }

    pub fn predict_index(&self, x: &[f64]) -> usize {
        let logits = self.logits(x);
        let mut best = 0;
        for (c, &z) in logits.iter().enumerate() {
            if z > logits[best] {
                best = c;
            }
        }
        best
    }

    pub fn predict(&self, x: &[f64]) -> &str {
        &self.labels[self.predict_index(x)]
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| libm::exp(z - max)).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Mean cross-entropy over `rows` and its gradient `(∂W, ∂b)`.
pub fn probe_loss_and_grad(
    w: &ProbeWeights,
    features: &[Vec<f64>],
    targets: &[usize],
    rows: &[usize],
) -> (f64, Matrix, Vec<f64>) {
    let mut gw = Matrix::zeros(w.weights.rows(), w.weights.cols());
    let mut gb = vec![0.0; w.bias.len()];
    let mut loss = 0.0;
    let scale = 1.0 / rows.len() as f64;
    for &i in rows {
        let mut p = softmax(&w.logits(&features[i]));
        loss -= libm::log(p[targets[i]].max(f64::MIN_POSITIVE));
        p[targets[i]] -= 1.0;
        gw.add_outer(&p, &features[i], scale);
        gb.iter_mut().zip(&p).for_each(|(g, d)| *g += d * scale);
    }
    (loss * scale, gw, gb)
}

/// Minibatch gradient descent from zero weights; returns the final weights
/// and the full-data loss after each epoch.
pub fn probe_fit(
    features: &[Vec<f64>],
    targets: &[usize],
    labels: Vec<String>,
    config: &ProbeConfig,
) -> Result<(ProbeWeights, Vec<f64>)> {
    if features.is_empty() {
        return Err(Error::EmptyInput("training set"));
    }
    let mut distinct: Vec<usize> = targets.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::InvalidArgument("probe needs at least two classes".into()));
    }
    if config.batch_size == 0 {
        return Err(Error::InvalidArgument("batch size must be positive".into()));
    }
    let mut w = ProbeWeights::zeros(labels, features[0].len());
    let all: Vec<usize> = (0..features.len()).collect();
    let mut curve = Vec::with_capacity(config.epochs);
    let mut order = all.clone();
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng::named_rng(config.seed, &alloc::format!("probe-epoch:{epoch}")));
        for batch in order.chunks(config.batch_size) {
            let (loss, gw, gb) = probe_loss_and_grad(&w, features, targets, batch);
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch: epoch + 1, batch: 0 });
            }
            let lr = config.learning_rate;
            w.weights.as_mut_slice().iter_mut().zip(gw.as_slice()).for_each(|(p, g)| *p -= lr * g);
            w.bias.iter_mut().zip(&gb).for_each(|(p, g)| *p -= lr * g);
        }
        let (loss, _, _) = probe_loss_and_grad(&w, features, targets, &all);
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch: epoch + 1, batch: 0 });
        }
        curve.push(loss);
    }
    Ok((w, curve))
}

/// Trains the probe on embeddings from a frozen model. Labels are indexed
/// in sorted order.
pub fn probe_train(
    train: &[ElcInstance],
    model: &TypingModel,
    rep: Representation,
    config: &ProbeConfig,
) -> Result<ProbeWeights> {
    let mut labels: Vec<String> = train.iter().map(|i| i.label.clone()).collect();
    labels.sort();
    labels.dedup();
    let mut features = Vec::with_capacity(train.len());
    let mut targets = Vec::with_capacity(train.len());
    for inst in train {
        features.push(model.embed(&inst.mention, &inst.context, rep)?);
        targets.push(labels.binary_search(&inst.label).expect("label collected above"));
    }
    probe_fit(&features, &targets, labels, config).map(|(w, _)| w)
}
