use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::model::TypingModel;
use super::optim::clip_global_norm;
use super::{bce_loss, macro_f1, predict_types, Adam, LabelVector};
use crate::corpus::Triple;
use crate::encoder::{self, EncoderInput, EncoderParams};
use crate::math::Matrix;
use crate::{rng, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reduction {
    /// Sum of per-example losses, as written in the objective.
    Sum,
    Mean,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub clip_norm: Option<f64>,
    pub seed: u64,
    /// Decision threshold for dev macro-F1.
    pub threshold: f64,
    pub reduction: Reduction,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 16,
            epochs: 10,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            clip_norm: Some(1.0),
            seed: 0,
            threshold: 0.5,
            reduction: Reduction::Sum,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidArgument("learning rate must be positive".into()));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::InvalidArgument("threshold must lie in (0, 1)".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Mean per-example summed BCE over the epoch's batches.
    pub train_loss: f64,
    pub dev_macro_f1: Option<f64>,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were returned; `None` for the initialization.
    pub best_epoch: Option<usize>,
}

/// Accumulates `scale · ∂BCE/∂θ` for one example into the gradient buffers
/// and returns the (unscaled) loss.
///
/// The logit gradient is `t - t*`, the derivative of the unclamped loss; it
/// equals the clamped loss's derivative wherever the clamp is inactive.
pub fn example_gradients(
    model: &TypingModel,
    input: &EncoderInput,
    labels: &LabelVector,
    encoder_grads: &mut EncoderParams,
    type_grads: &mut Matrix,
    scale: f64,
) -> Result<f64> {
    let trace = encoder::forward(input, &model.encoder)?;
    let h = trace.output().as_slice();
    let t = predict_types(h, &model.type_embeddings)?;
    let loss = bce_loss(&t, labels)?;
    let dlogits: Vec<f64> =
        t.as_slice().iter().zip(&labels.0).map(|(&p, &y)| scale * (p - if y { 1.0 } else { 0.0 })).collect();
    type_grads.add_outer(&dlogits, h, 1.0);
    let e = &model.type_embeddings.0;
    let mut dh = vec![0.0; e.cols()];
    // dh = Eᵀ · dlogits
    for (j, &g) in dlogits.iter().enumerate() {
        if g != 0.0 {
            dh.iter_mut().zip(e.row(j)).for_each(|(d, w)| *d += g * w);
        }
    }
    encoder::backward(&trace, &model.encoder, &dh, encoder_grads)?;
    Ok(loss)
}

struct Prepared {
    inputs: Vec<EncoderInput>,
    labels: Vec<LabelVector>,
}

fn prepare(model: &TypingModel, triples: &[Triple]) -> Result<Prepared> {
    let mut inputs = Vec::with_capacity(triples.len());
    let mut labels = Vec::with_capacity(triples.len());
    for t in triples {
        inputs.push(model.input(&t.mention, &t.context)?);
        labels.push(LabelVector(model.types.encode(t.types())?));
    }
    Ok(Prepared { inputs, labels })
}

fn dev_f1(model: &TypingModel, dev: &Prepared, threshold: f64) -> Result<f64> {
    let preds = dev
        .inputs
        .iter()
        .map(|input| {
            let h = encoder::encode(input, &model.encoder)?;
            predict_types(h.as_slice(), &model.type_embeddings)
        })
        .collect::<Result<Vec<_>>>()?;
    macro_f1(&preds, &dev.labels, threshold)
}

/// [`train_timed`] without a clock; `wall_seconds` stays zero.
pub fn train(
    model: TypingModel,
    train_set: &[Triple],
    dev_set: &[Triple],
    config: &TrainConfig,
) -> Result<(TypingModel, TrainingLog)> {
    train_timed(model, train_set, dev_set, config, &|| 0.0)
}

/// Minimizes summed BCE with Adam, evaluating dev macro-F1 after every
/// epoch and returning the parameters of the best dev epoch (the last epoch
/// when there is no dev set). `clock` reports elapsed seconds for the log.
pub fn train_timed(
    model: TypingModel,
    train_set: &[Triple],
    dev_set: &[Triple],
    config: &TrainConfig,
    clock: &dyn Fn() -> f64,
) -> Result<(TypingModel, TrainingLog)> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(Error::EmptyInput("training set"));
    }
    let train_data = prepare(&model, train_set)?;
    let dev_data = prepare(&model, dev_set)?;
    let mut log = TrainingLog::default();
    if config.epochs == 0 {
        return Ok((model, log));
    }

    let mut model = model;
    let mut enc_grads = model.encoder.zeros_like();
    let mut type_grads = Matrix::zeros(model.type_embeddings.num_types(), model.type_embeddings.dim());
    let mut shapes: Vec<usize> = model.encoder.tensors().iter().map(|(_, t)| t.len()).collect();
    shapes.push(type_grads.as_slice().len());
    let mut adam = Adam::new(&shapes, config.learning_rate, config.beta1, config.beta2, config.adam_eps);
    let mut best: Option<(f64, TypingModel)> = None;
    let start = clock();

    let mut order: Vec<usize> = (0..train_data.inputs.len()).collect();
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng::named_rng(config.seed, &alloc::format!("epoch:{epoch}")));
        let mut epoch_loss = 0.0;
        for (batch_idx, batch) in order.chunks(config.batch_size).enumerate() {
            enc_grads.tensors_mut().into_iter().for_each(|t| t.fill(0.0));
            type_grads.as_mut_slice().fill(0.0);
            let scale = match config.reduction {
                Reduction::Sum => 1.0,
                Reduction::Mean => 1.0 / batch.len() as f64,
            };
            let mut batch_loss = 0.0;
            for &i in batch {
                batch_loss += example_gradients(
                    &model,
                    &train_data.inputs[i],
                    &train_data.labels[i],
                    &mut enc_grads,
                    &mut type_grads,
                    scale,
                )?;
            }
            if !batch_loss.is_finite() {
                return Err(Error::Diverged { epoch, batch: batch_idx });
            }
            epoch_loss += batch_loss;

            let mut grads: Vec<&mut [f64]> = enc_grads.tensors_mut();
            grads.push(type_grads.as_mut_slice());
            if let Some(max_norm) = config.clip_norm {
                let norm = clip_global_norm(&mut grads, max_norm);
                if !norm.is_finite() {
                    return Err(Error::Diverged { epoch, batch: batch_idx });
                }
            }
            let grads: Vec<&[f64]> = grads.into_iter().map(|g| &*g).collect();
            let mut params = model.encoder.tensors_mut();
            params.push(model.type_embeddings.0.as_mut_slice());
            adam.update(params, &grads);
        }

        let dev_macro_f1 =
            if dev_data.inputs.is_empty() { None } else { Some(dev_f1(&model, &dev_data, config.threshold)?) };
        log.epochs.push(EpochRecord {
            epoch,
            train_loss: epoch_loss / train_data.inputs.len() as f64,
            dev_macro_f1,
            wall_seconds: clock() - start,
        });
        if let Some(f1) = dev_macro_f1 {
            if best.as_ref().is_none_or(|(b, _)| f1 > *b) {
                best = Some((f1, model.clone()));
                log.best_epoch = Some(epoch);
            }
        }
    }
    match best {
        Some((_, m)) => Ok((m, log)),
        None => {
            log.best_epoch = Some(config.epochs);
            Ok((model, log))
        }
    }
}
