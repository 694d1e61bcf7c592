use std::time::Instant;

use anyhow::{anyhow, bail, Result};
use bier_core::corpus::{build_vocabulary, TypeVocabulary};
use bier_core::encoder::{build_token_vocab, EncoderConfig};
use bier_core::typer::{train_timed, Reduction, TrainConfig, TypingModel};
use serde::Serialize;

use super::write_json;
use crate::checkpoint;
use crate::config::RunConfig;
use crate::formats::{read_lines, read_triples, write_training_log};

#[derive(Debug, Serialize)]
struct TrainSummary {
    best_epoch: Option<usize>,
    final_train_loss: Option<f64>,
    best_dev_macro_f1: Option<f64>,
    parameters: usize,
}

fn train_config(cfg: &RunConfig, seed: u64) -> Result<TrainConfig> {
    let d = TrainConfig::default();
    let clip_norm = match cfg.get("clip_norm") {
        Some("none") => None,
        Some(_) => Some(cfg.parse_required("clip_norm")?),
        None => d.clip_norm,
    };
    let reduction = match cfg.get("reduction").unwrap_or("sum") {
        "sum" => Reduction::Sum,
        "mean" => Reduction::Mean,
        other => bail!("unknown reduction {other:?}"),
    };
    Ok(TrainConfig {
        learning_rate: cfg.parse_or("learning_rate", d.learning_rate)?,
        batch_size: cfg.parse_or("batch_size", d.batch_size)?,
        epochs: cfg.parse_or("epochs", d.epochs)?,
        beta1: cfg.parse_or("beta1", d.beta1)?,
        beta2: cfg.parse_or("beta2", d.beta2)?,
        adam_eps: cfg.parse_or("adam_eps", d.adam_eps)?,
        clip_norm,
        seed,
        threshold: cfg.parse_or("threshold", d.threshold)?,
        reduction,
    })
}

/// Trains a typing model and writes the checkpoint, the per-epoch log and a
/// summary. Wall-clock times are logged only when `record_wall_time` is set,
/// so that default runs are byte-reproducible.
pub fn train(cfg: &RunConfig) -> Result<String> {
    cfg.check_keys(&[
        "train",
        "dev",
        "vocab",
        "token_vocab_size",
        "dim",
        "layers",
        "heads",
        "max_len",
        "learning_rate",
        "batch_size",
        "epochs",
        "beta1",
        "beta2",
        "adam_eps",
        "clip_norm",
        "threshold",
        "reduction",
        "record_wall_time",
        "checkpoint_name",
    ])?;
    let seed = cfg.seed()?;
    let train_set = read_triples(&cfg.input("train")?)?;
    if train_set.is_empty() {
        bail!("training set is empty");
    }
    let dev_set = match cfg.optional_input("dev")? {
        Some(p) => read_triples(&p)?,
        None => Vec::new(),
    };
    let types = match cfg.optional_input("vocab")? {
        Some(p) => TypeVocabulary::from_names(read_lines(&p)?)?,
        None => build_vocabulary(&train_set, 1)?,
    };
    let tokens = build_token_vocab(
        train_set.iter().flat_map(|t| [t.mention.as_str(), t.context.as_str()]),
        cfg.parse_or("token_vocab_size", 4096)?,
    )?;
    let d = EncoderConfig::new(tokens.len());
    let enc = EncoderConfig {
        vocab_size: tokens.len(),
        dim: cfg.parse_or("dim", d.dim)?,
        layers: cfg.parse_or("layers", d.layers)?,
        heads: cfg.parse_or("heads", d.heads)?,
        max_len: cfg.parse_or("max_len", d.max_len)?,
    };
    let tc = train_config(cfg, seed)?;
    let out = cfg.out_dir()?;

    let model = TypingModel::init(tokens, types, enc, seed)?;
    let parameters = model.encoder.num_params() + model.type_embeddings.0.as_slice().len();
    let start = Instant::now();
    let real_clock = || start.elapsed().as_secs_f64();
    let zero_clock = || 0.0;
    let clock: &dyn Fn() -> f64 = if cfg.flag("record_wall_time", false)? { &real_clock } else { &zero_clock };
    let (model, log) =
        train_timed(model, &train_set, &dev_set, &tc, clock).map_err(|e| anyhow!("training failed: {e}"))?;

    let name = cfg.get("checkpoint_name").unwrap_or("model.ckpt");
    checkpoint::save(&out.join(name), &model)?;
    write_training_log(&out.join("train_log.tsv"), &log.epochs)?;
    let final_loss = log.epochs.last().map(|e| e.train_loss);
    if final_loss.is_some_and(|l| !l.is_finite()) {
        bail!("final training loss is not finite");
    }
    let best_dev = log
        .epochs
        .iter()
        .filter_map(|e| e.dev_macro_f1)
        .fold(None, |m: Option<f64>, f| Some(m.map_or(f, |m| m.max(f))));
    write_json(
        &out.join("train_summary.json"),
        &TrainSummary {
            best_epoch: log.best_epoch,
            final_train_loss: final_loss,
            best_dev_macro_f1: best_dev,
            parameters,
        },
    )?;
    Ok(format!(
        "trained {} epochs on {} triples; best epoch {:?}, dev macro-F1 {}",
        log.epochs.len(),
        train_set.len(),
        log.best_epoch,
        best_dev.map_or_else(|| String::from("n/a"), |f| format!("{f:.4}"))
    ))
}
