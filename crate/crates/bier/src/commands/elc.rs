use std::collections::BTreeMap;

use anyhow::{bail, Result};
use bier_core::elc::{evaluate, knn_label, kshot_subsample, majority_label, probe_fit, ElcInstance, ProbeConfig};
use bier_core::rng::substream;
use bier_core::store::{EmbeddingIndex, Metric};
use bier_core::typer::{Representation, TypingModel};
use rayon::prelude::*;

use super::{metrics, representations};
use crate::checkpoint::{self, hash_hex};
use crate::config::RunConfig;
use crate::formats::{read_elc, write_elc_dump, write_elc_results, ElcDumpRow, ElcResultRow};
use crate::snapshot::{self, SnapshotHeader};

pub fn embed_all(instances: &[ElcInstance], model: &TypingModel, rep: Representation) -> Result<Vec<Vec<f64>>> {
    Ok(instances.par_iter().map(|i| model.embed(&i.mention, &i.context, rep)).collect::<bier_core::Result<_>>()?)
}

fn index_from(
    instances: &[ElcInstance],
    vectors: &[Vec<f64>],
    prune: Option<f64>,
) -> bier_core::Result<EmbeddingIndex<String>> {
    let mut index = match prune {
        Some(t) => EmbeddingIndex::with_pruning(t),
        None => EmbeddingIndex::new(),
    };
    for (i, (inst, v)) in instances.iter().zip(vectors).enumerate() {
        index.add(i.to_string(), v.clone(), inst.label.clone())?;
    }
    index.freeze();
    Ok(index)
}

fn knn_predict(queries: &[Vec<f64>], index: &EmbeddingIndex<String>, metric: Metric) -> Result<Vec<String>> {
    Ok(queries.par_iter().map(|q| knn_label(q, index, metric).map(str::to_owned)).collect::<bier_core::Result<_>>()?)
}

/// 1-nearest-neighbor classification over the full training set and, when
/// `k_list` is set, over K-shot subsamples drawn with `kshot_seeds` derived
/// seeds each. Optionally fits the frozen linear probe.
pub fn eval_elc(cfg: &RunConfig) -> Result<String> {
    cfg.check_keys(&[
        "checkpoint",
        "elc_train",
        "elc_dev",
        "elc_test",
        "metric",
        "representation",
        "k_list",
        "kshot_seeds",
        "probe",
        "probe_epochs",
        "probe_lr",
        "probe_batch",
        "prune",
        "index_dense",
        "index_sparse",
        "save_index",
    ])?;
    let seed = cfg.seed()?;
    let model = checkpoint::load(&cfg.input("checkpoint")?)?;
    // dev joins the retrieval pool; there is no model selection to hold it out for
    let mut train = read_elc(&cfg.input("elc_train")?)?;
    if let Some(dev) = cfg.optional_input("elc_dev")? {
        train.extend(read_elc(&dev)?);
    }
    let test = read_elc(&cfg.input("elc_test")?)?;
    if train.is_empty() || test.is_empty() {
        bail!("ELC train and test sets must be non-empty");
    }
    let metric_list = metrics(cfg, &[Metric::L2, Metric::Dot])?;
    let reps = representations(cfg)?;
    let k_list: Vec<usize> = match cfg.list("k_list") {
        Some(ks) => ks.iter().map(|k| k.parse()).collect::<Result<_, _>>()?,
        None => Vec::new(),
    };
    let kshot_seeds: u64 = cfg.parse_or("kshot_seeds", 5)?;
    let prune: Option<f64> = cfg.get("prune").map(|_| cfg.parse_required("prune")).transpose()?;
    let probe = cfg.flag("probe", false)?;
    let probe_cfg = ProbeConfig {
        epochs: cfg.parse_or("probe_epochs", ProbeConfig::default().epochs)?,
        learning_rate: cfg.parse_or("probe_lr", ProbeConfig::default().learning_rate)?,
        batch_size: cfg.parse_or("probe_batch", ProbeConfig::default().batch_size)?,
        seed: substream(seed, "probe"),
    };
    let save_index = cfg.flag("save_index", true)?;
    let out = cfg.out_dir()?;
    let vocab_hash = hash_hex(model.types.hash());
    let gold: Vec<String> = test.iter().map(|i| i.label.clone()).collect();

    let mut results = Vec::new();
    let majority = majority_label(&train).unwrap_or_default().to_owned();
    results.push(ElcResultRow {
        representation: "majority".into(),
        metric: "-".into(),
        k: None,
        seed,
        accuracy: evaluate(&vec![majority; test.len()], &gold)?,
    });

    for rep in reps {
        let train_vecs = embed_all(&train, &model, rep)?;
        let test_vecs = embed_all(&test, &model, rep)?;
        let index = match cfg.optional_input(&format!("index_{}", rep.as_str()))? {
            Some(p) => {
                let (header, index) = snapshot::load(&p)?;
                if header.vocab_hash != vocab_hash {
                    bail!(
                        "index {} was built with type vocabulary {}, checkpoint has {}",
                        p.display(),
                        header.vocab_hash,
                        vocab_hash
                    );
                }
                if header.representation != rep.as_str() {
                    bail!("index {} holds {} vectors, expected {}", p.display(), header.representation, rep.as_str());
                }
                index
            }
            None => {
                let index = index_from(&train, &train_vecs, prune)?;
                if save_index {
                    let header = SnapshotHeader {
                        dim: 0,
                        count: 0,
                        metric_hints: metric_list.iter().map(|m| m.as_str().to_owned()).collect(),
                        representation: rep.as_str().into(),
                        vocab_hash: vocab_hash.clone(),
                        pruning: None,
                        frozen: true,
                    };
                    snapshot::save(&out.join(format!("index_{}.bin", rep.as_str())), &index, header)?;
                }
                index
            }
        };

        let mut dump = Vec::new();
        for &metric in &metric_list {
            let preds = knn_predict(&test_vecs, &index, metric)?;
            results.push(ElcResultRow {
                representation: rep.as_str().into(),
                metric: metric.as_str().into(),
                k: None,
                seed,
                accuracy: evaluate(&preds, &gold)?,
            });
            dump.extend(preds.into_iter().zip(&gold).enumerate().map(|(i, (p, g))| ElcDumpRow {
                instance_id: i.to_string(),
                metric: metric.as_str().into(),
                predicted: p,
                gold: g.clone(),
            }));
        }
        write_elc_dump(&out.join(format!("elc_predictions_{}.tsv", rep.as_str())), &dump)?;

        let position: BTreeMap<&ElcInstance, usize> = train.iter().enumerate().map(|(i, t)| (t, i)).collect();
        for &k in &k_list {
            for replicate in 0..kshot_seeds {
                let derived = substream(seed, &format!("kshot:K={k}:rep={replicate}"));
                let subset = kshot_subsample(&train, k, derived)?;
                let vecs: Vec<Vec<f64>> = subset.iter().map(|s| train_vecs[position[s]].clone()).collect();
                let index = index_from(&subset, &vecs, prune)?;
                for &metric in &metric_list {
                    results.push(ElcResultRow {
                        representation: rep.as_str().into(),
                        metric: metric.as_str().into(),
                        k: Some(k),
                        seed: derived,
                        accuracy: evaluate(&knn_predict(&test_vecs, &index, metric)?, &gold)?,
                    });
                }
            }
        }

        if probe {
            let mut labels: Vec<String> = train.iter().map(|i| i.label.clone()).collect();
            labels.sort();
            labels.dedup();
            let targets: Vec<usize> =
                train.iter().map(|i| labels.binary_search(&i.label).expect("label collected above")).collect();
            let (w, _) = probe_fit(&train_vecs, &targets, labels, &probe_cfg)?;
            let preds: Vec<String> = test_vecs.iter().map(|v| w.predict(v).to_owned()).collect();
            results.push(ElcResultRow {
                representation: rep.as_str().into(),
                metric: "probe".into(),
                k: None,
                seed: probe_cfg.seed,
                accuracy: evaluate(&preds, &gold)?,
            });
        }
    }
    write_elc_results(&out.join("elc_results.tsv"), &results)?;
    let summary: Vec<String> = results
        .iter()
        .filter(|r| r.k.is_none())
        .map(|r| format!("{}/{} {:.4}", r.representation, r.metric, r.accuracy))
        .collect();
    Ok(format!("ELC on {} test instances: {}", test.len(), summary.join(", ")))
}
