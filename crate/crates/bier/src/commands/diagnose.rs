use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use anyhow::{bail, Context, Result};
use bier_core::diagnostics::{
    combined_oracle_accuracy, counterfactual_neighbor, rank_divergence_with, render_combined_table,
    render_combined_tsv, render_rank_tsv, top_types, type_attribution, MissingRank, OracleAccuracy, PredictionRecord,
    RankRow, TaskSummary,
};
use bier_core::store::{EmbeddingIndex, Metric};
use bier_core::typer::{Representation, TypingModel};
use serde::Serialize;

use super::elc::embed_all;
use super::write_json;
use crate::checkpoint;
use crate::config::RunConfig;
use crate::formats::{read_elc, read_elc_dump, read_ned, read_ned_dump, write_tsv};

/// `(id, predicted, gold)` rows of one dump restricted to one metric.
type Predictions = BTreeMap<String, (String, String)>;

fn ned_predictions(path: &Path, metric: &str) -> Result<Predictions> {
    let mut out = BTreeMap::new();
    for r in read_ned_dump(path)?.into_iter().filter(|r| r.metric == metric) {
        if out.insert(r.instance_id.clone(), (r.predicted.to_string(), r.gold.to_string())).is_some() {
            bail!("{}: instance {} listed twice for metric {metric}", path.display(), r.instance_id);
        }
    }
    Ok(out)
}

fn elc_predictions(path: &Path, metric: &str) -> Result<Predictions> {
    let mut out = BTreeMap::new();
    for r in read_elc_dump(path)?.into_iter().filter(|r| r.metric == metric) {
        if out.insert(r.instance_id.clone(), (r.predicted, r.gold)).is_some() {
            bail!("{}: instance {} listed twice for metric {metric}", path.display(), r.instance_id);
        }
    }
    Ok(out)
}

/// Joins the two dumps by id; any id present in only one of them is an error.
pub fn join_records(
    dense: &Predictions,
    sparse: &Predictions,
    mentions: &dyn Fn(&str) -> String,
) -> Result<Vec<PredictionRecord>> {
    let d: BTreeSet<&String> = dense.keys().collect();
    let s: BTreeSet<&String> = sparse.keys().collect();
    let only_dense: Vec<&str> = d.difference(&s).map(|x| x.as_str()).collect();
    let only_sparse: Vec<&str> = s.difference(&d).map(|x| x.as_str()).collect();
    if !only_dense.is_empty() || !only_sparse.is_empty() {
        bail!(
            "dense and sparse dumps cover different instances; only dense: [{}]; only sparse: [{}]",
            only_dense.join(", "),
            only_sparse.join(", ")
        );
    }
    if dense.is_empty() {
        bail!("dumps contain no rows for the requested metric");
    }
    let mut records = Vec::with_capacity(dense.len());
    for (id, (dp, dg)) in dense {
        let (sp, sg) = &sparse[id];
        if dg != sg {
            bail!("instance {id}: gold differs between dumps ({dg} vs {sg})");
        }
        records.push(PredictionRecord {
            example_id: id.clone(),
            mention: mentions(id),
            gold: dg.clone(),
            dense_pred: dp.clone(),
            sparse_pred: sp.clone(),
        });
    }
    // numeric ids sort numerically
    records.sort_by(|a, b| match (a.example_id.parse::<u64>(), b.example_id.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y),
        _ => a.example_id.cmp(&b.example_id),
    });
    Ok(records)
}

#[derive(Debug, Serialize)]
struct TaskReport {
    task: String,
    metric: String,
    n: u64,
    dense_correct: u64,
    sparse_correct: u64,
    combined_correct: u64,
    dense: f64,
    sparse: f64,
    combined: f64,
    delta: f64,
    z: Vec<String>,
    z_mentions: Vec<String>,
    rank_divergence: Option<Vec<RankRowJson>>,
}

#[derive(Debug, Serialize)]
struct RankRowJson {
    r#type: String,
    wrong_rank: usize,
    right_rank: usize,
    difference: usize,
}

#[derive(Debug, Serialize)]
struct CounterfactualJson {
    example_id: String,
    mention: String,
    gold: String,
    sparse_pred: String,
    top_types: Vec<(String, f64)>,
    neighbor_id: String,
    neighbor_attribution: Vec<(String, f64)>,
    counterfactual_id: String,
    counterfactual_rank: usize,
    counterfactual_attribution: Vec<(String, f64)>,
}

#[derive(Debug, Serialize)]
struct Report {
    tasks: Vec<TaskReport>,
    counterfactuals: Vec<CounterfactualJson>,
}

fn task_report(task: &str, metric: &str, records: &[PredictionRecord], acc: &OracleAccuracy) -> TaskReport {
    let by_id: BTreeMap<&str, &PredictionRecord> = records.iter().map(|r| (r.example_id.as_str(), r)).collect();
    let summary = summary(task, acc);
    TaskReport {
        task: task.into(),
        metric: metric.into(),
        n: acc.dense.total,
        dense_correct: acc.dense.correct,
        sparse_correct: acc.sparse.correct,
        combined_correct: acc.combined.correct,
        dense: summary.dense,
        sparse: summary.sparse,
        combined: summary.combined,
        delta: summary.delta(),
        z_mentions: acc.z.iter().map(|id| by_id[id.as_str()].mention.clone()).collect(),
        z: acc.z.clone(),
        rank_divergence: None,
    }
}

fn summary(task: &str, acc: &OracleAccuracy) -> TaskSummary {
    TaskSummary {
        task: task.into(),
        dense: acc.dense.percent(),
        sparse: acc.sparse.percent(),
        combined: acc.combined.percent(),
    }
}

/// Type-rank divergence between mentions the sparse model got wrong and
/// those it got right, using the model's own type vectors.
fn divergence(
    model: &TypingModel,
    texts: &[(String, String)],
    records: &[PredictionRecord],
    top_n: usize,
    threshold: usize,
    missing: MissingRank,
) -> Result<Option<Vec<RankRow>>> {
    let mut wrong = Vec::new();
    let mut right = Vec::new();
    for r in records {
        let i: usize =
            r.example_id.parse().with_context(|| format!("instance id {:?} is not a position", r.example_id))?;
        let (m, c) = texts.get(i).with_context(|| format!("instance {i} missing from the task data"))?;
        let t = model.sparse(m, c)?.into_inner();
        if r.sparse_correct() {
            right.push(t);
        } else {
            wrong.push(t);
        }
    }
    if wrong.is_empty() || right.is_empty() {
        return Ok(None);
    }
    let w: Vec<&[f64]> = wrong.iter().map(Vec::as_slice).collect();
    let r: Vec<&[f64]> = right.iter().map(Vec::as_slice).collect();
    Ok(Some(rank_divergence_with(&w, &r, &model.types, top_n, threshold, missing)?))
}

fn rank_json(rows: &[RankRow]) -> Vec<RankRowJson> {
    rows.iter()
        .map(|r| RankRowJson {
            r#type: r.type_name.clone(),
            wrong_rank: r.wrong_rank,
            right_rank: r.right_rank,
            difference: r.difference,
        })
        .collect()
}

/// Builds set Z and the oracle combination for each task whose dense and
/// sparse dumps are configured, and, given a checkpoint and the task data,
/// the type-rank divergence and ELC counterfactual tables.
pub fn diagnose(cfg: &RunConfig) -> Result<String> {
    cfg.check_keys(&[
        "ned_dense_dump",
        "ned_sparse_dump",
        "elc_dense_dump",
        "elc_sparse_dump",
        "metric",
        "ned_metric",
        "elc_metric",
        "checkpoint",
        "ned_test",
        "elc_train",
        "elc_dev",
        "elc_test",
        "top_n",
        "rank_threshold",
        "missing_rank",
        "counterfactual_types",
    ])?;
    cfg.seed()?;
    let top_n: usize = cfg.parse_or("top_n", 20)?;
    let threshold: usize = cfg.parse_or("rank_threshold", 50)?;
    let missing = match cfg.get("missing_rank").unwrap_or("past_end") {
        "past_end" => MissingRank::PastEnd,
        other => MissingRank::Fixed(other.parse().with_context(|| format!("missing_rank {other:?}"))?),
    };
    let attribution_n: usize = cfg.parse_or("counterfactual_types", 5)?;
    let model = cfg.optional_input("checkpoint")?.map(|p| checkpoint::load(&p)).transpose()?;
    let ned_test = cfg.optional_input("ned_test")?.map(|p| read_ned(&p)).transpose()?;
    let elc_test = cfg.optional_input("elc_test")?.map(|p| read_elc(&p)).transpose()?;
    let mut elc_train = cfg.optional_input("elc_train")?.map(|p| read_elc(&p)).transpose()?;
    if let (Some(train), Some(dev)) = (elc_train.as_mut(), cfg.optional_input("elc_dev")?) {
        train.extend(read_elc(&dev)?);
    }
    let metric_for = |task: &str, default: &str| -> String {
        cfg.get(&format!("{task}_metric")).or(cfg.get("metric")).unwrap_or(default).to_owned()
    };
    let out = cfg.out_dir()?;

    let mut tasks = Vec::new();
    let mut summaries = Vec::new();
    let mut counterfactuals = Vec::new();
    let mut rank_tables: Vec<(String, Vec<RankRow>)> = Vec::new();

    for task in ["ned", "elc"] {
        let (dense_path, sparse_path) = match (
            cfg.optional_input(&format!("{task}_dense_dump"))?,
            cfg.optional_input(&format!("{task}_sparse_dump"))?,
        ) {
            (Some(d), Some(s)) => (d, s),
            (None, None) => continue,
            _ => bail!("{task}: both dense and sparse dumps are required"),
        };
        let metric = metric_for(task, if task == "ned" { "cosine" } else { "l2" });
        if Metric::parse(&metric).is_none() {
            bail!("unknown metric {metric:?}");
        }
        let (dense, sparse) = if task == "ned" {
            (ned_predictions(&dense_path, &metric)?, ned_predictions(&sparse_path, &metric)?)
        } else {
            (elc_predictions(&dense_path, &metric)?, elc_predictions(&sparse_path, &metric)?)
        };
        let texts: Option<Vec<(String, String)>> = if task == "ned" {
            ned_test.as_ref().map(|t| t.iter().map(|i| (i.mention.clone(), i.context.clone())).collect())
        } else {
            elc_test.as_ref().map(|t| t.iter().map(|i| (i.mention.clone(), i.context.clone())).collect())
        };
        let mention_of = |id: &str| -> String {
            id.parse::<usize>()
                .ok()
                .and_then(|i| texts.as_ref().and_then(|t| t.get(i)))
                .map_or_else(String::new, |(m, _)| m.clone())
        };
        let records = join_records(&dense, &sparse, &mention_of).with_context(|| format!("{task} dumps"))?;
        let acc = combined_oracle_accuracy(&records)?;
        if !acc.identity_holds() {
            bail!("{task}: combined accuracy identity violated");
        }
        let name = task.to_uppercase();
        let mut report = task_report(&name, &metric, &records, &acc);
        summaries.push(summary(&name, &acc));
        if let (Some(model), Some(texts)) = (&model, &texts) {
            if let Some(rows) = divergence(model, texts, &records, top_n, threshold, missing)? {
                report.rank_divergence = Some(rank_json(&rows));
                rank_tables.push((task.to_owned(), rows));
            }
        }
        if task == "elc" {
            if let (Some(model), Some(train), Some(test)) = (&model, &elc_train, &elc_test) {
                counterfactuals = elc_counterfactuals(model, train, test, &records, &acc.z, &metric, attribution_n)?;
            }
        }
        tasks.push(report);
    }
    if tasks.is_empty() {
        bail!("no prediction dumps configured");
    }

    std::fs::write(out.join("combined.tsv"), render_combined_tsv(&summaries))?;
    std::fs::write(out.join("combined.txt"), render_combined_table(&summaries))?;
    for (task, rows) in &rank_tables {
        std::fs::write(out.join(format!("rank_divergence_{task}.tsv")), render_rank_tsv(rows))?;
    }
    if !counterfactuals.is_empty() {
        let fmt = |v: &[(String, f64)]| v.iter().map(|(t, x)| format!("{t}:{x:.4}")).collect::<Vec<_>>().join(",");
        write_tsv(
            &out.join("counterfactuals.tsv"),
            Some(&[
                "example_id",
                "mention",
                "gold",
                "sparse_pred",
                "neighbor_id",
                "counterfactual_id",
                "counterfactual_rank",
                "neighbor_attribution",
                "counterfactual_attribution",
            ]),
            counterfactuals.iter().map(|c| {
                vec![
                    c.example_id.clone(),
                    c.mention.clone(),
                    c.gold.clone(),
                    c.sparse_pred.clone(),
                    c.neighbor_id.clone(),
                    c.counterfactual_id.clone(),
                    c.counterfactual_rank.to_string(),
                    fmt(&c.neighbor_attribution),
                    fmt(&c.counterfactual_attribution),
                ]
            }),
        )?;
    }
    let line = summaries
        .iter()
        .map(|s| format!("{} {:.1}/{:.1}->{:.1} ({:+.1})", s.task, s.dense, s.sparse, s.combined, s.delta()))
        .collect::<Vec<_>>()
        .join("; ");
    write_json(&out.join("diagnostics.json"), &Report { tasks, counterfactuals })?;
    Ok(line)
}

/// For each example in Z: the sparse nearest neighbor that caused the
/// error, the nearest neighbor carrying the gold label, and per-type
/// contributions to the query's similarity with each.
fn elc_counterfactuals(
    model: &TypingModel,
    train: &[bier_core::elc::ElcInstance],
    test: &[bier_core::elc::ElcInstance],
    records: &[PredictionRecord],
    z: &[String],
    metric: &str,
    n: usize,
) -> Result<Vec<CounterfactualJson>> {
    let metric = Metric::parse(metric).expect("metric validated by caller");
    let vecs = embed_all(train, model, Representation::Sparse)?;
    let mut index: EmbeddingIndex<String> = EmbeddingIndex::new();
    for (i, (inst, v)) in train.iter().zip(&vecs).enumerate() {
        index.add(i.to_string(), v.clone(), inst.label.clone())?;
    }
    index.freeze();
    let by_id: BTreeMap<&str, &PredictionRecord> = records.iter().map(|r| (r.example_id.as_str(), r)).collect();
    let mut out = Vec::new();
    for id in z {
        let i: usize = id.parse().with_context(|| format!("instance id {id:?} is not a position"))?;
        let inst = test.get(i).with_context(|| format!("instance {i} missing from the ELC test data"))?;
        let q = model.sparse(&inst.mention, &inst.context)?.into_inner();
        let nearest = index.nearest(&q, metric, 1)?;
        let neighbor = &nearest[0];
        let cf = counterfactual_neighbor(&q, &index, &inst.label, metric)?;
        let cf_pos: usize = cf.id.parse().expect("index ids are positions");
        let nb_pos = neighbor.position;
        out.push(CounterfactualJson {
            example_id: id.clone(),
            mention: inst.mention.clone(),
            gold: inst.label.clone(),
            sparse_pred: by_id[id.as_str()].sparse_pred.clone(),
            top_types: top_types(&q, &model.types, n)?,
            neighbor_id: neighbor.id.to_owned(),
            neighbor_attribution: type_attribution(&q, &vecs[nb_pos], &model.types, n)?.top,
            counterfactual_id: cf.id.clone(),
            counterfactual_rank: cf.rank,
            counterfactual_attribution: type_attribution(&q, &vecs[cf_pos], &model.types, n)?.top,
        });
    }
    Ok(out)
}
