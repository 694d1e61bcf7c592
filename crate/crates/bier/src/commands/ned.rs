use std::collections::BTreeMap;

use anyhow::{anyhow, Context, Result};
use bier_core::ned::{
    accuracy, argmax, baseline_predict, baseline_train, popular_prior_predict, score_embedded, LogisticConfig,
    ModelPair, NedEmbedder, NedInstance,
};
use bier_core::store::Metric;
use bier_core::typer::TypingModel;
use rayon::prelude::*;

use super::{metrics, representations};
use crate::checkpoint;
use crate::config::RunConfig;
use crate::formats::{read_ned, write_ned_dump, write_tsv, NedDumpRow};

/// Embeddings computed once per distinct text pair and then looked up.
#[derive(Debug, Default)]
pub struct Precomputed {
    mentions: BTreeMap<(String, String), Vec<f64>>,
    candidates: BTreeMap<(String, String), Vec<f64>>,
}

impl Precomputed {
    /// Embeds every mention and candidate in `instances`, in parallel.
    pub fn build<'a>(
        instances: impl IntoIterator<Item = &'a NedInstance>,
        embedder: &(dyn NedEmbedder + Sync),
    ) -> Result<Self> {
        let mut m_keys = std::collections::BTreeSet::new();
        let mut c_keys = std::collections::BTreeSet::new();
        for inst in instances {
            m_keys.insert((inst.mention.clone(), inst.context.clone()));
            for c in &inst.candidates {
                c_keys.insert((c.title.clone(), c.description.clone()));
            }
        }
        let mentions = m_keys
            .into_par_iter()
            .map(|k| embedder.mention(&k.0, &k.1).map(|v| (k, v)))
            .collect::<Result<BTreeMap<_, _>, _>>()?;
        let candidates = c_keys
            .into_par_iter()
            .map(|k| embedder.candidate(&k.0, &k.1).map(|v| (k, v)))
            .collect::<Result<BTreeMap<_, _>, _>>()?;
        Ok(Self { mentions, candidates })
    }
}

fn missing(what: &str) -> bier_core::Error {
    bier_core::Error::InvalidArgument(format!("{what} was not precomputed"))
}

impl NedEmbedder for Precomputed {
    fn mention(&self, mention: &str, context: &str) -> bier_core::Result<Vec<f64>> {
        self.mentions.get(&(mention.to_owned(), context.to_owned())).cloned().ok_or_else(|| missing("mention"))
    }

    fn candidate(&self, title: &str, description: &str) -> bier_core::Result<Vec<f64>> {
        self.candidates.get(&(title.to_owned(), description.to_owned())).cloned().ok_or_else(|| missing("candidate"))
    }
}

fn dump_rows(test: &[NedInstance], emb: &Precomputed, metric: Metric) -> Result<Vec<NedDumpRow>> {
    test.iter()
        .enumerate()
        .map(|(i, inst)| {
            let m = emb.mention(&inst.mention, &inst.context)?;
            let cands = inst
                .candidates
                .iter()
                .map(|c| emb.candidate(&c.title, &c.description))
                .collect::<bier_core::Result<Vec<_>>>()?;
            let scores = score_embedded(&m, &cands, metric)?;
            let predicted = argmax(&scores).ok_or_else(|| anyhow!("instance {i} has no candidates"))?;
            Ok(NedDumpRow {
                instance_id: i.to_string(),
                metric: metric.as_str().to_owned(),
                predicted,
                gold: inst.gold,
                score_gold: scores[inst.gold],
                score_predicted: scores[predicted],
            })
        })
        .collect()
}

/// Similarity-based disambiguation for every requested representation and
/// metric, plus the popular-prior baseline and, when training instances
/// are given, the logistic-regression baseline.
pub fn eval_ned(cfg: &RunConfig) -> Result<String> {
    cfg.check_keys(&[
        "checkpoint",
        "desc_checkpoint",
        "ned_test",
        "ned_train",
        "metric",
        "representation",
        "baseline_steps",
        "baseline_lr",
        "baseline_l2",
    ])?;
    cfg.seed()?;
    let mention_model: TypingModel = checkpoint::load(&cfg.input("checkpoint")?)?;
    let desc_model: TypingModel = checkpoint::load(&cfg.input("desc_checkpoint")?)?;
    let test = read_ned(&cfg.input("ned_test")?)?;
    let train = match cfg.optional_input("ned_train")? {
        Some(p) => Some(read_ned(&p)?),
        None => None,
    };
    let metric_list = metrics(cfg, &[Metric::Dot, Metric::Cosine])?;
    if metric_list.contains(&Metric::L2) {
        return Err(anyhow!("disambiguation scores by dot or cosine similarity, not l2"));
    }
    let reps = representations(cfg)?;
    let logistic = LogisticConfig {
        steps: cfg.parse_or("baseline_steps", LogisticConfig::default().steps)?,
        learning_rate: cfg.parse_or("baseline_lr", LogisticConfig::default().learning_rate)?,
        l2: cfg.parse_or("baseline_l2", LogisticConfig::default().l2)?,
    };
    let out = cfg.out_dir()?;

    let n = test.len();
    let prior: Vec<usize> = test.iter().map(popular_prior_predict).collect();
    let mut rows: Vec<Vec<String>> =
        vec![vec!["popular_prior".into(), "-".into(), "-".into(), accuracy(&test, &prior)?.to_string(), n.to_string()]];
    for rep in reps {
        let pair = ModelPair::new(&mention_model, &desc_model, rep)?;
        let emb = Precomputed::build(test.iter().chain(train.iter().flatten()), &pair)
            .with_context(|| format!("embedding with the {} representation", rep.as_str()))?;
        let mut dump = Vec::new();
        for &metric in &metric_list {
            let part = dump_rows(&test, &emb, metric)?;
            let preds: Vec<usize> = part.iter().map(|r| r.predicted).collect();
            rows.push(vec![
                "similarity".into(),
                rep.as_str().into(),
                metric.as_str().into(),
                accuracy(&test, &preds)?.to_string(),
                n.to_string(),
            ]);
            dump.extend(part);
        }
        write_ned_dump(&out.join(format!("ned_predictions_{}.tsv", rep.as_str())), &dump)?;
        if let Some(train) = &train {
            let w = baseline_train(train, &emb, &logistic)?;
            let preds = test.iter().map(|i| baseline_predict(i, &w, &emb)).collect::<bier_core::Result<Vec<_>>>()?;
            rows.push(vec![
                "baseline".into(),
                rep.as_str().into(),
                "-".into(),
                accuracy(&test, &preds)?.to_string(),
                n.to_string(),
            ]);
        }
    }
    write_tsv(
        &out.join("ned_metrics.tsv"),
        Some(&["method", "representation", "metric", "accuracy", "n"]),
        rows.iter().cloned(),
    )?;
    let best =
        rows.iter().skip(1).max_by(|a, b| a[3].parse::<f64>().unwrap_or(0.0).total_cmp(&b[3].parse().unwrap_or(0.0)));
    Ok(format!(
        "NED on {n} instances: popular prior {:.4}{}",
        rows[0][3].parse::<f64>().unwrap_or(0.0),
        best.map_or(String::new(), |b| format!(
            ", best {} {} {} {:.4}",
            b[0],
            b[1],
            b[2],
            b[3].parse::<f64>().unwrap_or(0.0)
        ))
    ))
}
