//! Entity label classification: one coarse label per mention, predicted by
//! 1-nearest-neighbor retrieval or by a linear probe over frozen
//! representations.

mod probe;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::check_len;
use crate::store::{EmbeddingIndex, Metric};
use crate::typer::{Representation, TypingModel};
use crate::{rng, Error, Result};

pub use probe::{probe_fit, probe_loss_and_grad, probe_train, ProbeConfig, ProbeWeights};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ElcInstance {
    pub mention: String,
    /// Title and abstract.
    pub context: String,
    pub label: String,
}

/// Fails if any instance carries a label outside `labels`.
pub fn check_labels(instances: &[ElcInstance], labels: &[String]) -> Result<()> {
    match instances.iter().find(|i| !labels.contains(&i.label)) {
        Some(bad) => Err(Error::InvalidArgument(alloc::format!("label {:?} not in label set", bad.label))),
        None => Ok(()),
    }
}

/// Embeds every instance and stores it with its label as payload; ids are
/// the instance positions.
pub fn build_index(
    instances: &[ElcInstance],
    model: &TypingModel,
    rep: Representation,
    prune_below: Option<f64>,
) -> Result<EmbeddingIndex<String>> {
    let mut index = match prune_below {
        Some(t) => EmbeddingIndex::with_pruning(t),
        None => EmbeddingIndex::new(),
    };
    for (i, inst) in instances.iter().enumerate() {
        index.add(alloc::format!("{i}"), model.embed(&inst.mention, &inst.context, rep)?, inst.label.clone())?;
    }
    index.freeze();
    Ok(index)
}

/// Label of the single nearest stored vector.
pub fn knn_label<'a>(query: &[f64], index: &'a EmbeddingIndex<String>, metric: Metric) -> Result<&'a str> {
    if index.is_empty() {
        return Err(Error::EmptyInput("index"));
    }
    let hits = index.nearest(query, metric, 1)?;
    Ok(hits[0].payload.as_str())
}

pub fn knn_classify<'a>(
    test: &ElcInstance,
    index: &'a EmbeddingIndex<String>,
    model: &TypingModel,
    rep: Representation,
    metric: Metric,
) -> Result<&'a str> {
    knn_label(&model.embed(&test.mention, &test.context, rep)?, index, metric)
}

/// At most `k` instances per label, drawn uniformly with a per-label seeded
/// stream. Kept instances retain their original relative order.
pub fn kshot_subsample(train: &[ElcInstance], k: usize, seed: u64) -> Result<Vec<ElcInstance>> {
    if k == 0 {
        return Err(Error::InvalidArgument("K must be at least 1".into()));
    }
    let mut by_label: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, inst) in train.iter().enumerate() {
        by_label.entry(inst.label.as_str()).or_default().push(i);
    }
    if by_label.is_empty() {
        return Err(Error::EmptyInput("class set"));
    }
    let mut keep = Vec::new();
    for (label, mut members) in by_label {
        if members.len() > k {
            members.shuffle(&mut rng::named_rng(seed, &alloc::format!("kshot:{label}")));
            members.truncate(k);
        }
        keep.extend(members);
    }
    keep.sort_unstable();
    Ok(keep.into_iter().map(|i| train[i].clone()).collect())
}

/// Exact-match fraction.
pub fn evaluate<T: PartialEq>(predictions: &[T], gold: &[T]) -> Result<f64> {
    check_len(gold.len(), predictions.len())?;
    if gold.is_empty() {
        return Err(Error::EmptyInput("evaluation set"));
    }
    let correct = predictions.iter().zip(gold).filter(|(p, g)| p == g).count();
    Ok(correct as f64 / gold.len() as f64)
}

/// Most frequent label, ties to the lexicographically smallest.
pub fn majority_label(instances: &[ElcInstance]) -> Option<&str> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for i in instances {
        *counts.entry(i.label.as_str()).or_default() += 1;
    }
    let mut best: Option<(&str, usize)> = None;
    for (label, c) in counts {
        if best.is_none_or(|(_, b)| c > b) {
            best = Some((label, c));
        }
    }
    best.map(|(l, _)| l)
}
