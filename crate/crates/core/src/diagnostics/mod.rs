//! Dense/sparse debugging: the set of examples the dense representation gets
//! right and the sparse one gets wrong, the accuracy an oracle switch between
//! them would reach, and type-level views that explain sparse predictions.

mod ranks;
mod report;

use alloc::string::String;
use alloc::vec::Vec;

use crate::corpus::TypeVocabulary;
use crate::error::check_len;
use crate::store::{EmbeddingIndex, Metric};
use crate::{Error, Result};

pub use ranks::{
    divergence_rows, divergence_rows_with, frequency_ranks, rank_divergence, rank_divergence_with, type_frequencies,
    MissingRank, RankRow,
};
pub use report::{render_combined_table, render_combined_tsv, render_rank_tsv, TaskSummary};

/// One evaluated example with both models' predictions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictionRecord {
    pub example_id: String,
    pub mention: String,
    pub gold: String,
    pub dense_pred: String,
    pub sparse_pred: String,
}

impl PredictionRecord {
    pub fn dense_correct(&self) -> bool {
        self.dense_pred == self.gold
    }

    pub fn sparse_correct(&self) -> bool {
        self.sparse_pred == self.gold
    }
}

/// An exact accuracy `correct / total`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fraction {
    pub correct: u64,
    pub total: u64,
}

impl Fraction {
    pub fn value(self) -> f64 {
        self.correct as f64 / self.total as f64
    }

    pub fn percent(self) -> f64 {
        100.0 * self.value()
    }
}

/// Ids of the examples where the dense prediction is right and the sparse
/// one is wrong, in record order.
pub fn build_z(records: &[PredictionRecord]) -> Vec<String> {
    records.iter().filter(|r| r.dense_correct() && !r.sparse_correct()).map(|r| r.example_id.clone()).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleAccuracy {
    pub dense: Fraction,
    pub sparse: Fraction,
    /// Dense prediction on `Z`, sparse prediction elsewhere.
    pub combined: Fraction,
    pub z: Vec<String>,
}

impl OracleAccuracy {
    /// `combined = sparse + |Z|/N`, checked on the integer counts.
    pub fn identity_holds(&self) -> bool {
        self.combined.total == self.sparse.total && self.combined.correct == self.sparse.correct + self.z.len() as u64
    }
}

pub fn combined_oracle_accuracy(records: &[PredictionRecord]) -> Result<OracleAccuracy> {
    if records.is_empty() {
        return Err(Error::EmptyInput("prediction records"));
    }
    let z = build_z(records);
    let total = records.len() as u64;
    let count = |f: &dyn Fn(&PredictionRecord) -> bool| records.iter().filter(|r| f(r)).count() as u64;
    let combined = count(&|r| {
        let pred = if r.dense_correct() && !r.sparse_correct() { &r.dense_pred } else { &r.sparse_pred };
        *pred == r.gold
    });
    Ok(OracleAccuracy {
        dense: Fraction { correct: count(&|r| r.dense_correct()), total },
        sparse: Fraction { correct: count(&|r| r.sparse_correct()), total },
        combined: Fraction { correct: combined, total },
        z,
    })
}

/// The `n` most probable types, ties by ascending index.
pub fn top_types(t: &[f64], vocab: &TypeVocabulary, n: usize) -> Result<Vec<(String, f64)>> {
    check_len(vocab.len(), t.len())?;
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let mut order: Vec<usize> = (0..t.len()).collect();
    order.sort_by(|&a, &b| t[b].total_cmp(&t[a]).then(a.cmp(&b)));
    Ok(order.into_iter().take(n).map(|j| (String::from(vocab.name(j).unwrap_or_default()), t[j])).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Counterfactual {
    pub id: String,
    /// 1-based position in the neighbor walk.
    pub rank: usize,
    pub label: String,
    pub score: f64,
}

/// The closest stored neighbor whose label is `gold`.
pub fn counterfactual_neighbor(
    query: &[f64],
    index: &EmbeddingIndex<String>,
    gold: &str,
    metric: Metric,
) -> Result<Counterfactual> {
    if !index.entries().iter().any(|e| e.payload == gold) {
        return Err(Error::InvalidArgument(alloc::format!("gold label {gold:?} absent from index")));
    }
    let walk = index.nearest(query, metric, index.len())?;
    let (rank, hit) = walk.iter().enumerate().find(|(_, n)| n.payload == gold).expect("gold label present in index");
    Ok(Counterfactual { id: String::from(hit.id), rank: rank + 1, label: hit.payload.clone(), score: hit.score })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Attribution {
    /// `(type, t_query[j] · t_other[j])`, largest first.
    pub top: Vec<(String, f64)>,
    /// Sum of every contribution, i.e. the dot product.
    pub total: f64,
}

/// Splits `t_query · t_other` into per-type contributions.
pub fn type_attribution(t_query: &[f64], t_other: &[f64], vocab: &TypeVocabulary, n: usize) -> Result<Attribution> {
    check_len(t_query.len(), t_other.len())?;
    let contributions: Vec<f64> = t_query.iter().zip(t_other).map(|(a, b)| a * b).collect();
    let total = contributions.iter().sum();
    let top = top_types(&contributions, vocab, n.max(1))?;
    Ok(Attribution { top, total })
}
