use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use super::top_types;
use crate::corpus::TypeVocabulary;
use crate::{Error, Result};

/// A type whose frequency rank differs sharply between wrongly and rightly
/// predicted mentions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankRow {
    pub type_name: String,
    pub wrong_rank: usize,
    pub right_rank: usize,
    pub difference: usize,
}

/// How often each type appears among the top `top_n` types of each vector,
/// counted once per vector.
pub fn type_frequencies(vectors: &[&[f64]], vocab: &TypeVocabulary, top_n: usize) -> Result<BTreeMap<String, usize>> {
    let mut counts = BTreeMap::new();
    for v in vectors {
        for (name, _) in top_types(v, vocab, top_n)? {
            *counts.entry(name).or_default() += 1;
        }
    }
    Ok(counts)
}

/// 1-based ranks by descending frequency, ties lexicographic.
pub fn frequency_ranks(counts: &BTreeMap<String, usize>) -> BTreeMap<String, usize> {
    let mut ordered: Vec<(&String, usize)> = counts.iter().map(|(k, &v)| (k, v)).collect();
    ordered.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    ordered.into_iter().enumerate().map(|(i, (name, _))| (name.clone(), i + 1)).collect()
}

/// Rank given to a type absent from one of the frequency lists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MissingRank {
    /// One past the end of that list.
    #[default]
    PastEnd,
    Fixed(usize),
}

impl MissingRank {
    fn rank(self, list_len: usize) -> usize {
        match self {
            MissingRank::PastEnd => list_len + 1,
            MissingRank::Fixed(r) => r,
        }
    }
}

/// Types whose ranks in the two frequency lists differ by more than
/// `threshold`. A type missing from a list ranks one past its end. Rows are
/// ordered by wrong-set rank.
pub fn divergence_rows(
    wrong: &BTreeMap<String, usize>,
    right: &BTreeMap<String, usize>,
    threshold: usize,
) -> Vec<RankRow> {
    divergence_rows_with(wrong, right, threshold, MissingRank::PastEnd)
}

pub fn divergence_rows_with(
    wrong: &BTreeMap<String, usize>,
    right: &BTreeMap<String, usize>,
    threshold: usize,
    missing: MissingRank,
) -> Vec<RankRow> {
    let wrong_ranks = frequency_ranks(wrong);
    let right_ranks = frequency_ranks(right);
    let names: BTreeSet<&String> = wrong_ranks.keys().chain(right_ranks.keys()).collect();
    let mut rows: Vec<RankRow> = names
        .into_iter()
        .filter_map(|name| {
            let w = wrong_ranks.get(name).copied().unwrap_or_else(|| missing.rank(wrong_ranks.len()));
            let r = right_ranks.get(name).copied().unwrap_or_else(|| missing.rank(right_ranks.len()));
            let difference = w.abs_diff(r);
            (difference > threshold).then(|| RankRow {
                type_name: name.clone(),
                wrong_rank: w,
                right_rank: r,
                difference,
            })
        })
        .collect();
    rows.sort_by(|a, b| a.wrong_rank.cmp(&b.wrong_rank).then_with(|| a.type_name.cmp(&b.type_name)));
    rows
}

pub fn rank_divergence(
    wrong: &[&[f64]],
    right: &[&[f64]],
    vocab: &TypeVocabulary,
    top_n: usize,
    threshold: usize,
) -> Result<Vec<RankRow>> {
    rank_divergence_with(wrong, right, vocab, top_n, threshold, MissingRank::PastEnd)
}

pub fn rank_divergence_with(
    wrong: &[&[f64]],
    right: &[&[f64]],
    vocab: &TypeVocabulary,
    top_n: usize,
    threshold: usize,
    missing: MissingRank,
) -> Result<Vec<RankRow>> {
    if wrong.is_empty() || right.is_empty() {
        return Err(Error::EmptyInput("record set"));
    }
    let w = type_frequencies(wrong, vocab, top_n)?;
    let r = type_frequencies(right, vocab, top_n)?;
    Ok(divergence_rows_with(&w, &r, threshold, missing))
}
