use std::collections::BTreeMap;

use anyhow::{bail, Context, Result};
use bier_core::corpus::{
    build_vocabulary, emit_triples, split_dataset, FallbackResolver, Resolvers, SkipReason, Triple, DEFAULT_MIN_SCORE,
    DEFAULT_WINDOW,
};
use serde::Serialize;

use super::write_json;
use crate::config::RunConfig;
use crate::formats::{
    read_categories, read_concept_map, read_fallback, read_linker, read_mentions, write_lines, write_triples, write_tsv,
};

#[derive(Debug, Serialize)]
struct CorpusStats {
    mentions: usize,
    triples: usize,
    /// Triples dropped because none of their types met the count threshold.
    dropped_rare: usize,
    skipped: BTreeMap<String, usize>,
    types: usize,
    /// Number of triples carrying exactly `k` types, keyed by `k`.
    types_per_mention: BTreeMap<usize, usize>,
    train: usize,
    dev: usize,
    test: usize,
}

fn parse_ratios(text: &str) -> Result<(f64, f64, f64)> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("split ratios {text:?}"))?;
    match parts[..] {
        [a, b, c] => Ok((a, b, c)),
        _ => bail!("split ratios {text:?} must have three parts"),
    }
}

/// Links, filters and resolves every mention, then writes the triples, the
/// type vocabulary, the skip report, corpus statistics and the splits.
pub fn build_corpus(cfg: &RunConfig) -> Result<String> {
    cfg.check_keys(&[
        "mentions",
        "linker",
        "concept_map",
        "categories",
        "fallback",
        "min_score",
        "window",
        "min_type_count",
        "split",
    ])?;
    let seed = cfg.seed()?;
    let mentions = read_mentions(&cfg.input("mentions")?)?;
    if mentions.is_empty() {
        bail!("mention file is empty");
    }
    let linker = read_linker(&cfg.input("linker")?)?;
    let (exact, close) = read_concept_map(&cfg.input("concept_map")?)?;
    let categories = read_categories(&cfg.input("categories")?)?;
    let fallback = cfg.optional_input("fallback")?.map(|p| read_fallback(&p)).transpose()?;
    let out = cfg.out_dir()?;

    let resolvers = Resolvers {
        exact: Some(&exact),
        close: Some(&close),
        categories: &categories,
        fallback: fallback.as_ref().map(|f| f as &dyn FallbackResolver),
    };
    let n_mentions = mentions.len();
    let emission = emit_triples(
        mentions,
        &linker,
        &resolvers,
        cfg.parse_or("min_score", DEFAULT_MIN_SCORE)?,
        cfg.parse_or("window", DEFAULT_WINDOW)?,
    )?;
    if emission.triples.is_empty() {
        bail!("no mention produced a triple");
    }

    let min_count: usize = cfg.parse_or("min_type_count", 1)?;
    let vocab = build_vocabulary(&emission.triples, min_count)?;
    let mut triples: Vec<Triple> = Vec::with_capacity(emission.triples.len());
    let mut dropped_rare = 0;
    for t in &emission.triples {
        let kept: Vec<&String> = t.types().iter().filter(|ty| vocab.index_of(ty).is_ok()).collect();
        if kept.is_empty() {
            dropped_rare += 1;
        } else {
            triples.push(Triple::new(t.mention.clone(), t.context.clone(), kept.into_iter().cloned())?);
        }
    }

    write_triples(&out.join("triples.jsonl"), &triples)?;
    write_lines(&out.join("vocab.txt"), vocab.names())?;
    write_tsv(
        &out.join("skipped.tsv"),
        Some(&["doc_id", "start", "end", "reason", "detail"]),
        emission.skipped.entries.iter().map(|(doc, s, e, why)| {
            let detail = match why {
                SkipReason::Malformed(msg) => msg.replace(['\t', '\n'], " "),
                _ => String::new(),
            };
            vec![doc.clone(), s.to_string(), e.to_string(), why.label().to_owned(), detail]
        }),
    )?;

    let mut types_per_mention: BTreeMap<usize, usize> = BTreeMap::new();
    for t in &triples {
        *types_per_mention.entry(t.types().len()).or_default() += 1;
    }
    write_tsv(
        &out.join("types_per_mention.tsv"),
        Some(&["types", "mentions"]),
        types_per_mention.iter().map(|(k, v)| vec![k.to_string(), v.to_string()]),
    )?;

    let n_triples = triples.len();
    let split = split_dataset(triples, cfg.get("split").map_or(Ok((0.8, 0.1, 0.1)), parse_ratios)?, seed)?;
    write_triples(&out.join("train.jsonl"), &split.train)?;
    write_triples(&out.join("dev.jsonl"), &split.dev)?;
    write_triples(&out.join("test.jsonl"), &split.test)?;

    let mut skipped = BTreeMap::new();
    for label in ["malformed", "no_confident_concept", "no_categories"] {
        skipped.insert(label.to_owned(), emission.skipped.count(label));
    }
    let stats = CorpusStats {
        mentions: n_mentions,
        triples: n_triples,
        dropped_rare,
        skipped,
        types: vocab.len(),
        types_per_mention,
        train: split.train.len(),
        dev: split.dev.len(),
        test: split.test.len(),
    };
    write_json(&out.join("stats.json"), &stats)?;
    Ok(format!(
        "{} mentions -> {} triples over {} types ({} skipped)",
        n_mentions,
        n_triples,
        vocab.len(),
        emission.skipped.entries.len()
    ))
}
