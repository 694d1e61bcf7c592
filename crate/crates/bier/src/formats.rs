//! Readers and writers for every on-disk record format: JSONL task data,
//! TSV resolver tables and result dumps, and plain-text vocabularies.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use bier_core::corpus::{
    CategoryTable, ConceptMatch, ConceptPageMap, FallbackTable, LinkerTable, MatchSource, MentionRecord, Triple,
};
use bier_core::elc::ElcInstance;
use bier_core::ned::{Candidate, NedInstance};
use bier_core::typer::EpochRecord;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MentionJson {
    pub doc_id: String,
    pub surface: String,
    pub context: String,
    pub start: usize,
    pub end: usize,
}

impl From<MentionJson> for MentionRecord {
    fn from(m: MentionJson) -> Self {
        MentionRecord { doc_id: m.doc_id, surface: m.surface, context: m.context, start: m.start, end: m.end }
    }
}

impl From<&MentionRecord> for MentionJson {
    fn from(m: &MentionRecord) -> Self {
        MentionJson {
            doc_id: m.doc_id.clone(),
            surface: m.surface.clone(),
            context: m.context.clone(),
            start: m.start,
            end: m.end,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TripleJson {
    pub mention: String,
    pub context: String,
    pub types: Vec<String>,
}

impl From<&Triple> for TripleJson {
    fn from(t: &Triple) -> Self {
        TripleJson { mention: t.mention.clone(), context: t.context.clone(), types: t.types().to_vec() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CandidateJson {
    pub title: String,
    pub description: String,
    pub prior: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NedJson {
    pub mention: String,
    pub context: String,
    pub candidates: Vec<CandidateJson>,
    pub gold: usize,
}

impl From<NedJson> for NedInstance {
    fn from(n: NedJson) -> Self {
        NedInstance {
            mention: n.mention,
            context: n.context,
            candidates: n
                .candidates
                .into_iter()
                .map(|c| Candidate { title: c.title, description: c.description, prior: c.prior })
                .collect(),
            gold: n.gold,
        }
    }
}

impl From<&NedInstance> for NedJson {
    fn from(n: &NedInstance) -> Self {
        NedJson {
            mention: n.mention.clone(),
            context: n.context.clone(),
            candidates: n
                .candidates
                .iter()
                .map(|c| CandidateJson { title: c.title.clone(), description: c.description.clone(), prior: c.prior })
                .collect(),
            gold: n.gold,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ElcJson {
    pub mention: String,
    pub context: String,
    pub label: String,
}

impl From<ElcJson> for ElcInstance {
    fn from(e: ElcJson) -> Self {
        ElcInstance { mention: e.mention, context: e.context, label: e.label }
    }
}

impl From<&ElcInstance> for ElcJson {
    fn from(e: &ElcInstance) -> Self {
        ElcJson { mention: e.mention.clone(), context: e.context.clone(), label: e.label.clone() }
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("cannot open {}", path.display()))?))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("cannot create {}", path.display()))?))
}

/// One JSON object per non-blank line.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.with_context(|| format!("{}: read error", path.display()))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).with_context(|| format!("{}:{}: bad record", path.display(), i + 1))?);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, records: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = create(path)?;
    for r in records {
        serde_json::to_writer(&mut w, &r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_mentions(path: &Path) -> Result<Vec<MentionRecord>> {
    Ok(read_jsonl::<MentionJson>(path)?.into_iter().map(Into::into).collect())
}

pub fn read_triples(path: &Path) -> Result<Vec<Triple>> {
    read_jsonl::<TripleJson>(path)?
        .into_iter()
        .enumerate()
        .map(|(i, t)| {
            Triple::new(t.mention, t.context, t.types).with_context(|| format!("{}: record {}", path.display(), i + 1))
        })
        .collect()
}

pub fn write_triples<'a>(path: &Path, triples: impl IntoIterator<Item = &'a Triple>) -> Result<()> {
    write_jsonl(path, triples.into_iter().map(TripleJson::from))
}

pub fn read_ned(path: &Path) -> Result<Vec<NedInstance>> {
    let out: Vec<NedInstance> = read_jsonl::<NedJson>(path)?.into_iter().map(Into::into).collect();
    for (i, inst) in out.iter().enumerate() {
        inst.validate().with_context(|| format!("{}: record {}", path.display(), i + 1))?;
    }
    Ok(out)
}

pub fn read_elc(path: &Path) -> Result<Vec<ElcInstance>> {
    Ok(read_jsonl::<ElcJson>(path)?.into_iter().map(Into::into).collect())
}

/// Rows of a headerless tab-separated file; blank lines and `#` comments
/// are skipped. Each row must have exactly `width` fields.
pub fn read_tsv(path: &Path, width: usize) -> Result<Vec<Vec<String>>> {
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.with_context(|| format!("{}: read error", path.display()))?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<String> = line.split('\t').map(str::to_owned).collect();
        ensure!(
            fields.len() == width,
            "{}:{}: expected {width} tab-separated fields, found {}",
            path.display(),
            i + 1,
            fields.len()
        );
        out.push(fields);
    }
    Ok(out)
}

/// Writes rows joined by tabs, with an optional header line.
pub fn write_tsv<R, F>(path: &Path, header: Option<&[&str]>, rows: R) -> Result<()>
where
    R: IntoIterator<Item = Vec<F>>,
    F: AsRef<str>,
{
    let mut w = create(path)?;
    if let Some(h) = header {
        writeln!(w, "{}", h.join("\t"))?;
    }
    for row in rows {
        let fields: Vec<&str> = row.iter().map(AsRef::as_ref).collect();
        if let Some(f) = fields.iter().find(|f| f.contains(['\t', '\n'])) {
            bail!("{}: field {f:?} contains a tab or newline", path.display());
        }
        writeln!(w, "{}", fields.join("\t"))?;
    }
    w.flush()?;
    Ok(())
}

/// `cuid, source, page_id` where source is `exact` or `close`.
pub fn read_concept_map(path: &Path) -> Result<(ConceptPageMap, ConceptPageMap)> {
    let mut exact = ConceptPageMap::default();
    let mut close = ConceptPageMap::default();
    for row in read_tsv(path, 3)? {
        match MatchSource::parse(&row[1]) {
            Some(MatchSource::Exact) => exact.insert(row[0].clone(), row[2].clone()),
            Some(MatchSource::Close) => close.insert(row[0].clone(), row[2].clone()),
            None => bail!("{}: unknown match source {:?}", path.display(), row[1]),
        }
    }
    Ok((exact, close))
}

pub fn write_concept_map(path: &Path, exact: &ConceptPageMap, close: &ConceptPageMap) -> Result<()> {
    let rows = exact
        .iter()
        .map(|(c, p)| vec![c, MatchSource::Exact.as_str(), p])
        .chain(close.iter().map(|(c, p)| vec![c, MatchSource::Close.as_str(), p]));
    write_tsv(path, None, rows)
}

/// `page_id, category`.
pub fn read_categories(path: &Path) -> Result<CategoryTable> {
    let mut t = CategoryTable::default();
    for row in read_tsv(path, 2)? {
        t.insert(row[0].clone(), row[1].clone());
    }
    Ok(t)
}

pub fn write_categories(path: &Path, table: &CategoryTable) -> Result<()> {
    write_tsv(path, None, table.iter().map(|(p, c)| vec![p, c]))
}

/// `surface, category`.
pub fn read_fallback(path: &Path) -> Result<FallbackTable> {
    let mut t = FallbackTable::default();
    for row in read_tsv(path, 2)? {
        t.insert(&row[0], row[1].clone());
    }
    Ok(t)
}

pub fn write_fallback(path: &Path, table: &FallbackTable) -> Result<()> {
    write_tsv(path, None, table.iter().map(|(s, c)| vec![s, c]))
}

/// `surface, cuid, name, score`.
pub fn read_linker(path: &Path) -> Result<LinkerTable> {
    let mut t = LinkerTable::default();
    for (i, row) in read_tsv(path, 4)?.into_iter().enumerate() {
        let score: f64 =
            row[3].parse().with_context(|| format!("{}: row {}: bad score {:?}", path.display(), i + 1, row[3]))?;
        let m = ConceptMatch::new(row[1].clone(), row[2].clone(), score)
            .with_context(|| format!("{}: row {}", path.display(), i + 1))?;
        t.insert(row[0].clone(), m);
    }
    Ok(t)
}

pub fn write_linker(path: &Path, table: &LinkerTable) -> Result<()> {
    write_tsv(
        path,
        None,
        table.iter().map(|(s, m)| vec![s.to_owned(), m.cuid.clone(), m.name.clone(), m.score.to_string()]),
    )
}

/// One name per line; the line number is the index.
pub fn read_lines(path: &Path) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for line in open(path)?.lines() {
        let line = line.with_context(|| format!("{}: read error", path.display()))?;
        if !line.is_empty() {
            out.push(line);
        }
    }
    Ok(out)
}

pub fn write_lines<'a>(path: &Path, lines: impl IntoIterator<Item = &'a String>) -> Result<()> {
    let mut w = create(path)?;
    for l in lines {
        writeln!(w, "{l}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_training_log(path: &Path, epochs: &[EpochRecord]) -> Result<()> {
    write_tsv(
        path,
        Some(&["epoch", "train_loss", "dev_macro_f1", "wall_seconds"]),
        epochs.iter().map(|e| {
            vec![
                e.epoch.to_string(),
                e.train_loss.to_string(),
                e.dev_macro_f1.map_or_else(|| String::from("NA"), |f| f.to_string()),
                e.wall_seconds.to_string(),
            ]
        }),
    )
}

pub fn create_writer(path: &Path) -> Result<BufWriter<File>> {
    create(path)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NedDumpRow {
    pub instance_id: String,
    pub metric: String,
    pub predicted: usize,
    pub gold: usize,
    pub score_gold: f64,
    pub score_predicted: f64,
}

pub const NED_DUMP_HEADER: [&str; 6] = ["instance_id", "metric", "predicted", "gold", "score_gold", "score_predicted"];

pub fn write_ned_dump(path: &Path, rows: &[NedDumpRow]) -> Result<()> {
    write_tsv(
        path,
        Some(&NED_DUMP_HEADER),
        rows.iter().map(|r| {
            vec![
                r.instance_id.clone(),
                r.metric.clone(),
                r.predicted.to_string(),
                r.gold.to_string(),
                r.score_gold.to_string(),
                r.score_predicted.to_string(),
            ]
        }),
    )
}

fn header_checked(path: &Path, expected: &[&str]) -> Result<Vec<Vec<String>>> {
    let mut rows = read_tsv(path, expected.len())?.into_iter();
    let header = rows.next().with_context(|| format!("{}: missing header", path.display()))?;
    ensure!(header == expected, "{}: unexpected header {:?}", path.display(), header);
    Ok(rows.collect())
}

pub fn read_ned_dump(path: &Path) -> Result<Vec<NedDumpRow>> {
    header_checked(path, &NED_DUMP_HEADER)?
        .into_iter()
        .map(|r| {
            Ok(NedDumpRow {
                predicted: r[2].parse()?,
                gold: r[3].parse()?,
                score_gold: r[4].parse()?,
                score_predicted: r[5].parse()?,
                instance_id: r[0].clone(),
                metric: r[1].clone(),
            })
        })
        .collect::<Result<_>>()
        .with_context(|| format!("{}: malformed row", path.display()))
}

/// Per-instance coarse-label predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct ElcDumpRow {
    pub instance_id: String,
    pub metric: String,
    pub predicted: String,
    pub gold: String,
}

pub const ELC_DUMP_HEADER: [&str; 4] = ["instance_id", "metric", "predicted", "gold"];

pub fn write_elc_dump(path: &Path, rows: &[ElcDumpRow]) -> Result<()> {
    write_tsv(
        path,
        Some(&ELC_DUMP_HEADER),
        rows.iter().map(|r| vec![r.instance_id.clone(), r.metric.clone(), r.predicted.clone(), r.gold.clone()]),
    )
}

pub fn read_elc_dump(path: &Path) -> Result<Vec<ElcDumpRow>> {
    Ok(header_checked(path, &ELC_DUMP_HEADER)?
        .into_iter()
        .map(|r| ElcDumpRow {
            instance_id: r[0].clone(),
            metric: r[1].clone(),
            predicted: r[2].clone(),
            gold: r[3].clone(),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElcResultRow {
    pub representation: String,
    pub metric: String,
    /// `None` for the full training set.
    pub k: Option<usize>,
    pub seed: u64,
    pub accuracy: f64,
}

pub const ELC_RESULT_HEADER: [&str; 5] = ["representation", "metric", "K", "seed", "accuracy"];

pub fn write_elc_results(path: &Path, rows: &[ElcResultRow]) -> Result<()> {
    write_tsv(
        path,
        Some(&ELC_RESULT_HEADER),
        rows.iter().map(|r| {
            vec![
                r.representation.clone(),
                r.metric.clone(),
                r.k.map_or_else(|| String::from("all"), |k| k.to_string()),
                r.seed.to_string(),
                r.accuracy.to_string(),
            ]
        }),
    )
}

pub fn read_elc_results(path: &Path) -> Result<Vec<ElcResultRow>> {
    header_checked(path, &ELC_RESULT_HEADER)?
        .into_iter()
        .map(|r| {
            Ok(ElcResultRow {
                representation: r[0].clone(),
                metric: r[1].clone(),
                k: if r[2] == "all" { None } else { Some(r[2].parse()?) },
                seed: r[3].parse()?,
                accuracy: r[4].parse()?,
            })
        })
        .collect::<Result<_>>()
        .with_context(|| format!("{}: malformed row", path.display()))
}
