use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use super::{filter_concept_matches, CategoryResolver, ConceptMatch};
use crate::{Error, Result};

/// A mention span inside a context, as produced by an upstream NER pass.
/// Offsets count Unicode scalar values, not bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MentionRecord {
    pub doc_id: String,
    pub surface: String,
    pub context: String,
    pub start: usize,
    pub end: usize,
}

impl MentionRecord {
    pub fn validate(&self) -> core::result::Result<(), String> {
        if self.start >= self.end {
            return Err(alloc::format!("empty or inverted span {}..{}", self.start, self.end));
        }
        let len = self.context.chars().count();
        if self.end > len {
            return Err(alloc::format!("span end {} past context length {len}", self.end));
        }
        let span: String = self.context.chars().skip(self.start).take(self.end - self.start).collect();
        if span != self.surface {
            return Err(alloc::format!("span text {span:?} differs from surface {:?}", self.surface));
        }
        Ok(())
    }
}

/// The atomic training record: a mention, its context and the type names
/// that apply to it.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub mention: String,
    pub context: String,
    types: Vec<String>,
}

impl Triple {
    /// Duplicate type names are dropped, keeping the first occurrence.
    pub fn new(
        mention: impl Into<String>,
        context: impl Into<String>,
        types: impl IntoIterator<Item = impl Into<String>>,
    ) -> Result<Self> {
        let mut unique: Vec<String> = Vec::new();
        for t in types {
            let t = t.into();
            if !unique.contains(&t) {
                unique.push(t);
            }
        }
        if unique.is_empty() {
            return Err(Error::EmptyInput("type set"));
        }
        Ok(Self { mention: mention.into(), context: context.into(), types: unique })
    }

    pub fn types(&self) -> &[String] {
        &self.types
    }
}

/// Maps a mention to candidate concepts with confidence scores.
pub trait ConceptLinker {
    fn link(&self, mention: &MentionRecord) -> Vec<ConceptMatch>;
}

/// Canned linker output keyed by exact surface form.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinkerTable {
    by_surface: BTreeMap<String, Vec<ConceptMatch>>,
}

impl LinkerTable {
    pub fn insert(&mut self, surface: impl Into<String>, matched: ConceptMatch) {
        self.by_surface.entry(surface.into()).or_default().push(matched);
    }

    pub fn len(&self) -> usize {
        self.by_surface.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_surface.is_empty()
    }

    /// `(surface, match)` pairs in surface order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &ConceptMatch)> {
        self.by_surface.iter().flat_map(|(s, ms)| ms.iter().map(move |m| (s.as_str(), m)))
    }
}

impl ConceptLinker for LinkerTable {
    fn link(&self, mention: &MentionRecord) -> Vec<ConceptMatch> {
        self.by_surface.get(&mention.surface).cloned().unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SkipReason {
    Malformed(String),
    /// No linked concept survived the score filter.
    NoConfidentConcept,
    /// Concepts survived but none resolved to any category.
    NoCategories,
}

impl SkipReason {
    pub fn label(&self) -> &'static str {
        match self {
            SkipReason::Malformed(_) => "malformed",
            SkipReason::NoConfidentConcept => "no_confident_concept",
            SkipReason::NoCategories => "no_categories",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SkipReport {
    /// `(doc_id, start, end, reason)` per skipped mention, in output order.
    pub entries: Vec<(String, usize, usize, SkipReason)>,
}

impl SkipReport {
    pub fn count(&self, label: &str) -> usize {
        self.entries.iter().filter(|e| e.3.label() == label).count()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Emission {
    pub triples: Vec<Triple>,
    pub skipped: SkipReport,
}

/// Link, filter, resolve and emit one triple per usable mention. Output is
/// ordered by `(doc_id, start, end)` regardless of input order.
pub fn emit_triples(
    mentions: impl IntoIterator<Item = MentionRecord>,
    linker: &dyn ConceptLinker,
    resolver: &dyn CategoryResolver,
    min_score: f64,
    window: f64,
) -> Result<Emission> {
    let mut mentions: Vec<MentionRecord> = mentions.into_iter().collect();
    mentions.sort_by(|a, b| (&a.doc_id, a.start, a.end).cmp(&(&b.doc_id, b.start, b.end)));

    let mut out = Emission::default();
    for m in mentions {
        if let Err(why) = m.validate() {
            out.skipped.entries.push((m.doc_id, m.start, m.end, SkipReason::Malformed(why)));
            continue;
        }
        let retained = filter_concept_matches(&linker.link(&m), min_score, window);
        if retained.is_empty() {
            out.skipped.entries.push((m.doc_id, m.start, m.end, SkipReason::NoConfidentConcept));
            continue;
        }
        let mut types: Vec<String> = Vec::new();
        for matched in &retained {
            for cat in resolver.categories(matched, &m.surface)? {
                if !types.contains(&cat) {
                    types.push(cat);
                }
            }
        }
        if types.is_empty() {
            out.skipped.entries.push((m.doc_id, m.start, m.end, SkipReason::NoCategories));
            continue;
        }
        out.triples.push(Triple::new(m.surface, m.context, types)?);
    }
    Ok(out)
}
