use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use super::ConceptMatch;
use crate::{Error, Result};

/// How a concept was tied to a knowledge-base page.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MatchSource {
    Exact,
    Close,
}

impl MatchSource {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exact" => Some(Self::Exact),
            "close" => Some(Self::Close),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Exact => "exact",
            Self::Close => "close",
        }
    }
}

/// Concept identifier to page identifiers.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConceptPageMap {
    pages: BTreeMap<String, Vec<String>>,
}

impl ConceptPageMap {
    pub fn insert(&mut self, cuid: impl Into<String>, page: impl Into<String>) {
        let page = page.into();
        let pages = self.pages.entry(cuid.into()).or_default();
        if !pages.contains(&page) {
            pages.push(page);
        }
    }

    pub fn pages(&self, cuid: &str) -> Option<&[String]> {
        self.pages.get(cuid).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.pages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pages.is_empty()
    }

    /// `(cuid, page)` pairs in concept order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.pages.iter().flat_map(|(c, ps)| ps.iter().map(move |p| (c.as_str(), p.as_str())))
    }
}

/// Page identifier to its categories, in the order they were listed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CategoryTable {
    categories: BTreeMap<String, Vec<String>>,
}

impl CategoryTable {
    pub fn insert(&mut self, page: impl Into<String>, category: impl Into<String>) {
        let category = category.into();
        let cats = self.categories.entry(page.into()).or_default();
        if !cats.contains(&category) {
            cats.push(category);
        }
    }

    pub fn categories(&self, page: &str) -> &[String] {
        self.categories.get(page).map(Vec::as_slice).unwrap_or(&[])
    }

    /// `(page, category)` pairs in page order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.categories.iter().flat_map(|(p, cs)| cs.iter().map(move |c| (p.as_str(), c.as_str())))
    }
}

/// Resolves categories from a mention surface form when no concept mapping
/// exists, the role a free-text page search plays for real corpora.
pub trait FallbackResolver {
    fn resolve(&self, surface: &str) -> Vec<String>;
}

/// A canned surface-form to categories table. Lookups are case-insensitive.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FallbackTable {
    by_surface: BTreeMap<String, Vec<String>>,
}

impl FallbackTable {
    pub fn insert(&mut self, surface: &str, category: impl Into<String>) {
        let category = category.into();
        let cats = self.by_surface.entry(surface.to_lowercase()).or_default();
        if !cats.contains(&category) {
            cats.push(category);
        }
    }

    /// `(lowercased surface, category)` pairs in surface order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.by_surface.iter().flat_map(|(s, cs)| cs.iter().map(move |c| (s.as_str(), c.as_str())))
    }
}

impl FallbackResolver for FallbackTable {
    fn resolve(&self, surface: &str) -> Vec<String> {
        self.by_surface.get(&surface.to_lowercase()).cloned().unwrap_or_default()
    }
}

/// Anything that maps a retained concept match to a set of type names.
pub trait CategoryResolver {
    fn categories(&self, matched: &ConceptMatch, surface: &str) -> Result<Vec<String>>;
}

/// The exact map, close map and fallback chain over one category table.
#[derive(Clone, Copy)]
pub struct Resolvers<'a> {
    pub exact: Option<&'a ConceptPageMap>,
    pub close: Option<&'a ConceptPageMap>,
    pub categories: &'a CategoryTable,
    pub fallback: Option<&'a dyn FallbackResolver>,
}

impl core::fmt::Debug for Resolvers<'_> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Resolvers")
            .field("exact", &self.exact.map(ConceptPageMap::len))
            .field("close", &self.close.map(ConceptPageMap::len))
            .field("fallback", &self.fallback.is_some())
            .finish()
    }
}

impl CategoryResolver for Resolvers<'_> {
    fn categories(&self, matched: &ConceptMatch, surface: &str) -> Result<Vec<String>> {
        resolve_categories(matched, surface, self)
    }
}

/// Exact page hits first, then close hits, then the surface-form fallback.
/// Categories of multiple pages are unioned in first-seen order; a total
/// miss yields an empty list.
pub fn resolve_categories(matched: &ConceptMatch, surface: &str, resolvers: &Resolvers<'_>) -> Result<Vec<String>> {
    if resolvers.exact.is_none() && resolvers.close.is_none() && resolvers.fallback.is_none() {
        return Err(Error::InvalidArgument("no category resolver supplied".into()));
    }
    let pages = resolvers
        .exact
        .and_then(|m| m.pages(&matched.cuid))
        .or_else(|| resolvers.close.and_then(|m| m.pages(&matched.cuid)));
    let mut out = Vec::new();
    match pages {
        Some(pages) => {
            for page in pages {
                for cat in resolvers.categories.categories(page) {
                    if !out.contains(cat) {
                        out.push(cat.clone());
                    }
                }
            }
        }
        None => {
            if let Some(fallback) = resolvers.fallback {
                for cat in fallback.resolve(surface) {
                    if !out.contains(&cat) {
                        out.push(cat);
                    }
                }
            }
        }
    }
    Ok(out)
}
