use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use super::Triple;
use crate::{rng, Error, Result};

/// Frozen bijection between type names and embedding dimensions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeVocabulary {
    names: Vec<String>,
    index: BTreeMap<String, usize>,
}

impl TypeVocabulary {
    /// Fails on duplicate, empty or multi-line names.
    pub fn from_names(names: Vec<String>) -> Result<Self> {
        let mut index = BTreeMap::new();
        for (i, name) in names.iter().enumerate() {
            if name.is_empty() || name.contains('\n') || name.contains('\r') {
                return Err(Error::InvalidArgument(alloc::format!("bad type name {name:?}")));
            }
            if index.insert(name.clone(), i).is_some() {
                return Err(Error::DuplicateId(name.clone()));
            }
        }
        Ok(Self { names, index })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, index: usize) -> Option<&str> {
        self.names.get(index).map(String::as_str)
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.index.get(name).copied().ok_or_else(|| Error::UnknownType(name.into()))
    }

    /// Multi-hot membership bits for a type set.
    pub fn encode(&self, types: &[String]) -> Result<Vec<bool>> {
        let mut bits = alloc::vec![false; self.len()];
        for t in types {
            bits[self.index_of(t)?] = true;
        }
        Ok(bits)
    }

    /// Content hash used to tie checkpoints and indices to one vocabulary.
    pub fn hash(&self) -> u64 {
        let mut buf = Vec::new();
        for name in &self.names {
            buf.extend_from_slice(name.as_bytes());
            buf.push(b'\n');
        }
        rng::fnv1a(&buf)
    }
}

/// Vocabulary of every type seen in at least `min_count` triples, ordered by
/// descending frequency then name.
pub fn build_vocabulary<'a>(triples: impl IntoIterator<Item = &'a Triple>, min_count: usize) -> Result<TypeVocabulary> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    let mut seen_any = false;
    for triple in triples {
        seen_any = true;
        for t in triple.types() {
            *counts.entry(t.as_str()).or_default() += 1;
        }
    }
    if !seen_any {
        return Err(Error::EmptyInput("corpus"));
    }
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().filter(|&(_, c)| c >= min_count).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    TypeVocabulary::from_names(ranked.into_iter().map(|(n, _)| String::from(n)).collect())
}
