//! Exact nearest-neighbor search over labeled dense or sparse vectors.
//!
//! Every query is a full scan, so results are exact and ties resolve by
//! insertion order.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::check_len;
use crate::math::{dot, norm};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Metric {
    /// Euclidean distance; smaller is closer.
    L2,
    Dot,
    Cosine,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::L2 => "l2",
            Metric::Dot => "dot",
            Metric::Cosine => "cosine",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "l2" => Some(Metric::L2),
            "dot" => Some(Metric::Dot),
            "cosine" => Some(Metric::Cosine),
            _ => None,
        }
    }

    /// Whether `a` ranks strictly before `b` under this metric.
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            Metric::L2 => a < b,
            Metric::Dot | Metric::Cosine => a > b,
        }
    }

    fn order(self, a: f64, b: f64) -> Ordering {
        match self {
            Metric::L2 => a.total_cmp(&b),
            Metric::Dot | Metric::Cosine => b.total_cmp(&a),
        }
    }
}

/// The metric's raw value: distance for `L2`, similarity otherwise.
pub fn similarity(u: &[f64], v: &[f64], metric: Metric) -> Result<f64> {
    check_len(u.len(), v.len())?;
    match metric {
        Metric::L2 => Ok(libm::sqrt(u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum())),
        Metric::Dot => Ok(dot(u, v)),
        Metric::Cosine => {
            let (nu, nv) = (norm(u), norm(v));
            if nu == 0.0 || nv == 0.0 {
                return Err(Error::UndefinedCosine);
            }
            Ok(dot(u, v) / (nu * nv))
        }
    }
}

/// Zeroes entries below `threshold`. For non-negative vectors the change in
/// any dot product is bounded by `threshold · ‖other‖₁`.
pub fn prune(vector: &mut [f64], threshold: f64) {
    vector.iter_mut().filter(|x| **x < threshold).for_each(|x| *x = 0.0);
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry<P> {
    pub id: String,
    pub vector: Vec<f64>,
    pub payload: P,
    norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Neighbor<'a, P> {
    pub id: &'a str,
    pub score: f64,
    pub payload: &'a P,
    /// Insertion position of the entry.
    pub position: usize,
}

/// Insertion-ordered vectors of one fixed dimensionality with unique ids.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingIndex<P> {
    dim: Option<usize>,
    entries: Vec<Entry<P>>,
    ids: BTreeSet<String>,
    prune_below: Option<f64>,
    frozen: bool,
}

impl<P> Default for EmbeddingIndex<P> {
    fn default() -> Self {
        Self::new()
    }
}

impl<P> EmbeddingIndex<P> {
    pub fn new() -> Self {
        Self { dim: None, entries: Vec::new(), ids: BTreeSet::new(), prune_below: None, frozen: false }
    }

    /// Stored vectors have entries below `threshold` zeroed on insertion.
    pub fn with_pruning(threshold: f64) -> Self {
        Self { prune_below: Some(threshold), ..Self::new() }
    }

    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Entry<P>] {
        &self.entries
    }

    pub fn pruning(&self) -> Option<f64> {
        self.prune_below
    }

    /// Disallows further inserts; queries are unaffected.
    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn add(&mut self, id: impl Into<String>, vector: Vec<f64>, payload: P) -> Result<()> {
        if self.frozen {
            return Err(Error::Frozen);
        }
        let id = id.into();
        if let Some(d) = self.dim {
            check_len(d, vector.len())?;
        }
        if vector.is_empty() {
            return Err(Error::EmptyInput("vector"));
        }
        if !vector.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidArgument(alloc::format!("non-finite vector for id {id:?}")));
        }
        if self.ids.contains(&id) {
            return Err(Error::DuplicateId(id));
        }
        let mut vector = vector;
        if let Some(t) = self.prune_below {
            prune(&mut vector, t);
        }
        self.dim = Some(vector.len());
        self.ids.insert(id.clone());
        let norm = norm(&vector);
        self.entries.push(Entry { id, vector, payload, norm });
        Ok(())
    }

    /// Top-`k` entries by `metric`, best first; ties keep insertion order.
    pub fn nearest(&self, query: &[f64], metric: Metric, k: usize) -> Result<Vec<Neighbor<'_, P>>> {
        if k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        let dim = self.dim.ok_or(Error::EmptyInput("index"))?;
        check_len(dim, query.len())?;
        let qnorm = norm(query);
        if metric == Metric::Cosine && qnorm == 0.0 {
            return Err(Error::UndefinedCosine);
        }
        let mut scored = Vec::with_capacity(self.entries.len());
        for (pos, e) in self.entries.iter().enumerate() {
            let score = match metric {
                Metric::L2 => libm::sqrt(e.vector.iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum()),
                Metric::Dot => dot(&e.vector, query),
                Metric::Cosine => {
                    if e.norm == 0.0 {
                        return Err(Error::UndefinedCosine);
                    }
                    dot(&e.vector, query) / (e.norm * qnorm)
                }
            };
            scored.push((score, pos));
        }
        let cmp = |a: &(f64, usize), b: &(f64, usize)| metric.order(a.0, b.0).then(a.1.cmp(&b.1));
        if k < scored.len() {
            scored.select_nth_unstable_by(k - 1, cmp);
            scored.truncate(k);
        }
        scored.sort_by(cmp);
        Ok(scored
            .into_iter()
            .map(|(score, pos)| {
                let e = &self.entries[pos];
                Neighbor { id: &e.id, score, payload: &e.payload, position: pos }
            })
            .collect())
    }
}
