use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::{index, SliceRandom};
use rand::Rng;

use super::{popular_prior_predict, Candidate, NedInstance};
use crate::{rng, Error, Result};

/// A knowledge-base page with its link-statistics prior.
#[derive(Debug, Clone, PartialEq)]
pub struct NedEntity {
    pub title: String,
    pub description: String,
    pub popularity: f64,
}

/// A mention known to refer to `entity`.
#[derive(Debug, Clone, PartialEq)]
pub struct NedMention {
    pub mention: String,
    pub context: String,
    pub entity: usize,
}

/// Entities plus disjoint mention pools for each split.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NedSource {
    pub entities: Vec<NedEntity>,
    pub train: Vec<NedMention>,
    pub dev: Vec<NedMention>,
    pub test: Vec<NedMention>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NedGenConfig {
    pub min_candidates: usize,
    pub max_candidates: usize,
    /// Largest allowed fraction of instances whose gold candidate has the
    /// highest prior.
    pub popular_cap: f64,
    pub seed: u64,
}

impl Default for NedGenConfig {
    fn default() -> Self {
        Self { min_candidates: 3, max_candidates: 5, popular_cap: 0.5, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NedSets {
    pub train: Vec<NedInstance>,
    pub dev: Vec<NedInstance>,
    pub test: Vec<NedInstance>,
    /// Drafts discarded to respect the popular cap, over all splits.
    pub rejected: usize,
}

/// Builds `counts = (train, dev, test)` instances. Each draft picks a
/// mention, then distractors uniformly from the other entities, and shuffles
/// the candidates. Drafts whose gold wins on prior are accepted only while
/// the split stays within `floor(popular_cap · count)` of them.
pub fn generate_synthetic_ned(
    source: &NedSource,
    counts: (usize, usize, usize),
    config: &NedGenConfig,
) -> Result<NedSets> {
    if config.min_candidates < 2 || config.max_candidates < config.min_candidates {
        return Err(Error::InvalidArgument(alloc::format!(
            "candidate range {}..={} is invalid",
            config.min_candidates,
            config.max_candidates
        )));
    }
    if !(0.0..=1.0).contains(&config.popular_cap) {
        return Err(Error::InvalidArgument("popular cap must lie in [0, 1]".into()));
    }
    if source.entities.len() < config.max_candidates {
        return Err(Error::Infeasible(alloc::format!(
            "{} entities cannot fill {} candidates",
            source.entities.len(),
            config.max_candidates
        )));
    }
    if let Some(e) = source.entities.iter().find(|e| !(0.0..=1.0).contains(&e.popularity)) {
        return Err(Error::InvalidArgument(alloc::format!("popularity {} outside [0, 1]", e.popularity)));
    }
    let mut sets = NedSets::default();
    let (train, rej) = generate_split(source, &source.train, counts.0, config, "train")?;
    sets.train = train;
    sets.rejected += rej;
    let (dev, rej) = generate_split(source, &source.dev, counts.1, config, "dev")?;
    sets.dev = dev;
    sets.rejected += rej;
    let (test, rej) = generate_split(source, &source.test, counts.2, config, "test")?;
    sets.test = test;
    sets.rejected += rej;
    Ok(sets)
}

fn generate_split(
    source: &NedSource,
    pool: &[NedMention],
    count: usize,
    config: &NedGenConfig,
    split: &str,
) -> Result<(Vec<NedInstance>, usize)> {
    if count == 0 {
        return Ok((Vec::new(), 0));
    }
    if pool.is_empty() {
        return Err(Error::EmptyInput("mention pool"));
    }
    if let Some(m) = pool.iter().find(|m| m.entity >= source.entities.len()) {
        return Err(Error::InvalidArgument(alloc::format!("mention refers to unknown entity {}", m.entity)));
    }
    let limit = libm::floor(config.popular_cap * count as f64 + 1e-9) as usize;
    let max_attempts = 50 * count + 1000;
    let mut r = rng::named_rng(config.seed, &alloc::format!("ned:{split}"));
    let mut out = Vec::with_capacity(count);
    let mut popular = 0;
    let mut rejected = 0;
    while out.len() < count {
        if out.len() + rejected >= max_attempts {
            return Err(Error::Infeasible(alloc::format!(
                "popular cap {} unreachable after {max_attempts} drafts",
                config.popular_cap
            )));
        }
        let inst = draft(source, &pool[r.gen_range(0..pool.len())], config, &mut r);
        if popular_prior_predict(&inst) == inst.gold {
            if popular >= limit {
                rejected += 1;
                continue;
            }
            popular += 1;
        }
        out.push(inst);
    }
    Ok((out, rejected))
}

fn draft(source: &NedSource, m: &NedMention, config: &NedGenConfig, r: &mut impl Rng) -> NedInstance {
    let n = r.gen_range(config.min_candidates..=config.max_candidates);
    let others = source.entities.len() - 1;
    let mut ids: Vec<usize> =
        index::sample(r, others, n - 1).into_iter().map(|i| if i >= m.entity { i + 1 } else { i }).collect();
    ids.push(m.entity);
    ids.shuffle(r);
    let gold = ids.iter().position(|&e| e == m.entity).unwrap_or(0);
    let candidates = ids
        .iter()
        .map(|&e| {
            let ent = &source.entities[e];
            Candidate { title: ent.title.clone(), description: ent.description.clone(), prior: ent.popularity }
        })
        .collect();
    NedInstance { mention: m.mention.clone(), context: m.context.clone(), candidates, gold }
}
