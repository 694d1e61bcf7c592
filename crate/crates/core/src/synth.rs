//! A seeded toy world with planted structure: invented entity names whose
//! type sets are fixed, surrounded by uninformative filler contexts. Every
//! task dataset in the crate can be drawn from it, so end-to-end runs need
//! no external data.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{
    CategoryTable, ConceptMatch, ConceptPageMap, FallbackTable, LinkerTable, MentionRecord, Split, Triple,
};
use crate::elc::ElcInstance;
use crate::ned::{NedEntity, NedMention, NedSource};
use crate::{rng, Error, Result};

const GROUPS: [&str; 8] = ["anatomy", "chemical", "disease", "gene", "organism", "procedure", "cell", "device"];

const ONSETS: [&str; 16] = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "tr"];
const NUCLEI: [&str; 5] = ["a", "e", "i", "o", "u"];
const CODAS: [&str; 6] = ["", "x", "n", "l", "r", "s"];

#[derive(Debug, Clone, PartialEq)]
pub struct WorldConfig {
    pub num_types: usize,
    /// Coarse groups; each owns a contiguous block of types. At most 8.
    pub num_groups: usize,
    pub num_entities: usize,
    pub min_types: usize,
    pub max_types: usize,
    /// Filler words per context.
    pub context_words: usize,
    pub filler_vocabulary: usize,
    pub seed: u64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            num_types: 200,
            num_groups: 8,
            num_entities: 96,
            min_types: 3,
            max_types: 6,
            context_words: 6,
            filler_vocabulary: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticEntity {
    pub name: String,
    pub alias: String,
    pub group: usize,
    /// Sorted type indices.
    pub types: Vec<usize>,
    pub popularity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticWorld {
    pub config: WorldConfig,
    pub type_names: Vec<String>,
    pub group_names: Vec<String>,
    pub entities: Vec<SyntheticEntity>,
    pub filler: Vec<String>,
}

/// Raw inputs for the corpus pipeline: mention records plus linker output
/// and mapping tables that route some concepts through each resolver.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorpusFixture {
    pub mentions: Vec<MentionRecord>,
    pub linker: LinkerTable,
    pub exact: ConceptPageMap,
    pub close: ConceptPageMap,
    pub categories: CategoryTable,
    pub fallback: FallbackTable,
}

fn pseudo_words(r: &mut ChaCha8Rng, count: usize, syllables: usize, taken: &mut BTreeSet<String>) -> Vec<String> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut w = String::new();
        for _ in 0..syllables {
            w.push_str(ONSETS.choose(r).copied().unwrap_or("b"));
            w.push_str(NUCLEI.choose(r).copied().unwrap_or("a"));
        }
        w.push_str(CODAS.choose(r).copied().unwrap_or(""));
        if taken.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

impl SyntheticWorld {
    pub fn generate(config: WorldConfig) -> Result<Self> {
        let c = &config;
        if c.num_groups == 0 || c.num_groups > GROUPS.len() {
            return Err(Error::InvalidArgument(format!("group count must be in 1..={}", GROUPS.len())));
        }
        if c.num_types < c.num_groups || c.num_entities < c.num_groups {
            return Err(Error::InvalidArgument("every group needs at least one type and one entity".into()));
        }
        if c.min_types == 0 || c.max_types < c.min_types {
            return Err(Error::InvalidArgument("invalid types-per-entity range".into()));
        }
        if c.context_words == 0 || c.filler_vocabulary == 0 {
            return Err(Error::InvalidArgument("contexts need filler words".into()));
        }
        let mut r = rng::named_rng(c.seed, "world");

        // group g owns types [bounds[g], bounds[g+1])
        let bounds: Vec<usize> = (0..=c.num_groups).map(|g| g * c.num_types / c.num_groups).collect();
        let mut type_names = Vec::with_capacity(c.num_types);
        for g in 0..c.num_groups {
            for k in 0..bounds[g + 1] - bounds[g] {
                type_names.push(format!("{}_{k:02}", GROUPS[g]));
            }
        }

        let mut taken = BTreeSet::new();
        let filler = pseudo_words(&mut r, c.filler_vocabulary, 2, &mut taken);
        let names = pseudo_words(&mut r, 2 * c.num_entities, 3, &mut taken);

        let mut entities: Vec<SyntheticEntity> = (0..c.num_entities)
            .map(|e| {
                let group = e % c.num_groups;
                let (lo, hi) = (bounds[group], bounds[group + 1]);
                // the group's first type marks membership; the rest are drawn
                // from the group's block
                let want = r.gen_range(c.min_types..=c.max_types).min(hi - lo);
                let mut types = BTreeSet::new();
                types.insert(lo);
                if hi - lo > 1 {
                    for i in index::sample(&mut r, hi - lo - 1, want.saturating_sub(1).min(hi - lo - 1)) {
                        types.insert(lo + 1 + i);
                    }
                }
                SyntheticEntity {
                    name: names[2 * e].clone(),
                    alias: names[2 * e + 1].clone(),
                    group,
                    types: types.into_iter().collect(),
                    popularity: r.gen_range(0.05..0.95),
                }
            })
            .collect();

        // give each uncovered type to the group member with the fewest types
        for t in 0..c.num_types {
            if entities.iter().any(|e| e.types.contains(&t)) {
                continue;
            }
            let group = bounds.iter().rposition(|&b| b <= t).unwrap_or(0).min(c.num_groups - 1);
            if let Some(e) = entities.iter_mut().filter(|e| e.group == group).min_by_key(|e| e.types.len()) {
                e.types.push(t);
                e.types.sort_unstable();
            }
        }

        Ok(Self {
            group_names: GROUPS[..c.num_groups].iter().map(|g| String::from(*g)).collect(),
            config,
            type_names,
            entities,
            filler,
        })
    }

    pub fn entity_type_names(&self, entity: usize) -> Vec<String> {
        self.entities[entity].types.iter().map(|&t| self.type_names[t].clone()).collect()
    }

    fn filler_context(&self, r: &mut ChaCha8Rng, surface: &str) -> String {
        let words = self.config.context_words;
        let at = r.gen_range(0..=words);
        let mut out: Vec<&str> = (0..words).map(|_| self.filler[r.gen_range(0..self.filler.len())].as_str()).collect();
        out.insert(at, surface);
        out.join(" ")
    }

    fn surface(&self, r: &mut ChaCha8Rng, entity: usize) -> &str {
        let e = &self.entities[entity];
        if r.gen_bool(0.5) {
            &e.name
        } else {
            &e.alias
        }
    }

    /// `n` triples over uniformly drawn entities; the types depend only on
    /// which entity's surface form is the mention.
    pub fn typing_triples(&self, n: usize, stream: &str) -> Vec<Triple> {
        let mut r = rng::named_rng(self.config.seed, &format!("typing:{stream}"));
        (0..n)
            .map(|_| {
                let e = r.gen_range(0..self.entities.len());
                let surface = String::from(self.surface(&mut r, e));
                let context = self.filler_context(&mut r, &surface);
                Triple::new(surface, context, self.entity_type_names(e)).expect("entities carry at least one type")
            })
            .collect()
    }

    /// Train/dev/test typing triples drawn from independent streams.
    pub fn typing_splits(&self, counts: (usize, usize, usize)) -> Split<Triple> {
        Split {
            train: self.typing_triples(counts.0, "train"),
            dev: self.typing_triples(counts.1, "dev"),
            test: self.typing_triples(counts.2, "test"),
        }
    }

    /// The entity's page text: its alias followed by fixed filler.
    pub fn description(&self, entity: usize) -> String {
        let mut r = rng::named_rng(self.config.seed, &format!("description:{entity}"));
        let alias = self.entities[entity].alias.clone();
        self.filler_context(&mut r, &alias)
    }

    /// One `(title, description, types)` record per entity.
    pub fn description_triples(&self) -> Vec<Triple> {
        (0..self.entities.len())
            .map(|e| {
                Triple::new(self.entities[e].name.clone(), self.description(e), self.entity_type_names(e))
                    .expect("entities carry at least one type")
            })
            .collect()
    }

    /// Entities held out of the labeled training pool of the coarse-label
    /// task: every fourth member of each group.
    pub fn is_heldout(&self, entity: usize) -> bool {
        (entity / self.config.num_groups) % 4 == 3
    }

    /// Mentions labeled with their entity's group. Train instances come from
    /// entities outside the held-out set and test instances from inside it.
    pub fn elc_instances(&self, n: usize, split: &str) -> Vec<ElcInstance> {
        let heldout = split == "test";
        let pool: Vec<usize> = (0..self.entities.len()).filter(|&e| self.is_heldout(e) == heldout).collect();
        let mut r = rng::named_rng(self.config.seed, &format!("elc:{split}"));
        (0..n)
            .map(|_| {
                let e = pool[r.gen_range(0..pool.len())];
                let mention = String::from(self.surface(&mut r, e));
                let context = self.filler_context(&mut r, &mention);
                ElcInstance { mention, context, label: self.group_names[self.entities[e].group].clone() }
            })
            .collect()
    }

    fn ned_mentions(&self, n: usize, split: &str) -> Vec<NedMention> {
        let mut r = rng::named_rng(self.config.seed, &format!("ned:{split}"));
        (0..n)
            .map(|_| {
                let entity = r.gen_range(0..self.entities.len());
                let mention = String::from(self.surface(&mut r, entity));
                let context = self.filler_context(&mut r, &mention);
                NedMention { mention, context, entity }
            })
            .collect()
    }

    /// Entity pages with their popularity as prior, and mention pools of
    /// `pool_size` per split.
    pub fn ned_source(&self, pool_size: usize) -> NedSource {
        NedSource {
            entities: (0..self.entities.len())
                .map(|e| NedEntity {
                    title: self.entities[e].name.clone(),
                    description: self.description(e),
                    popularity: self.entities[e].popularity,
                })
                .collect(),
            train: self.ned_mentions(pool_size, "train"),
            dev: self.ned_mentions(pool_size, "dev"),
            test: self.ned_mentions(pool_size, "test"),
        }
    }

    pub fn concept_id(entity: usize) -> String {
        format!("C{entity:07}")
    }

    /// `docs` documents of one or two entity mentions each, plus unlinkable
    /// noise mentions. Every fifth entity resolves only through the fallback
    /// table, every fifth (offset one) through the close map, the rest
    /// through the exact map. Each linked surface also returns a decoy
    /// concept that the score filter must drop.
    pub fn corpus_fixture(&self, docs: usize) -> CorpusFixture {
        let mut r = rng::named_rng(self.config.seed, "corpus");
        let mut fx = CorpusFixture::default();
        let n = self.entities.len();
        for (e, ent) in self.entities.iter().enumerate() {
            let cuid = Self::concept_id(e);
            let page = format!("P{e:05}");
            let decoy = Self::concept_id((e + 1) % n);
            for surface in [&ent.name, &ent.alias] {
                let score = r.gen_range(0.9..1.0);
                fx.linker.insert(
                    surface.clone(),
                    ConceptMatch::new(cuid.clone(), ent.name.clone(), score).expect("score in range"),
                );
                let low = score - r.gen_range(0.05..0.3);
                fx.linker
                    .insert(surface.clone(), ConceptMatch::new(decoy.clone(), "decoy", low).expect("score in range"));
            }
            match e % 5 {
                0 => {
                    for t in self.entity_type_names(e) {
                        fx.fallback.insert(&ent.name, t.clone());
                        fx.fallback.insert(&ent.alias, t);
                    }
                }
                1 => fx.close.insert(cuid, page.clone()),
                _ => fx.exact.insert(cuid, page.clone()),
            }
            for t in self.entity_type_names(e) {
                fx.categories.insert(page.clone(), t);
            }
        }
        let mut taken: BTreeSet<String> = self.filler.iter().cloned().collect();
        taken.extend(self.entities.iter().flat_map(|e| [e.name.clone(), e.alias.clone()]));
        let noise = pseudo_words(&mut r, 8, 4, &mut taken);
        // low-confidence links for half of the noise words
        for w in noise.iter().take(4) {
            fx.linker.insert(w.clone(), ConceptMatch::new("C9999999", w.clone(), 0.6).expect("score in range"));
        }
        for d in 0..docs {
            let doc_id = format!("doc{d:05}");
            let mut words: Vec<String> = (0..self.config.context_words)
                .map(|_| self.filler[r.gen_range(0..self.filler.len())].clone())
                .collect();
            let k = r.gen_range(1..=2);
            let mut surfaces: Vec<String> = Vec::new();
            for _ in 0..k {
                let surface = if d % 10 == 9 {
                    noise[r.gen_range(0..noise.len())].clone()
                } else {
                    let e = r.gen_range(0..n);
                    String::from(self.surface(&mut r, e))
                };
                let at = r.gen_range(0..=words.len());
                words.insert(at, surface.clone());
                surfaces.push(surface);
            }
            let context = words.join(" ");
            // char offset of word i: sum of preceding word lengths plus spaces
            let starts: Vec<usize> = words
                .iter()
                .scan(0usize, |off, w| {
                    let s = *off;
                    *off += w.chars().count() + 1;
                    Some(s)
                })
                .collect();
            for (i, w) in words.iter().enumerate() {
                if surfaces.contains(w) {
                    fx.mentions.push(MentionRecord {
                        doc_id: doc_id.clone(),
                        surface: w.clone(),
                        context: context.clone(),
                        start: starts[i],
                        end: starts[i] + w.chars().count(),
                    });
                }
            }
        }
        fx
    }
}

/// Shortcut for the typing corpus of a default world at the given sizes.
pub fn typing_corpus(seed: u64, counts: (usize, usize, usize)) -> Result<(SyntheticWorld, Split<Triple>)> {
    let world = SyntheticWorld::generate(WorldConfig { seed, ..WorldConfig::default() })?;
    let splits = world.typing_splits(counts);
    Ok((world, splits))
}
