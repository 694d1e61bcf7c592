//! Type-system induction: concept linking, score filtering, category
//! resolution and the `(mention, context, types)` triples built from them.

mod concept;
mod resolve;
mod split;
mod triples;
mod vocab;

pub use concept::{filter_concept_matches, ConceptMatch, DEFAULT_MIN_SCORE, DEFAULT_WINDOW};
pub use resolve::{
    resolve_categories, CategoryResolver, CategoryTable, ConceptPageMap, FallbackResolver, FallbackTable, MatchSource,
    Resolvers,
};
pub use split::{split_dataset, Split};
pub use triples::{emit_triples, ConceptLinker, Emission, LinkerTable, MentionRecord, SkipReason, SkipReport, Triple};
pub use vocab::{build_vocabulary, TypeVocabulary};
