use alloc::string::String;

use crate::{Error, Result};

pub const DEFAULT_MIN_SCORE: f64 = 0.8;
/// "Within two points" of the best match, in score units.
pub const DEFAULT_WINDOW: f64 = 0.02;

/// One candidate concept returned by an entity linker for a mention.
#[derive(Debug, Clone, PartialEq)]
pub struct ConceptMatch {
    pub cuid: String,
    pub name: String,
    pub score: f64,
    pub wiki_ref: Option<String>,
}

impl ConceptMatch {
    pub fn new(cuid: impl Into<String>, name: impl Into<String>, score: f64) -> Result<Self> {
        let cuid = cuid.into();
        if cuid.is_empty() {
            return Err(Error::InvalidArgument("empty concept identifier".into()));
        }
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::InvalidArgument(alloc::format!("concept score {score} outside [0, 1]")));
        }
        Ok(Self { cuid, name: name.into(), score, wiki_ref: None })
    }

    pub fn with_wiki_ref(mut self, page: impl Into<String>) -> Self {
        self.wiki_ref = Some(page.into());
        self
    }
}

/// Keeps the matches scoring at least `min_score` and within `window` of the
/// best score among all inputs. Input order is preserved.
pub fn filter_concept_matches(matches: &[ConceptMatch], min_score: f64, window: f64) -> alloc::vec::Vec<ConceptMatch> {
    let Some(best) = matches.iter().map(|m| m.score).reduce(f64::max) else {
        return alloc::vec::Vec::new();
    };
    matches.iter().filter(|m| m.score >= min_score && m.score >= best - window).cloned().collect()
}
