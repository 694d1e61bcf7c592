//! Named entity disambiguation by similarity between the mention's
//! representation and each candidate's description representation, plus the
//! popular-prior and logistic-regression baselines.

mod baseline;
mod generate;

use alloc::string::String;
use alloc::vec::Vec;

use crate::store::{similarity, Metric};
use crate::typer::{Representation, TypingModel};
use crate::{Error, Result};

pub use baseline::{
    baseline_features, baseline_predict, baseline_scores, baseline_train, fit_logistic, logistic_loss_and_grad,
    BaselineWeights, LogisticConfig,
};
pub use generate::{generate_synthetic_ned, NedEntity, NedGenConfig, NedMention, NedSets, NedSource};

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub title: String,
    pub description: String,
    /// Link-statistics prior in `[0, 1]`.
    pub prior: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NedInstance {
    pub mention: String,
    pub context: String,
    pub candidates: Vec<Candidate>,
    pub gold: usize,
}

impl NedInstance {
    /// Evaluation accepts any instance with two or more candidates; the 3–5
    /// range is a construction convention enforced by the generator.
    pub fn validate(&self) -> Result<()> {
        if self.candidates.len() < 2 {
            return Err(Error::InvalidArgument("an instance needs at least two candidates".into()));
        }
        if self.gold >= self.candidates.len() {
            return Err(Error::InvalidArgument(alloc::format!(
                "gold index {} out of range for {} candidates",
                self.gold,
                self.candidates.len()
            )));
        }
        if let Some(c) = self.candidates.iter().find(|c| !(0.0..=1.0).contains(&c.prior)) {
            return Err(Error::InvalidArgument(alloc::format!("prior {} outside [0, 1]", c.prior)));
        }
        Ok(())
    }
}

/// Maps mentions and candidate pages into one comparable space.
pub trait NedEmbedder {
    fn mention(&self, mention: &str, context: &str) -> Result<Vec<f64>>;
    fn candidate(&self, title: &str, description: &str) -> Result<Vec<f64>>;
}

/// A mention typing model and a separately trained description typing model
/// over the same type vocabulary.
#[derive(Debug, Clone, Copy)]
pub struct ModelPair<'a> {
    mention_model: &'a TypingModel,
    desc_model: &'a TypingModel,
    representation: Representation,
}

impl<'a> ModelPair<'a> {
    pub fn new(
        mention_model: &'a TypingModel,
        desc_model: &'a TypingModel,
        representation: Representation,
    ) -> Result<Self> {
        let (expected, found) = (mention_model.types.hash(), desc_model.types.hash());
        if expected != found {
            return Err(Error::VocabularyMismatch { expected, found });
        }
        Ok(Self { mention_model, desc_model, representation })
    }

    pub fn representation(&self) -> Representation {
        self.representation
    }
}

impl NedEmbedder for ModelPair<'_> {
    fn mention(&self, mention: &str, context: &str) -> Result<Vec<f64>> {
        self.mention_model.embed(mention, context, self.representation)
    }

    fn candidate(&self, title: &str, description: &str) -> Result<Vec<f64>> {
        embed_candidate(title, description, self.desc_model, self.representation)
    }
}

/// The page title plays the mention and its description the context.
pub fn embed_candidate(
    title: &str,
    description: &str,
    desc_model: &TypingModel,
    rep: Representation,
) -> Result<Vec<f64>> {
    desc_model.embed(title, description, rep)
}

/// Index of the largest score, ties to the lowest index.
pub fn argmax(scores: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &s) in scores.iter().enumerate() {
        if best.is_none_or(|b| s > scores[b]) {
            best = Some(i);
        }
    }
    best
}

/// Similarity of the mention to each candidate, in candidate order.
pub fn score_candidates(instance: &NedInstance, embedder: &dyn NedEmbedder, metric: Metric) -> Result<Vec<f64>> {
    instance.validate()?;
    let m = embedder.mention(&instance.mention, &instance.context)?;
    instance.candidates.iter().map(|c| similarity(&m, &embedder.candidate(&c.title, &c.description)?, metric)).collect()
}

/// Scores from precomputed embeddings.
pub fn score_embedded(mention: &[f64], candidates: &[Vec<f64>], metric: Metric) -> Result<Vec<f64>> {
    candidates.iter().map(|c| similarity(mention, c, metric)).collect()
}

pub fn disambiguate(instance: &NedInstance, embedder: &dyn NedEmbedder, metric: Metric) -> Result<usize> {
    let scores = score_candidates(instance, embedder, metric)?;
    argmax(&scores).ok_or(Error::EmptyInput("candidate set"))
}

/// Highest prior, ties to the lowest index.
pub fn popular_prior_predict(instance: &NedInstance) -> usize {
    let priors: Vec<f64> = instance.candidates.iter().map(|c| c.prior).collect();
    argmax(&priors).unwrap_or(0)
}

/// Fraction of instances whose prediction equals the gold index.
pub fn accuracy(instances: &[NedInstance], predictions: &[usize]) -> Result<f64> {
    crate::error::check_len(instances.len(), predictions.len())?;
    if instances.is_empty() {
        return Err(Error::EmptyInput("evaluation set"));
    }
    let correct = instances.iter().zip(predictions).filter(|(i, &p)| i.gold == p).count();
    Ok(correct as f64 / instances.len() as f64)
}
