use alloc::vec::Vec;

use super::{predict_types, SparseTypeVector, TypeEmbeddingMatrix};
use crate::corpus::TypeVocabulary;
use crate::encoder::{self, assemble_input, DenseVector, EncoderConfig, EncoderInput, EncoderParams, TokenVocabulary};
use crate::{Error, Result};

/// Which of the two representations a downstream task consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Representation {
    /// The encoder output `h`.
    Dense,
    /// The type probabilities `t`.
    Sparse,
}

impl Representation {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Dense => "dense",
            Self::Sparse => "sparse",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "dense" => Some(Self::Dense),
            "sparse" => Some(Self::Sparse),
            _ => None,
        }
    }
}

/// Encoder plus type-projection head, with the vocabularies they index.
#[derive(Debug, Clone, PartialEq)]
pub struct TypingModel {
    pub tokens: TokenVocabulary,
    pub types: TypeVocabulary,
    pub encoder: EncoderParams,
    pub type_embeddings: TypeEmbeddingMatrix,
}

impl TypingModel {
    pub fn init(tokens: TokenVocabulary, types: TypeVocabulary, config: EncoderConfig, seed: u64) -> Result<Self> {
        let encoder = EncoderParams::init(config, seed)?;
        let type_embeddings = TypeEmbeddingMatrix::init(types.len(), config.dim, seed);
        Self::from_parts(tokens, types, encoder, type_embeddings)
    }

    pub fn from_parts(
        tokens: TokenVocabulary,
        types: TypeVocabulary,
        encoder: EncoderParams,
        type_embeddings: TypeEmbeddingMatrix,
    ) -> Result<Self> {
        if encoder.config.vocab_size != tokens.len() {
            return Err(Error::DimensionMismatch { expected: tokens.len(), found: encoder.config.vocab_size });
        }
        if type_embeddings.num_types() != types.len() {
            return Err(Error::DimensionMismatch { expected: types.len(), found: type_embeddings.num_types() });
        }
        if type_embeddings.dim() != encoder.config.dim {
            return Err(Error::DimensionMismatch { expected: encoder.config.dim, found: type_embeddings.dim() });
        }
        Ok(Self { tokens, types, encoder, type_embeddings })
    }

    pub fn input(&self, mention: &str, context: &str) -> Result<EncoderInput> {
        assemble_input(mention, context, &self.tokens, self.encoder.config.max_len)
    }

    pub fn dense(&self, mention: &str, context: &str) -> Result<DenseVector> {
        encoder::encode(&self.input(mention, context)?, &self.encoder)
    }

    pub fn sparse(&self, mention: &str, context: &str) -> Result<SparseTypeVector> {
        let h = self.dense(mention, context)?;
        predict_types(h.as_slice(), &self.type_embeddings)
    }

    /// Both representations from one forward pass.
    pub fn both(&self, mention: &str, context: &str) -> Result<(DenseVector, SparseTypeVector)> {
        let h = self.dense(mention, context)?;
        let t = predict_types(h.as_slice(), &self.type_embeddings)?;
        Ok((h, t))
    }

    pub fn embed(&self, mention: &str, context: &str, rep: Representation) -> Result<Vec<f64>> {
        Ok(match rep {
            Representation::Dense => self.dense(mention, context)?.0,
            Representation::Sparse => self.sparse(mention, context)?.into_inner(),
        })
    }
}
