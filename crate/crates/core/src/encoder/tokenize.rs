use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::{rng, Error, Result};

pub const CLS: u32 = 0;
pub const SEP: u32 = 1;
pub const UNK: u32 = 2;
pub const PAD: u32 = 3;
const MARKERS: [&str; 4] = ["[CLS]", "[SEP]", "[UNK]", "[PAD]"];

/// Lowercases and splits on whitespace; every other non-alphanumeric
/// character becomes a token of its own.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    for c in text.chars().flat_map(char::to_lowercase) {
        if c.is_alphanumeric() {
            current.push(c);
            continue;
        }
        if !current.is_empty() {
            out.push(core::mem::take(&mut current));
        }
        if !c.is_whitespace() {
            out.push(String::from(c));
        }
    }
    if !current.is_empty() {
        out.push(current);
    }
    out
}

/// Token strings with the four reserved markers at indices 0 through 3.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenVocabulary {
    tokens: Vec<String>,
    index: BTreeMap<String, u32>,
}

impl TokenVocabulary {
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        if tokens.len() < MARKERS.len() || tokens.iter().zip(MARKERS).any(|(t, m)| t != m) {
            return Err(Error::InvalidArgument("reserved markers must occupy indices 0-3".into()));
        }
        let mut index = BTreeMap::new();
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i as u32).is_some() {
                return Err(Error::DuplicateId(t.clone()));
            }
        }
        Ok(Self { tokens, index })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn id(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(UNK)
    }

    pub fn index_of(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn hash(&self) -> u64 {
        let mut buf = Vec::new();
        for t in &self.tokens {
            buf.extend_from_slice(t.as_bytes());
            buf.push(b'\n');
        }
        rng::fnv1a(&buf)
    }
}

/// Reserved markers followed by the `max_size - 4` most frequent tokens,
/// ties broken lexicographically.
pub fn build_token_vocab<'a>(texts: impl IntoIterator<Item = &'a str>, max_size: usize) -> Result<TokenVocabulary> {
    if max_size < 5 {
        return Err(Error::InvalidArgument(alloc::format!("max_size {max_size} < 5")));
    }
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for text in texts {
        for tok in tokenize(text) {
            *counts.entry(tok).or_default() += 1;
        }
    }
    if counts.is_empty() {
        return Err(Error::EmptyInput("corpus"));
    }
    let mut ranked: Vec<(String, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let tokens = MARKERS
        .iter()
        .map(|m| String::from(*m))
        .chain(ranked.into_iter().map(|(t, _)| t).take(max_size - MARKERS.len()))
        .collect();
    TokenVocabulary::from_tokens(tokens)
}

/// `[CLS] mention [SEP] context [SEP]` as token and segment ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncoderInput {
    pub token_ids: Vec<u32>,
    pub segment_ids: Vec<u8>,
}

impl EncoderInput {
    pub fn len(&self) -> usize {
        self.token_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.token_ids.is_empty()
    }

    /// Appends `[PAD]` positions up to `len`.
    pub fn padded_to(mut self, len: usize) -> Self {
        while self.token_ids.len() < len {
            self.token_ids.push(PAD);
            self.segment_ids.push(1);
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.token_ids.len() != self.segment_ids.len() {
            return Err(Error::DimensionMismatch { expected: self.token_ids.len(), found: self.segment_ids.len() });
        }
        if self.token_ids.first() != Some(&CLS) {
            return Err(Error::InvalidArgument("input must start with [CLS]".into()));
        }
        if self.token_ids.iter().filter(|&&t| t == SEP).count() != 2 {
            return Err(Error::InvalidArgument("input must contain exactly two [SEP]".into()));
        }
        if self.segment_ids.windows(2).any(|w| w[0] > w[1]) || self.segment_ids.iter().any(|&s| s > 1) {
            return Err(Error::InvalidArgument("segment ids must be 0s then 1s".into()));
        }
        Ok(())
    }
}

/// Truncates context tokens first, then mention tokens, so that the result
/// fits in `max_len` with both separators kept.
pub fn assemble_input(mention: &str, context: &str, vocab: &TokenVocabulary, max_len: usize) -> Result<EncoderInput> {
    if max_len < 4 {
        return Err(Error::InvalidArgument(alloc::format!("max_len {max_len} < 4")));
    }
    let mut m = tokenize(mention);
    let mut c = tokenize(context);
    if m.is_empty() {
        return Err(Error::EmptyInput("mention"));
    }
    if c.is_empty() {
        return Err(Error::EmptyInput("context"));
    }
    let budget = max_len - 3;
    if m.len() + c.len() > budget {
        let keep_context = budget.saturating_sub(m.len());
        c.truncate(keep_context);
        m.truncate(budget - c.len());
    }

    let mut token_ids = Vec::with_capacity(m.len() + c.len() + 3);
    let mut segment_ids = Vec::with_capacity(token_ids.capacity());
    token_ids.push(CLS);
    token_ids.extend(m.iter().map(|t| vocab.id(t)));
    token_ids.push(SEP);
    segment_ids.resize(token_ids.len(), 0);
    token_ids.extend(c.iter().map(|t| vocab.id(t)));
    token_ids.push(SEP);
    segment_ids.resize(token_ids.len(), 1);
    Ok(EncoderInput { token_ids, segment_ids })
}
