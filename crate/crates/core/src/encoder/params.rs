use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::math::Matrix;
use crate::{rng, Error, Result};

/// Shape of the encoder. The feed-forward inner width is `4 * dim`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncoderConfig {
    pub vocab_size: usize,
    pub dim: usize,
    pub layers: usize,
    pub heads: usize,
    pub max_len: usize,
}

impl EncoderConfig {
    pub fn new(vocab_size: usize) -> Self {
        Self { vocab_size, dim: 64, layers: 2, heads: 4, max_len: 128 }
    }

    pub fn ffn_dim(&self) -> usize {
        4 * self.dim
    }

    pub fn head_dim(&self) -> usize {
        self.dim / self.heads
    }

    pub fn validate(&self) -> Result<()> {
        if self.vocab_size < 5 || self.dim == 0 || self.heads == 0 || self.max_len < 4 {
            return Err(Error::InvalidArgument(format!("degenerate encoder config {self:?}")));
        }
        if !self.dim.is_multiple_of(self.heads) {
            return Err(Error::InvalidArgument(format!("dim {} not divisible by {} heads", self.dim, self.heads)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerNorm {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
}

impl LayerNorm {
    fn new(dim: usize) -> Self {
        Self { gamma: vec![1.0; dim], beta: vec![0.0; dim] }
    }
}

/// Affine map `x · weight + bias` with `weight` stored `in × out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

impl Linear {
    fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self { weight: Matrix::zeros(fan_in, fan_out), bias: vec![0.0; fan_out] }
    }

    fn uniform(fan_in: usize, fan_out: usize, rng: &mut impl Rng) -> Self {
        let mut l = Self::zeros(fan_in, fan_out);
        let bound = 1.0 / libm::sqrt(fan_in as f64);
        l.weight.as_mut_slice().iter_mut().for_each(|w| *w = rng.gen_range(-bound..bound));
        l
    }
}

/// One pre-norm block: `x + Attn(LN(x))` then `x + FFN(LN(x))`.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub attn_norm: LayerNorm,
    pub query: Linear,
    pub key: Linear,
    pub value: Linear,
    pub output: Linear,
    pub ffn_norm: LayerNorm,
    pub ffn_in: Linear,
    pub ffn_out: Linear,
}

impl Block {
    fn zeros(dim: usize, ffn: usize) -> Self {
        Self {
            attn_norm: LayerNorm::new(dim),
            query: Linear::zeros(dim, dim),
            key: Linear::zeros(dim, dim),
            value: Linear::zeros(dim, dim),
            output: Linear::zeros(dim, dim),
            ffn_norm: LayerNorm::new(dim),
            ffn_in: Linear::zeros(dim, ffn),
            ffn_out: Linear::zeros(ffn, dim),
        }
    }
}

/// All trainable encoder tensors. The same type doubles as the gradient
/// accumulator, so [`EncoderParams::tensors`] order is also the optimizer
/// and checkpoint order.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    pub config: EncoderConfig,
    pub token_embedding: Matrix,
    pub position_embedding: Matrix,
    pub segment_embedding: Matrix,
    pub blocks: Vec<Block>,
    pub final_norm: LayerNorm,
}

impl EncoderParams {
    /// Every weight zero, every layer-norm scale one.
    pub fn zeros(config: EncoderConfig) -> Result<Self> {
        config.validate()?;
        let d = config.dim;
        Ok(Self {
            config,
            token_embedding: Matrix::zeros(config.vocab_size, d),
            position_embedding: Matrix::zeros(config.max_len, d),
            segment_embedding: Matrix::zeros(2, d),
            blocks: (0..config.layers).map(|_| Block::zeros(d, config.ffn_dim())).collect(),
            final_norm: LayerNorm::new(d),
        })
    }

    pub fn init(config: EncoderConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = rng::named_rng(seed, "encoder-init");
        let d = config.dim;
        let mut p = Self::zeros(config)?;
        for table in [&mut p.token_embedding, &mut p.position_embedding, &mut p.segment_embedding] {
            table.as_mut_slice().iter_mut().for_each(|w| *w = rng.gen_range(-0.5..0.5));
        }
        for block in &mut p.blocks {
            block.query = Linear::uniform(d, d, &mut rng);
            block.key = Linear::uniform(d, d, &mut rng);
            block.value = Linear::uniform(d, d, &mut rng);
            block.output = Linear::uniform(d, d, &mut rng);
            block.ffn_in = Linear::uniform(d, config.ffn_dim(), &mut rng);
            block.ffn_out = Linear::uniform(config.ffn_dim(), d, &mut rng);
        }
        Ok(p)
    }

    /// Zero-valued tensors with this parameter set's shapes.
    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.tensors_mut().into_iter().for_each(|t| t.iter_mut().for_each(|x| *x = 0.0));
        z
    }

    /// Named tensors in declaration order.
    pub fn tensors(&self) -> Vec<(String, &[f64])> {
        let mut out: Vec<(String, &[f64])> = vec![
            ("token_embedding".into(), self.token_embedding.as_slice()),
            ("position_embedding".into(), self.position_embedding.as_slice()),
            ("segment_embedding".into(), self.segment_embedding.as_slice()),
        ];
        for (i, b) in self.blocks.iter().enumerate() {
            let named = |n: &str| format!("block{i}.{n}");
            out.push((named("attn_norm.gamma"), &b.attn_norm.gamma));
            out.push((named("attn_norm.beta"), &b.attn_norm.beta));
            for (n, l) in [("query", &b.query), ("key", &b.key), ("value", &b.value), ("output", &b.output)] {
                out.push((named(&format!("{n}.weight")), l.weight.as_slice()));
                out.push((named(&format!("{n}.bias")), &l.bias));
            }
            out.push((named("ffn_norm.gamma"), &b.ffn_norm.gamma));
            out.push((named("ffn_norm.beta"), &b.ffn_norm.beta));
            for (n, l) in [("ffn_in", &b.ffn_in), ("ffn_out", &b.ffn_out)] {
                out.push((named(&format!("{n}.weight")), l.weight.as_slice()));
                out.push((named(&format!("{n}.bias")), &l.bias));
            }
        }
        out.push(("final_norm.gamma".into(), &self.final_norm.gamma));
        out.push(("final_norm.beta".into(), &self.final_norm.beta));
        out
    }

    /// Same order as [`EncoderParams::tensors`].
    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = vec![
            self.token_embedding.as_mut_slice(),
            self.position_embedding.as_mut_slice(),
            self.segment_embedding.as_mut_slice(),
        ];
        for b in &mut self.blocks {
            out.push(&mut b.attn_norm.gamma);
            out.push(&mut b.attn_norm.beta);
            for l in [&mut b.query, &mut b.key, &mut b.value, &mut b.output] {
                out.push(l.weight.as_mut_slice());
                out.push(&mut l.bias);
            }
            out.push(&mut b.ffn_norm.gamma);
            out.push(&mut b.ffn_norm.beta);
            for l in [&mut b.ffn_in, &mut b.ffn_out] {
                out.push(l.weight.as_mut_slice());
                out.push(&mut l.bias);
            }
        }
        out.push(&mut self.final_norm.gamma);
        out.push(&mut self.final_norm.beta);
        out
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|(_, t)| t.iter().all(|x| x.is_finite()))
    }
}
