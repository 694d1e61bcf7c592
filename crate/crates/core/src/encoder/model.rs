//! Forward pass and exact reverse-mode gradients of the encoder.
//!
//! `[PAD]` positions are dropped before the first block. Masking them out of
//! every attention softmax is equivalent, because padded positions can only
//! ever feed information into other padded positions.

use alloc::vec;
use alloc::vec::Vec;

use super::params::{Block, EncoderParams, LayerNorm, Linear};
use super::tokenize::{EncoderInput, PAD};
use crate::error::check_len;
use crate::math::{mat_vec_into, vec_mat};
use crate::{Error, Result};

const NORM_EPS: f64 = 1e-5;
const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2 / pi)

/// The intermediate dense representation `h`: the final hidden state at the
/// `[CLS]` position.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseVector(pub Vec<f64>);

impl DenseVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone)]
struct NormCache {
    xhat: Vec<f64>,
    inv_std: Vec<f64>,
}

#[derive(Debug, Clone)]
struct BlockTrace {
    attn_norm: NormCache,
    attn_in: Vec<f64>,
    q: Vec<f64>,
    k: Vec<f64>,
    v: Vec<f64>,
    probs: Vec<f64>,
    ctx: Vec<f64>,
    ffn_norm: NormCache,
    ffn_in: Vec<f64>,
    pre_act: Vec<f64>,
    act: Vec<f64>,
}

/// Activations retained by [`forward`] for [`backward`].
#[derive(Debug, Clone)]
pub struct EncoderTrace {
    /// `(token, position, segment)` of each non-pad position.
    active: Vec<(u32, usize, u8)>,
    n: usize,
    blocks: Vec<BlockTrace>,
    final_norm: NormCache,
    output: DenseVector,
}

impl EncoderTrace {
    pub fn output(&self) -> &DenseVector {
        &self.output
    }

    pub fn into_output(self) -> DenseVector {
        self.output
    }

    /// Number of non-pad positions the encoder attended over.
    pub fn active_len(&self) -> usize {
        self.n
    }
}

pub fn encode(input: &EncoderInput, params: &EncoderParams) -> Result<DenseVector> {
    forward(input, params).map(EncoderTrace::into_output)
}

/// Sum of token, position and segment embeddings of the non-pad positions,
/// row-major `active × dim`.
pub fn embed(input: &EncoderInput, params: &EncoderParams) -> Result<Vec<f64>> {
    let (_, x) = embed_active(input, params)?;
    Ok(x)
}

fn embed_active(input: &EncoderInput, params: &EncoderParams) -> Result<(Vec<(u32, usize, u8)>, Vec<f64>)> {
    input.validate()?;
    let cfg = &params.config;
    if input.len() > cfg.max_len {
        return Err(Error::InvalidArgument(alloc::format!(
            "input length {} exceeds max_len {}",
            input.len(),
            cfg.max_len
        )));
    }
    let d = cfg.dim;
    let active: Vec<(u32, usize, u8)> = input
        .token_ids
        .iter()
        .zip(&input.segment_ids)
        .enumerate()
        .filter(|(_, (&t, _))| t != PAD)
        .map(|(pos, (&t, &s))| (t, pos, s))
        .collect();
    let mut x = vec![0.0; active.len() * d];
    for (row, &(tok, pos, seg)) in x.chunks_exact_mut(d).zip(&active) {
        if tok as usize >= cfg.vocab_size {
            return Err(Error::InvalidArgument(alloc::format!(
                "token id {tok} outside vocabulary of {}",
                cfg.vocab_size
            )));
        }
        let parts = [
            params.token_embedding.row(tok as usize),
            params.position_embedding.row(pos),
            params.segment_embedding.row(seg as usize),
        ];
        for part in parts {
            row.iter_mut().zip(part).for_each(|(r, p)| *r += p);
        }
    }
    Ok((active, x))
}

pub fn forward(input: &EncoderInput, params: &EncoderParams) -> Result<EncoderTrace> {
    let (active, x) = embed_active(input, params)?;
    run(active, x, params)
}

/// Runs the blocks on pre-summed input embeddings (`rows × dim`). Traces
/// built this way carry no token ids, so [`backward`] leaves the embedding
/// tables untouched and only reports the input gradient.
pub fn forward_embedded(x: Vec<f64>, params: &EncoderParams) -> Result<EncoderTrace> {
    let d = params.config.dim;
    if x.is_empty() || !x.len().is_multiple_of(d) {
        return Err(Error::DimensionMismatch { expected: d, found: x.len() });
    }
    let mut trace = run(Vec::new(), x, params)?;
    trace.active.clear();
    Ok(trace)
}

fn run(active: Vec<(u32, usize, u8)>, mut x: Vec<f64>, params: &EncoderParams) -> Result<EncoderTrace> {
    let d = params.config.dim;
    let n = x.len() / d;
    let mut blocks = Vec::with_capacity(params.blocks.len());
    for block in &params.blocks {
        let (trace, out) = block_forward(&x, n, block, params.config.heads);
        if !out.iter().all(|v| v.is_finite()) {
            return Err(Error::NumericOverflow);
        }
        blocks.push(trace);
        x = out;
    }
    let (h, final_norm) = norm_forward(&x[..d], &params.final_norm);
    if !h.iter().all(|v| v.is_finite()) {
        return Err(Error::NumericOverflow);
    }
    Ok(EncoderTrace { active, n, blocks, final_norm, output: DenseVector(h) })
}

/// Accumulates `∂(h · upstream)/∂θ` into `grads` and returns the gradient
/// with respect to the summed input embeddings.
pub fn backward(
    trace: &EncoderTrace,
    params: &EncoderParams,
    upstream: &[f64],
    grads: &mut EncoderParams,
) -> Result<Vec<f64>> {
    let d = params.config.dim;
    check_len(d, upstream.len())?;
    let n = trace.n;
    let mut dx = vec![0.0; n * d];
    let d_final = norm_backward(upstream, &trace.final_norm, &params.final_norm, &mut grads.final_norm);
    dx[..d].copy_from_slice(&d_final);

    for ((block, bt), gblock) in params.blocks.iter().zip(&trace.blocks).zip(&mut grads.blocks).rev() {
        dx = block_backward(&dx, n, block, bt, gblock, params.config.heads);
    }
    if !dx.iter().all(|v| v.is_finite()) {
        return Err(Error::NumericOverflow);
    }
    for (row, &(tok, pos, seg)) in dx.chunks_exact(d).zip(&trace.active) {
        let tables = [
            grads.token_embedding.row_mut(tok as usize),
            grads.position_embedding.row_mut(pos),
            grads.segment_embedding.row_mut(seg as usize),
        ];
        for table in tables {
            table.iter_mut().zip(row).for_each(|(g, r)| *g += r);
        }
    }
    Ok(dx)
}

/// Exact gradients of `h · upstream` with respect to every encoder tensor.
pub fn encode_gradients(input: &EncoderInput, params: &EncoderParams, upstream: &[f64]) -> Result<EncoderParams> {
    let trace = forward(input, params)?;
    let mut grads = params.zeros_like();
    backward(&trace, params, upstream, &mut grads)?;
    Ok(grads)
}

fn norm_forward(x: &[f64], ln: &LayerNorm) -> (Vec<f64>, NormCache) {
    let d = ln.gamma.len();
    let rows = x.len() / d;
    let mut y = vec![0.0; x.len()];
    let mut xhat = vec![0.0; x.len()];
    let mut inv_std = Vec::with_capacity(rows);
    for ((xr, yr), hr) in x.chunks_exact(d).zip(y.chunks_exact_mut(d)).zip(xhat.chunks_exact_mut(d)) {
        let mean = xr.iter().sum::<f64>() / d as f64;
        let var = xr.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
        let inv = 1.0 / libm::sqrt(var + NORM_EPS);
        for j in 0..d {
            hr[j] = (xr[j] - mean) * inv;
            yr[j] = ln.gamma[j] * hr[j] + ln.beta[j];
        }
        inv_std.push(inv);
    }
    (y, NormCache { xhat, inv_std })
}

fn norm_backward(dy: &[f64], cache: &NormCache, ln: &LayerNorm, grad: &mut LayerNorm) -> Vec<f64> {
    let d = ln.gamma.len();
    let mut dx = vec![0.0; dy.len()];
    let mut dxhat = vec![0.0; d];
    for (r, (dyr, dxr)) in dy.chunks_exact(d).zip(dx.chunks_exact_mut(d)).enumerate() {
        let xhat = &cache.xhat[r * d..(r + 1) * d];
        for j in 0..d {
            grad.gamma[j] += dyr[j] * xhat[j];
            grad.beta[j] += dyr[j];
            dxhat[j] = dyr[j] * ln.gamma[j];
        }
        let mean_g = dxhat.iter().sum::<f64>() / d as f64;
        let mean_gx = dxhat.iter().zip(xhat).map(|(g, x)| g * x).sum::<f64>() / d as f64;
        let inv = cache.inv_std[r];
        for j in 0..d {
            dxr[j] = inv * (dxhat[j] - mean_g - xhat[j] * mean_gx);
        }
    }
    dx
}

fn linear_forward(x: &[f64], lin: &Linear) -> Vec<f64> {
    let fan_in = lin.weight.rows();
    let fan_out = lin.weight.cols();
    let mut y = vec![0.0; x.len() / fan_in * fan_out];
    for (xr, yr) in x.chunks_exact(fan_in).zip(y.chunks_exact_mut(fan_out)) {
        vec_mat(xr, &lin.weight, yr);
        yr.iter_mut().zip(&lin.bias).for_each(|(o, b)| *o += b);
    }
    y
}

/// Accumulates weight/bias gradients and adds the input gradient into `dx`.
fn linear_backward(x: &[f64], dy: &[f64], lin: &Linear, grad: &mut Linear, dx: &mut [f64]) {
    let fan_in = lin.weight.rows();
    let fan_out = lin.weight.cols();
    let mut tmp = vec![0.0; fan_in];
    for ((xr, dyr), dxr) in x.chunks_exact(fan_in).zip(dy.chunks_exact(fan_out)).zip(dx.chunks_exact_mut(fan_in)) {
        grad.weight.add_outer(xr, dyr, 1.0);
        grad.bias.iter_mut().zip(dyr).for_each(|(g, d)| *g += d);
        mat_vec_into(&lin.weight, dyr, &mut tmp);
        dxr.iter_mut().zip(&tmp).for_each(|(a, t)| *a += t);
    }
}

fn gelu(u: f64) -> f64 {
    0.5 * u * (1.0 + libm::tanh(GELU_C * (u + 0.044715 * u * u * u)))
}

fn gelu_grad(u: f64) -> f64 {
    let t = libm::tanh(GELU_C * (u + 0.044715 * u * u * u));
    0.5 * (1.0 + t) + 0.5 * u * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * 0.044715 * u * u)
}

fn block_forward(x: &[f64], n: usize, block: &Block, heads: usize) -> (BlockTrace, Vec<f64>) {
    let d = block.attn_norm.gamma.len();
    let hd = d / heads;
    let scale = 1.0 / libm::sqrt(hd as f64);

    let (attn_in, attn_norm) = norm_forward(x, &block.attn_norm);
    let q = linear_forward(&attn_in, &block.query);
    let k = linear_forward(&attn_in, &block.key);
    let v = linear_forward(&attn_in, &block.value);

    let mut probs = vec![0.0; heads * n * n];
    let mut ctx = vec![0.0; n * d];
    for h in 0..heads {
        let cols = h * hd..(h + 1) * hd;
        for i in 0..n {
            let p = &mut probs[(h * n + i) * n..(h * n + i + 1) * n];
            let qi = &q[i * d + cols.start..i * d + cols.end];
            let mut max = f64::NEG_INFINITY;
            for (j, pj) in p.iter_mut().enumerate() {
                let kj = &k[j * d + cols.start..j * d + cols.end];
                *pj = qi.iter().zip(kj).map(|(a, b)| a * b).sum::<f64>() * scale;
                max = max.max(*pj);
            }
            let mut z = 0.0;
            for pj in p.iter_mut() {
                *pj = libm::exp(*pj - max);
                z += *pj;
            }
            p.iter_mut().for_each(|pj| *pj /= z);
            let ci = &mut ctx[i * d + cols.start..i * d + cols.end];
            for (j, &pj) in p.iter().enumerate() {
                let vj = &v[j * d + cols.start..j * d + cols.end];
                ci.iter_mut().zip(vj).for_each(|(c, vv)| *c += pj * vv);
            }
        }
    }
    let attn_out = linear_forward(&ctx, &block.output);
    let mid: Vec<f64> = x.iter().zip(&attn_out).map(|(a, b)| a + b).collect();

    let (ffn_in, ffn_norm) = norm_forward(&mid, &block.ffn_norm);
    let pre_act = linear_forward(&ffn_in, &block.ffn_in);
    let act: Vec<f64> = pre_act.iter().map(|&u| gelu(u)).collect();
    let ffn_out = linear_forward(&act, &block.ffn_out);
    let out = mid.iter().zip(&ffn_out).map(|(a, b)| a + b).collect();

    let trace = BlockTrace { attn_norm, attn_in, q, k, v, probs, ctx, ffn_norm, ffn_in, pre_act, act };
    (trace, out)
}

fn block_backward(dout: &[f64], n: usize, block: &Block, t: &BlockTrace, g: &mut Block, heads: usize) -> Vec<f64> {
    let d = block.attn_norm.gamma.len();
    let f = block.ffn_in.weight.cols();
    let hd = d / heads;
    let scale = 1.0 / libm::sqrt(hd as f64);

    // feed-forward branch
    let mut dact = vec![0.0; n * f];
    linear_backward(&t.act, dout, &block.ffn_out, &mut g.ffn_out, &mut dact);
    let dpre: Vec<f64> = dact.iter().zip(&t.pre_act).map(|(da, &u)| da * gelu_grad(u)).collect();
    let mut dffn_in = vec![0.0; n * d];
    linear_backward(&t.ffn_in, &dpre, &block.ffn_in, &mut g.ffn_in, &mut dffn_in);
    let dmid_norm = norm_backward(&dffn_in, &t.ffn_norm, &block.ffn_norm, &mut g.ffn_norm);
    let dmid: Vec<f64> = dout.iter().zip(&dmid_norm).map(|(a, b)| a + b).collect();

    // attention branch
    let mut dctx = vec![0.0; n * d];
    linear_backward(&t.ctx, &dmid, &block.output, &mut g.output, &mut dctx);
    let mut dq = vec![0.0; n * d];
    let mut dk = vec![0.0; n * d];
    let mut dv = vec![0.0; n * d];
    let mut dp = vec![0.0; n];
    for h in 0..heads {
        let cols = h * hd..(h + 1) * hd;
        for i in 0..n {
            let p = &t.probs[(h * n + i) * n..(h * n + i + 1) * n];
            let dci = &dctx[i * d + cols.start..i * d + cols.end];
            for j in 0..n {
                let vj = &t.v[j * d + cols.start..j * d + cols.end];
                dp[j] = dci.iter().zip(vj).map(|(a, b)| a * b).sum();
                let dvj = &mut dv[j * d + cols.start..j * d + cols.end];
                dvj.iter_mut().zip(dci).for_each(|(a, b)| *a += p[j] * b);
            }
            let weighted: f64 = p.iter().zip(&dp).map(|(a, b)| a * b).sum();
            for j in 0..n {
                let ds = p[j] * (dp[j] - weighted) * scale;
                if ds == 0.0 {
                    continue;
                }
                for c in cols.clone() {
                    dq[i * d + c] += ds * t.k[j * d + c];
                    dk[j * d + c] += ds * t.q[i * d + c];
                }
            }
        }
    }
    let mut dattn_in = vec![0.0; n * d];
    linear_backward(&t.attn_in, &dq, &block.query, &mut g.query, &mut dattn_in);
    linear_backward(&t.attn_in, &dk, &block.key, &mut g.key, &mut dattn_in);
    linear_backward(&t.attn_in, &dv, &block.value, &mut g.value, &mut dattn_in);
    let dx_norm = norm_backward(&dattn_in, &t.attn_norm, &block.attn_norm, &mut g.attn_norm);
    dmid.iter().zip(&dx_norm).map(|(a, b)| a + b).collect()
}
