//! Model checkpoints: an 8-byte magic, a little-endian `u64` header length,
//! a JSON header, then every tensor as little-endian `f32` in the declared
//! order (encoder tensors followed by the type embeddings).

use std::io::{Read, Write};
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use bier_core::corpus::TypeVocabulary;
use bier_core::encoder::{EncoderConfig, EncoderParams, TokenVocabulary};
use bier_core::math::Matrix;
use bier_core::typer::{TypeEmbeddingMatrix, TypingModel};
use serde::{Deserialize, Serialize};

use crate::formats::create_writer;

pub const MAGIC: &[u8; 8] = b"BIERCKPT";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub vocab_size: usize,
    pub dim: usize,
    pub layers: usize,
    pub heads: usize,
    pub max_len: usize,
    pub num_types: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorInfo {
    pub name: String,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Header {
    pub version: u32,
    pub dims: Dims,
    /// Hex FNV-1a digests of the two vocabularies.
    pub token_vocab_hash: String,
    pub type_vocab_hash: String,
    pub tokens: Vec<String>,
    pub types: Vec<String>,
    pub tensors: Vec<TensorInfo>,
}

pub fn hash_hex(h: u64) -> String {
    format!("{h:016x}")
}

fn header_of(model: &TypingModel) -> Header {
    let c = model.encoder.config;
    let mut tensors: Vec<TensorInfo> =
        model.encoder.tensors().into_iter().map(|(name, t)| TensorInfo { name, len: t.len() }).collect();
    tensors.push(TensorInfo { name: "type_embeddings".into(), len: model.type_embeddings.0.as_slice().len() });
    Header {
        version: VERSION,
        dims: Dims {
            vocab_size: c.vocab_size,
            dim: c.dim,
            layers: c.layers,
            heads: c.heads,
            max_len: c.max_len,
            num_types: model.types.len(),
        },
        token_vocab_hash: hash_hex(model.tokens.hash()),
        type_vocab_hash: hash_hex(model.types.hash()),
        tokens: model.tokens.tokens().to_vec(),
        types: model.types.names().to_vec(),
        tensors,
    }
}

pub fn write_framed(w: &mut impl Write, magic: &[u8; 8], header: &impl Serialize) -> Result<()> {
    let json = serde_json::to_vec(header)?;
    w.write_all(magic)?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    Ok(())
}

pub fn read_framed<T: for<'de> Deserialize<'de>>(r: &mut impl Read, magic: &[u8; 8]) -> Result<T> {
    let mut m = [0u8; 8];
    r.read_exact(&mut m).context("truncated file")?;
    ensure!(&m == magic, "bad magic {:?}", String::from_utf8_lossy(&m));
    let mut len = [0u8; 8];
    r.read_exact(&mut len).context("truncated header length")?;
    let len = u64::from_le_bytes(len);
    ensure!(len < (1 << 32), "implausible header length {len}");
    let mut json = vec![0u8; len as usize];
    r.read_exact(&mut json).context("truncated header")?;
    serde_json::from_slice(&json).context("malformed header")
}

pub fn save(path: &Path, model: &TypingModel) -> Result<()> {
    let mut w = create_writer(path)?;
    write_framed(&mut w, MAGIC, &header_of(model))?;
    let tensors = model.encoder.tensors();
    for t in tensors.iter().map(|(_, t)| *t).chain([model.type_embeddings.0.as_slice()]) {
        for &x in t {
            w.write_all(&(x as f32).to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_header(path: &Path) -> Result<Header> {
    let mut r =
        std::io::BufReader::new(std::fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?);
    read_framed(&mut r, MAGIC).with_context(|| format!("{}: not a checkpoint", path.display()))
}

fn read_f32s(r: &mut impl Read, out: &mut [f64]) -> Result<()> {
    let mut buf = vec![0u8; out.len() * 4];
    r.read_exact(&mut buf).context("truncated tensor data")?;
    for (o, b) in out.iter_mut().zip(buf.chunks_exact(4)) {
        *o = f64::from(f32::from_le_bytes([b[0], b[1], b[2], b[3]]));
    }
    Ok(())
}

pub fn load(path: &Path) -> Result<TypingModel> {
    let mut r =
        std::io::BufReader::new(std::fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?);
    let header: Header = read_framed(&mut r, MAGIC).with_context(|| format!("{}: not a checkpoint", path.display()))?;
    ensure!(header.version == VERSION, "{}: unsupported checkpoint version {}", path.display(), header.version);
    let d = &header.dims;
    let tokens = TokenVocabulary::from_tokens(header.tokens.clone())?;
    let types = TypeVocabulary::from_names(header.types.clone())?;
    if hash_hex(tokens.hash()) != header.token_vocab_hash || hash_hex(types.hash()) != header.type_vocab_hash {
        bail!("{}: vocabulary hash does not match the stored vocabulary", path.display());
    }
    let config =
        EncoderConfig { vocab_size: d.vocab_size, dim: d.dim, layers: d.layers, heads: d.heads, max_len: d.max_len };
    let mut encoder = EncoderParams::zeros(config)?;
    let mut e = Matrix::zeros(d.num_types, d.dim);
    {
        let mut slots = encoder.tensors_mut();
        slots.push(e.as_mut_slice());
        ensure!(slots.len() == header.tensors.len(), "{}: tensor count mismatch", path.display());
        for (slot, info) in slots.into_iter().zip(&header.tensors) {
            ensure!(
                slot.len() == info.len,
                "{}: tensor {} has length {}, expected {}",
                path.display(),
                info.name,
                info.len,
                slot.len()
            );
            read_f32s(&mut r, slot).with_context(|| format!("{}: tensor {}", path.display(), info.name))?;
        }
    }
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    ensure!(rest.is_empty(), "{}: {} trailing bytes", path.display(), rest.len());
    Ok(TypingModel::from_parts(tokens, types, encoder, TypeEmbeddingMatrix(e))?)
}
