//! Embedding index snapshots: magic, JSON header, packed little-endian
//! `f64` vectors, then a JSON payload table of `[id, payload]` pairs.
//! Vectors are stored bit-exactly.

use std::io::{Read, Write};
use std::path::Path;

use anyhow::{ensure, Context, Result};
use bier_core::store::EmbeddingIndex;
use serde::{Deserialize, Serialize};

use crate::checkpoint::{read_framed, write_framed};
use crate::formats::create_writer;

pub const MAGIC: &[u8; 8] = b"BIERINDX";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub dim: usize,
    pub count: usize,
    /// Metrics the vectors are meant to be queried with.
    pub metric_hints: Vec<String>,
    pub representation: String,
    /// Type-vocabulary hash of the model that produced the vectors.
    pub vocab_hash: String,
    pub pruning: Option<f64>,
    pub frozen: bool,
}

pub fn save(path: &Path, index: &EmbeddingIndex<String>, mut header: SnapshotHeader) -> Result<()> {
    header.dim = index.dim().unwrap_or(0);
    header.count = index.len();
    header.pruning = index.pruning();
    header.frozen = index.is_frozen();
    let mut w = create_writer(path)?;
    write_framed(&mut w, MAGIC, &header)?;
    for e in index.entries() {
        for &x in &e.vector {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    let table: Vec<(&str, &str)> = index.entries().iter().map(|e| (e.id.as_str(), e.payload.as_str())).collect();
    let json = serde_json::to_vec(&table)?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    w.flush()?;
    Ok(())
}

pub fn load(path: &Path) -> Result<(SnapshotHeader, EmbeddingIndex<String>)> {
    let ctx = || format!("{}: not an index snapshot", path.display());
    let mut r =
        std::io::BufReader::new(std::fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?);
    let header: SnapshotHeader = read_framed(&mut r, MAGIC).with_context(ctx)?;
    let mut raw = vec![0u8; header.count * header.dim * 8];
    r.read_exact(&mut raw).with_context(ctx)?;
    let mut len = [0u8; 8];
    r.read_exact(&mut len).with_context(ctx)?;
    let mut json = vec![0u8; u64::from_le_bytes(len) as usize];
    r.read_exact(&mut json).with_context(ctx)?;
    let table: Vec<(String, String)> = serde_json::from_slice(&json).with_context(ctx)?;
    ensure!(
        table.len() == header.count,
        "{}: payload table has {} rows, header says {}",
        path.display(),
        table.len(),
        header.count
    );

    let mut index = match header.pruning {
        Some(t) => EmbeddingIndex::with_pruning(t),
        None => EmbeddingIndex::new(),
    };
    let floats: Vec<f64> =
        raw.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().expect("chunk of eight bytes"))).collect();
    for ((id, payload), v) in table.into_iter().zip(floats.chunks(header.dim.max(1))) {
        index.add(id, v.to_vec(), payload)?;
    }
    if header.frozen {
        index.freeze();
    }
    Ok((header, index))
}
