//! One function per subcommand. Each reads its inputs from a [`RunConfig`],
//! writes every output under the configured `out` directory and returns a
//! short human-readable summary.

mod corpus;
mod diagnose;
mod elc;
mod ned;
mod synth;
mod train;

use std::path::Path;

use anyhow::{anyhow, Result};
use bier_core::store::Metric;
use bier_core::typer::Representation;
use serde::Serialize;

pub use corpus::build_corpus;
pub use diagnose::diagnose;
pub use elc::eval_elc;
pub use ned::eval_ned;
pub use synth::synth;
pub use train::train;

use crate::config::RunConfig;
use crate::formats::create_writer;

fn metrics(cfg: &RunConfig, default: &[Metric]) -> Result<Vec<Metric>> {
    match cfg.list("metric") {
        None => Ok(default.to_vec()),
        Some(names) => names.iter().map(|n| Metric::parse(n).ok_or_else(|| anyhow!("unknown metric {n:?}"))).collect(),
    }
}

fn representations(cfg: &RunConfig) -> Result<Vec<Representation>> {
    match cfg.list("representation") {
        None => Ok(vec![Representation::Dense, Representation::Sparse]),
        Some(names) => names
            .iter()
            .map(|n| Representation::parse(n).ok_or_else(|| anyhow!("unknown representation {n:?}")))
            .collect(),
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    use std::io::Write;
    let mut w = create_writer(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}
