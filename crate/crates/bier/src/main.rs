use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use bier::commands;
use bier::config::RunConfig;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "bier", version, about = "Interpretable entity representations over a fine-grained type system")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic corpus, typing splits and task files.
    Synth(Common),
    /// Link, filter and resolve mentions into typed triples.
    BuildCorpus(Common),
    /// Train a typing model and write a checkpoint.
    Train(Common),
    /// Evaluate a checkpoint on a downstream task.
    Eval {
        task: Task,
        #[command(flatten)]
        common: Common,
    },
    /// Compare dense and sparse prediction dumps.
    Diagnose(Common),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Task {
    Ned,
    Elc,
}

#[derive(Debug, Args)]
struct Common {
    /// Flat key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Similarity metric(s), comma separated: l2, dot, cosine.
    #[arg(long)]
    metric: Option<String>,
    /// Representation(s), comma separated: dense, sparse.
    #[arg(long)]
    representation: Option<String>,
    /// K values for the K-shot sweep, comma separated.
    #[arg(long)]
    k_list: Option<String>,
    /// Any other configuration override, as key=value.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Common {
    fn config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        for pair in &self.set {
            cfg.set_pair(pair)?;
        }
        if let Some(s) = self.seed {
            cfg.set("seed", s.to_string());
        }
        if let Some(o) = &self.out {
            cfg.set("out", o.to_string_lossy());
        }
        if let Some(m) = &self.metric {
            cfg.set("metric", m.as_str());
        }
        if let Some(r) = &self.representation {
            cfg.set("representation", r.as_str());
        }
        if let Some(k) = &self.k_list {
            cfg.set("k_list", k.as_str());
        }
        Ok(cfg)
    }
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("BIER_THREADS") {
        let n: usize = v.parse().with_context(|| format!("BIER_THREADS={v:?} is not a count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<String> {
    configure_threads()?;
    match cli.command {
        Command::Synth(c) => commands::synth(&c.config()?),
        Command::BuildCorpus(c) => commands::build_corpus(&c.config()?),
        Command::Train(c) => commands::train(&c.config()?),
        Command::Eval { task: Task::Ned, common } => commands::eval_ned(&common.config()?),
        Command::Eval { task: Task::Elc, common } => commands::eval_elc(&common.config()?),
        Command::Diagnose(c) => commands::diagnose(&c.config()?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
