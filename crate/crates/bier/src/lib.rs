//! File formats, pipelines and the `bier` command-line tool built on
//! [`bier_core`].

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod formats;
pub mod snapshot;
