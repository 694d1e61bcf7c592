//! Interpretable entity representations over a fine-grained type vocabulary.
//!
//! A small transformer encodes a `[CLS] mention [SEP] context [SEP]` token
//! sequence into a dense vector `h`; a type-embedding matrix projects `h` onto
//! one sigmoid probability per entity type. The resulting sparse vector is the
//! interpretable representation consumed by the similarity-based task
//! harnesses (`ned`, `elc`) and by the dense/sparse `diagnostics`.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! anything touching the filesystem live in the `bier` crate.
#![cfg_attr(not(feature = "std"), no_std)]
#![warn(missing_debug_implementations, rust_2018_idioms)]

extern crate alloc;

pub mod corpus;
pub mod diagnostics;
pub mod elc;
pub mod encoder;
mod error;
pub mod math;
pub mod ned;
pub mod rng;
pub mod store;
pub mod synth;
pub mod typer;

pub use error::{Error, Result};
