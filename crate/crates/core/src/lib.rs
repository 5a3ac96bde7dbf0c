//! Binary hate-speech classification for Devanagari-script text.
//!
//! The crate covers the whole experiment loop: corpus ingestion and
//! accounting ([`corpus`]), backtranslation augmentation behind a cosine
//! similarity gate ([`augmentation`], [`embeddings`]), a registry of eight
//! encoder/head configurations with pluggable training backends
//! ([`classifiers`]), a three-stage cascade ensemble ([`ensemble`]) and
//! confusion-matrix metrics with report rendering ([`metrics`]).

pub mod augmentation;
pub mod classifiers;
pub mod config;
pub mod corpus;
pub mod embeddings;
pub mod ensemble;
pub mod error;
pub mod metrics;
pub mod pipeline;
pub mod predictions;
pub mod remote;
pub mod synthetic;
mod util;

pub use error::{Error, ErrorKind, Result};
