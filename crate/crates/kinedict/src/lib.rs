//! Command-line toolkit around [`kinedict_core`]: dataset ingestion and
//! synthesis, dictionary learning and evaluation, pose fitting, and plotting.
//!
//! The library half of this crate holds everything the `kinedict` binary does —
//! file formats ([`formats`]), dataset IO ([`ingest`]), synthetic data
//! ([`synth`]), the default skeleton ([`skeleton`]), convex-hull plots
//! ([`hull`]), and the subcommand driver itself ([`cli::run`]) — so that
//! integration tests can exercise the full pipeline in-process.

pub mod cli;
pub mod error;
pub mod formats;
pub mod hull;
pub mod ingest;
pub mod skeleton;
pub mod synth;
