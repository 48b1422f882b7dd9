//! File formats, ingestion, parallel batch classification, reports and
//! simulation experiments on top of `idfraud-core`.

pub mod batch;
pub mod density_io;
mod error;
pub mod experiments;
pub mod ingest;
pub mod report;
pub mod selftest;

pub use batch::{classify_batch, DecisionMatrix, PairOutcome, RunConfig, SkipReason};
pub use error::{Error, Result};
pub use ingest::{ingest, IdManifest, Role, ScoreStore};
