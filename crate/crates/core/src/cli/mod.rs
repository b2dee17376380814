//! Batch pipeline orchestration behind the `spdfuse` binary: dataset
//! ingestion and validation, synthetic data generation, the staged
//! `build-spd` → `map-tangent` → `train` chain, the protocol-level
//! `evaluate` and `ablate` commands, and heatmap emission.
//!
//! Exit codes: 0 success, 1 usage, 2 data error, 3 numerical error.

pub mod artifacts;
pub mod config;
pub mod dataset;
pub mod heatmap;
pub mod stages;
pub mod synth;

pub use config::RunConfig;
pub use synth::{ClassGen, SyntheticSpec};

use crate::harness::HarnessError;
use crate::manifold::ManifoldError;
use crate::seqnet::SeqNetError;
use crate::signals::SignalError;
use crate::spdrep::SpdError;
use crate::symmat::SymmatError;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("missing channel file {file}")]
    MissingChannel { file: PathBuf },
    #[error("channel file {file} is not in the roster")]
    UnknownChannel { file: PathBuf },
    #[error("bad header in {file}: {detail}")]
    BadHeader { file: PathBuf, detail: String },
    #[error("missing or unreadable label metadata: {file}")]
    LabelMissing { file: PathBuf },
    #[error("bad data in {file}: {detail}")]
    BadData { file: PathBuf, detail: String },
    #[error("corrupt artifact {file}: {detail}")]
    BadArtifact { file: PathBuf, detail: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Spd(#[from] SpdError),
    #[error(transparent)]
    Manifold(#[from] ManifoldError),
    #[error(transparent)]
    SeqNet(#[from] SeqNetError),
}

fn symmat_is_numeric(e: &SymmatError) -> bool {
    matches!(
        e,
        SymmatError::NoConvergence { .. } | SymmatError::NotPositiveDefinite { .. }
    )
}

fn spd_is_numeric(e: &SpdError) -> bool {
    match e {
        SpdError::NotPositiveDefinite { .. } => true,
        SpdError::Kernel(k) => symmat_is_numeric(k),
        _ => false,
    }
}

fn manifold_is_numeric(e: &ManifoldError) -> bool {
    match e {
        ManifoldError::NoConvergence { .. } => true,
        ManifoldError::Kernel(k) => symmat_is_numeric(k),
        ManifoldError::Spd(s) => spd_is_numeric(s),
        _ => false,
    }
}

fn harness_is_numeric(e: &HarnessError) -> bool {
    match e {
        HarnessError::Spd(s) => spd_is_numeric(s),
        HarnessError::Manifold(m) => manifold_is_numeric(m),
        HarnessError::SeqNet(s) => matches!(s, SeqNetError::NonFiniteGradient { .. }),
        _ => false,
    }
}

impl CliError {
    /// Process exit code: 1 usage, 2 data, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Spd(e) if spd_is_numeric(e) => 3,
            CliError::Manifold(e) if manifold_is_numeric(e) => 3,
            CliError::Harness(e) if harness_is_numeric(e) => 3,
            CliError::SeqNet(SeqNetError::NonFiniteGradient { .. }) => 3,
            _ => 2,
        }
    }
}
