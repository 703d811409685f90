//! File formats, metrics, benchmark tables and exporters behind the
//! `tearsft` command-line tool.
//!
//! Every command returns a [`HarnessError`] whose [`HarnessError::exit_code`]
//! is the process exit status.

pub mod benchmark;
pub mod commands;
pub mod config;
pub mod export;
pub mod io;
pub mod metrics;

use std::path::PathBuf;

use thiserror::Error;

use crate::refine::RefineError;
use crate::sft::SftError;
use crate::synthgen::SynthError;
use crate::warps::WarpError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Usage(String),
    #[error("{} exists (use --force to overwrite)", .0.display())]
    Clobber(PathBuf),
    #[error("cannot parse {}: {msg}", path.display())]
    Parse { path: PathBuf, msg: String },
    #[error("cannot write {}: {msg}", path.display())]
    Write { path: PathBuf, msg: String },
    #[error("numerical failure: {msg}")]
    Numeric { msg: String, indices: Vec<usize> },
    #[error("ground truth is not available in {}", .0.display())]
    GroundTruthUnavailable(PathBuf),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 2,
            Self::Clobber(_) => 3,
            Self::Parse { .. } => 4,
            Self::Numeric { .. } => 5,
            Self::GroundTruthUnavailable(_) => 6,
            Self::Write { .. } => 1,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, msg: impl ToString) -> Self {
        Self::Parse { path: path.into(), msg: msg.to_string() }
    }
}

fn source_index(e: &SftError) -> Option<usize> {
    match e {
        SftError::AtSource { index, .. } => Some(*index),
        _ => None,
    }
}

impl From<SftError> for HarnessError {
    fn from(e: SftError) -> Self {
        Self::Numeric { indices: source_index(&e).into_iter().collect(), msg: e.to_string() }
    }
}

impl From<WarpError> for HarnessError {
    fn from(e: WarpError) -> Self {
        Self::Numeric { msg: e.to_string(), indices: Vec::new() }
    }
}

impl From<RefineError> for HarnessError {
    fn from(e: RefineError) -> Self {
        match e {
            RefineError::Sft(e) => e.into(),
            RefineError::InvalidConfig(msg) => Self::Usage(msg),
            e => Self::Numeric { msg: e.to_string(), indices: Vec::new() },
        }
    }
}

impl From<SynthError> for HarnessError {
    fn from(e: SynthError) -> Self {
        Self::Usage(e.to_string())
    }
}
