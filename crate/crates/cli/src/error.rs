use std::fmt;
use std::path::Path;

use craft_core::corpus::CorpusError;
use craft_core::culture::{CultureError, InventoryError};
use craft_core::embedding::{EmbedError, ProviderError, VectorFileError};
use craft_core::metrics::ScoreError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    /// Data defect treated as fatal: exit 1.
    Data,
    /// Configuration or I/O problem: exit 2.
    Config,
}

#[derive(Debug)]
pub struct CliError {
    pub severity: Severity,
    pub stage: Option<&'static str>,
    pub message: String,
}

impl CliError {
    pub fn data(message: impl Into<String>) -> Self {
        Self { severity: Severity::Data, stage: None, message: message.into() }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self { severity: Severity::Config, stage: None, message: message.into() }
    }

    pub fn io(path: &Path, e: impl fmt::Display) -> Self {
        Self::config(format!("{}: {e}", path.display()))
    }

    pub fn in_stage(mut self, stage: &'static str) -> Self {
        self.stage.get_or_insert(stage);
        self
    }

    pub fn exit_code(&self) -> u8 {
        match self.severity {
            Severity::Data => 1,
            Severity::Config => 2,
        }
    }

    pub fn corpus(path: &Path, e: CorpusError) -> Self {
        let msg = format!("{}: {e}", path.display());
        match e {
            CorpusError::Io { .. } => Self::config(msg),
            _ => Self::data(msg),
        }
    }

    pub fn inventory(e: InventoryError) -> Self {
        match e {
            InventoryError::Io { .. } => Self::config(e.to_string()),
            _ => Self::data(e.to_string()),
        }
    }

    pub fn vectors(e: VectorFileError) -> Self {
        match e {
            VectorFileError::Io { .. } => Self::config(e.to_string()),
            VectorFileError::Parse { .. } => Self::data(e.to_string()),
        }
    }

    pub fn embed(e: EmbedError) -> Self {
        match &e {
            EmbedError::Provider { source: ProviderError::Transport(_), .. } => Self::config(e.to_string()),
            _ => Self::data(e.to_string()),
        }
    }

    pub fn culture(e: CultureError) -> Self {
        match e {
            CultureError::Embed(inner) => Self::embed(inner),
            other => Self::data(other.to_string()),
        }
    }

    pub fn score(e: ScoreError) -> Self {
        match e {
            ScoreError::Embed(inner) => Self::embed(inner),
            other => Self::data(other.to_string()),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.stage {
            Some(stage) => write!(f, "[{stage}] {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for CliError {}
