//! Human-readable tables, radar charts, export and the run manifest.

mod radar;
mod table;

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use radar::{
    radar_data, render_radar_svg, AxisData, AxisFlag, AxisPoint, CultureRadar, RadarAxis, RadarData,
    DEGENERATE_AXIS_VALUE,
};
pub use table::{assessment, fmt3, fmt_p, higher_is_better, render_culture_table, shift_cell, Arrow, MISSING};

use crate::corpus::Culture;
use crate::embedding::write_atomic;
use crate::metrics::{write_aggregates_csv, AggregateRow};
use crate::stats::{write_stats_csv, StatReport};

/// Hex sha256 of a byte string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    /// Output path relative to the output directory → sha256 of its bytes.
    pub outputs: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub counts: BTreeMap<String, usize>,
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub tool_version: String,
    /// Input name → sha256 (config, corpus, inventory, lexicon, vectors).
    pub inputs: BTreeMap<String, String>,
    pub provider_model_id: String,
    pub lambda: f64,
    pub run_count: u32,
    pub bootstrap_seed: u64,
    pub bootstrap_resamples: usize,
    pub bootstrap_level: f64,
    pub stages: BTreeMap<String, StageRecord>,
    /// Seconds since the Unix epoch when the manifest was written.
    pub written_at: u64,
}

impl Manifest {
    pub fn new(provider_model_id: impl Into<String>) -> Self {
        Self {
            tool: "craft".into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            provider_model_id: provider_model_id.into(),
            ..Default::default()
        }
    }

    pub fn read(path: &Path) -> io::Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        let mut text = serde_json::to_string_pretty(self).map_err(io::Error::other)?;
        text.push('\n');
        write_atomic(path, text.as_bytes())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExportFormat {
    /// `radar.json`
    StructuredRecords,
    /// `metrics.csv`, `stats.csv`
    DelimitedTables,
    /// `<CULTURE>.md`
    Markdown,
    /// `radar.svg`
    RadarSvg,
}

impl ExportFormat {
    pub const ALL: [ExportFormat; 4] = [
        ExportFormat::StructuredRecords,
        ExportFormat::DelimitedTables,
        ExportFormat::Markdown,
        ExportFormat::RadarSvg,
    ];
}

impl FromStr for ExportFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "structured-records" | "json" => Ok(ExportFormat::StructuredRecords),
            "delimited-tables" | "csv" => Ok(ExportFormat::DelimitedTables),
            "markdown" | "md" => Ok(ExportFormat::Markdown),
            "radar-svg" | "svg" => Ok(ExportFormat::RadarSvg),
            other => Err(format!("unknown export format {other:?}")),
        }
    }
}

#[derive(Debug, Error)]
#[error("writing {path}: {source}")]
pub struct ExportError {
    pub path: PathBuf,
    #[source]
    pub source: io::Error,
}

/// Aggregates and statistics ready for rendering.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportBundle {
    pub aggregates: Vec<AggregateRow>,
    pub stats: StatReport,
    pub radar: RadarData,
}

impl ReportBundle {
    pub fn new(aggregates: Vec<AggregateRow>, stats: StatReport) -> Self {
        let radar = radar_data(&aggregates);
        Self { aggregates, stats, radar }
    }

    pub fn cultures(&self) -> Vec<Culture> {
        let mut c: Vec<Culture> = self.aggregates.iter().map(|r| r.culture).collect();
        c.sort();
        c.dedup();
        c
    }

    /// File name → bytes for the requested formats, sorted by name.
    pub fn render(&self, formats: &[ExportFormat]) -> BTreeMap<String, Vec<u8>> {
        let mut files = BTreeMap::new();
        for format in formats {
            match format {
                ExportFormat::StructuredRecords => {
                    let mut text = serde_json::to_string_pretty(&self.radar).expect("radar data serializes");
                    text.push('\n');
                    files.insert("radar.json".to_string(), text.into_bytes());
                }
                ExportFormat::DelimitedTables => {
                    let mut metrics = Vec::new();
                    write_aggregates_csv(&self.aggregates, &mut metrics).expect("in-memory write");
                    files.insert("metrics.csv".to_string(), metrics);
                    let mut stats = Vec::new();
                    write_stats_csv(&self.stats, &mut stats).expect("in-memory write");
                    files.insert("stats.csv".to_string(), stats);
                }
                ExportFormat::Markdown => {
                    for culture in self.cultures() {
                        let text = render_culture_table(culture, &self.aggregates, &self.stats);
                        files.insert(format!("{}.md", culture.code()), text.into_bytes());
                    }
                }
                ExportFormat::RadarSvg => {
                    files.insert("radar.svg".to_string(), render_radar_svg(&self.radar).into_bytes());
                }
            }
        }
        files
    }

    /// Write the rendered files into `dir`; returns name → sha256 of what was
    /// written.
    pub fn export(&self, dir: &Path, formats: &[ExportFormat]) -> Result<BTreeMap<String, String>, ExportError> {
        fs::create_dir_all(dir).map_err(|source| ExportError { path: dir.to_path_buf(), source })?;
        let mut digests = BTreeMap::new();
        for (name, bytes) in self.render(formats) {
            let path = dir.join(&name);
            write_atomic(&path, &bytes).map_err(|source| ExportError { path, source })?;
            digests.insert(name, sha256_hex(&bytes));
        }
        Ok(digests)
    }
}
