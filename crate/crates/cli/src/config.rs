use std::fs;
use std::path::{Path, PathBuf};

use craft_core::corpus::{CorpusFormat, Culture};
use craft_core::metrics::Metric;
use craft_core::report::ExportFormat;
use craft_core::stats::{BootstrapConfig, KwGrouping, StatPlan};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const ENDPOINT_ENV: &str = "CRAFT_EMBED_ENDPOINT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    File,
    Remote,
    Hashing,
}

impl std::str::FromStr for ProviderKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "file" => Ok(ProviderKind::File),
            "remote" => Ok(ProviderKind::Remote),
            "hashing" => Ok(ProviderKind::Hashing),
            other => Err(format!("unknown provider kind {other:?} (file, remote, hashing)")),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSection {
    pub path: PathBuf,
    #[serde(default = "default_format")]
    pub format: String,
    #[serde(default)]
    pub default_culture: Option<String>,
}

fn default_format() -> String {
    "delimited-table".into()
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathSection {
    #[serde(default)]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderSection {
    pub kind: ProviderKind,
    #[serde(default)]
    pub model_id: Option<String>,
    /// Vector file for the file provider.
    #[serde(default)]
    pub vectors: Option<PathBuf>,
    #[serde(default)]
    pub endpoint: Option<String>,
    /// Dimension of the hashing encoder.
    #[serde(default)]
    pub dim: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoringSection {
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_runs")]
    pub runs: u32,
}

fn default_lambda() -> f64 {
    craft_core::metrics::DEFAULT_LAMBDA
}

fn default_runs() -> u32 {
    3
}

impl Default for ScoringSection {
    fn default() -> Self {
        Self { lambda: default_lambda(), runs: default_runs() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapSection {
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default = "default_resamples")]
    pub resamples: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_level() -> f64 {
    BootstrapConfig::default().level
}

fn default_resamples() -> usize {
    BootstrapConfig::default().resamples
}

fn default_seed() -> u64 {
    BootstrapConfig::default().seed
}

impl Default for BootstrapSection {
    fn default() -> Self {
        Self { level: default_level(), resamples: default_resamples(), seed: default_seed() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatsSection {
    #[serde(default = "default_kw_metrics")]
    pub kw_metrics: Vec<Metric>,
    #[serde(default = "default_grouping")]
    pub kw_grouping: KwGrouping,
    #[serde(default = "default_wilcoxon_metrics")]
    pub wilcoxon_metrics: Vec<Metric>,
}

fn default_kw_metrics() -> Vec<Metric> {
    StatPlan::default().kw_metrics
}

fn default_grouping() -> KwGrouping {
    StatPlan::default().kw_grouping
}

fn default_wilcoxon_metrics() -> Vec<Metric> {
    StatPlan::default().wilcoxon_metrics
}

impl Default for StatsSection {
    fn default() -> Self {
        Self {
            kw_metrics: default_kw_metrics(),
            kw_grouping: default_grouping(),
            wilcoxon_metrics: default_wilcoxon_metrics(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_out")]
    pub dir: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<ExportFormat>,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn default_formats() -> Vec<ExportFormat> {
    ExportFormat::ALL.to_vec()
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: default_out(), formats: default_formats() }
    }
}

/// The run configuration file. Relative paths resolve against the directory
/// holding the file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: CorpusSection,
    #[serde(default)]
    pub inventory: PathSection,
    #[serde(default)]
    pub lexicon: PathSection,
    pub provider: ProviderSection,
    #[serde(default)]
    pub scoring: ScoringSection,
    #[serde(default)]
    pub bootstrap: BootstrapSection,
    #[serde(default)]
    pub stats: StatsSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(skip)]
    pub digest: String,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let mut config = Self::parse(&text).map_err(|m| CliError::config(format!("{}: {m}", path.display())))?;
        config.digest = craft_core::report::sha256_hex(text.as_bytes());
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        config.resolve(&base);
        Ok(config)
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let config: RunConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        config.validate()?;
        Ok(config)
    }

    fn resolve(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        join(&mut self.corpus.path);
        if let Some(p) = self.inventory.path.as_mut() {
            join(p);
        }
        if let Some(p) = self.lexicon.path.as_mut() {
            join(p);
        }
        if let Some(p) = self.provider.vectors.as_mut() {
            join(p);
        }
        join(&mut self.output.dir);
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.scoring.lambda) {
            return Err(format!("scoring.lambda = {} outside [0, 1]", self.scoring.lambda));
        }
        if self.scoring.runs < 2 {
            return Err(format!("scoring.runs = {} must be at least 2", self.scoring.runs));
        }
        if self.bootstrap.resamples < 100 {
            return Err(format!("bootstrap.resamples = {} must be at least 100", self.bootstrap.resamples));
        }
        if !(self.bootstrap.level > 0.0 && self.bootstrap.level < 1.0) {
            return Err(format!("bootstrap.level = {} outside (0, 1)", self.bootstrap.level));
        }
        self.corpus_format()?;
        self.default_culture()?;
        Ok(())
    }

    pub fn corpus_format(&self) -> Result<CorpusFormat, String> {
        self.corpus.format.parse().map_err(|e| format!("corpus.format: {e}"))
    }

    pub fn default_culture(&self) -> Result<Option<Culture>, String> {
        self.corpus
            .default_culture
            .as_deref()
            .map(|c| c.parse::<Culture>().map_err(|e| format!("corpus.default_culture: {e}")))
            .transpose()
    }

    pub fn bootstrap(&self) -> BootstrapConfig {
        BootstrapConfig { level: self.bootstrap.level, resamples: self.bootstrap.resamples, seed: self.bootstrap.seed }
    }

    pub fn stat_plan(&self) -> StatPlan {
        StatPlan {
            kw_metrics: self.stats.kw_metrics.clone(),
            kw_grouping: self.stats.kw_grouping,
            wilcoxon_metrics: self.stats.wilcoxon_metrics.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[corpus]
path = "corpus.csv"

[provider]
kind = "file"
model_id = "m"
vectors = "vectors.vec"
"#;

    #[test]
    fn defaults() {
        let c = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.scoring.lambda, 0.7);
        assert_eq!(c.scoring.runs, 3);
        assert_eq!(c.bootstrap.level, 0.95);
        assert_eq!(c.bootstrap.resamples, 1000);
        assert_eq!(c.stats.kw_metrics.len(), 5);
        assert_eq!(c.output.formats.len(), 4);
        assert_eq!(c.corpus_format().unwrap(), CorpusFormat::Csv);
    }

    #[test]
    fn rejects_out_of_range() {
        for (extra, needle) in [
            ("[scoring]\nlambda = 1.5\n", "lambda"),
            ("[scoring]\nruns = 1\n", "runs"),
            ("[bootstrap]\nresamples = 99\n", "resamples"),
        ] {
            let err = RunConfig::parse(&format!("{MINIMAL}{extra}")).unwrap_err();
            assert!(err.contains(needle), "{err}");
        }
        assert!(RunConfig::parse(&format!("{MINIMAL}[typo]\nx = 1\n")).is_err());
    }

    #[test]
    fn relative_paths_resolve_against_config_dir() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("craft.toml");
        fs::write(&path, MINIMAL).unwrap();
        let c = RunConfig::load(&path).unwrap();
        assert_eq!(c.corpus.path, dir.path().join("corpus.csv"));
        assert_eq!(c.output.dir, dir.path().join("out"));
        assert_eq!(c.digest.len(), 64);
    }
}
