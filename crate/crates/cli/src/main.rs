//! `craft`: score a multilingual answer–explanation corpus end to end.

mod config;
mod error;
mod pipeline;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use craft_core::corpus::{write_corpus, CorpusFormat, Culture};
use craft_core::culture::Inventory;
use craft_core::depth::MarkerLexicon;
use craft_core::embedding::{write_atomic, EmbeddingProvider, HashingProvider};
use craft_core::synthetic::{directional_corpus, embedded_texts, generate_corpus, vector_file_for, SyntheticSpec};

use crate::config::{ProviderKind, RunConfig};
use crate::error::CliError;
use crate::pipeline::Pipeline;

#[derive(Debug, Parser)]
#[command(name = "craft", version, about = "Cultural reasoning metrics for multilingual answer–explanation corpora")]
struct Cli {
    /// Run configuration file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Abort on validation defects (default).
    #[arg(long, global = true, overrides_with = "no_strict")]
    strict: bool,
    /// Report validation defects but keep going.
    #[arg(long, global = true)]
    no_strict: bool,
    /// Worker threads for embedding, scoring and bootstrap (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory, overriding the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Provider kind (file, remote, hashing), overriding the configuration.
    #[arg(long, global = true)]
    provider: Option<ProviderKind>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the corpus for structural defects.
    Validate,
    /// Embed explanations, questions and inventory phrases into the cache.
    Embed,
    /// Build per-culture knowledge vectors from the inventory.
    BuildCulture,
    /// Score every record, group and bilingual pair.
    Score,
    /// Aggregate scores and run the significance tests.
    Stats,
    /// Render tables, radar data and the manifest.
    Report,
    /// Run every stage in order, stopping at the first failure.
    All,
    /// Write a synthetic corpus, matching vector file and configuration.
    Synth {
        /// Directory to write into.
        dir: PathBuf,
        #[arg(long, value_enum, default_value = "demo")]
        scale: Scale,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        /// Hashing-encoder dimension.
        #[arg(long, default_value_t = 128)]
        dim: usize,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Scale {
    /// Six Spanish questions, two models.
    Demo,
    /// 2,100 records across three cultures.
    Full,
    /// One Bengali probe model with inventory-phrase TL and unrelated EN explanations.
    Directional,
}

impl Cli {
    fn stage(&self) -> Option<&'static str> {
        Some(match self.command {
            Command::Validate => "validate",
            Command::Embed => "embed",
            Command::BuildCulture => "build-culture",
            Command::Score => "score",
            Command::Stats => "stats",
            Command::Report => "report",
            Command::All => "all",
            Command::Synth { .. } => return None,
        })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: worker pool: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Command::Synth { dir, scale, seed, dim } = &cli.command {
        return synth(dir, *scale, *seed, *dim);
    }
    let stage = cli.stage().expect("pipeline command");
    let path = cli.config.as_deref().ok_or_else(|| CliError::config("--config PATH is required").in_stage(stage))?;
    let mut config = RunConfig::load(path).map_err(|e| e.in_stage(stage))?;
    if let Some(out) = &cli.out {
        config.output.dir = out.clone();
    }
    if let Some(kind) = cli.provider {
        config.provider.kind = kind;
    }
    let strict = !cli.no_strict || cli.strict;
    Pipeline::new(config, strict).run(stage)
}

fn synth(dir: &Path, scale: Scale, seed: u64, dim: usize) -> Result<(), CliError> {
    if dim == 0 {
        return Err(CliError::config("--dim must be positive"));
    }
    let inventory = Inventory::default_inventory();
    let lexicon = MarkerLexicon::default_lexicon();
    let corpus = match scale {
        Scale::Demo => generate_corpus(&SyntheticSpec::demo(seed), &inventory, &lexicon),
        Scale::Full => generate_corpus(&SyntheticSpec::full_scale(seed), &inventory, &lexicon),
        Scale::Directional => directional_corpus(&inventory, &lexicon, Culture::BN, 50, 3, seed),
    };
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut csv = Vec::new();
    write_corpus(&corpus, CorpusFormat::Csv, &mut csv).map_err(|e| CliError::config(e.to_string()))?;
    let corpus_path = dir.join("corpus.csv");
    write_atomic(&corpus_path, &csv).map_err(|e| CliError::io(&corpus_path, e))?;

    let provider = HashingProvider::new(dim);
    let vectors = vector_file_for(&provider, &embedded_texts(&corpus, &inventory));
    let vectors_path = dir.join("vectors.vec");
    write_atomic(&vectors_path, vectors.as_bytes()).map_err(|e| CliError::io(&vectors_path, e))?;

    let config = format!(
        "[corpus]\npath = \"corpus.csv\"\nformat = \"delimited-table\"\n\n\
         [provider]\nkind = \"file\"\nmodel_id = \"{}\"\nvectors = \"vectors.vec\"\n\n\
         [scoring]\nlambda = 0.7\nruns = {}\n\n\
         [bootstrap]\nlevel = 0.95\nresamples = 1000\nseed = 42\n\n\
         [output]\ndir = \"out\"\n",
        provider.model_id(),
        corpus.run_count()
    );
    let config_path = dir.join("craft.toml");
    write_atomic(&config_path, config.as_bytes()).map_err(|e| CliError::io(&config_path, e))?;
    println!("synth: {} records, {} vectors -> {}", corpus.len(), vectors.lines().count(), dir.display());
    Ok(())
}
