use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};
use std::time::{SystemTime, UNIX_EPOCH};

use craft_core::corpus::{load_corpus, validate_corpus, Culture, EvaluationCorpus, LoadOptions, ValidationReport};
use craft_core::culture::{build_cultural_vector, CulturalVector, Inventory, DEFAULT_INVENTORY};
use craft_core::depth::{MarkerLexicon, DEFAULT_LEXICON};
use craft_core::embedding::{
    embed_batch, write_atomic, EmbeddingCache, EmbeddingProvider, FileProvider, HashingProvider, ProviderError,
    RawEmbedding, RemoteProvider,
};
use craft_core::metrics::{
    aggregate, read_scores_jsonl, score_corpus, write_aggregates_csv, write_groups_csv, write_instances_csv,
    write_pairs_csv, write_scores_jsonl, AggregateRow, ScoringConfig,
};
use craft_core::report::{sha256_hex, Manifest, ReportBundle, StageRecord};
use craft_core::stats::{run_stat_suite, write_stats_csv, StatReport};
use craft_core::Scores;

use crate::config::{ProviderKind, RunConfig, ENDPOINT_ENV};
use crate::error::CliError;

type Result<T> = std::result::Result<T, CliError>;

pub const STAGES: [&str; 6] = ["validate", "embed", "build-culture", "score", "stats", "report"];

/// Provider that is only constructed when a text actually misses the cache.
struct LazyProvider {
    model_id: String,
    init: Box<dyn Fn() -> std::result::Result<Box<dyn EmbeddingProvider>, ProviderError> + Send + Sync>,
    inner: OnceLock<std::result::Result<Box<dyn EmbeddingProvider>, ProviderError>>,
}

impl EmbeddingProvider for LazyProvider {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn embed(&self, texts: &[&str]) -> std::result::Result<Vec<RawEmbedding>, ProviderError> {
        match self.inner.get_or_init(&self.init) {
            Ok(p) => p.embed(texts),
            Err(e) => Err(e.clone()),
        }
    }
}

/// One configured run. Corpus, cache and provider are loaded once and shared
/// by the stages executed in this process.
pub struct Pipeline {
    pub config: RunConfig,
    pub strict: bool,
    corpus: OnceLock<Arc<EvaluationCorpus>>,
    cache: OnceLock<Arc<EmbeddingCache>>,
    cache_saved_len: std::sync::Mutex<usize>,
    provider: OnceLock<Arc<LazyProvider>>,
}

fn stage_err(stage: &'static str) -> impl Fn(CliError) -> CliError {
    move |e| e.in_stage(stage)
}

impl Pipeline {
    pub fn new(config: RunConfig, strict: bool) -> Self {
        Self {
            config,
            strict,
            corpus: OnceLock::new(),
            cache: OnceLock::new(),
            cache_saved_len: std::sync::Mutex::new(0),
            provider: OnceLock::new(),
        }
    }

    pub fn out(&self) -> &Path {
        &self.config.output.dir
    }

    pub fn run(&self, stage: &str) -> Result<()> {
        match stage {
            "validate" => self.validate(),
            "embed" => self.embed(),
            "build-culture" => self.build_culture().map(|_| ()),
            "score" => self.score(),
            "stats" => self.stats(),
            "report" => self.report(),
            "all" => {
                for s in STAGES {
                    self.run(s)?;
                }
                Ok(())
            }
            other => Err(CliError::config(format!("unknown stage {other:?}"))),
        }
    }

    fn corpus(&self) -> Result<Arc<EvaluationCorpus>> {
        if let Some(c) = self.corpus.get() {
            return Ok(c.clone());
        }
        let format = self.config.corpus_format().map_err(CliError::config)?;
        let options = LoadOptions {
            run_count: self.config.scoring.runs,
            default_culture: self.config.default_culture().map_err(CliError::config)?,
        };
        let path = &self.config.corpus.path;
        let corpus = load_corpus(path, format, options).map_err(|e| CliError::corpus(path, e))?;
        Ok(self.corpus.get_or_init(|| Arc::new(corpus)).clone())
    }

    fn inventory_text(&self) -> Result<String> {
        match &self.config.inventory.path {
            Some(p) => fs::read_to_string(p).map_err(|e| CliError::io(p, e)),
            None => Ok(DEFAULT_INVENTORY.to_string()),
        }
    }

    fn inventory(&self) -> Result<Inventory> {
        let text = self.inventory_text()?;
        Inventory::parse(&text).map_err(|e| {
            let origin = self.config.inventory.path.as_deref().map(|p| p.display().to_string());
            let err = CliError::inventory(e);
            CliError { message: format!("{}: {}", origin.unwrap_or("bundled inventory".into()), err.message), ..err }
        })
    }

    fn lexicon_text(&self) -> Result<String> {
        match &self.config.lexicon.path {
            Some(p) => fs::read_to_string(p).map_err(|e| CliError::io(p, e)),
            None => Ok(DEFAULT_LEXICON.to_string()),
        }
    }

    fn lexicon(&self) -> Result<MarkerLexicon> {
        MarkerLexicon::parse(&self.lexicon_text()?).map_err(|e| {
            let origin = self.config.lexicon.path.as_deref().map(|p| p.display().to_string());
            CliError::data(format!("{}: {e}", origin.unwrap_or("bundled lexicon".into())))
        })
    }

    fn provider(&self) -> Result<Arc<LazyProvider>> {
        if let Some(p) = self.provider.get() {
            return Ok(p.clone());
        }
        let section = &self.config.provider;
        let lazy = match section.kind {
            ProviderKind::Hashing => {
                let dim = section.dim.unwrap_or(128);
                if dim == 0 {
                    return Err(CliError::config("provider.dim must be positive"));
                }
                let p = HashingProvider::new(dim);
                LazyProvider {
                    model_id: p.model_id().to_string(),
                    init: Box::new(move || Ok(Box::new(HashingProvider::new(dim)))),
                    inner: OnceLock::new(),
                }
            }
            ProviderKind::File => {
                let model_id = section
                    .model_id
                    .clone()
                    .ok_or_else(|| CliError::config("provider.model_id is required for the file provider"))?;
                let path = section
                    .vectors
                    .clone()
                    .ok_or_else(|| CliError::config("provider.vectors is required for the file provider"))?;
                let id = model_id.clone();
                LazyProvider {
                    model_id,
                    init: Box::new(move || {
                        FileProvider::open(id.clone(), &path)
                            .map(|p| Box::new(p) as Box<dyn EmbeddingProvider>)
                            .map_err(|e| match e {
                                craft_core::embedding::VectorFileError::Io { .. } => {
                                    ProviderError::Transport(e.to_string())
                                }
                                other => ProviderError::Malformed(other.to_string()),
                            })
                    }),
                    inner: OnceLock::new(),
                }
            }
            ProviderKind::Remote => {
                let model_id = section
                    .model_id
                    .clone()
                    .ok_or_else(|| CliError::config("provider.model_id is required for the remote provider"))?;
                let endpoint = std::env::var(ENDPOINT_ENV)
                    .ok()
                    .filter(|s| !s.trim().is_empty())
                    .or_else(|| section.endpoint.clone())
                    .ok_or_else(|| {
                        CliError::config(format!(
                            "provider.endpoint (or {ENDPOINT_ENV}) is required for the remote provider"
                        ))
                    })?;
                let id = model_id.clone();
                LazyProvider {
                    model_id,
                    init: Box::new(move || {
                        RemoteProvider::new(&endpoint, id.clone()).map(|p| Box::new(p) as Box<dyn EmbeddingProvider>)
                    }),
                    inner: OnceLock::new(),
                }
            }
        };
        Ok(self.provider.get_or_init(|| Arc::new(lazy)).clone())
    }

    fn cache_path(&self, model_id: &str) -> PathBuf {
        let safe: String = model_id
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' })
            .collect();
        self.out().join("cache").join(format!("{safe}.vec"))
    }

    fn cache(&self) -> Result<Arc<EmbeddingCache>> {
        if let Some(c) = self.cache.get() {
            return Ok(c.clone());
        }
        let provider = self.provider()?;
        let cache = EmbeddingCache::load(&self.cache_path(provider.model_id())).map_err(CliError::vectors)?;
        *self.cache_saved_len.lock().expect("lock") = cache.len();
        Ok(self.cache.get_or_init(|| Arc::new(cache)).clone())
    }

    /// Persist the cache if this process added vectors to it.
    fn save_cache(&self) -> Result<()> {
        let (Some(cache), Some(provider)) = (self.cache.get(), self.provider.get()) else {
            return Ok(());
        };
        let mut saved = self.cache_saved_len.lock().expect("lock");
        let path = self.cache_path(provider.model_id());
        if cache.len() != *saved || !path.exists() {
            cache.save(&path).map_err(CliError::vectors)?;
            *saved = cache.len();
        }
        Ok(())
    }

    fn write(&self, rel: &str, bytes: &[u8], outputs: &mut BTreeMap<String, String>) -> Result<()> {
        let path = self.out().join(rel);
        write_atomic(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        outputs.insert(rel.to_string(), sha256_hex(bytes));
        Ok(())
    }

    fn read(&self, rel: &str, producer: &str) -> Result<String> {
        let path = self.out().join(rel);
        fs::read_to_string(&path)
            .map_err(|e| CliError::config(format!("{}: {e} (run `craft {producer}` first)", path.display())))
    }

    fn manifest_path(&self) -> PathBuf {
        self.out().join("reports").join("manifest.json")
    }

    fn record_stage(&self, stage: &str, record: StageRecord) -> Result<()> {
        let path = self.manifest_path();
        let provider = self.provider()?;
        let mut m = Manifest::read(&path).unwrap_or_else(|_| Manifest::new(provider.model_id()));
        m.tool_version = env!("CARGO_PKG_VERSION").into();
        m.provider_model_id = provider.model_id().to_string();
        m.inputs.insert("config".into(), self.config.digest.clone());
        let corpus_bytes = fs::read(&self.config.corpus.path).map_err(|e| CliError::io(&self.config.corpus.path, e))?;
        m.inputs.insert("corpus".into(), sha256_hex(&corpus_bytes));
        m.inputs.insert("inventory".into(), sha256_hex(self.inventory_text()?.as_bytes()));
        m.inputs.insert("lexicon".into(), sha256_hex(self.lexicon_text()?.as_bytes()));
        m.lambda = self.config.scoring.lambda;
        m.run_count = self.config.scoring.runs;
        m.bootstrap_level = self.config.bootstrap.level;
        m.bootstrap_resamples = self.config.bootstrap.resamples;
        m.bootstrap_seed = self.config.bootstrap.seed;
        m.stages.insert(stage.to_string(), record);
        m.written_at = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        m.write(&path).map_err(|e| CliError::io(&path, e))
    }

    /// Validate and apply the strictness policy.
    fn checked_corpus(&self) -> Result<(Arc<EvaluationCorpus>, ValidationReport)> {
        let corpus = self.corpus()?;
        let report = validate_corpus(&corpus);
        if !report.is_clean() && self.strict {
            return Err(CliError::data(format!(
                "{}: {} validation defect(s) in strict mode; first: {}",
                self.config.corpus.path.display(),
                report.defects.len(),
                report.defects[0]
            )));
        }
        Ok((corpus, report))
    }

    pub fn validate(&self) -> Result<()> {
        let run = || -> Result<()> {
            let corpus = self.corpus()?;
            let report = validate_corpus(&corpus);
            println!("validate: {}", self.config.corpus.path.display());
            print!("{report}");
            let mut record = StageRecord::default();
            self.write("validation/report.json", format!("{}\n", report.to_json()).as_bytes(), &mut record.outputs)?;
            record.counts.insert("records".into(), corpus.len());
            record.counts.insert("defects".into(), report.defects.len());
            self.record_stage("validate", record)?;
            if !report.is_clean() && self.strict {
                return Err(CliError::data(format!(
                    "{}: {} validation defect(s) in strict mode",
                    self.config.corpus.path.display(),
                    report.defects.len()
                )));
            }
            Ok(())
        };
        run().map_err(stage_err("validate"))
    }

    fn cultures_needed(&self, corpus: &EvaluationCorpus) -> BTreeSet<Culture> {
        corpus.cultures()
    }

    pub fn embed(&self) -> Result<()> {
        let run = || -> Result<()> {
            let corpus = self.corpus()?;
            let inventory = self.inventory()?;
            let provider = self.provider()?;
            let cache = self.cache()?;
            let cultures = self.cultures_needed(&corpus);
            let mut texts: BTreeSet<&str> = BTreeSet::new();
            for r in corpus.records() {
                texts.insert(&r.explanation);
                texts.insert(&r.question_text);
            }
            for p in inventory.phrases() {
                for c in &cultures {
                    if let Some(s) = p.surface(*c) {
                        texts.insert(s);
                    }
                }
            }
            let texts: Vec<&str> = texts.into_iter().collect();
            let before = cache.len();
            embed_batch(provider.as_ref(), &cache, &texts).map_err(CliError::embed)?;
            self.save_cache()?;
            println!(
                "embed: {} unique texts, {} newly embedded, cache {}",
                texts.len(),
                cache.len() - before,
                self.cache_path(provider.model_id()).display()
            );
            let mut record = StageRecord::default();
            record.counts.insert("texts".into(), texts.len());
            record.counts.insert("cache_entries".into(), cache.len());
            self.record_stage("embed", record)
        };
        run().map_err(stage_err("embed"))
    }

    fn cultural_vectors_rel(&self) -> &'static str {
        "culture/cultural_vectors.json"
    }

    /// Cultural vectors for the corpus cultures, reusing the stored file when
    /// it matches the provider and inventory.
    fn cultural_vectors(&self, rebuild: bool) -> Result<(BTreeMap<Culture, CulturalVector>, bool)> {
        let corpus = self.corpus()?;
        let inventory = self.inventory()?;
        let provider = self.provider()?;
        let needed = self.cultures_needed(&corpus);
        let stored = self.out().join(self.cultural_vectors_rel());
        if !rebuild {
            if let Ok(text) = fs::read_to_string(&stored) {
                if let Ok(list) = serde_json::from_str::<Vec<CulturalVector>>(&text) {
                    let map: BTreeMap<Culture, CulturalVector> = list.into_iter().map(|v| (v.culture, v)).collect();
                    let digest = inventory.digest();
                    let usable = needed.iter().all(|c| {
                        map.get(c).is_some_and(|v| v.model_id == provider.model_id() && v.inventory_digest == digest)
                    });
                    if usable {
                        return Ok((map, false));
                    }
                }
            }
        }
        let cache = self.cache()?;
        let mut map = BTreeMap::new();
        for c in needed {
            let v = build_cultural_vector(&inventory, c, provider.as_ref(), &cache).map_err(CliError::culture)?;
            map.insert(c, v);
        }
        self.save_cache()?;
        Ok((map, true))
    }

    fn write_cultural_vectors(
        &self,
        map: &BTreeMap<Culture, CulturalVector>,
        outputs: &mut BTreeMap<String, String>,
    ) -> Result<()> {
        let list: Vec<&CulturalVector> = map.values().collect();
        let mut text = serde_json::to_string_pretty(&list).map_err(|e| CliError::config(e.to_string()))?;
        text.push('\n');
        self.write(self.cultural_vectors_rel(), text.as_bytes(), outputs)
    }

    pub fn build_culture(&self) -> Result<BTreeMap<Culture, CulturalVector>> {
        let run = || -> Result<BTreeMap<Culture, CulturalVector>> {
            let (map, _) = self.cultural_vectors(true)?;
            let mut record = StageRecord::default();
            self.write_cultural_vectors(&map, &mut record.outputs)?;
            for v in map.values() {
                println!("build-culture: {} from {} phrases ({})", v.culture, v.phrase_count, v.model_id);
                record.counts.insert(format!("phrases_{}", v.culture.code()), v.phrase_count);
            }
            self.record_stage("build-culture", record)?;
            Ok(map)
        };
        run().map_err(stage_err("build-culture"))
    }

    pub fn score(&self) -> Result<()> {
        let run = || -> Result<()> {
            let (corpus, report) = self.checked_corpus()?;
            if !report.is_clean() {
                println!("score: continuing past {} validation defect(s) (--no-strict)", report.defects.len());
            }
            let lexicon = self.lexicon()?;
            let provider = self.provider()?;
            let cache = self.cache()?;
            let mut record = StageRecord::default();
            let (vectors, rebuilt) = self.cultural_vectors(false)?;
            if rebuilt {
                self.write_cultural_vectors(&vectors, &mut record.outputs)?;
            }
            let config = ScoringConfig { lambda: self.config.scoring.lambda };
            let scores =
                score_corpus(&corpus, &vectors, provider.as_ref(), &cache, &lexicon, &config).map_err(|e| {
                    let err = CliError::score(e);
                    CliError { message: format!("{}: {}", self.config.corpus.path.display(), err.message), ..err }
                })?;
            self.save_cache()?;

            let mut buf = Vec::new();
            write_instances_csv(&scores, &mut buf).map_err(|e| CliError::config(e.to_string()))?;
            self.write("scores/instances.csv", &buf, &mut record.outputs)?;
            buf.clear();
            write_groups_csv(&scores, &mut buf).map_err(|e| CliError::config(e.to_string()))?;
            self.write("scores/groups.csv", &buf, &mut record.outputs)?;
            buf.clear();
            write_pairs_csv(&scores, &mut buf).map_err(|e| CliError::config(e.to_string()))?;
            self.write("scores/pairs.csv", &buf, &mut record.outputs)?;
            buf.clear();
            write_scores_jsonl(&scores, &mut buf).map_err(|e| CliError::config(e.to_string()))?;
            self.write("scores/scores.jsonl", &buf, &mut record.outputs)?;

            println!(
                "score: {} instances, {} groups ({} skipped), {} pairs ({} unpaired records)",
                scores.instances.len(),
                scores.groups.len(),
                scores.skipped_groups,
                scores.pairs.len(),
                scores.unpaired_records
            );
            record.counts.insert("instances".into(), scores.instances.len());
            record.counts.insert("groups".into(), scores.groups.len());
            record.counts.insert("skipped_groups".into(), scores.skipped_groups);
            record.counts.insert("pairs".into(), scores.pairs.len());
            record.counts.insert("unpaired_records".into(), scores.unpaired_records);
            self.record_stage("score", record)
        };
        run().map_err(stage_err("score"))
    }

    fn load_scores(&self) -> Result<Scores> {
        let text = self.read("scores/scores.jsonl", "score")?;
        read_scores_jsonl(&text)
            .map_err(|e| CliError::data(format!("{}: {e}", self.out().join("scores/scores.jsonl").display())))
    }

    pub fn stats(&self) -> Result<()> {
        let run = || -> Result<()> {
            let scores = self.load_scores()?;
            let rows = aggregate(&scores, &self.config.bootstrap());
            let report = run_stat_suite(&scores, &self.config.stat_plan());
            let mut record = StageRecord::default();
            let mut buf = Vec::new();
            write_aggregates_csv(&rows, &mut buf).map_err(|e| CliError::config(e.to_string()))?;
            self.write("stats/aggregates.csv", &buf, &mut record.outputs)?;
            buf.clear();
            write_stats_csv(&report, &mut buf).map_err(|e| CliError::config(e.to_string()))?;
            self.write("stats/stats.csv", &buf, &mut record.outputs)?;
            self.write("stats/aggregates.json", to_json(&rows).as_bytes(), &mut record.outputs)?;
            self.write("stats/stat_report.json", to_json(&report).as_bytes(), &mut record.outputs)?;
            for note in &report.notes {
                println!("stats: note: {note}");
            }
            println!(
                "stats: {} aggregate rows, {} Kruskal–Wallis tests, {} Wilcoxon tests",
                rows.len(),
                report.kruskal_wallis.len(),
                report.wilcoxon.len()
            );
            record.counts.insert("aggregate_rows".into(), rows.len());
            record.counts.insert("kruskal_wallis".into(), report.kruskal_wallis.len());
            record.counts.insert("wilcoxon".into(), report.wilcoxon.len());
            self.record_stage("stats", record)
        };
        run().map_err(stage_err("stats"))
    }

    pub fn report(&self) -> Result<()> {
        let run = || -> Result<()> {
            let rows_path = self.out().join("stats/aggregates.json");
            let rows: Vec<AggregateRow> = serde_json::from_str(&self.read("stats/aggregates.json", "stats")?)
                .map_err(|e| CliError::data(format!("{}: {e}", rows_path.display())))?;
            let stats_path = self.out().join("stats/stat_report.json");
            let stats: StatReport = serde_json::from_str(&self.read("stats/stat_report.json", "stats")?)
                .map_err(|e| CliError::data(format!("{}: {e}", stats_path.display())))?;
            let bundle = ReportBundle::new(rows, stats);
            let dir = self.out().join("reports");
            let written =
                bundle.export(&dir, &self.config.output.formats).map_err(|e| CliError::io(&e.path, &e.source))?;
            let mut record = StageRecord::default();
            for (name, digest) in written {
                println!("report: {}", dir.join(&name).display());
                record.outputs.insert(format!("reports/{name}"), digest);
            }
            self.record_stage("report", record)?;
            println!("report: {}", self.manifest_path().display());
            Ok(())
        };
        run().map_err(stage_err("report"))
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}
