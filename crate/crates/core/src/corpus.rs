//! Answer–explanation corpora: loading, validation and EN↔TL pairing.
//!
//! Files are either a comma-separated table with a header row or one JSON
//! object per line, using the field names `question_id, culture,
//! question_language, run_id, question_text, answer_label, explanation,
//! model_name` (matched case-insensitively).
//!
//! Legacy files with a single `language` column (`EN`, `AR`, `BN`, `SP`) and
//! no `culture`/`question_language` columns are also accepted: a target
//! language row becomes `culture = <language>, question_language = TL`; an
//! `EN` row needs an explicit `culture` column or a default culture supplied
//! through [`LoadOptions`].

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Culture {
    AR,
    BN,
    SP,
}

impl Culture {
    pub const ALL: [Culture; 3] = [Culture::AR, Culture::BN, Culture::SP];

    pub fn code(self) -> &'static str {
        match self {
            Culture::AR => "AR",
            Culture::BN => "BN",
            Culture::SP => "SP",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Culture::AR => "Arabic",
            Culture::BN => "Bengali",
            Culture::SP => "Spanish",
        }
    }
}

impl fmt::Display for Culture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Culture {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "AR" => Ok(Culture::AR),
            "BN" => Ok(Culture::BN),
            "SP" | "ES" => Ok(Culture::SP),
            other => Err(format!("unknown culture {other:?} (expected AR, BN or SP)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum QuestionLanguage {
    EN,
    TL,
}

impl QuestionLanguage {
    pub fn code(self) -> &'static str {
        match self {
            QuestionLanguage::EN => "EN",
            QuestionLanguage::TL => "TL",
        }
    }

    pub fn other(self) -> Self {
        match self {
            QuestionLanguage::EN => QuestionLanguage::TL,
            QuestionLanguage::TL => QuestionLanguage::EN,
        }
    }
}

impl fmt::Display for QuestionLanguage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for QuestionLanguage {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "EN" => Ok(QuestionLanguage::EN),
            "TL" => Ok(QuestionLanguage::TL),
            other => Err(format!("unknown question language {other:?} (expected EN or TL)")),
        }
    }
}

/// Unique key of one response.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RecordKey {
    pub model: String,
    pub culture: Culture,
    pub question_id: u32,
    pub question_language: QuestionLanguage,
    pub run_id: u32,
}

impl fmt::Display for RecordKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/q{}/{}/run{}", self.model, self.culture, self.question_id, self.question_language, self.run_id)
    }
}

/// All runs of one question under one model, culture and question language.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroupKey {
    pub model: String,
    pub culture: Culture,
    pub question_id: u32,
    pub question_language: QuestionLanguage,
}

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/q{}/{}", self.model, self.culture, self.question_id, self.question_language)
    }
}

/// The EN and TL responses sharing model, culture, question and run.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PairKey {
    pub model: String,
    pub culture: Culture,
    pub question_id: u32,
    pub run_id: u32,
}

impl fmt::Display for PairKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/q{}/run{}", self.model, self.culture, self.question_id, self.run_id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub question_id: u32,
    pub culture: Culture,
    pub question_language: QuestionLanguage,
    pub run_id: u32,
    pub question_text: String,
    pub answer_label: String,
    pub explanation: String,
    pub model_name: String,
}

impl ResponseRecord {
    pub fn key(&self) -> RecordKey {
        RecordKey {
            model: self.model_name.clone(),
            culture: self.culture,
            question_id: self.question_id,
            question_language: self.question_language,
            run_id: self.run_id,
        }
    }

    pub fn group_key(&self) -> GroupKey {
        GroupKey {
            model: self.model_name.clone(),
            culture: self.culture,
            question_id: self.question_id,
            question_language: self.question_language,
        }
    }

    pub fn pair_key(&self) -> PairKey {
        PairKey {
            model: self.model_name.clone(),
            culture: self.culture,
            question_id: self.question_id,
            run_id: self.run_id,
        }
    }
}

/// Records in key order plus the declared run count.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationCorpus {
    records: Vec<ResponseRecord>,
    run_count: u32,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },
    #[error("missing required column {0:?}")]
    MissingColumn(&'static str),
    #[error("row {row}: duplicate key {key}")]
    DuplicateKey { row: usize, key: RecordKey },
    #[error("row {row}: run_id {run_id} outside 1..={run_count}")]
    RunOutOfRange { row: usize, run_id: u32, run_count: u32 },
    #[error("row {row}: field {field}: {message}")]
    InvalidField { row: usize, field: &'static str, message: String },
    #[error("run count must be at least 2, got {0}")]
    RunCount(u32),
}

impl EvaluationCorpus {
    /// Build from typed records, enforcing key uniqueness and the run range.
    /// Row numbers in errors are 1-based positions in `records`.
    pub fn new(records: Vec<ResponseRecord>, run_count: u32) -> Result<Self, CorpusError> {
        if run_count < 2 {
            return Err(CorpusError::RunCount(run_count));
        }
        let mut seen = HashMap::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            check_run(r.run_id, run_count, i + 1)?;
            if seen.insert(r.key(), i).is_some() {
                return Err(CorpusError::DuplicateKey { row: i + 1, key: r.key() });
            }
        }
        Ok(Self::from_checked(records, run_count))
    }

    fn from_checked(mut records: Vec<ResponseRecord>, run_count: u32) -> Self {
        records.sort_by_cached_key(|r| r.key());
        Self { records, run_count }
    }

    pub fn records(&self) -> &[ResponseRecord] {
        &self.records
    }

    pub fn run_count(&self) -> u32 {
        self.run_count
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn cultures(&self) -> BTreeSet<Culture> {
        self.records.iter().map(|r| r.culture).collect()
    }

    pub fn models(&self) -> BTreeSet<String> {
        self.records.iter().map(|r| r.model_name.clone()).collect()
    }

    /// Records grouped by (model, culture, question, language), runs in order.
    pub fn groups(&self) -> BTreeMap<GroupKey, Vec<&ResponseRecord>> {
        let mut out: BTreeMap<GroupKey, Vec<&ResponseRecord>> = BTreeMap::new();
        for r in &self.records {
            out.entry(r.group_key()).or_default().push(r);
        }
        out
    }

    /// True when the group holds exactly runs 1..=R.
    pub fn is_complete(&self, runs: &[&ResponseRecord]) -> bool {
        runs.len() == self.run_count as usize && runs.iter().enumerate().all(|(i, r)| r.run_id as usize == i + 1)
    }
}

fn check_run(run_id: u32, run_count: u32, row: usize) -> Result<(), CorpusError> {
    if run_id == 0 || run_id > run_count {
        return Err(CorpusError::RunOutOfRange { row, run_id, run_count });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    /// Comma-separated table with a header row.
    Csv,
    /// One JSON object per line.
    Jsonl,
}

impl FromStr for CorpusFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" | "delimited-table" => Ok(CorpusFormat::Csv),
            "jsonl" | "record-lines" => Ok(CorpusFormat::Jsonl),
            other => Err(format!("unknown corpus format {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LoadOptions {
    pub run_count: u32,
    /// Culture assigned to legacy `language = EN` rows lacking a culture column.
    pub default_culture: Option<Culture>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self { run_count: 3, default_culture: None }
    }
}

/// Collapse whitespace runs to single spaces and trim the ends.
pub fn normalize_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn load_corpus(path: &Path, format: CorpusFormat, options: LoadOptions) -> Result<EvaluationCorpus, CorpusError> {
    let file = File::open(path).map_err(|source| CorpusError::Io { path: path.into(), source })?;
    read_corpus(BufReader::new(file), format, options)
}

pub fn read_corpus<R: io::Read>(
    reader: R,
    format: CorpusFormat,
    options: LoadOptions,
) -> Result<EvaluationCorpus, CorpusError> {
    if options.run_count < 2 {
        return Err(CorpusError::RunCount(options.run_count));
    }
    let rows = match format {
        CorpusFormat::Csv => csv_rows(reader)?,
        CorpusFormat::Jsonl => jsonl_rows(reader)?,
    };
    let mut records = Vec::with_capacity(rows.len());
    let mut seen: HashMap<RecordKey, usize> = HashMap::with_capacity(rows.len());
    for (row, fields) in rows {
        let record = type_row(row, &fields, &options)?;
        check_run(record.run_id, options.run_count, row)?;
        if seen.insert(record.key(), row).is_some() {
            return Err(CorpusError::DuplicateKey { row, key: record.key() });
        }
        records.push(record);
    }
    Ok(EvaluationCorpus::from_checked(records, options.run_count))
}

type RawRow = (usize, HashMap<String, String>);

fn csv_rows<R: io::Read>(reader: R) -> Result<Vec<RawRow>, CorpusError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| CorpusError::Parse { row: 1, message: e.to_string() })?
        .iter()
        .map(|h| h.trim().trim_start_matches('\u{feff}').to_ascii_lowercase())
        .collect();
    check_columns(headers.iter().map(String::as_str))?;
    let mut rows = Vec::new();
    for result in rdr.records() {
        let rec = result.map_err(|e| CorpusError::Parse {
            row: e.position().map(|p| p.line() as usize).unwrap_or(0),
            message: e.to_string(),
        })?;
        let row = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let fields = headers.iter().cloned().zip(rec.iter().map(str::to_string)).collect();
        rows.push((row, fields));
    }
    Ok(rows)
}

fn jsonl_rows<R: io::Read>(reader: R) -> Result<Vec<RawRow>, CorpusError> {
    let mut rows = Vec::new();
    let mut columns_checked = false;
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let row = i + 1;
        let line = line.map_err(|e| CorpusError::Parse { row, message: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value =
            serde_json::from_str(&line).map_err(|e| CorpusError::Parse { row, message: e.to_string() })?;
        let obj =
            value.as_object().ok_or_else(|| CorpusError::Parse { row, message: "expected a JSON object".into() })?;
        let fields: HashMap<String, String> = obj
            .iter()
            .map(|(k, v)| {
                let s = match v {
                    serde_json::Value::String(s) => s.clone(),
                    serde_json::Value::Null => String::new(),
                    other => other.to_string(),
                };
                (k.trim().to_ascii_lowercase(), s)
            })
            .collect();
        if !columns_checked {
            check_columns(fields.keys().map(String::as_str))?;
            columns_checked = true;
        }
        rows.push((row, fields));
    }
    Ok(rows)
}

const ALWAYS_REQUIRED: [&str; 6] =
    ["question_id", "run_id", "question_text", "answer_label", "explanation", "model_name"];

fn check_columns<'a>(names: impl Iterator<Item = &'a str>) -> Result<(), CorpusError> {
    let names: BTreeSet<&str> = names.collect();
    for col in ALWAYS_REQUIRED {
        if !names.contains(col) {
            return Err(CorpusError::MissingColumn(col));
        }
    }
    if !names.contains("question_language") && !names.contains("language") {
        return Err(CorpusError::MissingColumn("question_language"));
    }
    if !names.contains("culture") && !names.contains("language") {
        return Err(CorpusError::MissingColumn("culture"));
    }
    Ok(())
}

fn type_row(row: usize, f: &HashMap<String, String>, options: &LoadOptions) -> Result<ResponseRecord, CorpusError> {
    let get = |name: &'static str| -> Result<&str, CorpusError> {
        f.get(name).map(String::as_str).ok_or(CorpusError::InvalidField { row, field: name, message: "missing".into() })
    };
    let invalid = |field: &'static str, message: String| CorpusError::InvalidField { row, field, message };
    let positive = |field: &'static str| -> Result<u32, CorpusError> {
        let raw = get(field)?.trim();
        match raw.parse::<u32>() {
            Ok(v) if v >= 1 => Ok(v),
            _ => Err(invalid(field, format!("expected an integer >= 1, got {raw:?}"))),
        }
    };

    let question_id = positive("question_id")?;
    let run_id = positive("run_id")?;

    let explicit_culture = f.get("culture").map(|s| s.trim()).filter(|s| !s.is_empty());
    let (culture, question_language) = match f.get("question_language") {
        Some(lang) => {
            let lang = lang.parse().map_err(|m| invalid("question_language", m))?;
            let culture = explicit_culture
                .ok_or_else(|| invalid("culture", "missing".into()))?
                .parse()
                .map_err(|m| invalid("culture", m))?;
            (culture, lang)
        }
        None => {
            // legacy single `language` column
            let lang = get("language")?.trim().to_ascii_uppercase();
            if lang == "EN" {
                let culture = match explicit_culture {
                    Some(c) => c.parse().map_err(|m| invalid("culture", m))?,
                    None => options
                        .default_culture
                        .ok_or_else(|| invalid("culture", "EN row without culture and no default culture".into()))?,
                };
                (culture, QuestionLanguage::EN)
            } else {
                let culture: Culture = lang.parse().map_err(|m| invalid("language", m))?;
                if let Some(c) = explicit_culture {
                    let c: Culture = c.parse().map_err(|m| invalid("culture", m))?;
                    if c != culture {
                        return Err(invalid("culture", format!("{c} contradicts language {culture}")));
                    }
                }
                (culture, QuestionLanguage::TL)
            }
        }
    };

    let question_text = normalize_whitespace(get("question_text")?);
    if question_text.is_empty() {
        return Err(invalid("question_text", "empty".into()));
    }
    let answer_label = normalize_whitespace(get("answer_label")?);
    let model_name = normalize_whitespace(get("model_name")?);
    if model_name.is_empty() {
        return Err(invalid("model_name", "empty".into()));
    }
    Ok(ResponseRecord {
        question_id,
        culture,
        question_language,
        run_id,
        question_text,
        answer_label,
        explanation: normalize_whitespace(get("explanation")?),
        model_name,
    })
}

const HEADER: [&str; 8] = [
    "question_id",
    "culture",
    "question_language",
    "run_id",
    "question_text",
    "answer_label",
    "explanation",
    "model_name",
];

/// Serialize in the canonical field order; `read_corpus` reads it back.
pub fn write_corpus<W: Write>(corpus: &EvaluationCorpus, format: CorpusFormat, writer: W) -> io::Result<()> {
    match format {
        CorpusFormat::Csv => {
            let mut w = csv::Writer::from_writer(writer);
            w.write_record(HEADER)?;
            for r in corpus.records() {
                w.write_record([
                    r.question_id.to_string().as_str(),
                    r.culture.code(),
                    r.question_language.code(),
                    r.run_id.to_string().as_str(),
                    &r.question_text,
                    &r.answer_label,
                    &r.explanation,
                    &r.model_name,
                ])?;
            }
            w.flush()
        }
        CorpusFormat::Jsonl => {
            let mut w = io::BufWriter::new(writer);
            for r in corpus.records() {
                serde_json::to_writer(&mut w, r)?;
                w.write_all(b"\n")?;
            }
            w.flush()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Defect {
    EmptyCorpus,
    /// A group lacks some of runs 1..=R.
    IncompleteGroup {
        group: GroupKey,
        missing_runs: Vec<u32>,
    },
    /// Runs of a question with no counterpart in the other question language.
    UnpairedQuestion {
        model: String,
        culture: Culture,
        question_id: u32,
        missing_language: QuestionLanguage,
        runs: Vec<u32>,
    },
    EmptyExplanation {
        key: RecordKey,
    },
}

impl fmt::Display for Defect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Defect::EmptyCorpus => write!(f, "corpus has no records"),
            Defect::IncompleteGroup { group, missing_runs } => {
                write!(f, "incomplete group {group}: missing runs {missing_runs:?}")
            }
            Defect::UnpairedQuestion { model, culture, question_id, missing_language, runs } => write!(
                f,
                "unpaired question {model}/{culture}/q{question_id}: no {missing_language} counterpart for runs {runs:?}"
            ),
            Defect::EmptyExplanation { key } => write!(f, "empty explanation at {key}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationCounts {
    pub records: usize,
    pub models: usize,
    pub cultures: usize,
    pub groups: usize,
    pub complete_groups: usize,
    pub pairs: usize,
    pub empty_explanations: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub run_count: u32,
    pub counts: ValidationCounts,
    pub defects: Vec<Defect>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.defects.is_empty()
    }

    pub fn unpaired_defects(&self) -> usize {
        self.defects.iter().filter(|d| matches!(d, Defect::UnpairedQuestion { .. })).count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.counts;
        writeln!(
            f,
            "{} records, {} models, {} cultures, {}/{} complete groups (R={}), {} bilingual pairs",
            c.records, c.models, c.cultures, c.complete_groups, c.groups, self.run_count, c.pairs
        )?;
        if self.defects.is_empty() {
            return writeln!(f, "no defects");
        }
        writeln!(f, "{} defects:", self.defects.len())?;
        for d in &self.defects {
            writeln!(f, "  - {d}")?;
        }
        Ok(())
    }
}

/// Inspect a corpus for structural defects. Pure; never fails.
pub fn validate_corpus(corpus: &EvaluationCorpus) -> ValidationReport {
    let mut defects = Vec::new();
    if corpus.is_empty() {
        defects.push(Defect::EmptyCorpus);
    }
    let groups = corpus.groups();
    let mut complete = 0;
    for (key, runs) in &groups {
        if corpus.is_complete(runs) {
            complete += 1;
        } else {
            let present: BTreeSet<u32> = runs.iter().map(|r| r.run_id).collect();
            let missing_runs = (1..=corpus.run_count()).filter(|r| !present.contains(r)).collect();
            defects.push(Defect::IncompleteGroup { group: key.clone(), missing_runs });
        }
    }

    // runs per (model, culture, question) and language
    let mut by_question: BTreeMap<(String, Culture, u32), [BTreeSet<u32>; 2]> = BTreeMap::new();
    for r in corpus.records() {
        let slot = match r.question_language {
            QuestionLanguage::EN => 0,
            QuestionLanguage::TL => 1,
        };
        by_question.entry((r.model_name.clone(), r.culture, r.question_id)).or_default()[slot].insert(r.run_id);
    }
    let mut pairs = 0;
    for ((model, culture, question_id), [en, tl]) in &by_question {
        pairs += en.intersection(tl).count();
        for (missing_language, have, lack) in [(QuestionLanguage::TL, en, tl), (QuestionLanguage::EN, tl, en)] {
            let runs: Vec<u32> = have.difference(lack).copied().collect();
            if !runs.is_empty() {
                defects.push(Defect::UnpairedQuestion {
                    model: model.clone(),
                    culture: *culture,
                    question_id: *question_id,
                    missing_language,
                    runs,
                });
            }
        }
    }

    let mut empty_explanations = 0;
    for r in corpus.records() {
        if r.explanation.is_empty() {
            empty_explanations += 1;
            defects.push(Defect::EmptyExplanation { key: r.key() });
        }
    }

    ValidationReport {
        run_count: corpus.run_count(),
        counts: ValidationCounts {
            records: corpus.len(),
            models: corpus.models().len(),
            cultures: corpus.cultures().len(),
            groups: groups.len(),
            complete_groups: complete,
            pairs,
            empty_explanations,
        },
        defects,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BilingualPair<'a> {
    pub en: &'a ResponseRecord,
    pub tl: &'a ResponseRecord,
}

impl BilingualPair<'_> {
    pub fn key(&self) -> PairKey {
        self.en.pair_key()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pairing<'a> {
    pub pairs: Vec<BilingualPair<'a>>,
    /// Records with no counterpart in the other language.
    pub excluded: usize,
}

/// Match EN and TL records on (model, culture, question, run), in key order.
pub fn pair_bilingual(corpus: &EvaluationCorpus) -> Pairing<'_> {
    let mut slots: BTreeMap<PairKey, [Option<&ResponseRecord>; 2]> = BTreeMap::new();
    for r in corpus.records() {
        let i = match r.question_language {
            QuestionLanguage::EN => 0,
            QuestionLanguage::TL => 1,
        };
        slots.entry(r.pair_key()).or_default()[i] = Some(r);
    }
    let mut pairs = Vec::new();
    let mut excluded = 0;
    for (_, slot) in slots {
        match slot {
            [Some(en), Some(tl)] => pairs.push(BilingualPair { en, tl }),
            _ => excluded += 1,
        }
    }
    Pairing { pairs, excluded }
}
