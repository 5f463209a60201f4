//! Cultural Fluency, Deviation, Consistency and Linguistic Adaptation at
//! instance, group and pair granularity, plus per-condition aggregation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{pair_bilingual, Culture, EvaluationCorpus, GroupKey, PairKey, QuestionLanguage, RecordKey};
use crate::culture::CulturalVector;
use crate::depth::{depth_score, explanation_language, extract_features, MarkerLexicon};
use crate::embedding::{
    cosine, embed_batch, CachedVector, EmbedError, EmbeddingCache, EmbeddingProvider, EmbeddingVector, VectorError,
};
use crate::scalar::Scalar;
use crate::stats::bootstrap::{bootstrap_ci, BootstrapConfig};
use crate::stats::{mean, population_sd};

pub const DEFAULT_LAMBDA: f64 = 0.7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("lambda {0} outside [0, 1]")]
    Lambda(f64),
    #[error("need {expected} answers, got {got}")]
    IncompleteAnswers { expected: usize, got: usize },
    #[error("run count must be at least 2, got {0}")]
    RunCount(usize),
    #[error("explanation consistency needs at least 2 embeddings, got {0}")]
    TooFewEmbeddings(usize),
    #[error(transparent)]
    Vector(#[from] VectorError),
}

/// λ·alignment + (1 − λ)·depth.
pub fn cultural_fluency<T: Scalar>(alignment: T, depth: T, lambda: T) -> Result<T, MetricError> {
    if !(lambda >= T::zero() && lambda <= T::one()) {
        return Err(MetricError::Lambda(lambda.as_f64()));
    }
    Ok(lambda * alignment + (T::one() - lambda) * depth)
}

/// 1 − cos(explanation, question).
pub fn deviation<T: Scalar>(explanation: &EmbeddingVector<T>, question: &EmbeddingVector<T>) -> Result<T, MetricError> {
    Ok(T::one() - cosine(explanation, question)?)
}

/// 1 − (U − 1)/(R − 1) where U counts distinct answers among the R runs.
pub fn answer_consistency<T: Scalar, A: Ord>(answers: &[A], runs: usize) -> Result<T, MetricError> {
    if runs < 2 {
        return Err(MetricError::RunCount(runs));
    }
    if answers.len() != runs {
        return Err(MetricError::IncompleteAnswers { expected: runs, got: answers.len() });
    }
    let unique = answers.iter().collect::<BTreeSet<_>>().len();
    Ok(T::one() - T::from_count(unique - 1) / T::from_count(runs - 1))
}

/// Mean cosine over all unordered pairs of run embeddings.
pub fn explanation_consistency<T: Scalar>(embeddings: &[&EmbeddingVector<T>]) -> Result<T, MetricError> {
    let r = embeddings.len();
    if r < 2 {
        return Err(MetricError::TooFewEmbeddings(r));
    }
    let mut total = T::zero();
    for i in 0..r {
        for j in i + 1..r {
            total = total + cosine(embeddings[i], embeddings[j])?;
        }
    }
    Ok(total / T::from_count(r * (r - 1) / 2))
}

/// 1 − cos(EN explanation, TL explanation).
pub fn linguistic_adaptation<T: Scalar>(en: &EmbeddingVector<T>, tl: &EmbeddingVector<T>) -> Result<T, MetricError> {
    Ok(T::one() - cosine(en, tl)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    CulturalFluency,
    Deviation,
    AnswerConsistency,
    ExplanationConsistency,
    LinguisticAdaptation,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::CulturalFluency,
        Metric::Deviation,
        Metric::AnswerConsistency,
        Metric::ExplanationConsistency,
        Metric::LinguisticAdaptation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::CulturalFluency => "cultural_fluency",
            Metric::Deviation => "deviation",
            Metric::AnswerConsistency => "answer_consistency",
            Metric::ExplanationConsistency => "explanation_consistency",
            Metric::LinguisticAdaptation => "linguistic_adaptation",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Metric::CulturalFluency => "Cultural Fluency",
            Metric::Deviation => "Deviation",
            Metric::AnswerConsistency => "Answer Consistency",
            Metric::ExplanationConsistency => "Explanation Consistency",
            Metric::LinguisticAdaptation => "Linguistic Adaptation",
        }
    }

    /// Metrics scored per question language (everything but adaptation).
    pub fn has_language(self) -> bool {
        self != Metric::LinguisticAdaptation
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL.into_iter().find(|m| m.name() == s.trim()).ok_or_else(|| format!("unknown metric {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceScore<T = f64> {
    pub key: RecordKey,
    pub cultural_fluency: T,
    pub deviation: T,
    pub depth: T,
    pub alignment: T,
    /// The explanation embedded as the degenerate zero vector.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupScore<T = f64> {
    pub key: GroupKey,
    pub answer_consistency: T,
    pub explanation_consistency: T,
    pub unique_answers: usize,
    /// At least one run embedded as the zero vector (its pairs scored 0).
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScore<T = f64> {
    pub key: PairKey,
    pub linguistic_adaptation: T,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScoreSet<T = f64> {
    pub instances: Vec<InstanceScore<T>>,
    pub groups: Vec<GroupScore<T>>,
    pub pairs: Vec<PairScore<T>>,
    /// Groups with fewer than R runs, left unscored.
    pub skipped_groups: usize,
    /// Records without a counterpart in the other question language.
    pub unpaired_records: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoringConfig {
    pub lambda: f64,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        Self { lambda: DEFAULT_LAMBDA }
    }
}

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("no cultural vector for culture {0}")]
    MissingCulturalVector(Culture),
    #[error("cultural vector for {culture} was built with {vector_model:?}, provider is {provider_model:?}")]
    ModelMismatch { culture: Culture, vector_model: String, provider_model: String },
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error("{key}: {source}")]
    Metric { key: String, source: MetricError },
}

/// Score every record, every complete group and every bilingual pair.
///
/// Output vectors are sorted by key and independent of thread scheduling.
pub fn score_corpus(
    corpus: &EvaluationCorpus,
    cultural_vectors: &BTreeMap<Culture, CulturalVector>,
    provider: &dyn EmbeddingProvider,
    cache: &EmbeddingCache,
    lexicon: &MarkerLexicon,
    config: &ScoringConfig,
) -> Result<ScoreSet, ScoreError> {
    cultural_fluency(0.0, 0.0, config.lambda).map_err(|source| ScoreError::Metric { key: "config".into(), source })?;
    for culture in corpus.cultures() {
        let cv = cultural_vectors.get(&culture).ok_or(ScoreError::MissingCulturalVector(culture))?;
        if cv.model_id != provider.model_id() {
            return Err(ScoreError::ModelMismatch {
                culture,
                vector_model: cv.model_id.clone(),
                provider_model: provider.model_id().to_string(),
            });
        }
    }
    let records = corpus.records();
    let mut texts: Vec<&str> = Vec::with_capacity(records.len() * 2);
    texts.extend(records.iter().map(|r| r.explanation.as_str()));
    texts.extend(records.iter().map(|r| r.question_text.as_str()));
    let vectors = embed_batch(provider, cache, &texts)?;
    let (explanations, questions) = vectors.split_at(records.len());

    let instances = records
        .par_iter()
        .zip(explanations.par_iter().zip(questions))
        .map(|(r, (e, q))| {
            let wrap = |source| ScoreError::Metric { key: r.key().to_string(), source };
            let cv = &cultural_vectors[&r.culture];
            let lang = explanation_language(r.culture, r.question_language);
            let depth = depth_score(&extract_features::<f64>(&r.explanation, lang, lexicon));
            let alignment = cv.alignment(e).map_err(|e| wrap(e.into()))?;
            Ok(InstanceScore {
                key: r.key(),
                cultural_fluency: cultural_fluency(alignment, depth, config.lambda).map_err(wrap)?,
                deviation: deviation(e, q).map_err(wrap)?,
                depth,
                alignment,
                degenerate: e.is_degenerate(),
            })
        })
        .collect::<Result<Vec<_>, ScoreError>>()?;

    let index: BTreeMap<RecordKey, &CachedVector> =
        records.iter().zip(explanations).map(|(r, e)| (r.key(), e)).collect();

    let mut groups = Vec::new();
    let mut skipped_groups = 0;
    let runs = corpus.run_count() as usize;
    for (key, members) in corpus.groups() {
        if !corpus.is_complete(&members) {
            skipped_groups += 1;
            continue;
        }
        let wrap = |source| ScoreError::Metric { key: key.to_string(), source };
        let answers: Vec<&str> = members.iter().map(|r| r.answer_label.as_str()).collect();
        let embs: Vec<&EmbeddingVector<f64>> = members.iter().map(|r| index[&r.key()].as_ref()).collect();
        groups.push(GroupScore {
            answer_consistency: answer_consistency(&answers, runs).map_err(wrap)?,
            explanation_consistency: explanation_consistency(&embs).map_err(wrap)?,
            unique_answers: answers.iter().collect::<BTreeSet<_>>().len(),
            degenerate: embs.iter().any(|e| e.is_degenerate()),
            key,
        });
    }

    let pairing = pair_bilingual(corpus);
    let pairs = pairing
        .pairs
        .iter()
        .map(|p| {
            let la = linguistic_adaptation(index[&p.en.key()], index[&p.tl.key()])
                .map_err(|source| ScoreError::Metric { key: p.key().to_string(), source })?;
            Ok(PairScore { key: p.key(), linguistic_adaptation: la })
        })
        .collect::<Result<Vec<_>, ScoreError>>()?;

    Ok(ScoreSet { instances, groups, pairs, skipped_groups, unpaired_records: pairing.excluded })
}

/// One (model, culture, metric, language slice) summary; `language = None`
/// pools both question languages (or has none, for adaptation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub model: String,
    pub culture: Culture,
    pub metric: Metric,
    pub language: Option<QuestionLanguage>,
    pub n: usize,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
}

impl AggregateRow {
    pub fn slice_label(&self) -> &'static str {
        match self.language {
            Some(l) => l.code(),
            None => "ALL",
        }
    }
}

/// Values of one metric for one (model, culture), optionally restricted to a
/// question language, in key order.
pub fn metric_values(
    scores: &ScoreSet,
    model: &str,
    culture: Culture,
    metric: Metric,
    language: Option<QuestionLanguage>,
) -> Vec<f64> {
    let lang_ok = |l: QuestionLanguage| language.is_none_or(|want| want == l);
    match metric {
        Metric::CulturalFluency | Metric::Deviation => scores
            .instances
            .iter()
            .filter(|s| s.key.model == model && s.key.culture == culture && lang_ok(s.key.question_language))
            .map(|s| if metric == Metric::Deviation { s.deviation } else { s.cultural_fluency })
            .collect(),
        Metric::AnswerConsistency | Metric::ExplanationConsistency => scores
            .groups
            .iter()
            .filter(|s| s.key.model == model && s.key.culture == culture && lang_ok(s.key.question_language))
            .map(|s| if metric == Metric::AnswerConsistency { s.answer_consistency } else { s.explanation_consistency })
            .collect(),
        Metric::LinguisticAdaptation => scores
            .pairs
            .iter()
            .filter(|s| s.key.model == model && s.key.culture == culture && language.is_none())
            .map(|s| s.linguistic_adaptation)
            .collect(),
    }
}

/// Language slices reported per metric.
pub fn metric_slices(metric: Metric) -> &'static [Option<QuestionLanguage>] {
    const INSTANCE: [Option<QuestionLanguage>; 2] = [Some(QuestionLanguage::EN), Some(QuestionLanguage::TL)];
    const GROUP: [Option<QuestionLanguage>; 3] = [Some(QuestionLanguage::EN), Some(QuestionLanguage::TL), None];
    const PAIR: [Option<QuestionLanguage>; 1] = [None];
    match metric {
        Metric::CulturalFluency | Metric::Deviation => &INSTANCE,
        Metric::AnswerConsistency | Metric::ExplanationConsistency => &GROUP,
        Metric::LinguisticAdaptation => &PAIR,
    }
}

/// (model, culture) conditions present anywhere in the score set.
pub fn conditions(scores: &ScoreSet) -> BTreeSet<(String, Culture)> {
    let mut out = BTreeSet::new();
    out.extend(scores.instances.iter().map(|s| (s.key.model.clone(), s.key.culture)));
    out.extend(scores.groups.iter().map(|s| (s.key.model.clone(), s.key.culture)));
    out.extend(scores.pairs.iter().map(|s| (s.key.model.clone(), s.key.culture)));
    out
}

/// Mean, population SD and percentile-bootstrap CI per (model, culture,
/// metric, language slice), sorted by that key. Each row's bootstrap stream
/// is seeded from the configured seed and the row key, so rows do not depend
/// on each other.
pub fn aggregate(scores: &ScoreSet, ci: &BootstrapConfig) -> Vec<AggregateRow> {
    let mut cells = Vec::new();
    for (model, culture) in conditions(scores) {
        for metric in Metric::ALL {
            for &language in metric_slices(metric) {
                cells.push((model.clone(), culture, metric, language));
            }
        }
    }
    cells
        .into_par_iter()
        .map(|(model, culture, metric, language)| {
            let values = metric_values(scores, &model, culture, metric, language);
            let label = format!("{model}/{culture}/{metric}/{}", language.map(|l| l.code()).unwrap_or("ALL"));
            let interval = bootstrap_ci(&values, &ci.for_stream(&label));
            AggregateRow {
                n: values.len(),
                mean: mean(&values),
                sd: population_sd(&values),
                ci_low: interval.map(|c| c.0),
                ci_high: interval.map(|c| c.1),
                model,
                culture,
                metric,
                language,
            }
        })
        .collect()
}

fn fmt_f(x: f64) -> String {
    format!("{x}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f).unwrap_or_default()
}

/// Score tables as CSV, one writer per score type.
pub fn write_instances_csv<W: Write>(scores: &ScoreSet, w: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record([
        "model",
        "culture",
        "question_id",
        "question_language",
        "run_id",
        "cultural_fluency",
        "deviation",
        "depth",
        "alignment",
        "degenerate",
    ])?;
    for s in &scores.instances {
        let k = &s.key;
        w.write_record([
            k.model.clone(),
            k.culture.to_string(),
            k.question_id.to_string(),
            k.question_language.to_string(),
            k.run_id.to_string(),
            fmt_f(s.cultural_fluency),
            fmt_f(s.deviation),
            fmt_f(s.depth),
            fmt_f(s.alignment),
            s.degenerate.to_string(),
        ])?;
    }
    w.flush()
}

pub fn write_groups_csv<W: Write>(scores: &ScoreSet, w: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record([
        "model",
        "culture",
        "question_id",
        "question_language",
        "answer_consistency",
        "explanation_consistency",
        "unique_answers",
        "degenerate",
    ])?;
    for s in &scores.groups {
        let k = &s.key;
        w.write_record([
            k.model.clone(),
            k.culture.to_string(),
            k.question_id.to_string(),
            k.question_language.to_string(),
            fmt_f(s.answer_consistency),
            fmt_f(s.explanation_consistency),
            s.unique_answers.to_string(),
            s.degenerate.to_string(),
        ])?;
    }
    w.flush()
}

pub fn write_pairs_csv<W: Write>(scores: &ScoreSet, w: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["model", "culture", "question_id", "run_id", "linguistic_adaptation"])?;
    for s in &scores.pairs {
        let k = &s.key;
        w.write_record([
            k.model.clone(),
            k.culture.to_string(),
            k.question_id.to_string(),
            k.run_id.to_string(),
            fmt_f(s.linguistic_adaptation),
        ])?;
    }
    w.flush()
}

pub fn write_aggregates_csv<W: Write>(rows: &[AggregateRow], w: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["model", "culture", "metric", "language", "n", "mean", "sd", "ci_low", "ci_high"])?;
    for r in rows {
        w.write_record([
            r.model.clone(),
            r.culture.to_string(),
            r.metric.to_string(),
            r.slice_label().to_string(),
            r.n.to_string(),
            fmt_opt(r.mean),
            fmt_opt(r.sd),
            fmt_opt(r.ci_low),
            fmt_opt(r.ci_high),
        ])?;
    }
    w.flush()
}

/// Serialize as JSON lines (`{"type": ..., ...}` per score), the format the
/// stats stage reads back.
pub fn write_scores_jsonl<W: Write>(scores: &ScoreSet, mut w: W) -> io::Result<()> {
    #[derive(Serialize)]
    #[serde(tag = "type", rename_all = "snake_case")]
    enum Line<'a> {
        Instance(&'a InstanceScore),
        Group(&'a GroupScore),
        Pair(&'a PairScore),
        Summary { skipped_groups: usize, unpaired_records: usize },
    }
    let mut emit = |line: Line| -> io::Result<()> {
        serde_json::to_writer(&mut w, &line)?;
        w.write_all(b"\n")
    };
    emit(Line::Summary { skipped_groups: scores.skipped_groups, unpaired_records: scores.unpaired_records })?;
    scores.instances.iter().try_for_each(|s| emit(Line::Instance(s)))?;
    scores.groups.iter().try_for_each(|s| emit(Line::Group(s)))?;
    scores.pairs.iter().try_for_each(|s| emit(Line::Pair(s)))?;
    Ok(())
}

pub fn read_scores_jsonl(text: &str) -> Result<ScoreSet, String> {
    #[derive(Deserialize)]
    #[serde(tag = "type", rename_all = "snake_case")]
    enum Line {
        Instance(InstanceScore),
        Group(GroupScore),
        Pair(PairScore),
        Summary { skipped_groups: usize, unpaired_records: usize },
    }
    let mut out = ScoreSet::default();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line).map_err(|e| format!("line {}: {e}", i + 1))? {
            Line::Instance(s) => out.instances.push(s),
            Line::Group(s) => out.groups.push(s),
            Line::Pair(s) => out.pairs.push(s),
            Line::Summary { skipped_groups, unpaired_records } => {
                out.skipped_groups = skipped_groups;
                out.unpaired_records = unpaired_records;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::normalize;

    fn unit(v: &[f64]) -> EmbeddingVector<f64> {
        normalize(v).unwrap()
    }

    #[test]
    fn cf_examples() {
        assert_eq!(cultural_fluency(1.0, 1.0, 0.7).unwrap(), 1.0);
        assert_eq!(cultural_fluency(0.0, 0.0, 0.7).unwrap(), 0.0);
        assert!((cultural_fluency(0.2_f64, 0.9, 0.7).unwrap() - 0.41).abs() < 1e-12);
        assert_eq!(cultural_fluency(0.2, 0.9, 1.5), Err(MetricError::Lambda(1.5)));
        assert!(cultural_fluency(0.2, 0.9, f64::NAN).is_err());
    }

    #[test]
    fn deviation_and_adaptation_examples() {
        let x = unit(&[1.0, 0.0]);
        let y = unit(&[0.0, 1.0]);
        let nx = unit(&[-1.0, 0.0]);
        for f in [deviation::<f64>, linguistic_adaptation::<f64>] {
            assert_eq!(f(&x, &x).unwrap(), 0.0);
            assert_eq!(f(&x, &y).unwrap(), 1.0);
            assert_eq!(f(&x, &nx).unwrap(), 2.0);
        }
    }

    #[test]
    fn answer_consistency_examples() {
        assert_eq!(answer_consistency::<f64, _>(&[2, 2, 2], 3).unwrap(), 1.0);
        assert_eq!(answer_consistency::<f64, _>(&[1, 2, 3], 3).unwrap(), 0.0);
        assert_eq!(answer_consistency::<f64, _>(&[1, 1, 5], 3).unwrap(), 0.5);
        assert!(matches!(
            answer_consistency::<f64, _>(&[1, 1], 3),
            Err(MetricError::IncompleteAnswers { expected: 3, got: 2 })
        ));
        assert!(answer_consistency::<f64, _>(&[1], 1).is_err());
    }

    #[test]
    fn explanation_consistency_examples() {
        let x = unit(&[1.0, 0.0]);
        let y = unit(&[0.0, 1.0]);
        assert_eq!(explanation_consistency(&[&x, &x, &x]).unwrap(), 1.0);
        assert!((explanation_consistency(&[&x, &y, &x]).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let e = [unit(&[1.0, 0.0, 0.0]), unit(&[0.0, 1.0, 0.0]), unit(&[0.0, 0.0, 1.0])];
        assert_eq!(explanation_consistency(&[&e[0], &e[1], &e[2]]).unwrap(), 0.0);
        assert!(explanation_consistency(&[&x]).is_err());
        let z = EmbeddingVector::zero(2);
        assert!((explanation_consistency(&[&x, &x, &z]).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn metric_names_round_trip() {
        for m in Metric::ALL {
            assert_eq!(m.name().parse::<Metric>().unwrap(), m);
        }
        assert!("fluency".parse::<Metric>().is_err());
    }
}
