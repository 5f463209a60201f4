use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::{kruskal_wallis, wilcoxon_signed_rank, KruskalWallis, SignedRank};
use crate::corpus::{Culture, QuestionLanguage};
use crate::metrics::{conditions, metric_values, Metric, ScoreSet};

/// Which observations form the Kruskal–Wallis groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KwGrouping {
    /// One group per model, within each (culture, metric).
    Models,
    /// EN vs TL, within each (culture, model, metric).
    Languages,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatPlan {
    pub kw_metrics: Vec<Metric>,
    pub kw_grouping: KwGrouping,
    pub wilcoxon_metrics: Vec<Metric>,
}

impl Default for StatPlan {
    fn default() -> Self {
        Self {
            kw_metrics: Metric::ALL.to_vec(),
            kw_grouping: KwGrouping::Models,
            wilcoxon_metrics: vec![Metric::CulturalFluency, Metric::Deviation],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KwRow {
    pub culture: Culture,
    pub metric: Metric,
    /// Model name for language grouping, `None` across models.
    pub model: Option<String>,
    /// Group labels in the order of `result.group_sizes`.
    pub groups: Vec<String>,
    pub result: KruskalWallis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonRow {
    pub model: String,
    pub culture: Culture,
    pub metric: Metric,
    /// Matched EN/TL observations before dropping zero differences.
    pub n_pairs: usize,
    pub result: SignedRank,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StatReport {
    pub kruskal_wallis: Vec<KwRow>,
    pub wilcoxon: Vec<WilcoxonRow>,
    /// Plan cells that could not be tested, with the reason.
    pub notes: Vec<String>,
}

impl StatReport {
    pub fn kw_for(&self, culture: Culture, metric: Metric) -> Option<&KwRow> {
        self.kruskal_wallis.iter().find(|r| r.culture == culture && r.metric == metric && r.model.is_none())
    }

    pub fn wilcoxon_for(&self, model: &str, culture: Culture, metric: Metric) -> Option<&WilcoxonRow> {
        self.wilcoxon.iter().find(|r| r.model == model && r.culture == culture && r.metric == metric)
    }
}

/// EN/TL observations matched by (question, run) for instance metrics or by
/// question for group metrics, as (EN, TL) tuples in key order.
fn matched_pairs(scores: &ScoreSet, model: &str, culture: Culture, metric: Metric) -> Option<Vec<(f64, f64)>> {
    let mut slots: BTreeMap<(u32, u32), [Option<f64>; 2]> = BTreeMap::new();
    let slot = |l: QuestionLanguage| if l == QuestionLanguage::EN { 0 } else { 1 };
    match metric {
        Metric::CulturalFluency | Metric::Deviation => {
            for s in scores.instances.iter().filter(|s| s.key.model == model && s.key.culture == culture) {
                let v = if metric == Metric::Deviation { s.deviation } else { s.cultural_fluency };
                slots.entry((s.key.question_id, s.key.run_id)).or_default()[slot(s.key.question_language)] = Some(v);
            }
        }
        Metric::AnswerConsistency | Metric::ExplanationConsistency => {
            for s in scores.groups.iter().filter(|s| s.key.model == model && s.key.culture == culture) {
                let v =
                    if metric == Metric::AnswerConsistency { s.answer_consistency } else { s.explanation_consistency };
                slots.entry((s.key.question_id, 0)).or_default()[slot(s.key.question_language)] = Some(v);
            }
        }
        Metric::LinguisticAdaptation => return None,
    }
    Some(slots.into_values().filter_map(|[en, tl]| Some((en?, tl?))).collect())
}

/// Run every test in `plan` over `scores`. Cells that cannot be tested are
/// skipped and explained in `notes`.
pub fn run_stat_suite(scores: &ScoreSet, plan: &StatPlan) -> StatReport {
    let mut report = StatReport::default();
    let conds = conditions(scores);
    let mut models_by_culture: BTreeMap<Culture, Vec<String>> = BTreeMap::new();
    for (model, culture) in &conds {
        models_by_culture.entry(*culture).or_default().push(model.clone());
    }

    for (&culture, models) in &models_by_culture {
        for &metric in &plan.kw_metrics {
            match plan.kw_grouping {
                KwGrouping::Models => {
                    let groups: Vec<(String, Vec<f64>)> = models
                        .iter()
                        .map(|m| (m.clone(), metric_values(scores, m, culture, metric, None)))
                        .filter(|(_, v)| !v.is_empty())
                        .collect();
                    push_kw(&mut report, culture, metric, None, groups);
                }
                KwGrouping::Languages => {
                    if !metric.has_language() {
                        report.notes.push(format!("kruskal_wallis {culture}/{metric}: metric has no language split"));
                        continue;
                    }
                    for m in models {
                        let groups = [QuestionLanguage::EN, QuestionLanguage::TL]
                            .into_iter()
                            .map(|l| (l.code().to_string(), metric_values(scores, m, culture, metric, Some(l))))
                            .filter(|(_, v)| !v.is_empty())
                            .collect();
                        push_kw(&mut report, culture, metric, Some(m.clone()), groups);
                    }
                }
            }
        }
    }

    for (model, culture) in &conds {
        for &metric in &plan.wilcoxon_metrics {
            let Some(pairs) = matched_pairs(scores, model, *culture, metric) else {
                report.notes.push(format!("wilcoxon {model}/{culture}/{metric}: metric has no EN/TL pairing"));
                continue;
            };
            if pairs.is_empty() {
                report.notes.push(format!("wilcoxon {model}/{culture}/{metric}: no matched pairs"));
                continue;
            }
            match wilcoxon_signed_rank(&pairs) {
                Ok(result) => report.wilcoxon.push(WilcoxonRow {
                    model: model.clone(),
                    culture: *culture,
                    metric,
                    n_pairs: pairs.len(),
                    result,
                }),
                Err(e) => report.notes.push(format!("wilcoxon {model}/{culture}/{metric}: {e}")),
            }
        }
    }
    report
}

fn push_kw(
    report: &mut StatReport,
    culture: Culture,
    metric: Metric,
    model: Option<String>,
    groups: Vec<(String, Vec<f64>)>,
) {
    let scope = match &model {
        Some(m) => format!("{culture}/{m}/{metric}"),
        None => format!("{culture}/{metric}"),
    };
    if groups.len() < 2 {
        report.notes.push(format!("kruskal_wallis {scope}: {} non-empty group(s), need 2", groups.len()));
        return;
    }
    let slices: Vec<&[f64]> = groups.iter().map(|(_, v)| v.as_slice()).collect();
    match kruskal_wallis(&slices) {
        Ok(result) => report.kruskal_wallis.push(KwRow {
            culture,
            metric,
            model,
            groups: groups.into_iter().map(|(g, _)| g).collect(),
            result,
        }),
        Err(e) => report.notes.push(format!("kruskal_wallis {scope}: {e}")),
    }
}

/// Columns: test, culture, scope, metric, statistic, df_or_n, p_value,
/// effect_size, effect_size_adjusted, direction.
pub fn write_stats_csv<W: Write>(report: &StatReport, w: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record([
        "test",
        "culture",
        "scope",
        "metric",
        "statistic",
        "df_or_n",
        "p_value",
        "effect_size",
        "effect_size_adjusted",
        "direction",
    ])?;
    for r in &report.kruskal_wallis {
        let scope = match &r.model {
            Some(m) => format!("{m}:{}", r.groups.join("|")),
            None => r.groups.join("|"),
        };
        w.write_record([
            "kruskal_wallis".to_string(),
            r.culture.to_string(),
            scope,
            r.metric.to_string(),
            format!("{}", r.result.h),
            r.result.df.to_string(),
            format!("{}", r.result.p_value),
            format!("{}", r.result.epsilon_squared),
            format!("{}", r.result.epsilon_squared_adjusted),
            String::new(),
        ])?;
    }
    for r in &report.wilcoxon {
        w.write_record([
            "wilcoxon_signed_rank".to_string(),
            r.culture.to_string(),
            r.model.clone(),
            r.metric.to_string(),
            format!("{}", r.result.w),
            r.result.n_effective.to_string(),
            format!("{}", r.result.p_value),
            String::new(),
            String::new(),
            r.result.direction.name().to_string(),
        ])?;
    }
    w.flush()
}
