use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::corpus::{Culture, QuestionLanguage};
use crate::metrics::{AggregateRow, Metric};
use crate::stats::StatReport;

pub const MISSING: &str = "n/a";

/// Three decimals, without a negative sign on values that round to zero.
pub fn fmt3(x: f64) -> String {
    let s = format!("{x:.3}");
    if s == "-0.000" {
        "0.000".to_string()
    } else {
        s
    }
}

/// `p < 0.001` below the threshold, otherwise `p = 0.xyz`.
pub fn fmt_p(p: f64) -> String {
    if p < 0.001 {
        "p < 0.001".to_string()
    } else {
        format!("p = {}", fmt3(p))
    }
}

/// Raw direction of the EN→TL change.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arrow {
    Up,
    Down,
    Flat,
}

impl Arrow {
    pub fn between(en: f64, tl: f64) -> Self {
        if tl > en {
            Arrow::Up
        } else if tl < en {
            Arrow::Down
        } else {
            Arrow::Flat
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Arrow::Up => "↑",
            Arrow::Down => "↓",
            Arrow::Flat => "",
        }
    }
}

/// Whether a higher value is better for a metric; `None` when the metric
/// carries no better/worse reading.
pub fn higher_is_better(metric: Metric) -> Option<bool> {
    match metric {
        Metric::CulturalFluency | Metric::AnswerConsistency | Metric::ExplanationConsistency => Some(true),
        Metric::Deviation => Some(false),
        Metric::LinguisticAdaptation => None,
    }
}

/// "improvement", "decline" or "no change" for an EN→TL shift, or `None` for
/// metrics without a polarity.
pub fn assessment(metric: Metric, en: f64, tl: f64) -> Option<&'static str> {
    let higher = higher_is_better(metric)?;
    Some(match Arrow::between(en, tl) {
        Arrow::Flat => "no change",
        Arrow::Up if higher => "improvement",
        Arrow::Down if !higher => "improvement",
        _ => "decline",
    })
}

/// `EN / TL arrow`, e.g. `0.330 / 0.282 ↓`.
pub fn shift_cell(en: Option<f64>, tl: Option<f64>) -> String {
    match (en, tl) {
        (Some(en), Some(tl)) => {
            let arrow = Arrow::between(en, tl).symbol();
            let base = format!("{} / {}", fmt3(en), fmt3(tl));
            if arrow.is_empty() {
                base
            } else {
                format!("{base} {arrow}")
            }
        }
        (en, tl) => format!(
            "{} / {}",
            en.map(fmt3).unwrap_or_else(|| MISSING.into()),
            tl.map(fmt3).unwrap_or_else(|| MISSING.into())
        ),
    }
}

fn ci_text(row: Option<&AggregateRow>) -> String {
    match row.and_then(|r| Some((r.ci_low?, r.ci_high?))) {
        Some((lo, hi)) => format!("[{}, {}]", fmt3(lo), fmt3(hi)),
        None => MISSING.into(),
    }
}

fn mean_sd(row: Option<&AggregateRow>) -> String {
    match row.and_then(|r| Some((r.mean?, r.sd?))) {
        Some((m, sd)) => format!("{}±{}", fmt3(m), fmt3(sd)),
        None => MISSING.into(),
    }
}

type Index<'a> = BTreeMap<(&'a str, Metric, Option<QuestionLanguage>), &'a AggregateRow>;

/// Value that decides the bold "best model" mark for a metric.
fn ranking_value(index: &Index, model: &str, metric: Metric) -> Option<f64> {
    let lang = match metric {
        Metric::CulturalFluency | Metric::Deviation => Some(QuestionLanguage::TL),
        _ => None,
    };
    index.get(&(model, metric, lang))?.mean
}

fn best_models<'a>(index: &Index, models: &[&'a str], metric: Metric) -> BTreeSet<&'a str> {
    let Some(higher) = higher_is_better(metric) else {
        return BTreeSet::new();
    };
    let scored: Vec<(&str, f64)> =
        models.iter().filter_map(|m| ranking_value(index, m, metric).map(|v| (*m, v))).collect();
    let best = scored.iter().map(|(_, v)| *v).fold(None, |acc: Option<f64>, v| {
        Some(match acc {
            None => v,
            Some(a) if higher => a.max(v),
            Some(a) => a.min(v),
        })
    });
    match best {
        Some(b) => scored.into_iter().filter(|(_, v)| *v == b).map(|(m, _)| m).collect(),
        None => BTreeSet::new(),
    }
}

/// Markdown table for one culture: EN/TL means with arrows, CIs, consistency
/// and adaptation summaries, Kruskal–Wallis footers and a per-model shift
/// table with Wilcoxon results.
pub fn render_culture_table(culture: Culture, rows: &[AggregateRow], stats: &StatReport) -> String {
    let rows: Vec<&AggregateRow> = rows.iter().filter(|r| r.culture == culture).collect();
    let models: Vec<&str> = rows.iter().map(|r| r.model.as_str()).collect::<BTreeSet<_>>().into_iter().collect();
    let index: Index = rows.iter().map(|r| ((r.model.as_str(), r.metric, r.language), *r)).collect();
    let get = |m: &str, metric: Metric, lang: Option<QuestionLanguage>| index.get(&(m, metric, lang)).copied();
    let en = Some(QuestionLanguage::EN);
    let tl = Some(QuestionLanguage::TL);

    let mut out = String::new();
    let _ = writeln!(out, "# {} ({}): EN→{} transition\n", culture.name(), culture.code(), culture.code());
    let _ = writeln!(
        out,
        "Each shift cell shows English / {} mean; ↑ and ↓ mark the raw direction of change. Bold = best model per metric.\n",
        culture.name()
    );

    let _ = write!(out, "| Metric |");
    for m in &models {
        let _ = write!(out, " {m} |");
    }
    let _ = write!(out, "\n|---|");
    for _ in &models {
        let _ = write!(out, "---|");
    }
    out.push('\n');

    let bold = |text: String, on: bool| if on { format!("**{text}**") } else { text };
    for metric in Metric::ALL {
        let best = best_models(&index, &models, metric);
        let _ = write!(out, "| {} |", metric.title());
        for m in &models {
            let cell = match metric {
                Metric::CulturalFluency | Metric::Deviation => {
                    shift_cell(get(m, metric, en).and_then(|r| r.mean), get(m, metric, tl).and_then(|r| r.mean))
                }
                _ => mean_sd(get(m, metric, None)),
            };
            let _ = write!(out, " {} |", bold(cell, best.contains(m)));
        }
        out.push('\n');
        if matches!(metric, Metric::CulturalFluency | Metric::Deviation) {
            let _ = write!(out, "| {} CI |", metric.title());
            for m in &models {
                let _ = write!(out, " {} / {} |", ci_text(get(m, metric, en)), ci_text(get(m, metric, tl)));
            }
            out.push('\n');
        }
    }

    let footers: Vec<String> = Metric::ALL
        .iter()
        .filter_map(|&metric| {
            let kw = stats.kw_for(culture, metric)?;
            Some(format!(
                "- {}: H={}, {}, ε²={} (adjusted {})",
                metric.title(),
                fmt3(kw.result.h),
                fmt_p(kw.result.p_value),
                fmt3(kw.result.epsilon_squared),
                fmt3(kw.result.epsilon_squared_adjusted)
            ))
        })
        .collect();
    if !footers.is_empty() {
        let _ = writeln!(out, "\nKruskal–Wallis across models:\n");
        for f in footers {
            let _ = writeln!(out, "{f}");
        }
    }

    let _ = writeln!(out, "\n## EN→TL shifts\n");
    let _ = writeln!(out, "| Model | Metric | EN | TL | Δ | Assessment | Wilcoxon W | n | p |");
    let _ = writeln!(out, "|---|---|---|---|---|---|---|---|---|");
    for m in &models {
        for metric in
            [Metric::CulturalFluency, Metric::Deviation, Metric::AnswerConsistency, Metric::ExplanationConsistency]
        {
            let e = get(m, metric, en).and_then(|r| r.mean);
            let t = get(m, metric, tl).and_then(|r| r.mean);
            let (delta, verdict) = match (e, t) {
                (Some(e), Some(t)) => (
                    format!("{} {}", fmt3(t - e), Arrow::between(e, t).symbol()).trim_end().to_string(),
                    assessment(metric, e, t).unwrap_or(MISSING).to_string(),
                ),
                _ => (MISSING.to_string(), MISSING.to_string()),
            };
            let (w, n, p) = match stats.wilcoxon_for(m, culture, metric) {
                Some(row) => (row.result.w.to_string(), row.result.n_effective.to_string(), fmt_p(row.result.p_value)),
                None => (MISSING.into(), MISSING.into(), MISSING.into()),
            };
            let _ = writeln!(
                out,
                "| {m} | {} | {} | {} | {delta} | {verdict} | {w} | {n} | {p} |",
                metric.title(),
                e.map(fmt3).unwrap_or_else(|| MISSING.into()),
                t.map(fmt3).unwrap_or_else(|| MISSING.into()),
            );
        }
    }
    out
}
