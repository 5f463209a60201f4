use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::{Culture, QuestionLanguage};
use crate::metrics::{AggregateRow, Metric};

/// Value given to every model on an axis where all models tie.
pub const DEGENERATE_AXIS_VALUE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadarAxis {
    /// TL mean.
    CulturalFluency,
    /// TL mean.
    Deviation,
    /// Mean of pooled answer and explanation consistency.
    Consistency,
    LinguisticAdaptation,
}

impl RadarAxis {
    pub const ALL: [RadarAxis; 4] =
        [RadarAxis::CulturalFluency, RadarAxis::Deviation, RadarAxis::Consistency, RadarAxis::LinguisticAdaptation];

    pub fn label(self) -> &'static str {
        match self {
            RadarAxis::CulturalFluency => "Cultural Fluency",
            RadarAxis::Deviation => "Deviation",
            RadarAxis::Consistency => "Consistency",
            RadarAxis::LinguisticAdaptation => "Linguistic Adaptation",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisFlag {
    /// All models share one value; each is drawn at 0.5.
    Degenerate,
    /// Fewer than two models; the raw value is drawn.
    SingleModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisPoint {
    pub raw: f64,
    pub normalized: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisData {
    pub axis: RadarAxis,
    /// Normalization constants: normalized = (raw − min) / (max − min).
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub flag: Option<AxisFlag>,
    pub values: BTreeMap<String, AxisPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CultureRadar {
    pub culture: Culture,
    pub models: Vec<String>,
    pub axes: Vec<AxisData>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RadarData {
    pub cultures: Vec<CultureRadar>,
}

fn lookup(
    rows: &[AggregateRow],
    model: &str,
    culture: Culture,
    metric: Metric,
    lang: Option<QuestionLanguage>,
) -> Option<f64> {
    rows.iter().find(|r| r.model == model && r.culture == culture && r.metric == metric && r.language == lang)?.mean
}

fn raw_value(rows: &[AggregateRow], model: &str, culture: Culture, axis: RadarAxis) -> Option<f64> {
    let tl = Some(QuestionLanguage::TL);
    match axis {
        RadarAxis::CulturalFluency => lookup(rows, model, culture, Metric::CulturalFluency, tl),
        RadarAxis::Deviation => lookup(rows, model, culture, Metric::Deviation, tl),
        RadarAxis::Consistency => {
            let ac = lookup(rows, model, culture, Metric::AnswerConsistency, None)?;
            let ec = lookup(rows, model, culture, Metric::ExplanationConsistency, None)?;
            Some((ac + ec) / 2.0)
        }
        RadarAxis::LinguisticAdaptation => lookup(rows, model, culture, Metric::LinguisticAdaptation, None),
    }
}

/// Min–max normalized radar values per (culture, axis) across models.
pub fn radar_data(rows: &[AggregateRow]) -> RadarData {
    let mut models_by_culture: BTreeMap<Culture, BTreeSet<String>> = BTreeMap::new();
    for r in rows {
        models_by_culture.entry(r.culture).or_default().insert(r.model.clone());
    }
    let cultures = models_by_culture
        .into_iter()
        .map(|(culture, models)| {
            let axes = RadarAxis::ALL
                .into_iter()
                .map(|axis| {
                    let raw: BTreeMap<String, f64> = models
                        .iter()
                        .filter_map(|m| raw_value(rows, m, culture, axis).map(|v| (m.clone(), v)))
                        .collect();
                    normalize_axis(axis, raw)
                })
                .collect();
            CultureRadar { culture, models: models.into_iter().collect(), axes }
        })
        .collect();
    RadarData { cultures }
}

fn normalize_axis(axis: RadarAxis, raw: BTreeMap<String, f64>) -> AxisData {
    let min = raw.values().copied().reduce(f64::min);
    let max = raw.values().copied().reduce(f64::max);
    let flag = match (min, max) {
        _ if raw.len() < 2 => Some(AxisFlag::SingleModel),
        (Some(lo), Some(hi)) if hi - lo <= f64::EPSILON * hi.abs().max(1.0) => Some(AxisFlag::Degenerate),
        _ => None,
    };
    let values = raw
        .into_iter()
        .map(|(m, v)| {
            let normalized = match (flag, min, max) {
                (Some(AxisFlag::SingleModel), ..) => v,
                (Some(AxisFlag::Degenerate), ..) => DEGENERATE_AXIS_VALUE,
                (None, Some(lo), Some(hi)) => ((v - lo) / (hi - lo)).clamp(0.0, 1.0),
                _ => v,
            };
            (m, AxisPoint { raw: v, normalized })
        })
        .collect();
    AxisData { axis, min, max, flag, values }
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
const PANEL: f64 = 420.0;
const RADIUS: f64 = 140.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn point(cx: f64, cy: f64, axis: usize, r: f64) -> (f64, f64) {
    let angle = -std::f64::consts::FRAC_PI_2 + axis as f64 * std::f64::consts::TAU / RadarAxis::ALL.len() as f64;
    (cx + r * angle.cos(), cy + r * angle.sin())
}

/// One radar panel per culture, four axes each, one polygon per model.
pub fn render_radar_svg(data: &RadarData) -> String {
    let panels = data.cultures.len().max(1);
    let width = PANEL * panels as f64;
    let height = PANEL + 40.0;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, radar) in data.cultures.iter().enumerate() {
        let cx = PANEL * i as f64 + PANEL / 2.0;
        let cy = PANEL / 2.0 + 20.0;
        let _ = writeln!(out, r#"<g class="panel" data-culture="{}">"#, radar.culture.code());
        let _ = writeln!(
            out,
            r#"<text x="{cx:.2}" y="20" text-anchor="middle" font-size="15" font-weight="bold">{} ({})</text>"#,
            escape(radar.culture.name()),
            radar.culture.code()
        );
        for ring in [0.25, 0.5, 0.75, 1.0] {
            let pts: Vec<String> = (0..RadarAxis::ALL.len())
                .map(|a| {
                    let (x, y) = point(cx, cy, a, RADIUS * ring);
                    format!("{x:.2},{y:.2}")
                })
                .collect();
            let _ =
                writeln!(out, r##"<polygon class="grid" points="{}" fill="none" stroke="#cccccc"/>"##, pts.join(" "));
        }
        for (a, axis) in radar.axes.iter().enumerate() {
            let (x, y) = point(cx, cy, a, RADIUS);
            let (lx, ly) = point(cx, cy, a, RADIUS + 22.0);
            let _ = writeln!(
                out,
                r##"<line class="axis" x1="{cx:.2}" y1="{cy:.2}" x2="{x:.2}" y2="{y:.2}" stroke="#888888"/>"##
            );
            let note = match axis.flag {
                Some(AxisFlag::Degenerate) => " (tied)",
                Some(AxisFlag::SingleModel) => " (raw)",
                None => "",
            };
            let _ = writeln!(
                out,
                r#"<text class="axis-label" x="{lx:.2}" y="{ly:.2}" text-anchor="middle">{}{note}</text>"#,
                escape(axis.axis.label())
            );
        }
        for (m, model) in radar.models.iter().enumerate() {
            let color = PALETTE[m % PALETTE.len()];
            let pts: Vec<String> = radar
                .axes
                .iter()
                .enumerate()
                .map(|(a, axis)| {
                    let v = axis.values.get(model).map(|p| p.normalized).unwrap_or(0.0).clamp(0.0, 1.0);
                    let (x, y) = point(cx, cy, a, RADIUS * v);
                    format!("{x:.2},{y:.2}")
                })
                .collect();
            let _ = writeln!(
                out,
                r#"<polygon class="series" data-model="{}" points="{}" fill="{color}" fill-opacity="0.15" stroke="{color}" stroke-width="2"/>"#,
                escape(model),
                pts.join(" ")
            );
            let ly = PANEL + 5.0 - 16.0 * (radar.models.len() - m) as f64;
            let lx = PANEL * i as f64 + 12.0;
            let _ = writeln!(
                out,
                r#"<rect x="{lx:.2}" y="{:.2}" width="10" height="10" fill="{color}"/><text x="{:.2}" y="{ly:.2}">{}</text>"#,
                ly - 9.0,
                lx + 14.0,
                escape(model)
            );
        }
        let _ = writeln!(out, "</g>");
    }
    out.push_str("</svg>\n");
    out
}
