//! Surface text features and the bounded reasoning-depth score.

use std::collections::BTreeMap;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Culture, QuestionLanguage};
use crate::scalar::{clamp, Scalar};

/// Characters that close a sentence.
pub const SENTENCE_TERMINALS: [char; 6] = ['.', '!', '?', '؟', '।', '۔'];

// Stripped from token edges before marker matching, beyond ASCII punctuation.
const EXTRA_PUNCT: &[char] = &['،', '؛', '؟', '।', '۔', '«', '»', '“', '”', '‘', '’', '¿', '¡', '…', '—', '–', '„'];

pub const DEFAULT_LEXICON: &str = include_str!("../data/lexicon.csv");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TextFeatures<T> {
    pub word_count: usize,
    pub marker_count: usize,
    pub sentence_count: usize,
    /// sentence_count / word_count, 0 for empty text.
    pub sentence_word_ratio: T,
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("lexicon row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("lexicon missing column {0:?}")]
    MissingColumn(&'static str),
}

/// Reasoning markers per language code (`EN`, `AR`, `BN`, `SP`).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MarkerLexicon {
    // markers pre-tokenized, longest first
    markers: BTreeMap<String, Vec<Vec<String>>>,
}

fn is_edge_punct(c: char) -> bool {
    c.is_ascii_punctuation() || EXTRA_PUNCT.contains(&c)
}

fn match_token(raw: &str) -> String {
    raw.trim_matches(is_edge_punct).to_lowercase()
}

impl MarkerLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn default_lexicon() -> Self {
        Self::parse(DEFAULT_LEXICON).expect("bundled lexicon parses")
    }

    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        let text = std::fs::read_to_string(path).map_err(|source| LexiconError::Io { path: path.into(), source })?;
        Self::parse(&text)
    }

    /// Parse a `language,marker` table.
    pub fn parse(text: &str) -> Result<Self, LexiconError> {
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let headers: Vec<String> = rdr
            .headers()
            .map_err(|e| LexiconError::Row { row: 1, message: e.to_string() })?
            .iter()
            .map(|h| h.trim().trim_start_matches('\u{feff}').to_ascii_lowercase())
            .collect();
        let col = |name: &'static str| headers.iter().position(|h| h == name).ok_or(LexiconError::MissingColumn(name));
        let (lang_col, marker_col) = (col("language")?, col("marker")?);
        let mut lex = Self::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| LexiconError::Row { row: 0, message: e.to_string() })?;
            let row = rec.position().map(|p| p.line() as usize).unwrap_or(0);
            let lang = rec.get(lang_col).unwrap_or("").trim();
            let marker = rec.get(marker_col).unwrap_or("").trim();
            if lang.is_empty() {
                return Err(LexiconError::Row { row, message: "empty language".into() });
            }
            if !lex.add(lang, marker) {
                return Err(LexiconError::Row { row, message: "empty marker".into() });
            }
        }
        Ok(lex)
    }

    /// Add a marker; returns false (and adds nothing) for an empty marker.
    pub fn add(&mut self, language: &str, marker: &str) -> bool {
        let tokens: Vec<String> = marker.split_whitespace().map(match_token).filter(|t| !t.is_empty()).collect();
        let entry = self.markers.entry(language.trim().to_ascii_uppercase()).or_default();
        if tokens.is_empty() {
            return false;
        }
        if !entry.contains(&tokens) {
            entry.push(tokens);
            entry.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        }
        true
    }

    pub fn languages(&self) -> impl Iterator<Item = &str> {
        self.markers.keys().map(String::as_str)
    }

    pub fn markers(&self, language: &str) -> &[Vec<String>] {
        self.markers.get(&language.to_ascii_uppercase()).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Non-overlapping marker occurrences on word boundaries, longest match first.
    pub fn count_markers(&self, text: &str, language: &str) -> usize {
        let markers = self.markers(language);
        if markers.is_empty() {
            return 0;
        }
        let tokens: Vec<String> = text.split_whitespace().map(match_token).collect();
        let mut count = 0;
        let mut i = 0;
        while i < tokens.len() {
            let hit =
                markers.iter().find(|m| i + m.len() <= tokens.len() && tokens[i..i + m.len()].iter().eq(m.iter()));
            match hit {
                Some(m) => {
                    count += 1;
                    i += m.len();
                }
                None => i += 1,
            }
        }
        count
    }
}

/// Lexicon language of an explanation: English for EN questions, otherwise
/// the culture's own language.
pub fn explanation_language(culture: Culture, question_language: QuestionLanguage) -> &'static str {
    match question_language {
        QuestionLanguage::EN => "EN",
        QuestionLanguage::TL => culture.code(),
    }
}

/// Sentences are maximal stretches of text closed by a run of terminal
/// punctuation followed by whitespace or the end of the text; an unterminated
/// trailing stretch counts too. Non-empty text has at least one sentence.
pub fn count_sentences(text: &str) -> usize {
    let mut count = 0;
    let mut in_content = false;
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if SENTENCE_TERMINALS.contains(&c) {
            while chars.peek().is_some_and(|n| SENTENCE_TERMINALS.contains(n)) {
                chars.next();
            }
            let at_boundary = chars.peek().is_none_or(|n| n.is_whitespace());
            if at_boundary && in_content {
                count += 1;
                in_content = false;
            } else if !at_boundary {
                in_content = true;
            }
        } else if !c.is_whitespace() {
            in_content = true;
        }
    }
    if in_content {
        count += 1;
    }
    if count == 0 && !text.trim().is_empty() {
        count = 1;
    }
    count
}

pub fn extract_features<T: Scalar>(text: &str, language: &str, lexicon: &MarkerLexicon) -> TextFeatures<T> {
    let word_count = text.split_whitespace().count();
    let sentence_count = if word_count == 0 { 0 } else { count_sentences(text) };
    let sentence_word_ratio =
        if word_count == 0 { T::zero() } else { T::from_count(sentence_count) / T::from_count(word_count) };
    TextFeatures {
        word_count,
        marker_count: lexicon.count_markers(text, language),
        sentence_count,
        sentence_word_ratio,
    }
}

/// Word count at which the length component saturates.
pub const LENGTH_SATURATION: f64 = 50.0;
/// Marker count at which the reasoning component saturates.
pub const MARKER_SATURATION: f64 = 3.0;
/// Scale of the sentence-ratio component.
pub const SYNTAX_SCALE: f64 = 0.1;

/// Component values behind a depth score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthComponents<T> {
    pub length: T,
    pub reasoning: T,
    pub syntax: T,
}

pub fn depth_components<T: Scalar>(f: &TextFeatures<T>) -> DepthComponents<T> {
    let one = T::one();
    let length = (one + T::from_count(f.word_count)).ln() / (one + T::lit(LENGTH_SATURATION)).ln();
    let reasoning = (T::from_count(f.marker_count) / T::lit(MARKER_SATURATION)).min(one);
    let ratio = f.sentence_word_ratio.max(T::zero());
    let syntax = one - (-ratio / T::lit(SYNTAX_SCALE)).exp();
    DepthComponents { length: clamp(length, T::zero(), one), reasoning, syntax }
}

/// d = 0.4·length + 0.4·reasoning + 0.2·syntax, in [0, 1].
pub fn depth_score<T: Scalar>(f: &TextFeatures<T>) -> T {
    let c = depth_components(f);
    let d = T::lit(0.4) * c.length + T::lit(0.4) * c.reasoning + T::lit(0.2) * c.syntax;
    clamp(d, T::zero(), T::one())
}
