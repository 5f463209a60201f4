//! Depth features and scores against `data/depth_table.json`, written by
//! `oracles/depth_table.py`.

use craft_core::depth::{count_sentences, depth_score, extract_features, MarkerLexicon};
use serde::Deserialize;

#[derive(Deserialize)]
struct Row {
    language: String,
    text: String,
    words: usize,
    markers: usize,
    sentences: usize,
    depth: String,
}

fn table() -> Vec<Row> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/depth_table.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn features_and_scores_match_reference() {
    let lex = MarkerLexicon::default_lexicon();
    let rows = table();
    assert_eq!(rows.len(), 10);
    for (i, row) in rows.iter().enumerate() {
        let f = extract_features::<f64>(&row.text, &row.language, &lex);
        assert_eq!(f.word_count, row.words, "row {i} words");
        assert_eq!(f.marker_count, row.markers, "row {i} markers");
        assert_eq!(f.sentence_count, row.sentences, "row {i} sentences");
        let expected: f64 = row.depth.parse().unwrap();
        let d = depth_score(&f);
        assert!((d - expected).abs() <= 1e-9, "row {i}: {d} vs {expected}");
    }
}

#[test]
fn single_precision_agrees_loosely() {
    let lex = MarkerLexicon::default_lexicon();
    for (i, row) in table().iter().enumerate() {
        let d = depth_score(&extract_features::<f32>(&row.text, &row.language, &lex));
        assert!((d as f64 - row.depth.parse::<f64>().unwrap()).abs() <= 1e-5, "row {i}");
    }
}

#[test]
fn sentence_edge_cases() {
    assert_eq!(count_sentences("..."), 1);
    assert_eq!(count_sentences("   "), 0);
    assert_eq!(count_sentences("a. . b"), 2);
    assert_eq!(count_sentences("v3.2 is out"), 1);
}
