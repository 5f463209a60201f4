//! Deterministic synthetic corpora and matching hashing-encoder vector files.
//!
//! Nothing here resembles real model output; the generators exist to
//! exercise the pipeline at realistic scale and to build fixtures with a
//! known direction of effect.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::corpus::{Culture, EvaluationCorpus, QuestionLanguage, ResponseRecord};
use crate::culture::Inventory;
use crate::depth::{explanation_language, MarkerLexicon};
use crate::embedding::{content_digest, format_vector_file, HashingProvider};

/// How a simulated model writes.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelProfile {
    pub name: String,
    /// Chance that a TL sentence mentions a cultural phrase.
    pub tl_culture_rate: f64,
    /// Chance that an EN sentence mentions a cultural phrase (English surface).
    pub en_culture_rate: f64,
    /// Chance that a sentence opens with a reasoning marker.
    pub marker_rate: f64,
    /// Chance that a run keeps the question's modal answer.
    pub stickiness: f64,
    pub max_sentences: usize,
}

impl ModelProfile {
    pub fn new(name: &str, tl_culture_rate: f64, en_culture_rate: f64, marker_rate: f64, stickiness: f64) -> Self {
        Self { name: name.into(), tl_culture_rate, en_culture_rate, marker_rate, stickiness, max_sentences: 4 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub seed: u64,
    pub questions: u32,
    pub runs: u32,
    pub conditions: Vec<(Culture, Vec<ModelProfile>)>,
}

impl SyntheticSpec {
    /// Arabic with three models, Bengali and Spanish with two; 50 questions
    /// in both languages, three runs: 2,100 records.
    pub fn full_scale(seed: u64) -> Self {
        let gpt = ModelProfile::new("GPT", 0.35, 0.30, 0.50, 0.70);
        let deepseek = ModelProfile::new("DeepSeek", 0.45, 0.25, 0.60, 0.75);
        let fanar = ModelProfile::new("FANAR", 0.60, 0.20, 0.40, 0.60);
        Self {
            seed,
            questions: 50,
            runs: 3,
            conditions: vec![
                (Culture::AR, vec![gpt.clone(), deepseek.clone(), fanar]),
                (Culture::BN, vec![gpt.clone(), deepseek.clone()]),
                (Culture::SP, vec![gpt, deepseek]),
            ],
        }
    }

    /// A small two-model Spanish corpus for demos.
    pub fn demo(seed: u64) -> Self {
        Self {
            seed,
            questions: 6,
            runs: 3,
            conditions: vec![(
                Culture::SP,
                vec![
                    ModelProfile::new("GPT", 0.35, 0.30, 0.50, 0.70),
                    ModelProfile::new("DeepSeek", 0.45, 0.25, 0.60, 0.75),
                ],
            )],
        }
    }

    pub fn record_count(&self) -> usize {
        let models: usize = self.conditions.iter().map(|(_, m)| m.len()).sum();
        models * self.questions as usize * 2 * self.runs as usize
    }
}

const FILLER_EN: &[&str] = &[
    "this",
    "matters",
    "in",
    "society",
    "people",
    "should",
    "respect",
    "shared",
    "values",
    "daily",
    "life",
    "work",
    "friends",
    "opinion",
    "personal",
    "often",
    "sometimes",
    "very",
    "choice",
    "community",
];
const FILLER_AR: &[&str] = &[
    "هذا",
    "الأمر",
    "مهم",
    "في",
    "المجتمع",
    "الناس",
    "يجب",
    "أن",
    "نحترم",
    "القيم",
    "الحياة",
    "اليومية",
    "العمل",
    "الأصدقاء",
    "الرأي",
    "الشخصي",
    "غالبا",
    "أحيانا",
    "كثيرا",
    "جدا",
];
const FILLER_BN: &[&str] = &[
    "এটি",
    "বিষয়",
    "গুরুত্বপূর্ণ",
    "সমাজে",
    "মানুষ",
    "উচিত",
    "আমাদের",
    "মূল্যবোধ",
    "জীবনে",
    "প্রতিদিন",
    "কাজ",
    "বন্ধু",
    "মতামত",
    "ব্যক্তিগত",
    "প্রায়ই",
    "কখনও",
    "অনেক",
    "খুব",
    "সময়",
    "সবাই",
];
const FILLER_SP: &[&str] = &[
    "esto",
    "es",
    "importante",
    "en",
    "la",
    "sociedad",
    "las",
    "personas",
    "deben",
    "respetar",
    "los",
    "valores",
    "vida",
    "diaria",
    "trabajo",
    "amigos",
    "opinión",
    "personal",
    "muy",
    "comunidad",
];

/// Vocabulary with no overlap with any inventory surface or question text.
const UNRELATED_EN: &[&str] = &[
    "weather", "forecast", "rain", "tomorrow", "morning", "train", "schedule", "delayed", "station", "coffee",
    "machine", "broken", "office", "printer", "paper", "jammed", "battery", "charger", "window", "cloudy",
];

fn filler(language: &str) -> &'static [&'static str] {
    match language {
        "AR" => FILLER_AR,
        "BN" => FILLER_BN,
        "SP" => FILLER_SP,
        _ => FILLER_EN,
    }
}

fn terminal(language: &str) -> &'static str {
    match language {
        "BN" => "।",
        _ => ".",
    }
}

fn question_text(culture: Culture, lang: QuestionLanguage, q: u32, topic_en: &str, topic_tl: &str) -> String {
    match (lang, culture) {
        (QuestionLanguage::EN, _) => format!(
            "Question {q}: How important is {} in your daily life? Answer with a number from 1 to 5 and explain your answer.",
            topic_en.to_lowercase()
        ),
        (QuestionLanguage::TL, Culture::AR) => {
            format!("السؤال {q}: ما مدى أهمية {topic_tl} في حياتك اليومية؟ أجب برقم من 1 إلى 5 واشرح إجابتك.")
        }
        (QuestionLanguage::TL, Culture::BN) => format!(
            "প্রশ্ন {q}: আপনার দৈনন্দিন জীবনে {topic_tl} কতটা গুরুত্বপূর্ণ? ১ থেকে ৫ এর মধ্যে একটি সংখ্যা দিয়ে উত্তর দিন এবং ব্যাখ্যা করুন।"
        ),
        (QuestionLanguage::TL, Culture::SP) => format!(
            "Pregunta {q}: ¿Qué tan importante es {topic_tl} en su vida diaria? Responda con un número del 1 al 5 y explique su respuesta."
        ),
    }
}

fn stream(seed: u64, label: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(label.as_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}

fn pick<'a, R: Rng>(rng: &mut R, items: &'a [&'a str]) -> &'a str {
    items[rng.random_range(0..items.len())]
}

struct Topic {
    en: String,
    surfaces: Vec<(Culture, String)>,
}

fn topics(inventory: &Inventory) -> Vec<Topic> {
    let named: Vec<_> = inventory.phrases().iter().filter(|p| !p.concept_id.starts_with("placeholder")).collect();
    let source = if named.is_empty() { inventory.phrases().iter().collect() } else { named };
    source
        .into_iter()
        .map(|p| Topic {
            en: p.surface_en.clone().unwrap_or_else(|| p.concept_id.replace('_', " ")),
            surfaces: p.surfaces.iter().map(|(c, s)| (*c, s.clone())).collect(),
        })
        .collect()
}

impl Topic {
    fn surface(&self, culture: Culture) -> &str {
        self.surfaces.iter().find(|(c, _)| *c == culture).map(|(_, s)| s.as_str()).unwrap_or(&self.en)
    }
}

/// Generate the corpus described by `spec`. Cultural phrases come from
/// `inventory`, reasoning markers from `lexicon`.
pub fn generate_corpus(spec: &SyntheticSpec, inventory: &Inventory, lexicon: &MarkerLexicon) -> EvaluationCorpus {
    let topics = topics(inventory);
    let mut records = Vec::with_capacity(spec.record_count());
    for (culture, models) in &spec.conditions {
        let culture = *culture;
        let phrases_tl: Vec<&str> = inventory.phrases().iter().filter_map(|p| p.surface(culture)).collect();
        let phrases_en: Vec<&str> = inventory.phrases().iter().filter_map(|p| p.surface_en.as_deref()).collect();
        for model in models {
            for q in 1..=spec.questions {
                let topic = &topics[(q as usize - 1) % topics.len()];
                for lang in [QuestionLanguage::EN, QuestionLanguage::TL] {
                    let text_lang = explanation_language(culture, lang);
                    let qtext = question_text(culture, lang, q, &topic.en, topic.surface(culture));
                    let mut modal = stream(spec.seed, &format!("{}/{culture}/{q}/{lang}/modal", model.name));
                    let modal_answer: u32 = modal.random_range(1..=5);
                    let markers: Vec<String> = lexicon.markers(text_lang).iter().map(|m| m.join(" ")).collect();
                    let (phrases, rate) = match lang {
                        QuestionLanguage::EN => (&phrases_en, model.en_culture_rate),
                        QuestionLanguage::TL => (&phrases_tl, model.tl_culture_rate),
                    };
                    for run in 1..=spec.runs {
                        let mut rng = stream(spec.seed, &format!("{}/{culture}/{q}/{lang}/{run}", model.name));
                        let answer =
                            if rng.random_bool(model.stickiness) { modal_answer } else { rng.random_range(1..=5) };
                        let mut sentences = Vec::new();
                        for _ in 0..rng.random_range(1..=model.max_sentences.max(1)) {
                            let mut words: Vec<String> = Vec::new();
                            if !markers.is_empty() && rng.random_bool(model.marker_rate) {
                                words.push(markers[rng.random_range(0..markers.len())].clone());
                            }
                            for _ in 0..rng.random_range(4..=10) {
                                words.push(pick(&mut rng, filler(text_lang)).to_string());
                            }
                            if !phrases.is_empty() && rng.random_bool(rate) {
                                let at = rng.random_range(0..=words.len());
                                words.insert(at, phrases[rng.random_range(0..phrases.len())].to_string());
                            }
                            sentences.push(format!("{}{}", words.join(" "), terminal(text_lang)));
                        }
                        records.push(ResponseRecord {
                            question_id: q,
                            culture,
                            question_language: lang,
                            run_id: run,
                            question_text: qtext.clone(),
                            answer_label: answer.to_string(),
                            explanation: sentences.join(" "),
                            model_name: model.name.clone(),
                        });
                    }
                }
            }
        }
    }
    EvaluationCorpus::new(records, spec.runs).expect("generated keys are unique and in range")
}

/// One model whose TL explanations are built from the culture's inventory
/// phrases and whose EN explanations use vocabulary unrelated to the
/// inventory. Both sides get the same sentence shape and reasoning-marker
/// count, so depth is matched and only alignment differs.
pub fn directional_corpus(
    inventory: &Inventory,
    lexicon: &MarkerLexicon,
    culture: Culture,
    questions: u32,
    runs: u32,
    seed: u64,
) -> EvaluationCorpus {
    let topics = topics(inventory);
    let phrases: Vec<&str> = inventory.phrases().iter().filter_map(|p| p.surface(culture)).collect();
    let tl_lang = explanation_language(culture, QuestionLanguage::TL);
    let marker_of = |lang: &str| lexicon.markers(lang).first().map(|m| m.join(" "));
    let mut records = Vec::new();
    for q in 1..=questions {
        let topic = &topics[(q as usize - 1) % topics.len()];
        for run in 1..=runs {
            let mut rng = stream(seed, &format!("directional/{culture}/{q}/{run}"));
            let n_sent = rng.random_range(2..=3);
            let mut tl = Vec::new();
            let mut en = Vec::new();
            for _ in 0..n_sent {
                let k = rng.random_range(3..=5);
                let mut tl_words: Vec<&str> = Vec::new();
                let mut en_words: Vec<&str> = Vec::new();
                for _ in 0..k {
                    tl_words.push(phrases[rng.random_range(0..phrases.len())]);
                    en_words.push(pick(&mut rng, UNRELATED_EN));
                    en_words.push(pick(&mut rng, UNRELATED_EN));
                }
                let tl_marker = marker_of(tl_lang);
                let en_marker = marker_of("EN");
                let tl_s = match &tl_marker {
                    Some(m) => format!("{m} {}", tl_words.join(" ")),
                    None => tl_words.join(" "),
                };
                let en_s = match &en_marker {
                    Some(m) => format!("{m} {}", en_words.join(" ")),
                    None => en_words.join(" "),
                };
                tl.push(format!("{tl_s}{}", terminal(tl_lang)));
                en.push(format!("{en_s}."));
            }
            let answer = rng.random_range(1..=5u32).to_string();
            for (lang, text) in [(QuestionLanguage::EN, en.join(" ")), (QuestionLanguage::TL, tl.join(" "))] {
                records.push(ResponseRecord {
                    question_id: q,
                    culture,
                    question_language: lang,
                    run_id: run,
                    question_text: question_text(culture, lang, q, &topic.en, topic.surface(culture)),
                    answer_label: answer.clone(),
                    explanation: text,
                    model_name: "probe".into(),
                });
            }
        }
    }
    EvaluationCorpus::new(records, runs).expect("generated keys are unique and in range")
}

/// Every text the pipeline embeds for `corpus`: explanations, question texts
/// and the inventory surfaces of the corpus cultures. Sorted, deduplicated.
pub fn embedded_texts(corpus: &EvaluationCorpus, inventory: &Inventory) -> Vec<String> {
    let cultures = corpus.cultures();
    let mut out: BTreeSet<String> = BTreeSet::new();
    for r in corpus.records() {
        out.insert(r.explanation.clone());
        out.insert(r.question_text.clone());
    }
    for p in inventory.phrases() {
        for c in &cultures {
            if let Some(s) = p.surface(*c) {
                out.insert(s.to_string());
            }
        }
    }
    out.into_iter().collect()
}

/// Vector-file text holding the hashing encoder's vector for each text.
/// Empty texts are skipped, matching a provider that rejects them.
pub fn vector_file_for(provider: &HashingProvider, texts: &[String]) -> String {
    let model_id = crate::embedding::EmbeddingProvider::model_id(provider);
    let entries: Vec<(String, Vec<f64>)> = texts
        .iter()
        .filter(|t| !t.trim().is_empty())
        .map(|t| (content_digest(model_id, t), provider.embed_text(t)))
        .collect();
    format_vector_file(entries.iter().map(|(d, v)| (d.as_str(), v.as_slice())))
}
