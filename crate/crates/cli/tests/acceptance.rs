//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Runs without the libtest harness so the lines always show.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use craft_core::corpus::Culture;
use craft_core::culture::{build_cultural_vector, Inventory, DEFAULT_INVENTORY};
use craft_core::depth::{depth_score, extract_features, MarkerLexicon, TextFeatures};
use craft_core::embedding::{cosine_raw, normalize, EmbeddingCache, EmbeddingProvider, HashingProvider, RawEmbedding};
use craft_core::metrics::{
    answer_consistency, cultural_fluency, deviation, explanation_consistency, linguistic_adaptation,
};
use craft_core::stats::{kruskal_wallis, wilcoxon_signed_rank, PValueMethod};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

const LAMBDA: f64 = 0.7;
const TIME_LIMIT: Duration = Duration::from_secs(5);

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn naive_cos(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

fn unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

#[derive(serde::Deserialize)]
struct DepthRow {
    language: String,
    text: String,
    depth: String,
}

fn formula_suite() -> Outcome {
    let start = Instant::now();

    let alphabet = ["a", "b", "c"];
    let mut triples = 0;
    for x in alphabet {
        for y in alphabet {
            for z in alphabet {
                let answers = [x, y, z];
                let expected = match answers.iter().collect::<BTreeSet<_>>().len() {
                    1 => 1.0,
                    2 => 0.5,
                    _ => 0.0,
                };
                let got: f64 = answer_consistency(&answers, 3).map_err(|e| e.to_string())?;
                check(got == expected, format!("AC{answers:?} = {got}, expected {expected}"))?;
                triples += 1;
            }
        }
    }

    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data/depth_table.json");
    let rows: Vec<DepthRow> =
        serde_json::from_str(&fs::read_to_string(path).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let lex = MarkerLexicon::default_lexicon();
    let mut worst_depth: f64 = 0.0;
    for row in &rows {
        let d = depth_score(&extract_features::<f64>(&row.text, &row.language, &lex));
        worst_depth = worst_depth.max((d - row.depth.parse::<f64>().unwrap()).abs());
    }
    check(rows.len() == 10 && worst_depth <= 1e-9, format!("depth table error {worst_depth:e}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let dim = rng.random_range(2..128);
        let [e, q, c, e2, e3, tl] = std::array::from_fn(|_| unit(&mut rng, dim));
        let c_raw: Vec<f64> = c.iter().map(|x| x * rng.random_range(0.1..2.0)).collect();
        let d = rng.random_range(0.0..1.0);
        let ne = normalize(&e).unwrap();
        let [nq, n2, n3, ntl] = [&q, &e2, &e3, &tl].map(|v| normalize(v).unwrap());

        let cf = cultural_fluency(cosine_raw(&ne, &c_raw).unwrap(), d, LAMBDA).unwrap();
        let cf_ref = LAMBDA * naive_cos(&e, &c_raw) + (1.0 - LAMBDA) * d;
        let dev_ref = 1.0 - naive_cos(&e, &q);
        let ec_ref = (naive_cos(&e, &e2) + naive_cos(&e, &e3) + naive_cos(&e2, &e3)) / 3.0;
        let la_ref = 1.0 - naive_cos(&e, &tl);
        let errs = [
            cf - cf_ref,
            deviation(&ne, &nq).unwrap() - dev_ref,
            explanation_consistency(&[&ne, &n2, &n3]).unwrap() - ec_ref,
            linguistic_adaptation(&ne, &ntl).unwrap() - la_ref,
        ];
        worst = errs.iter().fold(worst, |m, x| m.max(x.abs()));
    }
    check(worst <= 1e-9, format!("vector metrics error {worst:e}"))?;
    let elapsed = start.elapsed();
    check(elapsed < TIME_LIMIT, format!("took {elapsed:?}"))?;
    Ok(format!(
        "{triples} answer triples exact, depth table max err {worst_depth:.1e}, 1000 vector cases max err {worst:.1e}, {:.2}s",
        elapsed.as_secs_f64()
    ))
}

fn random_text(rng: &mut ChaCha8Rng) -> (String, &'static str) {
    const WORDS: [&str; 14] = [
        "because",
        "therefore",
        "family",
        "honor",
        "so",
        "porque",
        "lo",
        "tanto",
        "কারণ",
        "তাই",
        "لأن",
        "لذلك",
        "3.5",
        "respect",
    ];
    const ENDS: [&str; 6] = ["", ".", "!", "?", "...", "।"];
    let len = rng.random_range(0..80);
    let mut text = String::new();
    for _ in 0..len {
        text.push_str(WORDS[rng.random_range(0..WORDS.len())]);
        text.push_str(ENDS[rng.random_range(0..ENDS.len())]);
        text.push(' ');
    }
    let lang = ["EN", "AR", "BN", "SP"][rng.random_range(0..4)];
    (text, lang)
}

fn raw_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    if rng.random_bool(0.02) {
        return vec![0.0; dim];
    }
    let scale = 10f64.powi(rng.random_range(-6..6));
    (0..dim).map(|_| rng.random_range(-1.0..1.0) * scale).collect()
}

fn range_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let lex = MarkerLexicon::default_lexicon();
    let mut violations = Vec::new();
    let mut note = |name: &str, value: f64, lo: f64, hi: f64| {
        if !(lo..=hi).contains(&value) {
            violations.push(format!("{name}={value}"));
        }
    };
    for _ in 0..10_000 {
        let dim = rng.random_range(2..64);
        let [e, q, c, e2, e3, tl] = std::array::from_fn(|_| raw_vector(&mut rng, dim));
        let [ne, nq, n2, n3, ntl] = [&e, &q, &e2, &e3, &tl].map(|v| normalize(v).unwrap());
        let (text, lang) = random_text(&mut rng);
        let d = depth_score(&extract_features::<f64>(&text, lang, &lex));
        let synthetic = TextFeatures::<f64> {
            word_count: rng.random_range(0..10_000),
            marker_count: rng.random_range(0..50),
            sentence_count: rng.random_range(0..500),
            sentence_word_ratio: rng.random_range(0.0..2.0),
        };
        let d2 = depth_score(&synthetic);
        let align = cosine_raw(&ne, &c).unwrap();
        let runs = rng.random_range(2..7);
        let answers: Vec<u8> = (0..runs).map(|_| rng.random_range(0..4)).collect();

        note("d", d, 0.0, 1.0);
        note("d", d2, 0.0, 1.0);
        note("CF", cultural_fluency(align, d, LAMBDA).unwrap(), -0.7, 1.0);
        note("CF", cultural_fluency(align, d2, LAMBDA).unwrap(), -0.7, 1.0);
        note("Dev", deviation(&ne, &nq).unwrap(), 0.0, 2.0);
        note("LA", linguistic_adaptation(&ne, &ntl).unwrap(), 0.0, 2.0);
        note("EC", explanation_consistency(&[&ne, &n2, &n3]).unwrap(), -1.0, 1.0);
        note("AC", answer_consistency::<f64, _>(&answers, runs).unwrap(), 0.0, 1.0);
    }
    check(violations.is_empty(), format!("{} violations, e.g. {:?}", violations.len(), violations.first()))?;
    Ok("10000 randomized inputs, 0 violations".into())
}

fn doubled(inventory: &Inventory) -> Inventory {
    let phrases = inventory
        .phrases()
        .iter()
        .cloned()
        .map(|mut p| {
            p.weight *= 2;
            p
        })
        .collect();
    Inventory::new(phrases, inventory.cultures().clone())
}

fn cultural_vector_properties() -> Outcome {
    let provider = HashingProvider::new(256);
    let cache = EmbeddingCache::new();
    let shipped = Inventory::default_inventory();
    let twice = doubled(&shipped);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (header, body) = DEFAULT_INVENTORY.split_once('\n').unwrap();
    let mut rows: Vec<&str> = body.lines().filter(|l| !l.trim().is_empty()).collect();
    let mut worst_weight: f64 = 0.0;
    let mut worst_scale: f64 = 0.0;
    let probes: Vec<String> =
        shipped.phrases().iter().flat_map(|p| p.surfaces.values().cloned().chain(p.surface_en.clone())).collect();
    let probe_vectors: Vec<_> = probes
        .iter()
        .map(|t| match &provider.embed(&[t]).unwrap()[0] {
            RawEmbedding::Vector(v) => v.clone(),
            RawEmbedding::Rejected => unreachable!(),
        })
        .collect();

    for culture in Culture::ALL {
        let base = build_cultural_vector(&shipped, culture, &provider, &cache).map_err(|e| e.to_string())?;
        let heavy = build_cultural_vector(&twice, culture, &provider, &cache).map_err(|e| e.to_string())?;
        for (a, b) in base.vector.iter().zip(&heavy.vector) {
            worst_weight = worst_weight.max((a - b).abs());
        }

        for round in 0..10 {
            rows.shuffle(&mut rng);
            let text = format!("{header}\n{}\n", rows.join("\n"));
            let permuted = Inventory::parse(&text).map_err(|e| e.to_string())?;
            let v = build_cultural_vector(&permuted, culture, &provider, &cache).map_err(|e| e.to_string())?;
            let same = v.vector.iter().zip(&base.vector).all(|(a, b)| a.to_bits() == b.to_bits());
            check(same, format!("{culture}: permutation {round} changed the vector bits"))?;
        }

        for raw in &probe_vectors {
            let e = normalize(raw).unwrap();
            let reference = base.alignment(&e).unwrap();
            for k in [1e-6, 0.37, 3.0, 1e6] {
                let scaled_c: Vec<f64> = base.vector.iter().map(|x| x * k).collect();
                let scaled_e: Vec<f64> = raw.iter().map(|x| x * k).collect();
                worst_scale = worst_scale.max((cosine_raw(&e, &scaled_c).unwrap() - reference).abs());
                worst_scale =
                    worst_scale.max((base.alignment(&normalize(&scaled_e).unwrap()).unwrap() - reference).abs());
            }
        }
    }
    check(worst_weight <= 1e-12, format!("weight doubling moved the vector by {worst_weight:e}"))?;
    check(worst_scale <= 1e-12, format!("scaling moved cosine by {worst_scale:e}"))?;
    Ok(format!(
        "weight doubling max |Δ| {worst_weight:.1e}, 30 permutations bit-identical, scale max |Δ| {worst_scale:.1e}"
    ))
}

fn counted_ranks(pooled: &[f64]) -> Vec<f64> {
    pooled
        .iter()
        .map(|&x| {
            let below = pooled.iter().filter(|&&y| y < x).count() as f64;
            let equal = pooled.iter().filter(|&&y| y == x).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

fn statistics_oracles() -> Outcome {
    // Wilcoxon: 8 pairs, exact p against all 2⁸ sign assignments
    let before = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8];
    let after = [0.15, 0.1, 0.45, 0.6, 0.41, 0.95, 0.82, 1.13];
    let pairs: Vec<(f64, f64)> = before.iter().copied().zip(after).collect();
    let w = wilcoxon_signed_rank(&pairs).map_err(|e| e.to_string())?;
    check(w.method == PValueMethod::Exact, "8-pair fixture did not use the exact branch")?;
    let diffs: Vec<f64> = pairs.iter().map(|(b, a)| a - b).collect();
    let ranks = counted_ranks(&diffs.iter().map(|d| d.abs()).collect::<Vec<_>>());
    let w_obs: f64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let center = 8.0 * 9.0 / 4.0;
    let extreme = (0u32..256)
        .filter(|mask| {
            let s: f64 = (0..8).filter(|i| mask & (1 << i) != 0).map(|i| ranks[i]).sum();
            (s - center).abs() >= (w_obs - center).abs()
        })
        .count();
    let p_enum = extreme as f64 / 256.0;
    check(w.w == w_obs && w.p_value == p_enum, format!("W {} p {} vs W {w_obs} p {p_enum}", w.w, w.p_value))?;

    // Kruskal–Wallis: 3 groups with ties, H against direct rank counting
    let groups =
        [vec![2.9, 3.0, 2.5, 2.6, 3.2, 3.0], vec![3.8, 2.7, 4.0, 2.4, 3.0], vec![2.8, 3.4, 3.7, 2.2, 2.0, 2.7]];
    let pooled: Vec<f64> = groups.iter().flatten().copied().collect();
    let ranks = counted_ranks(&pooled);
    let n = pooled.len() as f64;
    let mut offset = 0;
    let mut term = 0.0;
    for g in &groups {
        let r: f64 = ranks[offset..offset + g.len()].iter().sum();
        term += r * r / g.len() as f64;
        offset += g.len();
    }
    let mut counts: BTreeMap<u64, f64> = BTreeMap::new();
    for x in &pooled {
        *counts.entry(x.to_bits()).or_default() += 1.0;
    }
    let ties: f64 = counts.values().map(|t| t * t * t - t).sum();
    let h_ref = (12.0 / (n * (n + 1.0)) * term - 3.0 * (n + 1.0)) / (1.0 - ties / (n * n * n - n));
    let refs: Vec<&[f64]> = groups.iter().map(|g| g.as_slice()).collect();
    let kw = kruskal_wallis(&refs).map_err(|e| e.to_string())?;
    check((kw.h - h_ref).abs() <= 1e-6, format!("H {} vs {h_ref}", kw.h))?;

    // Kruskal–Wallis calibration under the null
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let reps = 4000;
    let mut rejections = [0usize; 2];
    let alphas = [0.05, 0.10];
    for _ in 0..reps {
        let g: Vec<Vec<f64>> = (0..3).map(|_| (0..30).map(|_| rng.random::<f64>()).collect()).collect();
        let refs: Vec<&[f64]> = g.iter().map(|v| v.as_slice()).collect();
        let p = kruskal_wallis(&refs).unwrap().p_value;
        for (count, alpha) in rejections.iter_mut().zip(alphas) {
            if p < alpha {
                *count += 1;
            }
        }
    }
    let rates = rejections.map(|r| r as f64 / reps as f64);
    for (rate, alpha) in rates.iter().zip(alphas) {
        check((rate - alpha).abs() <= 0.03, format!("null rejection {rate} at α = {alpha}"))?;
    }
    Ok(format!(
        "Wilcoxon W={} p={} equals 2^8 enumeration, KW H={:.6} vs {:.6}, null rejection {:.4} at 0.05 and {:.4} at 0.10",
        w.w, w.p_value, kw.h, h_ref, rates[0], rates[1]
    ))
}

fn craft(dir: &Path, args: &[&str]) -> Result<String, String> {
    let out =
        Command::new(env!("CARGO_BIN_EXE_craft")).current_dir(dir).args(args).output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("craft {args:?} failed: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn csv_rows(path: &Path) -> Result<Vec<BTreeMap<String, String>>, String> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| e.to_string())?;
    rdr.deserialize().collect::<Result<_, _>>().map_err(|e| e.to_string())
}

fn directionality() -> Outcome {
    let tmp = TempDir::new().map_err(|e| e.to_string())?;
    craft(tmp.path(), &["synth", "data", "--scale", "directional"])?;
    let dir = tmp.path().join("data");
    craft(&dir, &["all", "--config", "craft.toml"])?;

    let aggregates = csv_rows(&dir.join("out/stats/aggregates.csv"))?;
    let mean = |lang: &str| -> Result<f64, String> {
        aggregates
            .iter()
            .find(|r| {
                r["model"] == "probe"
                    && r["culture"] == "BN"
                    && r["metric"] == "cultural_fluency"
                    && r["language"] == lang
            })
            .map(|r| r["mean"].parse().unwrap())
            .ok_or_else(|| format!("no CF {lang} aggregate"))
    };
    let (en, tl) = (mean("EN")?, mean("TL")?);
    let stats = csv_rows(&dir.join("out/stats/stats.csv"))?;
    let row = stats
        .iter()
        .find(|r| r["test"] == "wilcoxon_signed_rank" && r["scope"] == "probe" && r["metric"] == "cultural_fluency")
        .ok_or("no Wilcoxon row")?;
    let p: f64 = row["p_value"].parse().unwrap();
    let n: usize = row["df_or_n"].parse().unwrap();
    check(tl > en, format!("CF TL {tl} not above EN {en}"))?;
    check(row["direction"] == "increase", format!("direction {}", row["direction"]))?;
    check(p < 0.05, format!("p = {p}"))?;
    check(n == 150, format!("n = {n}"))?;
    Ok(format!("CF EN {en:.3} -> TL {tl:.3}, Wilcoxon W={} n={n} p={p:.2e} increase", row["statistic"]))
}

fn snapshot(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else if path.file_name().is_some_and(|n| n != "manifest.json") {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn determinism_and_scale() -> Outcome {
    let tmp = TempDir::new().map_err(|e| e.to_string())?;
    let synth = craft(tmp.path(), &["synth", "data", "--scale", "full"])?;
    check(synth.contains("2100 records"), format!("unexpected synth output {synth:?}"))?;
    let dir = tmp.path().join("data");
    craft(&dir, &["all", "--config", "craft.toml"])?;

    let start = Instant::now();
    for stage in ["score", "stats", "report"] {
        craft(&dir, &[stage, "--config", "craft.toml"])?;
    }
    let staged = start.elapsed();
    let start = Instant::now();
    craft(&dir, &["all", "--config", "craft.toml"])?;
    let whole = start.elapsed();
    let first = snapshot(&dir.join("out"));

    fs::remove_dir_all(dir.join("out")).map_err(|e| e.to_string())?;
    craft(&dir, &["all", "--config", "craft.toml"])?;
    let second = snapshot(&dir.join("out"));

    check(staged < TIME_LIMIT, format!("score+stats+report took {staged:?}"))?;
    let differing: Vec<&String> = first.keys().filter(|k| first.get(*k) != second.get(*k)).collect();
    check(first.len() == second.len() && differing.is_empty(), format!("outputs differ: {differing:?}"))?;
    Ok(format!(
        "2100 records, warm score+stats+report {:.2}s (all {:.2}s), {} outputs byte-identical",
        staged.as_secs_f64(),
        whole.as_secs_f64(),
        first.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 6] = [
        ("formula suite", formula_suite),
        ("range invariants", range_invariants),
        ("cultural-vector properties", cultural_vector_properties),
        ("statistics oracles", statistics_oracles),
        ("directionality end-to-end", directionality),
        ("determinism and scale", determinism_and_scale),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let outcome = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {why}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
