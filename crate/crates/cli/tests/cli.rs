use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use craft_core::corpus::{load_corpus, CorpusFormat, LoadOptions};
use craft_core::embedding::content_digest;
use tempfile::TempDir;

const EXPECTED_TREE: [&str; 17] = [
    "cache/hashing-bow-128.vec",
    "culture/cultural_vectors.json",
    "reports/SP.md",
    "reports/manifest.json",
    "reports/metrics.csv",
    "reports/radar.json",
    "reports/radar.svg",
    "reports/stats.csv",
    "scores/groups.csv",
    "scores/instances.csv",
    "scores/pairs.csv",
    "scores/scores.jsonl",
    "stats/aggregates.csv",
    "stats/aggregates.json",
    "stats/stat_report.json",
    "stats/stats.csv",
    "validation/report.json",
];

fn fixture() -> TempDir {
    let src = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/demo");
    let dir = TempDir::new().unwrap();
    for name in ["corpus.csv", "vectors.vec", "craft.toml"] {
        fs::copy(src.join(name), dir.path().join(name)).unwrap();
    }
    dir
}

fn craft(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_craft")).current_dir(dir).args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn tree(root: &Path) -> Vec<String> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push(path.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/"));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn demo_runs_end_to_end() {
    let dir = fixture();
    let o = craft(dir.path(), &["all", "--config", "craft.toml"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(tree(&dir.path().join("out")), EXPECTED_TREE);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/reports/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["provider_model_id"], "hashing-bow-128");
    for stage in ["validate", "embed", "build-culture", "score", "stats", "report"] {
        assert!(manifest["stages"].get(stage).is_some(), "manifest lacks {stage}");
    }
    assert!(fs::read_to_string(dir.path().join("out/reports/SP.md")).unwrap().contains("# Spanish (SP)"));
}

#[test]
fn stages_run_individually_and_out_overrides() {
    let dir = fixture();
    for stage in ["validate", "embed", "build-culture", "score", "stats", "report"] {
        let o = craft(dir.path(), &[stage, "--config", "craft.toml", "--out", "elsewhere", "--jobs", "2"]);
        assert!(o.status.success(), "{stage}: {}", stderr(&o));
    }
    assert!(dir.path().join("elsewhere/reports/radar.svg").exists());
    assert!(!dir.path().join("out").exists());
}

#[test]
fn missing_vector_is_a_data_error_naming_the_digest() {
    let dir = fixture();
    let corpus = load_corpus(&dir.path().join("corpus.csv"), CorpusFormat::Csv, LoadOptions::default()).unwrap();
    let digest = content_digest("hashing-bow-128", &corpus.records()[0].explanation);
    let vectors = fs::read_to_string(dir.path().join("vectors.vec")).unwrap();
    let kept: String = vectors.lines().filter(|l| !l.starts_with(&digest)).map(|l| format!("{l}\n")).collect();
    assert!(kept.len() < vectors.len());
    fs::write(dir.path().join("vectors.vec"), kept).unwrap();

    let o = craft(dir.path(), &["score", "--config", "craft.toml"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains(&digest), "{}", stderr(&o));
}

fn drop_first_record(dir: &Path) {
    let path = dir.join("corpus.csv");
    let text = fs::read_to_string(&path).unwrap();
    let mut rdr = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(rdr.headers().unwrap()).unwrap();
    for rec in rdr.records().skip(1) {
        wtr.write_record(&rec.unwrap()).unwrap();
    }
    fs::write(path, wtr.into_inner().unwrap()).unwrap();
}

#[test]
fn defects_fail_strict_and_pass_lenient() {
    let dir = fixture();
    drop_first_record(dir.path());

    let strict = craft(dir.path(), &["validate", "--config", "craft.toml"]);
    assert_eq!(strict.status.code(), Some(1));
    assert!(stderr(&strict).contains("validation defect"), "{}", stderr(&strict));

    let lenient = craft(dir.path(), &["validate", "--config", "craft.toml", "--no-strict"]);
    assert!(lenient.status.success(), "{}", stderr(&lenient));
    let out = stdout(&lenient);
    assert!(out.contains("incomplete group"), "{out}");
    assert!(out.contains("unpaired question"), "{out}");

    let all = craft(dir.path(), &["all", "--config", "craft.toml", "--no-strict"]);
    assert!(all.status.success(), "{}", stderr(&all));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/validation/report.json")).unwrap()).unwrap();
    assert_eq!(report["counts"]["records"], 71);
}

#[test]
fn configuration_errors_exit_2() {
    let dir = fixture();
    let cases: [(&str, &[&str]); 2] = [("no config", &["all"]), ("missing file", &["all", "--config", "nope.toml"])];
    for (what, args) in cases {
        let o = craft(dir.path(), args);
        assert_eq!(o.status.code(), Some(2), "{what}: {}", stderr(&o));
    }

    let base = fs::read_to_string(dir.path().join("craft.toml")).unwrap();
    let broken = [
        ("lambda", base.replace("lambda = 0.7", "lambda = 1.5")),
        ("runs", base.replace("runs = 3", "runs = 1")),
        ("unknown key", base.replace("[scoring]", "[scoring]\nlamda = 0.7")),
        ("corpus path", base.replace("corpus.csv", "missing.csv")),
        ("resamples", base.replace("resamples = 1000", "resamples = 10")),
    ];
    for (what, text) in broken {
        fs::write(dir.path().join("bad.toml"), text).unwrap();
        let o = craft(dir.path(), &["all", "--config", "bad.toml"]);
        assert_eq!(o.status.code(), Some(2), "{what}: {}", stderr(&o));
    }
}

#[test]
fn unreachable_remote_provider_is_a_configuration_error() {
    let dir = fixture();
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let base = fs::read_to_string(dir.path().join("craft.toml")).unwrap();
    let remote = base.replace("kind = \"file\"", &format!("kind = \"remote\"\nendpoint = \"http://127.0.0.1:{port}\""));
    fs::write(dir.path().join("remote.toml"), remote).unwrap();
    let o = craft(dir.path(), &["embed", "--config", "remote.toml"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("[embed]"), "{}", stderr(&o));
}

#[test]
fn synth_writes_a_runnable_directory() {
    let dir = TempDir::new().unwrap();
    let o = craft(dir.path(), &["synth", "data", "--scale", "directional", "--dim", "64"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("300 records"));
    let run = craft(&dir.path().join("data"), &["all", "--config", "craft.toml"]);
    assert!(run.status.success(), "{}", stderr(&run));
    assert!(dir.path().join("data/out/reports/BN.md").exists());
}
