use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use hurricat::corpus::write_corpus;
use hurricat::synth::{synthetic_town, FIXTURE_SEED};
use hurricat::CategoryLabel;
use hurricat_cli::run_args;

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(name)
        .display()
        .to_string()
}

fn bin(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_hurricat"))
        .args(args)
        .output()
        .unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn p(path: &Path) -> String {
    path.display().to_string()
}

fn label_synthetic(dir: &Path) -> String {
    let out = dir.join("label");
    run_args([
        "hurricat",
        "label",
        "--corpus",
        &fixture("synthetic.jsonl"),
        "--place-table",
        &fixture("synthetic_places.csv"),
        "--out",
        &p(&out),
    ])
    .unwrap();
    p(&out.join("labeled.jsonl"))
}

fn harvey_args(out: &Path) -> Vec<String> {
    [
        "hurricat",
        "label",
        "--corpus",
        &fixture("storms.jsonl"),
        "--place-table",
        &fixture("harvey_places.csv"),
        "--hashtag",
        "harvey",
        "--lang",
        "en",
        "--country",
        "US",
        "--out",
        &p(out),
    ]
    .map(String::from)
    .to_vec()
}

#[test]
fn label_writes_summary_in_table_shape() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = run_args(harvey_args(dir.path())).unwrap();
    assert!(stdout.contains("harvey\t103\t280"), "{stdout}");
    let summary = fs::read_to_string(dir.path().join("label_summary.tsv")).unwrap();
    assert!(summary.starts_with("# hurricat"));
    assert!(summary.contains("# lang=en"));
    let counts = fs::read_to_string(dir.path().join("place_counts.tsv")).unwrap();
    assert!(
        counts.contains("Corpus Christi\t4\t34\t416\t241"),
        "{counts}"
    );
    let labeled = fs::read_to_string(dir.path().join("labeled.jsonl")).unwrap();
    assert!(labeled.starts_with("{\"provenance\""));
    assert_eq!(labeled.lines().count(), 1 + 383);
}

#[test]
fn label_from_track_matches_category_four_places() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let stdout = run_args([
        "hurricat",
        "label",
        "--corpus",
        &fixture("storms.jsonl"),
        "--track",
        &fixture("harvey_track.csv"),
        "--places",
        &fixture("harvey_coords.csv"),
        "--hashtag",
        "harvey",
        "--out",
        &p(out),
    ])
    .unwrap();
    assert!(stdout.contains("Rockport\t4\t34\t8\t8"), "{stdout}");
    let table = fs::read_to_string(out.join("place_table.csv")).unwrap();
    assert!(table.contains("Holiday Beach,4"));
}

#[test]
fn geolabel_writes_a_place_table() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = run_args([
        "hurricat",
        "geolabel",
        "--track",
        &fixture("harvey_track.csv"),
        "--places",
        &fixture("harvey_coords.csv"),
        "--category-rule",
        "max-within-radius",
        "--out",
        &p(dir.path()),
    ])
    .unwrap();
    for place in [
        "Aransas Pass",
        "Corpus Christi",
        "Fulton",
        "Holiday Beach",
        "Port Aransas",
        "Rockport",
    ] {
        assert!(stdout.contains(&format!("{place}\t4")), "{stdout}");
    }
    let table = fs::read_to_string(dir.path().join("place_table.csv")).unwrap();
    assert!(table.contains("# category_rule=max-within-radius"));
}

#[test]
fn missing_corpus_is_a_usage_error_naming_the_path() {
    let (code, _, stderr) = bin(&[
        "label",
        "--corpus",
        "/no/such/corpus.jsonl",
        "--place-table",
        &fixture("harvey_places.csv"),
    ]);
    assert_eq!(code, 2);
    assert!(stderr.contains("/no/such/corpus.jsonl"), "{stderr}");
}

#[test]
fn empty_filter_result_is_a_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = harvey_args(dir.path());
    args.push("--set".into());
    args.push("lang=xx".into());
    let args: Vec<&str> = args.iter().skip(1).map(String::as_str).collect();
    let (code, _, stderr) = bin(&args);
    assert_eq!(code, 1);
    assert!(stderr.contains("0 tweets after filtering"), "{stderr}");
}

#[test]
fn too_few_examples_for_k_names_the_class() {
    let dir = tempfile::tempdir().unwrap();
    let labeled = label_synthetic(dir.path());
    let text = fs::read_to_string(&labeled).unwrap();
    let mut high = 0;
    let kept: String = text
        .lines()
        .filter(|l| {
            if l.contains("\"label\":\"34\"") {
                high += 1;
                high <= 5
            } else {
                true
            }
        })
        .map(|l| format!("{l}\n"))
        .collect();
    let small = dir.path().join("small.jsonl");
    fs::write(&small, kept).unwrap();
    let (code, _, stderr) = bin(&[
        "cv",
        "--labeled",
        &p(&small),
        "--k",
        "10",
        "--out",
        &p(&dir.path().join("cv")),
    ]);
    assert_eq!(code, 1);
    assert!(stderr.contains("\"34\""), "{stderr}");
}

#[test]
fn sweep_without_embeddings_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let labeled = label_synthetic(dir.path());
    let err = run_args([
        "hurricat",
        "cv",
        "--sweep",
        "--labeled",
        &labeled,
        "--out",
        &p(dir.path()),
    ])
    .unwrap_err();
    assert_eq!(err.code, 2);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let labeled = label_synthetic(dir.path());
    let cfg = dir.path().join("run.conf");
    fs::write(
        &cfg,
        format!("# experiment\nlabeled = {labeled}\nalgorithm = tree\nk = 3\nseed = 1\n"),
    )
    .unwrap();
    let out = dir.path().join("cv");
    run_args([
        "hurricat",
        "cv",
        "--config",
        &p(&cfg),
        "--seed",
        "2",
        "--out",
        &p(&out),
    ])
    .unwrap();
    let report = fs::read_to_string(out.join("cv_report.json")).unwrap();
    let json: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert_eq!(json["provenance"]["settings"]["seed"], "2");
    assert_eq!(json["report"]["algorithm"], "decision_tree");
    assert_eq!(json["report"]["k"], 3);
    let table = fs::read_to_string(out.join("cv_table.tsv")).unwrap();
    let rows: Vec<&str> = table.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 1 + 3 + 2);
}

fn town_corpus(dir: &Path) -> String {
    let mut tweets = synthetic_town("Newtown", CategoryLabel::High, 20, FIXTURE_SEED, 1);
    tweets.extend(synthetic_town(
        "Tinyville",
        CategoryLabel::Low,
        4,
        FIXTURE_SEED,
        2,
    ));
    let mut buf = Vec::new();
    write_corpus(&mut buf, &tweets).unwrap();
    let path = dir.join("towns.jsonl");
    fs::write(&path, buf).unwrap();
    p(&path)
}

fn prediction(out: &Path) -> serde_json::Value {
    let text = fs::read_to_string(out.join("prediction.json")).unwrap();
    serde_json::from_str::<serde_json::Value>(&text).unwrap()["prediction"].clone()
}

#[test]
fn predict_planted_town_and_reload_saved_model() {
    let dir = tempfile::tempdir().unwrap();
    let labeled = label_synthetic(dir.path());
    let corpus = town_corpus(dir.path());
    let model = p(&dir.path().join("models/nb.model"));
    let trained = dir.path().join("trained");
    run_args([
        "hurricat",
        "predict",
        "--labeled",
        &labeled,
        "--corpus",
        &corpus,
        "--place",
        "Newtown",
        "--truth",
        "34",
        "--save-model",
        &model,
        "--out",
        &p(&trained),
    ])
    .unwrap();
    let a = prediction(&trained);
    assert_eq!(a["predicted"], "34");
    assert_eq!(a["n_tweets"], 20);
    assert!(a["correct_fraction"].as_f64().unwrap() > 0.8);

    let loaded = dir.path().join("loaded");
    run_args([
        "hurricat",
        "predict",
        "--model",
        &model,
        "--corpus",
        &corpus,
        "--place",
        "newtown",
        "--truth",
        "34",
        "--out",
        &p(&loaded),
    ])
    .unwrap();
    let mut b = prediction(&loaded);
    b["place"] = a["place"].clone();
    assert_eq!(a, b);
}

#[test]
fn predict_embedding_model_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let labeled = label_synthetic(dir.path());
    let corpus = town_corpus(dir.path());
    let model = p(&dir.path().join("svm.model"));
    let emb = fixture("synthetic_embeddings.txt");
    let common = [
        "--corpus",
        &corpus,
        "--place",
        "Newtown",
        "--embeddings",
        &emb,
    ];
    let a = run_args(
        [
            "hurricat",
            "predict",
            "--labeled",
            &labeled,
            "--features",
            "embeddings",
            "--algorithm",
            "svm",
            "--save-model",
            &model,
            "--out",
            &p(&dir.path().join("a")),
        ]
        .into_iter()
        .chain(common),
    )
    .unwrap();
    let b = run_args(
        [
            "hurricat",
            "predict",
            "--model",
            &model,
            "--out",
            &p(&dir.path().join("b")),
        ]
        .into_iter()
        .chain(common),
    )
    .unwrap();
    assert_eq!(a, b);
    let err = run_args([
        "hurricat", "predict", "--model", &model, "--corpus", &corpus, "--place", "Newtown",
    ])
    .unwrap_err();
    assert_eq!(err.code, 2, "{err}");
}

#[test]
fn small_places_warn_and_unknown_places_fail() {
    let dir = tempfile::tempdir().unwrap();
    let labeled = label_synthetic(dir.path());
    let corpus = town_corpus(dir.path());
    let out = dir.path().join("tiny");
    run_args([
        "hurricat",
        "predict",
        "--labeled",
        &labeled,
        "--corpus",
        &corpus,
        "--place",
        "Tinyville",
        "--out",
        &p(&out),
    ])
    .unwrap();
    let pred = prediction(&out);
    assert_eq!(pred["n_tweets"], 4);
    assert_eq!(pred["warnings"].as_array().unwrap().len(), 1);

    let (code, _, stderr) = bin(&[
        "predict",
        "--labeled",
        &labeled,
        "--corpus",
        &corpus,
        "--place",
        "Atlantis",
        "--out",
        &p(&out),
    ]);
    assert_eq!(code, 1);
    assert!(stderr.contains("0 tweets for place"), "{stderr}");
}

#[test]
fn strip_terms_removes_area_words() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = run_args([
        "hurricat",
        "strip-terms",
        "--corpus",
        &fixture("storms.jsonl"),
        "--blocklist",
        &fixture("area_terms.txt"),
        "--out",
        &p(dir.path()),
    ])
    .unwrap();
    assert!(stdout.contains("4 terms blocked"), "{stdout}");
    let text = fs::read_to_string(dir.path().join("stripped.jsonl")).unwrap();
    let body: Vec<&str> = text.lines().skip(1).collect();
    assert!(!body.is_empty());
    for term in ["texas", "harvey", "florida", "irma"] {
        assert!(body.iter().all(|l| !l
            .split("\"text\":\"")
            .nth(1)
            .unwrap()
            .split('"')
            .next()
            .unwrap()
            .contains(term)));
    }
}

#[test]
fn bad_settings_are_usage_errors() {
    let (code, _, _) = bin(&["cv", "--set", "nonsense"]);
    assert_eq!(code, 2);
    let (code, _, stderr) = bin(&["cv", "--algorithm", "perceptron", "--labeled", "x"]);
    assert_eq!(code, 2, "{stderr}");
    let (code, _, _) = bin(&["label", "--corpus", &fixture("storms.jsonl")]);
    assert_eq!(code, 2);
}
