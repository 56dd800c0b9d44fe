use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn hwseg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hwseg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn synth(dir: &Path, seed: &str, pages: &str) {
    let out = hwseg(&["synth", "page", "--out", p(dir), "--seed", seed, "--lines", "4", "--pages", pages]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn segment(corpus: &Path, out: &Path, extra: &[&str]) -> Output {
    let images = corpus.join("images");
    let lines = corpus.join("line-preds");
    let words = corpus.join("word-preds");
    let mut args = vec![
        "segment",
        "--images",
        p(&images),
        "--line-preds",
        p(&lines),
        "--word-preds",
        p(&words),
        "--out",
        p(out),
    ];
    args.extend_from_slice(extra);
    hwseg(&args)
}

fn fm(corpus: &Path, pred: &Path, class: &str) -> f64 {
    let json = pred.join(format!("{class}-report.json"));
    let gt = corpus.join("gt");
    let out = hwseg(&["evaluate", "--gt", p(&gt), "--pred", p(pred), "--class", class, "--json", p(&json)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains(class));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(json).unwrap()).unwrap();
    report["fm"].as_f64().unwrap()
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|path| (path.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&path).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn segment_then_evaluate_synthetic_corpus() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    let out = tmp.path().join("out");
    synth(&corpus, "3", "3");
    let run = segment(&corpus, &out, &["--emit", "yolo,voc,manifest", "--jobs", "2"]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(read_dir_sorted(&out.join("manifest")).len(), 3);
    assert!(!out.join("skew").exists());

    let yolo = out.join("yolo");
    assert_eq!(fm(&corpus, &yolo, "line"), 1.0);
    assert!(fm(&corpus, &yolo, "word") >= 0.98);
}

#[test]
fn outputs_are_byte_stable_across_runs_and_job_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    synth(&corpus, "8", "2");
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert!(segment(&corpus, &a, &["--jobs", "1", "--skew-debug"]).status.success());
    assert!(segment(&corpus, &b, &["--jobs", "4", "--skew-debug"]).status.success());
    for sub in ["manifest", "yolo", "voc", "skew"] {
        assert_eq!(read_dir_sorted(&a.join(sub)), read_dir_sorted(&b.join(sub)), "{sub}");
    }
}

#[test]
fn corrupt_document_is_isolated() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    synth(&corpus, "1", "2");
    fs::write(corpus.join("images").join("broken.png"), b"not an image").unwrap();
    let out = tmp.path().join("out");
    let run = segment(&corpus, &out, &["--emit", "manifest"]);
    assert_eq!(run.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&run.stderr);
    assert!(stderr.contains("broken"), "{stderr}");
    let manifests: Vec<String> = read_dir_sorted(&out.join("manifest")).into_iter().map(|(n, _)| n).collect();
    assert_eq!(manifests, ["page1.json", "page2.json"]);
}

#[test]
fn missing_predictions_fail_only_that_document() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    synth(&corpus, "20", "2");
    fs::remove_file(corpus.join("line-preds").join("page21.txt")).unwrap();
    let out = tmp.path().join("out");
    let run = segment(&corpus, &out, &["--emit", "yolo"]);
    assert_eq!(run.status.code(), Some(2));
    assert!(out.join("yolo").join("page20.txt").exists());
    assert!(!out.join("yolo").join("page21.txt").exists());
}

#[test]
fn bad_settings_are_fatal() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    synth(&corpus, "2", "1");
    let out = tmp.path().join("out");
    assert_eq!(segment(&corpus, &out, &["--set", "no_such_key=1"]).status.code(), Some(1));
    assert_eq!(segment(&corpus, &out, &["--set", "ta=0"]).status.code(), Some(1));
    assert_eq!(segment(&corpus, &out, &["--emit", "pdf"]).status.code(), Some(1));
}

#[test]
fn config_file_and_overrides_reach_the_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    synth(&corpus, "4", "1");
    let cfg = tmp.path().join("run.conf");
    fs::write(&cfg, "# tuned\nconf_word = 0.45\npht_seed = 0x10\n").unwrap();
    let out = tmp.path().join("out");
    let run = segment(&corpus, &out, &["--config", p(&cfg), "--set", "trim_fraction=0.03", "--emit", "manifest"]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest").join("page4.json")).unwrap()).unwrap();
    assert_eq!(m["config"]["conf_word"], 0.45);
    assert_eq!(m["config"]["pht_seed"], 16);
    assert_eq!(m["config"]["trim_fraction"], 0.03);
}

#[test]
fn skew_debug_reports_a_rotated_line() {
    let tmp = tempfile::tempdir().unwrap();
    let out = hwseg(&["synth", "line", "--out", p(tmp.path()), "--seed", "6", "--skew", "-9"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let image = tmp.path().join("images").join("line6.png");
    let out = hwseg(&["skew-debug", "--image", p(&image)]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["method"], "lskew");
    assert_eq!(v["direction"], "clockwise");
    assert!((v["theta_avg"].as_f64().unwrap() + 9.0).abs() <= 1.0, "{v}");
}
