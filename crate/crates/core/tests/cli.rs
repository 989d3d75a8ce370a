mod common;

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;
use tempfile::TempDir;

use common::*;

const SMALL_CONFIG: &str = "subsample_t = 0.01\ndim = 16\nhidden = 8\nepochs = 3\nembed_epochs = 2\n";

struct Run {
    dir: TempDir,
    data: PathBuf,
    cfg: PathBuf,
    emb: PathBuf,
}

impl Run {
    fn path(&self, rel: &str) -> PathBuf {
        self.dir.path().join(rel)
    }
}

fn embed_small(seed: u64) -> Run {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("synth.tsv");
    write_synth(&data, seed, 60);
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, SMALL_CONFIG).unwrap();
    let out = cmsent(&["embed", p(&data), "--config", p(&cfg), "--out-dir", p(&dir.path().join("emb"))]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let emb = dir.path().join("emb/vectors.txt");
    Run { dir, data, cfg, emb }
}

fn train_small(run: &Run, out_dir: &str, extra: &[&str]) -> std::process::Output {
    let out_dir = run.path(out_dir);
    let mut args = vec![
        "train",
        "--data",
        p(&run.data),
        "--embedding",
        p(&run.emb),
        "--config",
        p(&run.cfg),
        "--out-dir",
        p(&out_dir),
    ];
    args.extend_from_slice(extra);
    cmsent(&args)
}

fn wordlist() -> String {
    p(&wordlist_path()).to_string()
}

fn header(vectors: &Path) -> String {
    fs::read_to_string(vectors).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&cmsent(&[])), 2);
    assert_eq!(code(&cmsent(&["embed"])), 2);
    assert_eq!(code(&cmsent(&["train", "--bogus"])), 2);
}

#[test]
fn missing_corpus_exits_2_naming_the_path() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nowhere.tsv");
    let out = cmsent(&["embed", p(&missing), "--out-dir", p(dir.path())]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("nowhere.tsv"), "{}", stderr(&out));
}

#[test]
fn config_errors_exit_2() {
    let run = embed_small(1);
    let bad = run.path("bad.cfg");
    fs::write(&bad, "colour = red\n").unwrap();
    let out = cmsent(&["embed", p(&run.data), "--config", p(&bad), "--out-dir", p(&run.path("x"))]);
    assert_eq!(code(&out), 2);
    let out = cmsent(&["embed", p(&run.data), "--config", p(&run.path("absent.cfg"))]);
    assert_eq!(code(&out), 2);
}

#[test]
fn embed_flag_beats_config_beats_default() {
    let run = embed_small(1);
    assert!(header(&run.emb).ends_with(" 16"), "{}", header(&run.emb));
    let out = cmsent(&[
        "embed",
        p(&run.data),
        "--config",
        p(&run.cfg),
        "--dim",
        "8",
        "--out-dir",
        p(&run.path("flag")),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(header(&run.path("flag/vectors.txt")).ends_with(" 8"));
    assert!(stdout(&out).contains("vocabulary:") && stdout(&out).contains("tokens:"));
}

#[test]
fn embed_merges_corpora() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.tsv");
    let b = dir.path().join("b.tsv");
    fs::write(&a, "vanakkam nanba\tPositive\n").unwrap();
    fs::write(&b, "unlabeled line with zebra\n").unwrap();
    let out = cmsent(&["embed", p(&a), p(&b), "--dim", "4", "--out-dir", p(dir.path())]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = fs::read_to_string(dir.path().join("vectors.txt")).unwrap();
    let words: Vec<&str> = text.lines().skip(1).map(|l| l.split(' ').next().unwrap()).collect();
    for w in ["vanakkam", "nanba", "zebra", "unlabeled"] {
        assert!(words.contains(&w), "{w} missing from {words:?}");
    }
    assert!(dir.path().join("vectors.bin").exists());
}

#[test]
fn embed_is_deterministic() {
    let run = embed_small(2);
    let out = cmsent(&["embed", p(&run.data), "--config", p(&run.cfg), "--out-dir", p(&run.path("again"))]);
    assert_eq!(code(&out), 0);
    for f in ["vectors.txt", "vectors.bin"] {
        assert_eq!(fs::read(run.path("emb").join(f)).unwrap(), fs::read(run.path("again").join(f)).unwrap());
    }
}

#[test]
fn train_requires_wordlist_only_with_tags() {
    let run = embed_small(3);
    let out = train_small(&run, "m", &[]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("--wordlist"));
    let out = train_small(&run, "m", &["--wordlist", p(&run.path("no-such-list.txt"))]);
    assert_eq!(code(&out), 2);
    let out = train_small(&run, "m", &["--no-lang-tag"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).starts_with("Bi-LSTM on"), "{}", stdout(&out));
}

#[test]
fn flags_select_variants() {
    let run = embed_small(3);
    let wl = wordlist();
    let cases: [(&[&str], &str); 4] = [
        (&[], "Bi-LSTM+ln tag on"),
        (&["--no-lang-tag"], "Bi-LSTM on"),
        (&["--unidirectional"], "LSTM+ln tag on"),
        (&["--no-lang-tag", "--unidirectional"], "LSTM on"),
    ];
    for (flags, expected) in cases {
        let mut args = vec!["--wordlist", wl.as_str()];
        args.extend_from_slice(flags);
        let out = train_small(&run, "m", &args);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        assert!(stdout(&out).starts_with(expected), "{flags:?}: {}", stdout(&out));
    }
}

#[test]
fn train_writes_artifacts() {
    let run = embed_small(4);
    let out = train_small(&run, "m", &["--wordlist", &wordlist()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let history: Value = serde_json::from_str(&fs::read_to_string(run.path("m/history.json")).unwrap()).unwrap();
    let epochs = history.as_array().unwrap();
    assert_eq!(epochs.len(), 3);
    for key in ["epoch", "train_loss", "train_accuracy", "heldout_accuracy", "heldout_weighted_f1"] {
        assert!(epochs[0].get(key).is_some(), "{key}");
    }
    assert_metrics_schema(&fs::read_to_string(run.path("m/metrics.json")).unwrap());
    assert!(stdout(&out).contains("weighted avg"));
}

#[test]
fn non_finite_embedding_exits_1() {
    let run = embed_small(5);
    let text = fs::read_to_string(&run.emb).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    for line in lines.iter_mut().skip(1) {
        let word = line.split(' ').next().unwrap().to_string();
        *line = std::iter::once(word).chain(std::iter::repeat_n("NaN".to_string(), 16)).collect::<Vec<_>>().join(" ");
    }
    fs::write(&run.emb, lines.join("\n") + "\n").unwrap();
    let out = train_small(&run, "m", &["--no-lang-tag"]);
    assert_eq!(code(&out), 1, "{}", stderr(&out));
    assert!(stderr(&out).contains("non-finite"), "{}", stderr(&out));
}

fn assert_metrics_schema(json: &str) {
    let v: Value = serde_json::from_str(json).unwrap();
    assert!(v["accuracy"].is_f64() && v["total"].is_u64());
    assert!(v["zero_division"].is_boolean() && v["empty"].is_boolean());
    let per_class = v["per_class"].as_array().unwrap();
    assert_eq!(per_class.len(), 5);
    for c in per_class {
        for key in ["precision", "recall", "f1"] {
            assert!(c[key].is_f64(), "{key}");
        }
        assert!(c["label"].is_string() && c["support"].is_u64());
    }
    for avg in ["macro", "weighted"] {
        for key in ["precision", "recall", "f1"] {
            assert!(v[avg][key].is_f64(), "{avg}.{key}");
        }
    }
}

#[test]
fn eval_on_training_data_after_synth_run() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let data = d.join("synth.tsv");
    write_synth(&data, 7, 200);
    let cfg = d.join("run.cfg");
    fs::write(&cfg, format!("seed = 7\nsubsample_t = {SMALL_CORPUS_SUBSAMPLE}\nepochs = 30\n")).unwrap();
    let out = cmsent(&["embed", p(&data), "--config", p(&cfg), "--out-dir", p(d)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let emb = d.join("vectors.txt");
    let wl = wordlist();
    let out = cmsent(&[
        "train", "--data", p(&data), "--embedding", p(&emb), "--wordlist", &wl, "--config", p(&cfg), "--out-dir", p(d),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let ck = d.join("model.ckpt");
    let out = cmsent(&[
        "eval", "--checkpoint", p(&ck), "--embedding", p(&emb), "--wordlist", &wl, "--data", p(&data), "--out-dir", p(d),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let json = fs::read_to_string(d.join("eval.json")).unwrap();
    assert_metrics_schema(&json);
    let v: Value = serde_json::from_str(&json).unwrap();
    assert!(v["accuracy"].as_f64().unwrap() >= 0.95, "{json}");
    assert_eq!(v["total"].as_u64(), Some(200));
}

#[test]
fn eval_rejects_empty_data_and_foreign_embedding() {
    let run = embed_small(6);
    let wl = wordlist();
    assert_eq!(code(&train_small(&run, "m", &["--wordlist", &wl])), 0);
    let ck = run.path("m/model.ckpt");
    let empty = run.path("empty.tsv");
    fs::write(&empty, "").unwrap();
    let out = cmsent(&[
        "eval", "--checkpoint", p(&ck), "--embedding", p(&run.emb), "--wordlist", &wl, "--data", p(&empty),
        "--out-dir", p(&run.path("e")),
    ]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));

    let out = cmsent(&[
        "embed", p(&run.data), "--config", p(&run.cfg), "--seed", "99", "--out-dir", p(&run.path("other")),
    ]);
    assert_eq!(code(&out), 0);
    let out = cmsent(&[
        "eval", "--checkpoint", p(&ck), "--embedding", p(&run.path("other/vectors.txt")), "--wordlist", &wl,
        "--data", p(&run.data), "--out-dir", p(&run.path("e")),
    ]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    assert!(stderr(&out).contains("hash mismatch"), "{}", stderr(&out));

    let garbage = run.path("garbage.ckpt");
    fs::write(&garbage, b"not a checkpoint").unwrap();
    let out = cmsent(&[
        "eval", "--checkpoint", p(&garbage), "--embedding", p(&run.emb), "--wordlist", &wl, "--data", p(&run.data),
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn predict_output_format() {
    let run = embed_small(7);
    let wl = wordlist();
    assert_eq!(code(&train_small(&run, "m", &["--wordlist", &wl])), 0);
    let ck = run.path("m/model.ckpt");
    let input = run.path("in.txt");
    fs::write(&input, "semma padam!\n\nMokka movie da\nwith\ttab\n").unwrap();
    let args = [
        "predict",
        "--checkpoint",
        p(&ck),
        "--embedding",
        p(&run.emb),
        "--wordlist",
        &wl,
        "--input",
        p(&input),
    ];
    let out = cmsent(&args);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    for line in &lines {
        let cols: Vec<&str> = line.split('\t').collect();
        assert_eq!(cols.len(), 8, "{line:?}");
        let sum: f64 = cols[2..7]
            .iter()
            .map(|c| {
                assert_eq!(c.split('.').nth(1).unwrap().len(), 4, "{c}");
                c.parse::<f64>().unwrap()
            })
            .sum();
        assert!((sum - 1.0).abs() <= 1e-3, "{line:?}");
    }
    assert_eq!(lines[0].split('\t').next(), Some("semma padam!"));
    assert_eq!(lines[1], "\tUnknown State\t0.2000\t0.2000\t0.2000\t0.2000\t0.2000\tempty input");
    assert!(lines[2].ends_with('\t'));
    assert!(lines[3].starts_with("with tab\t"));
    assert_eq!(cmsent(&args).stdout, out.stdout);
}
