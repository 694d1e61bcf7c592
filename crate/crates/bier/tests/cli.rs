use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bier::formats::{
    read_elc, read_elc_dump, read_elc_results, read_ned, read_ned_dump, read_tsv, write_ned_dump, NedDumpRow,
};
use tempfile::TempDir;

fn bier(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bier")).args(args).env("BIER_THREADS", "1").output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = bier(args);
    assert!(out.status.success(), "bier {args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn fails(args: &[&str]) -> String {
    let out = bier(args);
    assert!(!out.status.success(), "bier {args:?} unexpectedly succeeded");
    String::from_utf8(out.stderr).unwrap()
}

/// A synthetic workspace plus trained mention and description models.
struct Workspace {
    _tmp: TempDir,
    root: PathBuf,
}

impl Workspace {
    fn new(typing_train: usize, epochs: usize) -> Self {
        let tmp = tempfile::tempdir().unwrap();
        let root = tmp.path().to_path_buf();
        let ws = Self { _tmp: tmp, root };
        let train = format!("typing_train={typing_train}");
        ws.run(
            "synth",
            &["synth"],
            &[
                &train,
                "typing_dev=100",
                "typing_test=10",
                "elc_train=200",
                "elc_test=100",
                "ned_pool=300",
                "ned_train=60",
                "ned_dev=10",
                "ned_test=100",
                "docs=50",
            ],
        );
        let epochs = format!("epochs={epochs}");
        let model = ["dim=32", "layers=1", "heads=2", "max_len=16", "learning_rate=0.003", epochs.as_str()];
        let (t, d, v) = (
            ws.set("train", "synth/typing/train.jsonl"),
            ws.set("dev", "synth/typing/dev.jsonl"),
            ws.set("vocab", "synth/typing/vocab.txt"),
        );
        let mut args: Vec<&str> = vec![&t, &d, &v];
        args.extend(model);
        ws.run("model", &["train"], &args);
        let desc = ws.set("train", "synth/typing/descriptions.jsonl");
        let mut args: Vec<&str> = vec![&desc, &v, "epochs=40"];
        args.extend(model.iter().filter(|a| !a.starts_with("epochs")));
        ws.run("desc", &["train"], &args);
        ws
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    fn set(&self, key: &str, rel: &str) -> String {
        format!("{key}={}", self.path(rel).display())
    }

    fn args(&self, out: &str, cmd: &[&str], sets: &[&str]) -> Vec<String> {
        let mut args: Vec<String> = cmd.iter().map(|s| s.to_string()).collect();
        args.extend(["--seed".into(), "5".into(), "--out".into(), self.path(out).display().to_string()]);
        for s in sets {
            args.extend(["--set".into(), s.to_string()]);
        }
        args
    }

    fn run(&self, out: &str, cmd: &[&str], sets: &[&str]) -> String {
        let args = self.args(out, cmd, sets);
        ok(&args.iter().map(String::as_str).collect::<Vec<_>>())
    }

    fn run_fails(&self, out: &str, cmd: &[&str], sets: &[&str]) -> String {
        let args = self.args(out, cmd, sets);
        fails(&args.iter().map(String::as_str).collect::<Vec<_>>())
    }

    fn eval_ned(&self) {
        let sets = [
            self.set("checkpoint", "model/model.ckpt"),
            self.set("desc_checkpoint", "desc/model.ckpt"),
            self.set("ned_test", "synth/ned/test.jsonl"),
            self.set("ned_train", "synth/ned/train.jsonl"),
            "baseline_steps=100".into(),
        ];
        self.run("ned", &["eval", "ned"], &sets.iter().map(String::as_str).collect::<Vec<_>>());
    }

    fn eval_elc(&self, extra: &[&str]) {
        let mut sets = vec![
            self.set("checkpoint", "model/model.ckpt"),
            self.set("elc_train", "synth/elc/train.jsonl"),
            self.set("elc_dev", "synth/elc/dev.jsonl"),
            self.set("elc_test", "synth/elc/test.jsonl"),
        ];
        sets.extend(extra.iter().map(|s| s.to_string()));
        self.run("elc", &["eval", "elc"], &sets.iter().map(String::as_str).collect::<Vec<_>>());
    }
}

fn metric_rows(path: &Path) -> Vec<Vec<String>> {
    read_tsv(path, 5).unwrap().into_iter().skip(1).collect()
}

#[test]
fn trained_fixture_ned_and_dump_aggregates() {
    let ws = Workspace::new(2000, 4);
    ws.eval_ned();
    let rows = metric_rows(&ws.path("ned/ned_metrics.tsv"));
    let lookup = |method: &str, rep: &str, metric: &str| -> f64 {
        rows.iter().find(|r| r[0] == method && r[1] == rep && r[2] == metric).unwrap()[3].parse().unwrap()
    };
    let sparse = lookup("similarity", "sparse", "cosine");
    let prior = lookup("popular_prior", "-", "-");
    assert!(sparse >= 0.8, "sparse cosine accuracy {sparse}");
    assert!(sparse > prior + 0.1, "sparse {sparse} vs prior {prior}");

    // the dump alone reproduces every similarity aggregate
    let test = read_ned(&ws.path("synth/ned/test.jsonl")).unwrap();
    for rep in ["dense", "sparse"] {
        let dump = read_ned_dump(&ws.path(&format!("ned/ned_predictions_{rep}.tsv"))).unwrap();
        for metric in ["dot", "cosine"] {
            let mine: Vec<&NedDumpRow> = dump.iter().filter(|r| r.metric == metric).collect();
            assert_eq!(mine.len(), test.len());
            for r in &mine {
                assert_eq!(r.gold, test[r.instance_id.parse::<usize>().unwrap()].gold);
            }
            let acc = mine.iter().filter(|r| r.predicted == r.gold).count() as f64 / mine.len() as f64;
            assert!((acc - lookup("similarity", rep, metric)).abs() < 1e-4, "{rep}/{metric}");
        }
    }
}

#[test]
fn elc_rows_dumps_and_snapshots() {
    let ws = Workspace::new(600, 2);
    ws.eval_elc(&["k_list=1,2,8", "kshot_seeds=3", "metric=l2,dot,cosine", "probe=true", "probe_epochs=5"]);
    let results = read_elc_results(&ws.path("elc/elc_results.tsv")).unwrap();
    let kshot = results.iter().filter(|r| r.k.is_some()).count();
    assert_eq!(kshot, 3 * 3 * 3 * 2);
    assert_eq!(results.iter().filter(|r| r.metric == "probe").count(), 2);
    assert_eq!(results.iter().filter(|r| r.representation == "majority").count(), 1);
    for k in [1, 2, 8] {
        let mut seeds: Vec<u64> = results
            .iter()
            .filter(|r| r.k == Some(k) && r.metric == "l2" && r.representation == "sparse")
            .map(|r| r.seed)
            .collect();
        seeds.dedup();
        assert_eq!(seeds.len(), 3, "K={k} seeds {seeds:?}");
    }

    let test = read_elc(&ws.path("synth/elc/test.jsonl")).unwrap();
    for rep in ["dense", "sparse"] {
        let dump = read_elc_dump(&ws.path(&format!("elc/elc_predictions_{rep}.tsv"))).unwrap();
        for metric in ["l2", "dot", "cosine"] {
            let mine: Vec<_> = dump.iter().filter(|r| r.metric == metric).collect();
            assert_eq!(mine.len(), test.len());
            let acc = mine.iter().filter(|r| r.predicted == r.gold).count() as f64 / mine.len() as f64;
            let row = results.iter().find(|r| r.representation == rep && r.metric == metric && r.k.is_none()).unwrap();
            assert!((acc - row.accuracy).abs() < 1e-4, "{rep}/{metric}: {acc} vs {}", row.accuracy);
        }
    }

    // train and dev form one retrieval pool
    let (header, _) = bier::snapshot::load(&ws.path("elc/index_sparse.bin")).unwrap();
    assert_eq!(header.count, 200 + 200);

    // a saved index reproduces the full-train rows
    let before = std::fs::read_to_string(ws.path("elc/elc_results.tsv")).unwrap();
    let dense = ws.set("index_dense", "elc/index_dense.bin");
    let sparse = ws.set("index_sparse", "elc/index_sparse.bin");
    ws.eval_elc(&[
        "k_list=1,2,8",
        "kshot_seeds=3",
        "metric=l2,dot,cosine",
        "probe=true",
        "probe_epochs=5",
        &dense,
        &sparse,
        "save_index=false",
    ]);
    assert_eq!(std::fs::read_to_string(ws.path("elc/elc_results.tsv")).unwrap(), before);

    // swapped representations are rejected
    let wrong = ws.set("index_dense", "elc/index_sparse.bin");
    let sets = [
        ws.set("checkpoint", "model/model.ckpt"),
        ws.set("elc_train", "synth/elc/train.jsonl"),
        ws.set("elc_test", "synth/elc/test.jsonl"),
        wrong,
    ];
    let err = ws.run_fails("elc2", &["eval", "elc"], &sets.iter().map(String::as_str).collect::<Vec<_>>());
    assert!(err.contains("expected dense"), "{err}");
}

#[test]
fn index_from_another_type_vocabulary_is_rejected() {
    let ws = Workspace::new(200, 1);
    ws.eval_elc(&[]);
    std::fs::write(ws.path("small_vocab.txt"), "only_type\n").unwrap();
    std::fs::write(ws.path("small.jsonl"), "{\"mention\":\"m\",\"context\":\"c\",\"types\":[\"only_type\"]}\n")
        .unwrap();
    let (t, v) = (ws.set("train", "small.jsonl"), ws.set("vocab", "small_vocab.txt"));
    ws.run("other", &["train"], &[&t, &v, "epochs=0", "dim=8", "heads=2", "layers=1", "max_len=8"]);
    let sets = [
        ws.set("checkpoint", "other/model.ckpt"),
        ws.set("elc_train", "synth/elc/train.jsonl"),
        ws.set("elc_test", "synth/elc/test.jsonl"),
        ws.set("index_sparse", "elc/index_sparse.bin"),
        "representation=sparse".into(),
    ];
    let err = ws.run_fails("elc2", &["eval", "elc"], &sets.iter().map(String::as_str).collect::<Vec<_>>());
    assert!(err.contains("type vocabulary"), "{err}");
}

#[test]
fn diagnose_joins_dumps_and_rejects_disjoint_ids() {
    let ws = Workspace::new(300, 1);
    ws.eval_ned();
    ws.eval_elc(&[]);
    let same = [
        ws.set("ned_dense_dump", "ned/ned_predictions_sparse.tsv"),
        ws.set("ned_sparse_dump", "ned/ned_predictions_sparse.tsv"),
    ];
    ws.run("diag_same", &["diagnose"], &same.iter().map(String::as_str).collect::<Vec<_>>());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(ws.path("diag_same/diagnostics.json")).unwrap()).unwrap();
    let ned = &report["tasks"][0];
    assert_eq!(ned["z"].as_array().unwrap().len(), 0);
    assert_eq!(ned["dense_correct"], ned["sparse_correct"]);
    assert_eq!(ned["combined_correct"], ned["sparse_correct"]);

    let sets = [
        ws.set("ned_dense_dump", "ned/ned_predictions_dense.tsv"),
        ws.set("ned_sparse_dump", "ned/ned_predictions_sparse.tsv"),
        ws.set("elc_dense_dump", "elc/elc_predictions_dense.tsv"),
        ws.set("elc_sparse_dump", "elc/elc_predictions_sparse.tsv"),
        ws.set("checkpoint", "model/model.ckpt"),
        ws.set("ned_test", "synth/ned/test.jsonl"),
        ws.set("elc_train", "synth/elc/train.jsonl"),
        ws.set("elc_dev", "synth/elc/dev.jsonl"),
        ws.set("elc_test", "synth/elc/test.jsonl"),
    ];
    ws.run("diag", &["diagnose"], &sets.iter().map(String::as_str).collect::<Vec<_>>());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(ws.path("diag/diagnostics.json")).unwrap()).unwrap();
    for task in report["tasks"].as_array().unwrap() {
        let n = task["n"].as_u64().unwrap();
        let (s, c) = (task["sparse_correct"].as_u64().unwrap(), task["combined_correct"].as_u64().unwrap());
        assert_eq!(c, s + task["z"].as_array().unwrap().len() as u64);
        assert!(c <= n);
    }
    let combined = std::fs::read_to_string(ws.path("diag/combined.tsv")).unwrap();
    assert!(combined.starts_with("task\tdense\tsparse\tcombined\tdelta\nNED\t"));

    let mut dump = read_ned_dump(&ws.path("ned/ned_predictions_dense.tsv")).unwrap();
    dump.retain(|r| r.instance_id != "0");
    write_ned_dump(&ws.path("partial.tsv"), &dump).unwrap();
    let disjoint =
        [ws.set("ned_dense_dump", "partial.tsv"), ws.set("ned_sparse_dump", "ned/ned_predictions_sparse.tsv")];
    let err = ws.run_fails("diag_bad", &["diagnose"], &disjoint.iter().map(String::as_str).collect::<Vec<_>>());
    assert!(err.contains("only sparse: [0]"), "{err}");
}

#[test]
fn build_corpus_recovers_the_type_system() {
    let tmp = tempfile::tempdir().unwrap();
    let out = |rel: &str| tmp.path().join(rel).display().to_string();
    ok(&[
        "synth",
        "--seed",
        "0",
        "--out",
        &out("s"),
        "--set",
        "typing_train=10",
        "--set",
        "ned_pool=100",
        "--set",
        "ned_train=10",
        "--set",
        "ned_test=10",
        "--set",
        "ned_dev=5",
    ]);
    let set = |k: &str, f: &str| format!("{k}={}", out(&format!("s/corpus/{f}")));
    let sets = [
        set("mentions", "mentions.jsonl"),
        set("linker", "linker.tsv"),
        set("concept_map", "concept_map.tsv"),
        set("categories", "categories.tsv"),
        set("fallback", "fallback.tsv"),
    ];
    let mut args = vec!["build-corpus", "--seed", "0"];
    let dir = out("c");
    args.extend(["--out", &dir]);
    for s in &sets {
        args.extend(["--set", s]);
    }
    ok(&args);
    let stats: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("c/stats.json")).unwrap()).unwrap();
    assert_eq!(stats["types"], 200, "{stats}");
    let vocab = std::fs::read_to_string(tmp.path().join("c/vocab.txt")).unwrap();
    assert_eq!(vocab.lines().count(), 200);

    std::fs::write(tmp.path().join("empty.jsonl"), "").unwrap();
    let empty = format!("mentions={}", tmp.path().join("empty.jsonl").display());
    let mut args = vec!["build-corpus", "--seed", "0", "--out", &dir, "--set", &empty];
    for s in &sets[1..] {
        args.extend(["--set", s]);
    }
    let err = fails(&args);
    assert!(err.starts_with("error:"), "{err}");
}

#[test]
fn zero_epoch_training_writes_a_loadable_checkpoint() {
    let tmp = tempfile::tempdir().unwrap();
    let train = tmp.path().join("t.jsonl");
    std::fs::write(&train, "{\"mention\":\"aspirin\",\"context\":\"aspirin relieves pain\",\"types\":[\"drug\"]}\n")
        .unwrap();
    let out = tmp.path().join("m");
    ok(&[
        "train",
        "--seed",
        "1",
        "--out",
        out.to_str().unwrap(),
        "--set",
        &format!("train={}", train.display()),
        "--set",
        "epochs=0",
        "--set",
        "dim=8",
        "--set",
        "heads=2",
    ]);
    let model = bier::checkpoint::load(&out.join("model.ckpt")).unwrap();
    assert_eq!(model.types.names(), ["drug"]);
    assert_eq!(std::fs::read_to_string(out.join("train_log.tsv")).unwrap().lines().count(), 1);
}

#[test]
fn missing_seed_and_unknown_keys_are_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("x").display().to_string();
    let err = fails(&["synth", "--out", &out]);
    assert!(err.contains("seed"), "{err}");
    let err = fails(&["synth", "--seed", "1", "--out", &out, "--set", "no_such_key=1"]);
    assert!(err.contains("no_such_key"), "{err}");
}

#[test]
fn config_file_paths_resolve_against_its_directory() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::create_dir(tmp.path().join("cfg")).unwrap();
    std::fs::write(tmp.path().join("cfg/run.conf"), "# synthetic world\nseed = 3\nout = generated\ntyping_train = 20\nned_pool = 50\nned_train = 5\nned_dev = 5\nned_test = 5\ndocs = 10\n").unwrap();
    ok(&["synth", "--config", tmp.path().join("cfg/run.conf").to_str().unwrap()]);
    assert!(tmp.path().join("cfg/generated/typing/train.jsonl").exists());
    assert!(tmp.path().join("cfg/generated/ned/test.jsonl").exists());
}
