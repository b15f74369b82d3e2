use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn write_graph(dir: &Path) {
    fs::create_dir_all(dir).unwrap();
    let (ne, nr) = (12u32, 2u32);
    fs::write(dir.join("entities.dict"), (0..ne).map(|i| format!("{i}\tent{i}\n")).collect::<String>()).unwrap();
    fs::write(dir.join("relations.dict"), (0..nr).map(|i| format!("{i}\trel{i}\n")).collect::<String>()).unwrap();
    let edge = |i: u32| format!("{}\t{}\t{}\n", i % ne, i % nr, (i * 7 + 3) % ne);
    fs::write(dir.join("train.txt"), (0..40).map(edge).collect::<String>()).unwrap();
    fs::write(dir.join("valid.txt"), (40..46).map(edge).collect::<String>()).unwrap();
    fs::write(dir.join("test.txt"), (46..52).map(edge).collect::<String>()).unwrap();
}

fn betae(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_betae")).current_dir(dir).arg("--threads").arg("1").args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

/// A graph, a dataset and a 20-step checkpoint.
fn prepared() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    write_graph(&dir.path().join("g"));
    let gen = betae(dir.path(), &["generate", "--graph-dir", "g", "--dataset-dir", "d", "--train-queries", "30", "--eval-queries", "5"]);
    assert_eq!(code(&gen), 0, "{}", String::from_utf8_lossy(&gen.stderr));
    let train = betae(dir.path(), &["train", "--graph-dir", "g", "--dataset-dir", "d", "--checkpoint", "m.ckpt", "--steps", "20", "--batch", "8", "--dim", "4"]);
    assert_eq!(code(&train), 0, "{}", String::from_utf8_lossy(&train.stderr));
    dir
}

#[test]
fn pipeline_commands_succeed() {
    let dir = prepared();
    let p = dir.path();
    let ingest = betae(p, &["ingest", "--graph-dir", "g"]);
    assert_eq!(code(&ingest), 0);
    assert!(String::from_utf8_lossy(&ingest.stdout).contains("12 entities, 2 relations"));
    assert!(p.join("g/manifest.sha256").exists());

    let eval = betae(p, &["eval", "--graph-dir", "g", "--dataset-dir", "d", "--checkpoint", "m.ckpt", "--union", "dm", "--rank-dump", "r.tsv"]);
    assert_eq!(code(&eval), 0, "{}", String::from_utf8_lossy(&eval.stderr));
    assert!(String::from_utf8_lossy(&eval.stdout).contains("MRR"));
    assert!(p.join("r.tsv").exists());

    assert_eq!(code(&betae(p, &["correlate", "--graph-dir", "g", "--dataset-dir", "d", "--checkpoint", "m.ckpt"])), 0);
    assert_eq!(code(&betae(p, &["classify-empty", "--graph-dir", "g", "--checkpoint", "m.ckpt", "--count", "5", "--min-answers", "0"])), 0);

    let answer = betae(p, &["answer", "--checkpoint", "m.ckpt", "--graph-dir", "g", "-k", "3", "(p 0 (e 1))"]);
    assert_eq!(code(&answer), 0, "{}", String::from_utf8_lossy(&answer.stderr));
    let text = String::from_utf8_lossy(&answer.stdout);
    assert!(text.contains("ent"), "{text}");

    let resume = betae(p, &["train", "--graph-dir", "g", "--dataset-dir", "d", "--checkpoint", "m.ckpt", "--resume", "--steps", "30"]);
    assert_eq!(code(&resume), 0, "{}", String::from_utf8_lossy(&resume.stderr));
    assert!(String::from_utf8_lossy(&resume.stdout).contains("trained steps 20..30"));
}

#[test]
fn usage_and_configuration_errors_exit_with_one() {
    let dir = prepared();
    let p = dir.path();
    assert_eq!(code(&betae(p, &["frobnicate"])), 1);
    assert_eq!(code(&betae(p, &["eval", "--graph-dir", "g"])), 1);
    assert_eq!(code(&betae(p, &["ingest", "--graph-dir", "missing"])), 1);
    assert_eq!(code(&Command::new(env!("CARGO_BIN_EXE_betae")).args(["--threads", "0", "ingest", "--graph-dir", "g"]).current_dir(p).output().unwrap()), 1);
    let train = ["train", "--graph-dir", "g", "--dataset-dir", "d", "--checkpoint", "n.ckpt"];
    assert_eq!(code(&betae(p, &[&train[..], &["--lr", "-1"]].concat())), 1);
    fs::write(p.join("bad.conf"), "gamma = 3\nno_such_key = 1\n").unwrap();
    let out = betae(p, &[&train[..], &["--config", "bad.conf"]].concat());
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.conf:2"));
    let resume = ["train", "--graph-dir", "g", "--dataset-dir", "d", "--checkpoint", "m.ckpt", "--resume", "--dim", "9"];
    assert_eq!(code(&betae(p, &resume)), 1);
    assert_eq!(code(&betae(p, &["answer", "--checkpoint", "m.ckpt", "--union", "both", "(p 0 (e 1))"])), 1);
    assert_eq!(code(&betae(p, &["--help"])), 0);
}

#[test]
fn data_errors_exit_with_two() {
    let dir = prepared();
    let p = dir.path();
    let parse = betae(p, &["answer", "--checkpoint", "m.ckpt", "(p 0 (e 1)"]);
    assert_eq!(code(&parse), 2);
    assert!(!parse.stderr.is_empty());
    assert_eq!(code(&betae(p, &["answer", "--checkpoint", "m.ckpt", "(p 0 (e 99))"])), 2);
    fs::write(p.join("junk.ckpt"), b"not a checkpoint").unwrap();
    assert_eq!(code(&betae(p, &["answer", "--checkpoint", "junk.ckpt", "(p 0 (e 1))"])), 2);
    fs::write(p.join("g/train.txt"), "0\t0\n").unwrap();
    assert_eq!(code(&betae(p, &["ingest", "--graph-dir", "g"])), 2);
}

#[test]
fn numerical_failure_exits_with_three() {
    let dir = prepared();
    let out = betae(
        dir.path(),
        &["train", "--graph-dir", "g", "--dataset-dir", "d", "--checkpoint", "x.ckpt", "--steps", "10", "--lr", "1e308"],
    );
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}
