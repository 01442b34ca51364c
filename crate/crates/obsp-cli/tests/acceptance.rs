//! End-to-end checks of the `obsp` binary: every subcommand run twice with
//! the same config and seed must reproduce its output files byte for byte,
//! and error paths must exit nonzero with a message.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use obsp_core::nn::{encode_checkpoint, PolicyValueNet};

fn obsp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_obsp"))
        .args(args)
        .output()
        .expect("failed to spawn obsp")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "obsp failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort_by(|a, b| a.0.cmp(&b.0));
    files
}

fn assert_dirs_identical(a: &Path, b: &Path) {
    let fa = dir_contents(a);
    let fb = dir_contents(b);
    let names_a: Vec<&String> = fa.iter().map(|(n, _)| n).collect();
    let names_b: Vec<&String> = fb.iter().map(|(n, _)| n).collect();
    assert_eq!(names_a, names_b, "different file sets in {a:?} vs {b:?}");
    for ((name, bytes_a), (_, bytes_b)) in fa.iter().zip(&fb) {
        assert_eq!(bytes_a, bytes_b, "file {name} differs between runs");
    }
}

/// Small-instance overrides shared by the rerun tests.
const TINY: &[&str] = &["--set", "instance.orders=12", "--set", "instance.pickers=2"];

fn run_twice(base: &[String], dir_a: &Path, dir_b: &Path) {
    for dir in [dir_a, dir_b] {
        let mut args: Vec<String> = base.to_vec();
        args.push("--out-dir".to_string());
        args.push(dir.to_str().unwrap().to_string());
        let args: Vec<&str> = args.iter().map(|s| s.as_str()).collect();
        assert_ok(&obsp(&args));
    }
    assert_dirs_identical(dir_a, dir_b);
}

#[test]
fn criterion_11_reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let tiny: Vec<String> = TINY.iter().map(|s| s.to_string()).collect();

    let mut generate = vec!["generate".to_string(), "--seed".to_string(), "5".to_string(), "--count".to_string(), "3".to_string()];
    generate.extend(tiny.clone());
    run_twice(&generate, &tmp.path().join("gen_a"), &tmp.path().join("gen_b"));

    let mut bench = vec!["bench".to_string(), "--seed".to_string(), "5".to_string(), "--set".to_string(), "bench.instances=4".to_string()];
    bench.extend(tiny.clone());
    run_twice(&bench, &tmp.path().join("bench_a"), &tmp.path().join("bench_b"));

    let mut train = vec![
        "train".to_string(),
        "--seed".to_string(),
        "5".to_string(),
        "--set".to_string(),
        "ppo.rollout_steps=64".to_string(),
        "--set".to_string(),
        "ppo.minibatch_size=32".to_string(),
        "--set".to_string(),
        "train.total_steps=128".to_string(),
    ];
    train.extend(tiny.clone());
    run_twice(&train, &tmp.path().join("train_a"), &tmp.path().join("train_b"));

    let ckpt = tmp.path().join("train_a").join("policy.ckpt");
    let ckpt = ckpt.to_str().unwrap();
    for policy in ["greedy", "sampled", "random"] {
        let mut eval = vec![
            "eval".to_string(),
            "--seed".to_string(),
            "7".to_string(),
            "--policy".to_string(),
            policy.to_string(),
            "--set".to_string(),
            "eval.episodes=3".to_string(),
        ];
        if policy != "random" {
            eval.push("--checkpoint".to_string());
            eval.push(ckpt.to_string());
        }
        eval.extend(tiny.clone());
        run_twice(
            &eval,
            &tmp.path().join(format!("eval_{policy}_a")),
            &tmp.path().join(format!("eval_{policy}_b")),
        );
    }

    let mut trace = vec![
        "trace".to_string(),
        "--seed".to_string(),
        "5".to_string(),
        "--batching".to_string(),
        "lst-posb".to_string(),
        "--sequencing".to_string(),
        "lst".to_string(),
    ];
    trace.extend(tiny);
    run_twice(&trace, &tmp.path().join("trace_a"), &tmp.path().join("trace_b"));

    println!("criterion 11 (rerun with same config hash is byte-identical): PASS");
}

#[test]
fn every_output_file_carries_the_config_stamp() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("out");
    let mut args = vec!["bench", "--seed", "3", "--set", "bench.instances=2"];
    args.extend_from_slice(TINY);
    args.push("--out-dir");
    let dir_s = dir.to_str().unwrap().to_string();
    args.push(&dir_s);
    assert_ok(&obsp(&args));

    let csv = fs::read_to_string(dir.join("bench.csv")).unwrap();
    let first = csv.lines().next().unwrap();
    assert!(first.starts_with("# config="), "stamp line missing: {first}");
    assert!(first.contains("seed=3"));
    let manifest = fs::read_to_string(dir.join("manifest.txt")).unwrap();
    let hash = first
        .split_whitespace()
        .find_map(|t| t.strip_prefix("config="))
        .unwrap();
    assert!(manifest.contains(&format!("config = {hash}")), "manifest hash mismatch");
    assert!(manifest.contains("seed = 3"));
    assert!(manifest.contains("file = bench.csv"));
}

#[test]
fn config_file_and_set_overrides_agree() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = tmp.path().join("exp.cfg");
    fs::write(&cfg_path, "[instance]\norders = 12\npickers = 2\n").unwrap();

    let dir_file = tmp.path().join("by_file");
    assert_ok(&obsp(&[
        "generate",
        "--seed",
        "9",
        "--count",
        "2",
        "--config",
        cfg_path.to_str().unwrap(),
        "--out-dir",
        dir_file.to_str().unwrap(),
    ]));

    let dir_set = tmp.path().join("by_set");
    let mut args = vec!["generate", "--seed", "9", "--count", "2"];
    args.extend_from_slice(TINY);
    args.push("--out-dir");
    let dir_s = dir_set.to_str().unwrap().to_string();
    args.push(&dir_s);
    assert_ok(&obsp(&args));

    assert_dirs_identical(&dir_file, &dir_set);
}

#[test]
fn errors_exit_nonzero_with_a_message() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let out_s = out.to_str().unwrap();

    // Unknown config key.
    let bad_key = obsp(&["bench", "--seed", "1", "--set", "instance.workers=5", "--out-dir", out_s]);
    assert!(!bad_key.status.success());
    assert!(String::from_utf8_lossy(&bad_key.stderr).contains("unknown key"));

    // Invalid value caught by validation.
    let bad_value = obsp(&["bench", "--seed", "1", "--set", "instance.pickers=0", "--out-dir", out_s]);
    assert!(!bad_value.status.success());

    // Zero eval episodes.
    let zero_eval = obsp(&["eval", "--seed", "1", "--policy", "random", "--set", "eval.episodes=0", "--out-dir", out_s]);
    assert!(!zero_eval.status.success());

    // Checkpoint required for policy evaluation.
    let no_ckpt = obsp(&["eval", "--seed", "1", "--set", "eval.episodes=2", "--out-dir", out_s]);
    assert!(!no_ckpt.status.success());
    assert!(String::from_utf8_lossy(&no_ckpt.stderr).contains("--checkpoint"));

    // A checkpoint with the wrong layout is refused with an explicit message.
    let alien = PolicyValueNet::new(8, 4, 4, 5, 1);
    let ckpt_path = tmp.path().join("alien.ckpt");
    fs::write(&ckpt_path, encode_checkpoint(&alien, None)).unwrap();
    let mismatched = obsp(&[
        "eval",
        "--seed",
        "1",
        "--checkpoint",
        ckpt_path.to_str().unwrap(),
        "--set",
        "eval.episodes=2",
        "--out-dir",
        out_s,
    ]);
    assert!(!mismatched.status.success());
    let stderr = String::from_utf8_lossy(&mismatched.stderr);
    assert!(stderr.contains("23 inputs"), "unexpected message: {stderr}");

    // A corrupt checkpoint is refused.
    let garbage_path = tmp.path().join("garbage.ckpt");
    fs::write(&garbage_path, b"not a checkpoint").unwrap();
    let corrupt = obsp(&[
        "eval",
        "--seed",
        "1",
        "--checkpoint",
        garbage_path.to_str().unwrap(),
        "--set",
        "eval.episodes=2",
        "--out-dir",
        out_s,
    ]);
    assert!(!corrupt.status.success());
}
