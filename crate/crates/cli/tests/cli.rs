use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn smoke_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/smoke.toml")
}

fn compeval(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_compeval"))
        .arg("--config")
        .arg(smoke_config())
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .unwrap()
}

#[test]
fn probe_before_embed_fails_with_missing_input() {
    let dir = tempfile::tempdir().unwrap();
    let out = compeval(dir.path(), &["probe"]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("missing input"), "{stderr}");
    assert!(stderr.contains("embed.json"), "{stderr}");
    assert!(stderr.contains("run `embed` first"), "{stderr}");
}

#[test]
fn generate_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let out = compeval(dir.path(), &["generate"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("manifests/generate.json").exists());
    let pools: Vec<_> = std::fs::read_dir(dir.path().join("pools")).unwrap().collect();
    assert!(!pools.is_empty());

    let again = compeval(dir.path(), &["build-tasks"]);
    assert!(again.status.success(), "{}", String::from_utf8_lossy(&again.stderr));
    assert!(dir.path().join("tasks/Order.tsv").exists());
}

#[test]
fn show_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = compeval(dir.path(), &["--seed", "9", "show-config"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("seed = 9"), "{text}");
    let path = dir.path().join("shown.toml");
    std::fs::write(&path, &text).unwrap();
    let reparsed = Command::new(env!("CARGO_BIN_EXE_compeval"))
        .arg("--config")
        .arg(&path)
        .arg("show-config")
        .output()
        .unwrap();
    assert_eq!(String::from_utf8(reparsed.stdout).unwrap(), text);
}

#[test]
fn unknown_stage_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = compeval(dir.path(), &["run", "--stage", "parse"]);
    assert!(!out.status.success());
}
