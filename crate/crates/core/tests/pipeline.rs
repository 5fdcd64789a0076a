use std::path::{Path, PathBuf};

use compeval::pipeline::*;

fn smoke_config() -> PipelineConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/smoke.toml");
    PipelineConfig::load(&path).unwrap()
}

fn run_smoke() -> (tempfile::TempDir, Workspace) {
    let dir = tempfile::tempdir().unwrap();
    let ws = Workspace::new(dir.path());
    run_all(&smoke_config(), &ws).unwrap();
    (dir, ws)
}

#[test]
fn full_run_writes_chained_manifests() {
    let (_dir, ws) = run_smoke();
    for stage in Stage::ALL {
        let m = ws.manifest(stage).unwrap();
        assert_eq!(m.stage, stage);
        for up in stage.upstream() {
            let text = ws.read(up.manifest_path()).unwrap();
            assert_eq!(m.inputs[up.as_str()], compeval::hashing::sha256_hex(text.as_bytes()));
        }
        for (rel, hash) in &m.outputs {
            let bytes = std::fs::read(ws.path(rel)).unwrap();
            assert_eq!(&compeval::hashing::sha256_hex(&bytes), hash, "{rel}");
        }
    }
    let report = ws.read(FINAL_REPORT).unwrap();
    assert!(report.contains("[onehot-probe]"));
    assert!(report.contains("split clean"));
}

#[test]
fn rerun_is_bit_identical() {
    let (_a, first) = run_smoke();
    let (_b, second) = run_smoke();
    assert_eq!(first.read(FINAL_REPORT).unwrap(), second.read(FINAL_REPORT).unwrap());
    assert_eq!(first.read(PROBE_RECORDS).unwrap(), second.read(PROBE_RECORDS).unwrap());
}

#[test]
fn tampered_output_is_rejected() {
    let (_dir, ws) = run_smoke();
    let target = ws.path(vectors_file(BOW));
    let mut text = std::fs::read_to_string(&target).unwrap();
    text.push('\n');
    std::fs::write(&target, text).unwrap();
    match run_stage(Stage::Probe, &smoke_config(), &ws) {
        Err(PipelineError::HashMismatch { path, .. }) => assert_eq!(path, target),
        other => panic!("expected hash mismatch, got {other:?}"),
    }
}

#[test]
fn changed_config_invalidates_downstream() {
    let (_dir, ws) = run_smoke();
    let mut cfg = smoke_config();
    cfg.seed += 1;
    assert!(matches!(run_stage(Stage::BuildTasks, &cfg, &ws), Err(PipelineError::HashMismatch { .. })));
}

#[test]
fn probe_without_embeddings_names_the_missing_file() {
    let dir = tempfile::tempdir().unwrap();
    let ws = Workspace::new(dir.path());
    let err = run_stage(Stage::Probe, &smoke_config(), &ws).unwrap_err();
    let PipelineError::MissingInput { path, stage } = &err else { panic!("{err:?}") };
    assert_eq!(*stage, Stage::Embed);
    assert_eq!(path, &ws.path(Stage::Embed.manifest_path()));
    let message = err.to_string();
    assert!(message.contains("missing input"), "{message}");
    assert!(message.contains(&path.display().to_string()), "{message}");
}

#[test]
fn deleted_output_is_a_missing_input() {
    let dir = tempfile::tempdir().unwrap();
    let ws = Workspace::new(dir.path());
    let cfg = smoke_config();
    run_stage(Stage::Generate, &cfg, &ws).unwrap();
    let rel: PathBuf = ws.manifest(Stage::Generate).unwrap().outputs.keys().next().unwrap().into();
    std::fs::remove_file(ws.path(&rel)).unwrap();
    match run_stage(Stage::BuildTasks, &cfg, &ws) {
        Err(PipelineError::MissingInput { path, stage: Stage::Generate }) => assert_eq!(path, ws.path(&rel)),
        other => panic!("expected missing input, got {other:?}"),
    }
}

#[test]
fn config_errors() {
    let base = Path::new(".");
    assert!(matches!(PipelineConfig::from_toml("seed = 1\nsede = 2\n", base), Err(PipelineError::Config(_))));
    assert!(matches!(PipelineConfig::from_toml("[tasks]\ntrain = \"many\"\n", base), Err(PipelineError::Config(_))));
    let err = PipelineConfig::from_toml("[constraints]\nParsing = \"x.txt\"\n", base).unwrap_err();
    assert!(matches!(err, PipelineError::Config(_)), "{err}");
    let cfg = PipelineConfig::from_toml("", base).unwrap();
    assert_eq!(cfg.tasks.train, 4000);
}
