//! End-to-end subcommand smoke tests against the built binary.

use std::path::{Path, PathBuf};
use std::process::Command;

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_oilpore")
}

fn workdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("oilpore-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

const TINY_GENERATE: &str = "\
[dataset]
count = 2
obstacle_mode = one-or-two
grid_width = 48
grid_height = 32
t_end = 1.0
base_seed = 5

[solver]
dt = 0.02
stride = 5
";

fn generate_tiny(dir: &Path) -> PathBuf {
    let config = write_config(dir, "gen.cfg", TINY_GENERATE);
    let data = dir.join("data");
    let status = Command::new(binary())
        .args(["generate", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&data)
        .status()
        .unwrap();
    assert!(status.success());
    data
}

#[test]
fn generate_writes_records_and_manifest() {
    let dir = workdir("generate");
    let data = generate_tiny(&dir);
    assert!(data.join("rec_00000.tpf").exists());
    assert!(data.join("rec_00001.tpf").exists());
    assert!(data.join("manifest.txt").exists());
    assert!(data.join("run_manifest.txt").exists());
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn rerun_with_same_seed_is_byte_identical() {
    let dir = workdir("rerun");
    let config = write_config(&dir, "gen.cfg", TINY_GENERATE);
    for sub in ["a", "b"] {
        let status = Command::new(binary())
            .args(["generate", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(dir.join(sub))
            .status()
            .unwrap();
        assert!(status.success());
    }
    for file in ["rec_00000.tpf", "rec_00001.tpf", "manifest.txt"] {
        let a = std::fs::read(dir.join("a").join(file)).unwrap();
        let b = std::fs::read(dir.join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs across reruns");
    }
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn unknown_subcommand_exits_with_usage() {
    let output = Command::new(binary()).arg("frobnicate").output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("usage"), "{stderr}");
}

#[test]
fn malformed_config_exits_with_field_error() {
    let dir = workdir("badcfg");
    let config = write_config(&dir, "bad.cfg", "[dataset]\ncount = many\n");
    let output = Command::new(binary())
        .args(["generate", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("dataset.count"), "{stderr}");
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn train_evaluate_and_ablate_pipelines_run() {
    let dir = workdir("pipeline");
    // four records so the ceil-based split leaves two for training
    let config = write_config(&dir, "gen4.cfg", &TINY_GENERATE.replace("count = 2", "count = 4"));
    let data = dir.join("data");
    let status = Command::new(binary())
        .args(["generate", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&data)
        .status()
        .unwrap();
    assert!(status.success());

    // tiny model, tiny training run
    let train_cfg = write_config(
        &dir,
        "train.cfg",
        "[model]\narch = unet\nk = 2\nhidden = 8\nunet_multipliers = 1, 2\nunet_depth = 1\n\n\
         [training]\nepochs = 2\nbase_lr = 1e-3\nbatch_size = 4\nsamples_per_record = 2\n\
         val_every = 1\nval_records = 1\nmax_unroll = 1\nseed = 3\n",
    );
    let run = dir.join("run");
    let status = Command::new(binary())
        .args(["train", "--config"])
        .arg(&train_cfg)
        .args(["--data"])
        .arg(&data)
        .args(["--out"])
        .arg(&run)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(run.join("model.ckpt").exists());
    assert!(run.join("best.ckpt").exists());
    assert!(run.join("history.csv").exists());
    assert!(run.join("run_manifest.txt").exists());

    // evaluate the trained checkpoint
    let eval_out = dir.join("eval");
    let status = Command::new(binary())
        .args(["evaluate", "--model"])
        .arg(run.join("model.ckpt"))
        .args(["--data"])
        .arg(&data)
        .args(["--out"])
        .arg(&eval_out)
        .status()
        .unwrap();
    assert!(status.success());
    let metrics = std::fs::read_to_string(eval_out.join("metrics.csv")).unwrap();
    assert!(metrics.starts_with("record,rollout_mse,persistence_mse"));
    assert!(metrics.lines().count() >= 3);

    // ablation summary with the no-inv variant
    let ablate_out = dir.join("ablate");
    let status = Command::new(binary())
        .args(["ablate", "--config"])
        .arg(&train_cfg)
        .args(["--data"])
        .arg(&data)
        .args(["--flags", "all, no-inv"])
        .args(["--out"])
        .arg(&ablate_out)
        .status()
        .unwrap();
    assert!(status.success());
    let ablation = std::fs::read_to_string(ablate_out.join("ablation.csv")).unwrap();
    assert!(ablation.contains("no-inv"), "{ablation}");
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn evaluate_rejects_mismatched_grid_dims() {
    let dir = workdir("mismatch");
    let data = generate_tiny(&dir);

    // a checkpoint built for a different grid
    let spec = oilpore_surrogate::ModelSpec::unet(2, 8, vec![1, 2], 1);
    let model = oilpore_surrogate::SurrogateModel::build(&spec, 16, 24, 1).unwrap();
    let ckpt = dir.join("wrong.ckpt");
    oilpore_surrogate::save_checkpoint(&model, &ckpt).unwrap();

    let output = Command::new(binary())
        .args(["evaluate", "--model"])
        .arg(&ckpt)
        .args(["--data"])
        .arg(&data)
        .args(["--out"])
        .arg(dir.join("out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("model.grid"), "{stderr}");
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn json_config_is_accepted_by_extension() {
    let dir = workdir("json");
    let config = write_config(
        &dir,
        "gen.json",
        r#"{"dataset": {"count": 1, "grid_width": 48, "grid_height": 32, "t_end": 0.5,
             "base_seed": 9, "obstacle_mode": "none"},
            "solver": {"dt": 0.02, "stride": 5}}"#,
    );
    let out = dir.join("out");
    let status = Command::new(binary())
        .args(["generate", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("rec_00000.tpf").exists());
    let _ = std::fs::remove_dir_all(&dir);
}
