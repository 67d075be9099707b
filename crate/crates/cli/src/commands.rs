//! Subcommand pipelines.

use crate::args::CliArgs;
use crate::configio::load_config;
use crate::runmeta::RunMeta;
use crate::CliError;
use oilpore_core::ScenarioParams;
use oilpore_data::{generate_dataset, Dataset, DatasetConfig, MANIFEST_NAME};
use oilpore_eval::{
    ablation_csv, apply_ablation, mean_rollout_mse, pareto_front, rollout_mse, sensitivity_csv,
    sensitivity_experiment, time_inference, work_precision_csv, AblationVariant,
    PersistenceStub, WorkPrecisionRow,
};
use oilpore_solver::{MaterialModel, SolverConfig};
use oilpore_surrogate::{
    load_checkpoint, save_checkpoint, HasParams, ModelSpec, SurrogateModel,
};
use oilpore_train::{history_to_csv, train as run_training, StopReason, TrainConfig};
use std::path::Path;

fn ensure_out(out: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out)?;
    Ok(())
}

fn dataset_grid(dataset: &Dataset) -> Result<(usize, usize), CliError> {
    let record = dataset
        .train
        .first()
        .or(dataset.val.first())
        .or(dataset.test.first())
        .ok_or_else(|| CliError::Config("dataset is empty".into()))?;
    Ok((record.height(), record.width()))
}

pub fn generate(args: &CliArgs) -> Result<(), CliError> {
    let doc = load_config(args.config.as_deref())?;
    let out = args.require_out()?;
    ensure_out(&out)?;
    let mut dataset_cfg = DatasetConfig::from_doc(&doc)?;
    if let Some(seed) = args.seed {
        dataset_cfg.base_seed = seed;
    }
    let solver_cfg = SolverConfig::from_doc(&doc)?;
    let grid = dataset_cfg.grid()?;
    let material = MaterialModel::from_doc(&doc, &grid)?;

    let mut meta = RunMeta::start("generate", &doc, Some(dataset_cfg.base_seed));
    let manifest = generate_dataset(&dataset_cfg, &solver_cfg, &material, &out)?;
    for entry in &manifest.entries {
        meta.add_artifact(&out.join(&entry.file));
    }
    meta.add_artifact(&out.join(MANIFEST_NAME));
    meta.finish(&out)?;
    println!(
        "generated {} records into {}",
        manifest.entries.len(),
        out.display()
    );
    Ok(())
}

pub fn train(args: &CliArgs) -> Result<(), CliError> {
    let doc = load_config(args.config.as_deref())?;
    let out = args.require_out()?;
    ensure_out(&out)?;
    let data_dir = args.require_data()?;
    let dataset = Dataset::load(&data_dir)?;
    let (grid_h, grid_w) = dataset_grid(&dataset)?;

    let spec = ModelSpec::from_doc(&doc)?;
    let mut train_cfg = TrainConfig::from_doc(&doc)?;
    if let Some(seed) = args.seed {
        train_cfg.seed = seed;
    }
    let model = SurrogateModel::build(&spec, grid_h, grid_w, train_cfg.seed)?;
    println!(
        "training {} ({} parameters) on {} records",
        spec.tag().as_str(),
        model.parameter_count(),
        dataset.train.len()
    );

    let mut meta = RunMeta::start("train", &doc, Some(train_cfg.seed));
    let outcome = run_training(model, &dataset, &train_cfg)?;
    if let StopReason::Diverged { epoch } = outcome.stop {
        eprintln!("warning: training diverged at epoch {epoch}; last good parameters kept");
    }
    let model_path = out.join("model.ckpt");
    save_checkpoint(&outcome.model, &model_path)?;
    let best_path = out.join("best.ckpt");
    std::fs::write(&best_path, &outcome.best_checkpoint)?;
    let history_path = out.join("history.csv");
    std::fs::write(&history_path, history_to_csv(&outcome.history))?;
    meta.add_artifact(&model_path);
    meta.add_artifact(&best_path);
    meta.add_artifact(&history_path);
    meta.finish(&out)?;
    println!(
        "trained for {} epochs; best validation rollout MSE {:.4e}",
        outcome.history.len(),
        outcome.best_val
    );
    Ok(())
}

pub fn evaluate(args: &CliArgs) -> Result<(), CliError> {
    let doc = load_config(args.config.as_deref())?;
    let out = args.require_out()?;
    ensure_out(&out)?;
    let model = load_checkpoint(&args.require_model()?)?;
    let dataset = Dataset::load(&args.require_data()?)?;
    let (grid_h, grid_w) = dataset_grid(&dataset)?;
    if (model.grid_h, model.grid_w) != (grid_h, grid_w) {
        return Err(CliError::Config(format!(
            "model.grid: checkpoint was built for {}x{} but the dataset is {}x{}",
            model.grid_w, model.grid_h, grid_w, grid_h
        )));
    }
    let records = if dataset.test.is_empty() {
        &dataset.train
    } else {
        &dataset.test
    };

    let mut meta = RunMeta::start("evaluate", &doc, args.seed);
    let persistence = PersistenceStub { k: model.spec.k };
    let mut csv = String::from("record,rollout_mse,persistence_mse,disintegrated_frames\n");
    let mut total = 0.0;
    let mut total_persistence = 0.0;
    for (idx, record) in records.iter().enumerate() {
        let metrics = rollout_mse(&model, record)?;
        let baseline = rollout_mse(&persistence, record)?;
        csv.push_str(&format!(
            "{idx},{:.8e},{:.8e},{}\n",
            metrics.mse, baseline.mse, metrics.disintegrated_frames
        ));
        total += metrics.mse;
        total_persistence += baseline.mse;
    }
    let n = records.len().max(1) as f64;
    csv.push_str(&format!(
        "mean,{:.8e},{:.8e},\n",
        total / n,
        total_persistence / n
    ));
    let metrics_path = out.join("metrics.csv");
    std::fs::write(&metrics_path, csv)?;
    meta.add_artifact(&metrics_path);
    meta.finish(&out)?;
    println!(
        "rollout MSE {:.4e} vs persistence {:.4e} over {} records",
        total / n,
        total_persistence / n,
        records.len()
    );
    Ok(())
}

pub fn bench(args: &CliArgs) -> Result<(), CliError> {
    let doc = load_config(args.config.as_deref())?;
    let out = args.require_out()?;
    ensure_out(&out)?;
    let dataset = Dataset::load(&args.require_data()?)?;
    let records = if dataset.test.is_empty() {
        &dataset.train
    } else {
        &dataset.test
    };
    let (grid_h, grid_w) = dataset_grid(&dataset)?;
    let sample_mask = records
        .first()
        .map(|r| r.mask.clone())
        .ok_or_else(|| CliError::Config("no records to benchmark against".into()))?;

    let reps = doc.get_usize("bench", "reps")?.unwrap_or(20);
    let warmups = doc.get_usize("bench", "warmups")?.unwrap_or(3);
    let model_list = doc
        .get("bench", "models")
        .map(|list| {
            list.split(',')
                .map(|p| p.trim().to_string())
                .filter(|p| !p.is_empty())
                .collect::<Vec<_>>()
        })
        .or_else(|| args.model.clone().map(|m| vec![m]))
        .ok_or_else(|| {
            CliError::Config("bench.models (or --model) must list checkpoints".into())
        })?;

    let grid = oilpore_core::GridSpec::standard(grid_w, grid_h)?;
    let material = MaterialModel::from_doc(&doc, &grid)?;
    let solver_cfg = SolverConfig::from_doc(&doc)?;

    let mut meta = RunMeta::start("bench", &doc, args.seed);
    let mut rows = Vec::new();
    for path in &model_list {
        let model = load_checkpoint(Path::new(path))?;
        if (model.grid_h, model.grid_w) != (grid_h, grid_w) {
            return Err(CliError::Config(format!(
                "model.grid: {path} was built for {}x{}, dataset is {}x{}",
                model.grid_w, model.grid_h, grid_w, grid_h
            )));
        }
        let mse = mean_rollout_mse(&model, records)?;
        let timing = time_inference(
            &model,
            &sample_mask,
            &material,
            &solver_cfg,
            -5.0,
            reps,
            warmups,
        )?;
        println!(
            "{path}: mse {mse:.4e}, block {:.2} ms, solver {:.2} ms ({:.1}x)",
            timing.median_s * 1e3,
            timing.solver_block_s * 1e3,
            timing.speedup
        );
        rows.push(WorkPrecisionRow {
            model_id: path.clone(),
            parameters: model.parameter_count(),
            mse,
            block_time_s: timing.median_s,
        });
    }
    let front = pareto_front(&rows);
    let csv_path = out.join("work_precision.csv");
    std::fs::write(&csv_path, work_precision_csv(&rows, &front))?;
    meta.add_artifact(&csv_path);
    meta.finish(&out)?;
    Ok(())
}

pub fn sensitivity(args: &CliArgs) -> Result<(), CliError> {
    let doc = load_config(args.config.as_deref())?;
    let out = args.require_out()?;
    ensure_out(&out)?;
    let model = load_checkpoint(&args.require_model()?)?;

    let s = "sensitivity";
    let base = ScenarioParams {
        pore_radius: doc.get_f64(s, "pore_radius")?.unwrap_or(0.2),
        surface_charge: doc.get_f64(s, "charge")?.unwrap_or(-8.65),
        obstacles: Vec::new(),
        rng_seed: args.seed.unwrap_or(0),
    };
    let perturbation = doc.get_f64(s, "perturbation")?.unwrap_or(0.2);
    let count = doc.get_usize(s, "count")?.unwrap_or(31);
    let t_end = doc.get_f64(s, "t_end")?.unwrap_or(10.0);
    let timestamps = doc
        .get_usize_list(s, "timestamps")?
        .unwrap_or_else(|| vec![20, 50, 90]);

    let grid = oilpore_core::GridSpec::standard(model.grid_w, model.grid_h)?;
    let material = MaterialModel::from_doc(&doc, &grid)?;
    let solver_cfg = SolverConfig::from_doc(&doc)?;

    let mut meta = RunMeta::start("sensitivity", &doc, args.seed);
    let report = sensitivity_experiment(
        &model,
        &base,
        perturbation,
        count,
        &timestamps,
        grid,
        &material,
        &solver_cfg,
        t_end,
    )?;
    let csv_path = out.join("sensitivity.csv");
    std::fs::write(&csv_path, sensitivity_csv(&report))?;
    meta.add_artifact(&csv_path);
    meta.finish(&out)?;
    for (i, t) in report.timestamps.iter().enumerate() {
        println!(
            "t = frame {t}: wasserstein {:.4}, excluded ref/sur {}/{}",
            report.wasserstein[i], report.excluded_reference[i], report.excluded_surrogate[i]
        );
    }
    Ok(())
}

pub fn ablate(args: &CliArgs) -> Result<(), CliError> {
    let doc = load_config(args.config.as_deref())?;
    let out = args.require_out()?;
    ensure_out(&out)?;
    let dataset = Dataset::load(&args.require_data()?)?;
    let (grid_h, grid_w) = dataset_grid(&dataset)?;

    let spec = ModelSpec::from_doc(&doc)?;
    let mut train_cfg = TrainConfig::from_doc(&doc)?;
    if let Some(seed) = args.seed {
        train_cfg.seed = seed;
    }
    let variant_list = args
        .flags
        .clone()
        .or_else(|| doc.get("ablate", "variants").map(str::to_string))
        .unwrap_or_else(|| "all, no-inv, no-bc".to_string());
    let variants: Vec<AblationVariant> = variant_list
        .split(',')
        .map(|v| AblationVariant::parse(v.trim()))
        .collect::<Result<_, _>>()?;

    let mut meta = RunMeta::start("ablate", &doc, Some(train_cfg.seed));
    let mut cells = Vec::new();
    for variant in &variants {
        let variant_spec = apply_ablation(&spec, *variant);
        let model = SurrogateModel::build(&variant_spec, grid_h, grid_w, train_cfg.seed)?;
        let outcome = run_training(model, &dataset, &train_cfg)?;
        let records = if dataset.test.is_empty() {
            &dataset.train
        } else {
            &dataset.test
        };
        let mse = mean_rollout_mse(&outcome.model, records)?;
        println!("{}: test rollout MSE {mse:.4e}", variant.as_str());
        cells.push((variant.as_str().to_string(), mse));
    }

    // the no-obstacle column: same architecture and protocol on a dataset
    // generated without obstacles
    if let Some(noobs_dir) = &args.data_noobs {
        let noobs = Dataset::load(Path::new(noobs_dir))?;
        let model = SurrogateModel::build(&spec, grid_h, grid_w, train_cfg.seed)?;
        let outcome = run_training(model, &noobs, &train_cfg)?;
        let records = if noobs.test.is_empty() { &noobs.train } else { &noobs.test };
        let mse = mean_rollout_mse(&outcome.model, records)?;
        println!("no-obs: test rollout MSE {mse:.4e}");
        cells.push(("no-obs".to_string(), mse));
    }

    let rows = vec![(spec.tag().as_str().to_string(), cells)];
    let csv_path = out.join("ablation.csv");
    std::fs::write(&csv_path, ablation_csv(&rows))?;
    meta.add_artifact(&csv_path);
    meta.finish(&out)?;
    Ok(())
}
