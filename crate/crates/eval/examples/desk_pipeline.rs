//! Desk-scale end-to-end rehearsal: generate the small obstacle and
//! no-obstacle datasets, train the small UNet on each, and report rollout
//! MSE against the persistence baseline.
//!
//! ```sh
//! cargo run --release -p oilpore-eval --example desk_pipeline
//! ```

use oilpore_data::{generate_dataset, Dataset, DatasetConfig, ObstacleMode};
use oilpore_eval::{mean_rollout_mse, PersistenceStub};
use oilpore_solver::{MaterialModel, SolverConfig};
use oilpore_surrogate::{ModelSpec, SurrogateModel};
use oilpore_train::{train, TrainConfig};
use std::time::Instant;

fn run(tag: &str, obstacle_mode: ObstacleMode, out: &std::path::Path) -> (f64, f64) {
    let dataset_cfg = DatasetConfig {
        count: 24,
        obstacle_mode,
        grid_width: 48,
        grid_height: 32,
        charge_bias: 2.0,
        split: [0.7, 0.1, 0.2],
        base_seed: 2024,
        t_end: 10.0,
    };
    let solver_cfg = SolverConfig::default();
    let material = MaterialModel::default_for_grid(&dataset_cfg.grid().unwrap());

    let start = Instant::now();
    generate_dataset(&dataset_cfg, &solver_cfg, &material, out).unwrap();
    println!("[{tag}] generated 24 records in {:?}", start.elapsed());
    let dataset = Dataset::load(out).unwrap();
    println!(
        "[{tag}] split {}/{}/{}",
        dataset.train.len(),
        dataset.val.len(),
        dataset.test.len()
    );

    let spec = ModelSpec::unet(10, 16, vec![1, 2], 1);
    let model = SurrogateModel::build(&spec, 32, 48, 11).unwrap();
    let train_cfg = TrainConfig {
        epochs: 50,
        base_lr: 2e-3,
        lr_milestones: vec![30, 45],
        lr_decay: 0.4,
        batch_size: 8,
        samples_per_record: 4,
        val_every: 10,
        val_records: 2,
        max_unroll: 2,
        unroll_period: 25,
        seed: 11,
        ..TrainConfig::default()
    };
    let start = Instant::now();
    let outcome = train(model, &dataset, &train_cfg).unwrap();
    println!(
        "[{tag}] trained 50 epochs in {:?} (first/last train mse {:.4e} / {:.4e})",
        start.elapsed(),
        outcome.history.first().unwrap().train_mse,
        outcome.history.last().unwrap().train_mse,
    );

    let trained = mean_rollout_mse(&outcome.model, &dataset.test).unwrap();
    let persistence =
        mean_rollout_mse(&PersistenceStub { k: 10 }, &dataset.test).unwrap();
    println!(
        "[{tag}] test rollout MSE {trained:.4e} vs persistence {persistence:.4e} (ratio {:.3})",
        trained / persistence
    );
    (trained, persistence)
}

fn main() {
    let base = std::env::temp_dir().join("oilpore-desk-pipeline");
    let _ = std::fs::remove_dir_all(&base);
    let (obs_mse, obs_persistence) = run("obs", ObstacleMode::OneOrTwo, &base.join("obs"));
    let (noobs_mse, _) = run("noobs", ObstacleMode::None, &base.join("noobs"));
    println!("obstacle {obs_mse:.4e} (persistence {obs_persistence:.4e}), no-obstacle {noobs_mse:.4e}");
    println!("halving criterion: {}", obs_mse <= 0.5 * obs_persistence);
    println!("complexity ordering: {}", noobs_mse < obs_mse);
}
