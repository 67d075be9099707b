//! Evaluation harness: rollout accuracy, inference timing versus the
//! reference solver, work-precision reporting, charge-sensitivity
//! distributions, and the ablation toggles.

pub mod ablate;
pub mod error;
pub mod metrics;
pub mod report;
pub mod sensitivity;
pub mod timing;

pub use ablate::{ablation_csv, apply_ablation, AblationVariant};
pub use error::{EvalError, Result};
pub use metrics::{
    mean_rollout_mse, rollout_mse, BundlePredictor, OracleStub, PersistenceStub, RolloutMetrics,
};
pub use report::{pareto_front, work_precision_csv, WorkPrecisionRow};
pub use sensitivity::{
    charge_grid, circular_wasserstein, sensitivity_csv, sensitivity_experiment, SensitivityReport,
};
pub use timing::{hardware_descriptor, standard_timing_grid, time_inference, TimingReport};
