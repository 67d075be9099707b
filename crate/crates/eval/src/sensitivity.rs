//! Charge-perturbation sensitivity: paired reference/surrogate droplet
//! position distributions at chosen timestamps.

use crate::error::{EvalError, Result};
use crate::metrics::BundlePredictor;
use oilpore_core::{droplet_center, GridSpec, ScalarField, ScenarioParams};
use oilpore_data::SimulationRecord;
use oilpore_solver::{simulate, MaterialModel, SolverConfig};
use oilpore_surrogate::TimeBundle;

#[derive(Debug, Clone)]
pub struct SensitivityReport {
    pub charges: Vec<f64>,
    /// Droplet x-position per charge per timestamp; `None` = disintegrated.
    pub reference_x: Vec<Vec<Option<f64>>>,
    pub surrogate_x: Vec<Vec<Option<f64>>>,
    pub timestamps: Vec<usize>,
    /// Circular 1D Wasserstein distance between the paired distributions
    /// at each timestamp (excluding disintegrated samples).
    pub wasserstein: Vec<f64>,
    pub excluded_reference: Vec<usize>,
    pub excluded_surrogate: Vec<usize>,
}

/// Evenly spaced charges spanning `base * (1 +- perturbation)`, clipped to
/// the admissible range [-10, -1].
pub fn charge_grid(base: f64, perturbation: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![base.clamp(-10.0, -1.0)];
    }
    let lo = base * (1.0 + perturbation);
    let hi = base * (1.0 - perturbation);
    (0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            (lo + (hi - lo) * t).clamp(-10.0, -1.0)
        })
        .collect()
}

/// Circular 1D Wasserstein-1 distance between equal-size samples by brute
/// force: best cyclic-order-preserving matching of the sorted samples.
pub fn circular_wasserstein(a: &[f64], b: &[f64], circumference: f64) -> f64 {
    assert_eq!(a.len(), b.len());
    if a.is_empty() {
        return 0.0;
    }
    let mut xs: Vec<f64> = a.iter().map(|v| v.rem_euclid(circumference)).collect();
    let mut ys: Vec<f64> = b.iter().map(|v| v.rem_euclid(circumference)).collect();
    xs.sort_by(|p, q| p.partial_cmp(q).unwrap());
    ys.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let n = xs.len();
    let dist = |p: f64, q: f64| {
        let d = (p - q).abs() % circumference;
        d.min(circumference - d)
    };
    let mut best = f64::INFINITY;
    for shift in 0..n {
        let mut total = 0.0;
        for i in 0..n {
            total += dist(xs[i], ys[(i + shift) % n]);
        }
        best = best.min(total / n as f64);
    }
    best
}

/// Droplet x-position at the requested stored-frame indices of a record.
fn trace_positions(
    record: &SimulationRecord,
    timestamps: &[usize],
) -> Result<Vec<Option<f64>>> {
    let grid = record.grid();
    timestamps
        .iter()
        .map(|t| {
            if *t >= record.t_len {
                return Err(EvalError::Config(format!(
                    "timestamp {t} outside record of {} frames",
                    record.t_len
                )));
            }
            let field = ScalarField::from_values(
                grid,
                record.frame(*t).iter().map(|v| *v as f64).collect(),
            )?;
            Ok(droplet_center(&field, &record.mask, 0.0).map(|(x, _)| x))
        })
        .collect()
}

/// Surrogate x-positions: roll out from the record's first bundle and read
/// the centroid at the requested frame indices.
fn surrogate_positions(
    predictor: &(dyn BundlePredictor + Sync),
    record: &SimulationRecord,
    timestamps: &[usize],
) -> Result<Vec<Option<f64>>> {
    let k = predictor.bundle_len();
    let grid = record.grid();
    let hw = grid.len();
    let first = TimeBundle::from_frames_clamped(
        k,
        record.height(),
        record.width(),
        0,
        &record.frames[..k * hw],
    )?;
    let n_blocks = (record.t_len - k) / k;
    let mut frames: Vec<Vec<f32>> = record.frames[..k * hw]
        .chunks(hw)
        .map(|c| c.to_vec())
        .collect();
    let mut current = first;
    for _ in 0..n_blocks {
        let predicted = predictor.predict(&current, &record.mask)?;
        for t in 0..k {
            frames.push(predicted.frame(t).to_vec());
        }
        current = predicted;
    }
    timestamps
        .iter()
        .map(|t| {
            let frame = frames.get(*t).ok_or_else(|| {
                EvalError::Config(format!("timestamp {t} beyond rollout of {}", frames.len()))
            })?;
            let field =
                ScalarField::from_values(grid, frame.iter().map(|v| *v as f64).collect())?;
            Ok(droplet_center(&field, &record.mask, 0.0).map(|(x, _)| x))
        })
        .collect()
}

/// Run the paired reference/surrogate experiment over a charge grid.
#[allow(clippy::too_many_arguments)]
pub fn sensitivity_experiment(
    predictor: &(dyn BundlePredictor + Sync),
    base: &ScenarioParams,
    perturbation: f64,
    n: usize,
    timestamps: &[usize],
    grid: GridSpec,
    model: &MaterialModel,
    solver_cfg: &SolverConfig,
    t_end: f64,
) -> Result<SensitivityReport> {
    let charges = charge_grid(base.surface_charge, perturbation, n);
    let runs: Vec<Result<(Vec<Option<f64>>, Vec<Option<f64>>)>> =
        oilpore_core::par::map_indexed(charges.len(), |i| {
            let mut scenario = base.clone();
            scenario.surface_charge = charges[i];
            let run = simulate(&scenario, grid, model, solver_cfg, t_end)?;
            if !run.valid {
                return Err(EvalError::Config(format!(
                    "reference run at charge {} diverged",
                    charges[i]
                )));
            }
            let record = SimulationRecord::from_run(run);
            let reference = trace_positions(&record, timestamps)?;
            let surrogate = surrogate_positions(predictor, &record, timestamps)?;
            Ok((reference, surrogate))
        });

    let mut reference_x = Vec::with_capacity(charges.len());
    let mut surrogate_x = Vec::with_capacity(charges.len());
    for run in runs {
        let (r, s) = run?;
        reference_x.push(r);
        surrogate_x.push(s);
    }

    let lx = grid.domain_width();
    let mut wasserstein = Vec::with_capacity(timestamps.len());
    let mut excluded_reference = Vec::with_capacity(timestamps.len());
    let mut excluded_surrogate = Vec::with_capacity(timestamps.len());
    for (ti, _) in timestamps.iter().enumerate() {
        let mut ref_samples = Vec::new();
        let mut sur_samples = Vec::new();
        let mut excl_r = 0;
        let mut excl_s = 0;
        for ci in 0..charges.len() {
            match (reference_x[ci][ti], surrogate_x[ci][ti]) {
                (Some(r), Some(s)) => {
                    ref_samples.push(r);
                    sur_samples.push(s);
                }
                (r, s) => {
                    if r.is_none() {
                        excl_r += 1;
                    }
                    if s.is_none() {
                        excl_s += 1;
                    }
                }
            }
        }
        wasserstein.push(circular_wasserstein(&ref_samples, &sur_samples, lx));
        excluded_reference.push(excl_r);
        excluded_surrogate.push(excl_s);
    }

    Ok(SensitivityReport {
        charges,
        reference_x,
        surrogate_x,
        timestamps: timestamps.to_vec(),
        wasserstein,
        excluded_reference,
        excluded_surrogate,
    })
}

pub fn sensitivity_csv(report: &SensitivityReport) -> String {
    let mut out = String::from("charge");
    for t in &report.timestamps {
        out.push_str(&format!(",ref_x_t{t},sur_x_t{t}"));
    }
    out.push('\n');
    for (ci, charge) in report.charges.iter().enumerate() {
        out.push_str(&format!("{charge:.6}"));
        for ti in 0..report.timestamps.len() {
            let fmt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
            out.push_str(&format!(
                ",{},{}",
                fmt(report.reference_x[ci][ti]),
                fmt(report.surrogate_x[ci][ti])
            ));
        }
        out.push('\n');
    }
    out.push_str("# wasserstein");
    for w in &report.wasserstein {
        out.push_str(&format!(",{w:.6}"));
    }
    out.push('\n');
    out
}
