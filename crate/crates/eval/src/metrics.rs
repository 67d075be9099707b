//! Rollout accuracy metrics over trajectory records.

use crate::error::{EvalError, Result};
use oilpore_core::{droplet_center, GeometryMask, ScalarField};
use oilpore_data::SimulationRecord;
use oilpore_surrogate::{frame_oil_mass, SurrogateModel, TimeBundle};

/// Anything that can advance a bundle one block; lets oracle and
/// persistence baselines share the rollout machinery with real models.
pub trait BundlePredictor {
    fn bundle_len(&self) -> usize;
    fn predict(&self, input: &TimeBundle, mask: &GeometryMask) -> Result<TimeBundle>;
}

impl BundlePredictor for SurrogateModel {
    fn bundle_len(&self) -> usize {
        self.spec.k
    }

    fn predict(&self, input: &TimeBundle, mask: &GeometryMask) -> Result<TimeBundle> {
        self.predict_bundle(input, mask).map_err(EvalError::from)
    }
}

/// Replays the reference frames (zero-error oracle).
pub struct OracleStub<'a> {
    pub record: &'a SimulationRecord,
    pub k: usize,
}

impl BundlePredictor for OracleStub<'_> {
    fn bundle_len(&self) -> usize {
        self.k
    }

    fn predict(&self, input: &TimeBundle, _mask: &GeometryMask) -> Result<TimeBundle> {
        let start = input.start + self.k;
        let hw = self.record.grid().len();
        TimeBundle::from_frames_clamped(
            self.k,
            input.h,
            input.w,
            start,
            &self.record.frames[start * hw..(start + self.k) * hw],
        )
        .map_err(EvalError::from)
    }
}

/// Repeats the last observed frame for every future step.
pub struct PersistenceStub {
    pub k: usize,
}

impl BundlePredictor for PersistenceStub {
    fn bundle_len(&self) -> usize {
        self.k
    }

    fn predict(&self, input: &TimeBundle, _mask: &GeometryMask) -> Result<TimeBundle> {
        let hw = input.h * input.w;
        let last = input.last_frame().to_vec();
        let mut frames = Vec::with_capacity(self.k * hw);
        for _ in 0..self.k {
            frames.extend_from_slice(&last);
        }
        TimeBundle::new(self.k, input.h, input.w, input.start + self.k, frames)
            .map_err(EvalError::from)
    }
}

/// Per-record rollout metrics.
#[derive(Debug, Clone)]
pub struct RolloutMetrics {
    /// Fluid-cell MSE over all predicted frames.
    pub mse: f64,
    /// Fluid-cell MSE per predicted block.
    pub per_block_mse: Vec<f64>,
    /// |mass / reference - 1| per predicted frame.
    pub mass_drift: Vec<f64>,
    /// Droplet centroid per predicted frame; `None` when disintegrated.
    pub center_trace: Vec<Option<(f64, f64)>>,
    pub disintegrated_frames: usize,
}

/// Feed the record's first bundle, roll out to its end, and compare every
/// predicted frame against the reference over fluid cells.
pub fn rollout_mse(predictor: &dyn BundlePredictor, record: &SimulationRecord) -> Result<RolloutMetrics> {
    let k = predictor.bundle_len();
    if record.t_len < 2 * k {
        return Err(EvalError::Config(format!(
            "record has {} frames; rollout needs at least {}",
            record.t_len,
            2 * k
        )));
    }
    let mask = &record.mask;
    let grid = record.grid();
    let hw = grid.len();
    let first = TimeBundle::from_frames_clamped(
        k,
        record.height(),
        record.width(),
        0,
        &record.frames[..k * hw],
    )?;
    let reference_mass = frame_oil_mass(first.last_frame(), mask);
    let n_blocks = (record.t_len - k) / k;

    let mut current = first;
    let mut per_block_mse = Vec::with_capacity(n_blocks);
    let mut mass_drift = Vec::new();
    let mut center_trace = Vec::new();
    let mut disintegrated = 0usize;
    let mut total_sq = 0.0f64;
    let mut total_cells = 0usize;

    for block in 0..n_blocks {
        let predicted = predictor.predict(&current, mask)?;
        let offset = (block + 1) * k;
        let mut block_sq = 0.0f64;
        let mut block_cells = 0usize;
        for t in 0..k {
            let p = predicted.frame(t);
            let r = record.frame(offset + t);
            for idx in 0..hw {
                if mask.is_fluid_idx(idx) {
                    let d = (p[idx] - r[idx]) as f64;
                    block_sq += d * d;
                    block_cells += 1;
                }
            }
            if reference_mass > 0.0 {
                mass_drift.push((frame_oil_mass(p, mask) / reference_mass - 1.0).abs());
            } else {
                mass_drift.push(0.0);
            }
            let field = ScalarField::from_values(
                grid,
                p.iter().map(|v| *v as f64).collect(),
            )?;
            let center = droplet_center(&field, mask, 0.0);
            if center.is_none() {
                disintegrated += 1;
            }
            center_trace.push(center);
        }
        per_block_mse.push(block_sq / block_cells.max(1) as f64);
        total_sq += block_sq;
        total_cells += block_cells;
        current = predicted;
    }

    Ok(RolloutMetrics {
        mse: total_sq / total_cells.max(1) as f64,
        per_block_mse,
        mass_drift,
        center_trace,
        disintegrated_frames: disintegrated,
    })
}

/// Mean rollout MSE over a set of records.
pub fn mean_rollout_mse(
    predictor: &dyn BundlePredictor,
    records: &[SimulationRecord],
) -> Result<f64> {
    if records.is_empty() {
        return Err(EvalError::Config("no records to evaluate".into()));
    }
    let mut total = 0.0;
    for record in records {
        total += rollout_mse(predictor, record)?.mse;
    }
    Ok(total / records.len() as f64)
}
