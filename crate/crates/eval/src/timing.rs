//! Wall-clock inference timing against the reference solver.

use crate::error::{EvalError, Result};
use oilpore_core::{build_geometry_mask, GeometryMask, GridSpec, ScenarioParams, SplitMix64};
use oilpore_solver::{initial_state, MaterialModel, SolverConfig, Stepper};
use oilpore_surrogate::{SurrogateModel, TimeBundle};
use std::time::Instant;

/// Per-block wall-clock statistics plus the solver cost of an equivalent
/// span of physical time at matched resolution.
#[derive(Debug, Clone)]
pub struct TimingReport {
    pub median_s: f64,
    pub p10_s: f64,
    pub p90_s: f64,
    pub repetitions: usize,
    pub warmups: usize,
    /// Reference solver time for `k * stride` steps on the same grid.
    pub solver_block_s: f64,
    pub speedup: f64,
    pub hardware: String,
}

pub fn hardware_descriptor() -> String {
    let cpu = std::fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|text| {
            text.lines()
                .find(|l| l.starts_with("model name"))
                .map(|l| l.split(':').nth(1).unwrap_or("unknown").trim().to_string())
        })
        .unwrap_or_else(|| "unknown CPU".to_string());
    let threads = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    format!("{cpu} ({threads} hw threads)")
}

fn random_bundle(k: usize, mask: &GeometryMask, seed: u64) -> Result<TimeBundle> {
    let grid = mask.grid();
    let mut rng = SplitMix64::new(seed);
    let mut frames = vec![0.0f32; k * grid.len()];
    for t in 0..k {
        for idx in 0..grid.len() {
            frames[t * grid.len() + idx] = if mask.is_fluid_idx(idx) {
                rng.range_f64(-0.9, 0.9) as f32
            } else {
                0.0
            };
        }
    }
    TimeBundle::new(k, grid.height(), grid.width(), 0, frames).map_err(EvalError::from)
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = (sorted.len() as f64 - 1.0) * q;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
    }
}

/// Time one-block inference (median over `reps` after `warmups`) and the
/// reference solver advancing the same physical span.
pub fn time_inference(
    model: &SurrogateModel,
    mask: &GeometryMask,
    solver_model: &MaterialModel,
    solver_cfg: &SolverConfig,
    surface_charge: f64,
    reps: usize,
    warmups: usize,
) -> Result<TimingReport> {
    if reps < 20 {
        return Err(EvalError::Config("timing needs at least 20 repetitions".into()));
    }
    if warmups < 3 {
        return Err(EvalError::Config("timing needs at least 3 warmups".into()));
    }
    let input = random_bundle(model.spec.k, mask, 12345)?;
    for _ in 0..warmups {
        let _ = model.predict_bundle(&input, mask)?;
    }
    let mut times = Vec::with_capacity(reps);
    for _ in 0..reps {
        let start = Instant::now();
        let out = model.predict_bundle(&input, mask)?;
        let elapsed = start.elapsed();
        std::hint::black_box(out.frames[0]);
        times.push(elapsed.as_secs_f64());
        if elapsed.as_nanos() < 10 {
            return Err(EvalError::TimerResolution {
                median_ns: elapsed.as_nanos(),
            });
        }
    }
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = percentile(&times, 0.5);

    // reference solver: k * stride steps on the same grid
    let scenario = ScenarioParams {
        pore_radius: 0.2,
        surface_charge: surface_charge.clamp(-10.0, -1.0),
        obstacles: Vec::new(),
        rng_seed: 0,
    };
    let grid = mask.grid();
    let solver_mask = build_geometry_mask(&scenario, grid)?;
    let stepper = Stepper::new(&solver_mask, solver_model.clone(), solver_cfg.clone())?;
    let mut state = initial_state(&scenario, &solver_mask, &stepper.topo, solver_model, solver_cfg)?;
    // short warmup so iterative solvers reach their steady iteration counts
    for _ in 0..3 {
        let (next, _) = stepper.step(&state, scenario.surface_charge)?;
        state = next;
    }
    let steps = model.spec.k * solver_cfg.stride;
    let start = Instant::now();
    for _ in 0..steps {
        let (next, _) = stepper.step(&state, scenario.surface_charge)?;
        state = next;
    }
    let solver_block_s = start.elapsed().as_secs_f64();

    Ok(TimingReport {
        median_s: median,
        p10_s: percentile(&times, 0.1),
        p90_s: percentile(&times, 0.9),
        repetitions: reps,
        warmups,
        solver_block_s,
        speedup: solver_block_s / median,
        hardware: hardware_descriptor(),
    })
}

/// Standard timing grid (the dataset resolution from the protocol).
pub fn standard_timing_grid() -> Result<GridSpec> {
    GridSpec::standard(96, 64).map_err(EvalError::from)
}
