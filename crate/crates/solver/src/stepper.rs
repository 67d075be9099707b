//! Operator-splitting time stepper and full-trajectory simulation.
//!
//! Each step solves three subproblems in sequence: (i) electrostatics plus
//! chemical transport under the electric field, (ii) phase field transport,
//! (iii) hydrodynamic flow. Transports advect with the divergence-free face
//! velocities produced by the previous projection.

use crate::error::Result;
use crate::hydro::hydrodynamic_step;
use crate::material::{material_properties, MaterialModel};
use crate::ops::{derived_fields, derived_fields_charged, electrostatics_solve};
use crate::state::{FaceTopology, SolverConfig, SolverState, StepDiagnostics, VerticalBc};
use crate::transport::{phase_transport_step, solute_transport_step};
use oilpore_core::{build_geometry_mask, GeometryMask, GridSpec, ScalarField, ScenarioParams};

/// Reusable per-mask context for stepping.
pub struct Stepper<'a> {
    pub mask: &'a GeometryMask,
    pub topo: FaceTopology,
    pub model: MaterialModel,
    pub cfg: SolverConfig,
}

impl<'a> Stepper<'a> {
    pub fn new(mask: &'a GeometryMask, model: MaterialModel, cfg: SolverConfig) -> Result<Self> {
        cfg.validate()?;
        model.validate(&mask.grid())?;
        Ok(Self {
            topo: FaceTopology::build(mask, cfg.vertical_bc),
            mask,
            model,
            cfg,
        })
    }

    /// Advance one time step with the scenario's surface charge.
    pub fn step(
        &self,
        state: &SolverState,
        surface_charge: f64,
    ) -> Result<(SolverState, StepDiagnostics)> {
        let mut diag = StepDiagnostics::default();
        let mut next = state.clone();

        // (i) chemical transport under the electric field
        let pre = derived_fields_charged(state, self.mask, &self.topo, &self.model, surface_charge);
        let (potential, es_stats) = electrostatics_solve(
            &state.phase,
            &pre.rho_e,
            self.mask,
            &self.topo,
            surface_charge,
            &self.model,
            &self.cfg,
            Some(&state.potential),
        )?;
        next.potential = potential;
        diag.electrostatics_iterations = es_stats.iterations;
        diag.electrostatics_residual = es_stats.residual;

        let with_potential = {
            let mut s = state.clone();
            s.potential = next.potential.clone();
            s
        };
        let derived = derived_fields_charged(&with_potential, self.mask, &self.topo, &self.model, surface_charge);
        let (solutes, clipped) =
            solute_transport_step(&with_potential, &derived, &self.topo, &self.model, &self.cfg)?;
        next.solutes = solutes;
        diag.clipped_mass = clipped;

        // (ii) phase field transport (same face velocities, fresh potential)
        let (phase, cfl) =
            phase_transport_step(&with_potential, &derived, &self.topo, &self.model, &self.cfg)?;
        next.phase = phase;
        diag.cfl = cfl;

        // (iii) hydrodynamics with updated phase, solutes and potential
        let mut hydro_state = next.clone();
        hydro_state.velocity = state.velocity.clone();
        hydro_state.pressure = state.pressure.clone();
        hydro_state.face_flux = state.face_flux.clone();
        let props = material_properties(&hydro_state.phase, &self.model);
        let hydro_derived = derived_fields_charged(&hydro_state, self.mask, &self.topo, &self.model, surface_charge);
        let out = hydrodynamic_step(&hydro_state, &hydro_derived, &self.topo, &props, &self.cfg)?;
        next.velocity = out.velocity;
        next.pressure = out.pressure;
        next.face_flux = out.face_flux;
        diag.pressure_iterations = out.pressure_iterations;
        diag.max_divergence = out.max_divergence;
        diag.cfl = diag.cfl.max(out.cfl);

        next.t = state.t + self.cfg.dt;
        Ok((next, diag))
    }
}

/// Initial condition: oil fills the pore cavity plus a protruding half-disc,
/// smoothed by a tanh profile of the interface width; fluid at rest; uniform
/// ion concentrations; potential from an initial electrostatics solve.
pub fn initial_state(
    scenario: &ScenarioParams,
    mask: &GeometryMask,
    topo: &FaceTopology,
    model: &MaterialModel,
    cfg: &SolverConfig,
) -> Result<SolverState> {
    let grid = mask.grid();
    let (pore_cx, pore_cy) = ScenarioParams::pore_center(&grid);
    let width = std::f64::consts::SQRT_2 * model.delta;
    let mut phase = ScalarField::from_fn(grid, |x, y| {
        let d = grid.periodic_dx(x, pore_cx).hypot(y - pore_cy);
        ((scenario.pore_radius - d) / width).tanh()
    });
    for (idx, value) in phase.values_mut().iter_mut().enumerate() {
        if !mask.is_fluid_idx(idx) {
            *value = 0.0;
        }
    }

    let mut state = SolverState::quiescent(grid, phase, cfg.initial_concentration);
    for species in &mut state.solutes {
        for (idx, value) in species.values_mut().iter_mut().enumerate() {
            if !mask.is_fluid_idx(idx) {
                *value = 0.0;
            }
        }
    }

    let derived = derived_fields(&state, mask, topo, model);
    let (potential, _) = electrostatics_solve(
        &state.phase,
        &derived.rho_e,
        mask,
        topo,
        scenario.surface_charge,
        model,
        cfg,
        None,
    )?;
    state.potential = potential;
    Ok(state)
}

/// One finished (or aborted) simulation: subsampled phase frames plus the
/// scenario that produced them.
#[derive(Debug, Clone)]
pub struct SimulationRun {
    pub scenario: ScenarioParams,
    pub mask: GeometryMask,
    /// Phase frames, time-major; solid cells stored as 0.
    pub frames: Vec<Vec<f32>>,
    pub dt: f64,
    pub stride: usize,
    /// False when the solver diverged mid-run; `frames` is then partial.
    pub valid: bool,
}

/// Run a scenario to `t_end`, storing the phase field every
/// `cfg.stride`-th step starting at t = 0.
pub fn simulate(
    scenario: &ScenarioParams,
    grid: GridSpec,
    model: &MaterialModel,
    cfg: &SolverConfig,
    t_end: f64,
) -> Result<SimulationRun> {
    let mask = build_geometry_mask(scenario, grid)?;
    let stepper = Stepper::new(&mask, model.clone(), cfg.clone())?;
    let mut state = initial_state(scenario, &mask, &stepper.topo, model, cfg)?;

    let n_frames = (t_end / (cfg.dt * cfg.stride as f64)).round() as usize;
    let mut frames = Vec::with_capacity(n_frames);
    let mut valid = true;

    'outer: for _ in 0..n_frames {
        frames.push(phase_frame(&state, &mask));
        for _ in 0..cfg.stride {
            match stepper.step(&state, scenario.surface_charge) {
                Ok((next, _)) => state = next,
                Err(_) => {
                    valid = false;
                    break 'outer;
                }
            }
        }
    }

    Ok(SimulationRun {
        scenario: scenario.clone(),
        mask,
        frames,
        dt: cfg.dt,
        stride: cfg.stride,
        valid,
    })
}

fn phase_frame(state: &SolverState, mask: &GeometryMask) -> Vec<f32> {
    // stored frames clamp the small phase-field overshoot to the record
    // range; the solver state itself keeps the exact values
    state
        .phase
        .values()
        .iter()
        .enumerate()
        .map(|(idx, phi)| {
            if mask.is_fluid_idx(idx) {
                phi.clamp(-1.05, 1.05) as f32
            } else {
                0.0
            }
        })
        .collect()
}

/// Convenience constructor for fully periodic single-phase test problems.
pub fn periodic_box_config(dt: f64, tolerance: f64) -> SolverConfig {
    SolverConfig {
        dt,
        tolerance,
        max_iterations: 20_000,
        body_force: 0.0,
        stride: 5,
        vertical_bc: VerticalBc::Periodic,
        initial_concentration: 0.0,
    }
}
