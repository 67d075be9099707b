//! Solver state, configuration, and the face topology shared by all
//! discrete operators.

use crate::error::{Result, SolverError};
use oilpore_core::config::ConfigDoc;
use oilpore_core::{GeometryMask, GridSpec, ScalarField, VectorField};

/// Vertical boundary handling. The standard pore scenarios use walls (the
/// geometry mask carries explicit solid bands); fully periodic mode exists
/// for single-phase verification problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerticalBc {
    Wall,
    Periodic,
}

/// Time step, solve tolerances, forcing and output control.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub dt: f64,
    /// Relative tolerance for the Poisson-type solves.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Constant horizontal body force driving the background flow.
    pub body_force: f64,
    /// Store every `stride`-th step when simulating.
    pub stride: usize,
    pub vertical_bc: VerticalBc,
    /// Uniform initial concentration of each ion species.
    pub initial_concentration: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt: 0.02,
            tolerance: 1e-8,
            max_iterations: 10_000,
            body_force: 6.0,
            stride: 5,
            vertical_bc: VerticalBc::Wall,
            initial_concentration: 2.0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(SolverError::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.tolerance > 0.0 && self.tolerance <= 1e-4) {
            return Err(SolverError::Config(format!(
                "tolerance must be in (0, 1e-4], got {}",
                self.tolerance
            )));
        }
        if self.stride == 0 {
            return Err(SolverError::Config("stride must be at least 1".into()));
        }
        if self.initial_concentration < 0.0 {
            return Err(SolverError::Config(
                "initial concentration must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Read overrides from a `[solver]` section.
    pub fn from_doc(doc: &ConfigDoc) -> Result<Self> {
        let mut cfg = Self::default();
        let s = "solver";
        if let Some(v) = doc.get_f64(s, "dt")? {
            cfg.dt = v;
        }
        if let Some(v) = doc.get_f64(s, "tolerance")? {
            cfg.tolerance = v;
        }
        if let Some(v) = doc.get_usize(s, "max_iterations")? {
            cfg.max_iterations = v;
        }
        if let Some(v) = doc.get_f64(s, "body_force")? {
            cfg.body_force = v;
        }
        if let Some(v) = doc.get_usize(s, "stride")? {
            cfg.stride = v;
        }
        if let Some(v) = doc.get_f64(s, "initial_concentration")? {
            cfg.initial_concentration = v;
        }
        if let Some(v) = doc.get(s, "vertical_bc") {
            cfg.vertical_bc = match v {
                "wall" => VerticalBc::Wall,
                "periodic" => VerticalBc::Periodic,
                other => {
                    return Err(SolverError::Config(format!(
                        "solver.vertical_bc: expected wall|periodic, got '{other}'"
                    )))
                }
            };
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_doc(&self, doc: &mut ConfigDoc) {
        let s = "solver";
        doc.set(s, "dt", &format!("{}", self.dt));
        doc.set(s, "tolerance", &format!("{}", self.tolerance));
        doc.set(s, "max_iterations", &format!("{}", self.max_iterations));
        doc.set(s, "body_force", &format!("{}", self.body_force));
        doc.set(s, "stride", &format!("{}", self.stride));
        doc.set(
            s,
            "vertical_bc",
            match self.vertical_bc {
                VerticalBc::Wall => "wall",
                VerticalBc::Periodic => "periodic",
            },
        );
        doc.set(s, "initial_concentration", &format!("{}", self.initial_concentration));
    }
}

/// Face-normal velocities. `u[idx]` lives on the east face of cell `idx`
/// (toward `i+1`, wrapping), `v[idx]` on its north face (toward `j+1`;
/// wrapping only in periodic vertical mode). Closed faces carry 0.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceFlux {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl FaceFlux {
    pub fn zeros(grid: &GridSpec) -> Self {
        Self {
            u: vec![0.0; grid.len()],
            v: vec![0.0; grid.len()],
        }
    }

    pub fn max_speed(&self) -> f64 {
        let mu = self.u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mv = self.v.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        mu.max(mv)
    }
}

/// Which faces admit flux: both adjacent cells fluid (and, for the top row
/// in wall mode, not the domain boundary). Precomputed once per mask.
#[derive(Debug, Clone)]
pub struct FaceTopology {
    pub open_east: Vec<bool>,
    pub open_north: Vec<bool>,
    /// Flat index of the east neighbor (periodic wrap).
    pub east: Vec<usize>,
    /// Flat index of the north neighbor (wraps only when periodic).
    pub north: Vec<usize>,
    pub west: Vec<usize>,
    pub south: Vec<usize>,
    pub fluid: Vec<bool>,
}

impl FaceTopology {
    pub fn build(mask: &GeometryMask, vertical_bc: VerticalBc) -> Self {
        let grid = mask.grid();
        let (w, h) = (grid.width(), grid.height());
        let n = grid.len();
        let mut open_east = vec![false; n];
        let mut open_north = vec![false; n];
        let mut east = vec![usize::MAX; n];
        let mut north = vec![usize::MAX; n];
        let mut west = vec![usize::MAX; n];
        let mut south = vec![usize::MAX; n];
        let mut fluid = vec![false; n];
        for j in 0..h {
            for i in 0..w {
                let idx = grid.idx(i, j);
                fluid[idx] = mask.is_fluid(i, j);
                let e = grid.idx(grid.wrap_i(i as isize + 1), j);
                east[idx] = e;
                west[idx] = grid.idx(grid.wrap_i(i as isize - 1), j);
                open_east[idx] = fluid_pair(mask, idx, e);
                if j + 1 < h {
                    let nn = grid.idx(i, j + 1);
                    north[idx] = nn;
                    open_north[idx] = fluid_pair(mask, idx, nn);
                } else if vertical_bc == VerticalBc::Periodic {
                    let nn = grid.idx(i, 0);
                    north[idx] = nn;
                    open_north[idx] = fluid_pair(mask, idx, nn);
                } else {
                    north[idx] = idx; // self-reference; face stays closed
                    open_north[idx] = false;
                }
                south[idx] = if j > 0 {
                    grid.idx(i, j - 1)
                } else if vertical_bc == VerticalBc::Periodic {
                    grid.idx(i, h - 1)
                } else {
                    idx
                };
            }
        }
        Self {
            open_east,
            open_north,
            east,
            north,
            west,
            south,
            fluid,
        }
    }

    /// Is the west face of `idx` open? (It is the east face of `west[idx]`.)
    #[inline]
    pub fn open_west(&self, idx: usize) -> bool {
        self.open_east[self.west[idx]]
    }

    /// Is the south face of `idx` open?
    #[inline]
    pub fn open_south(&self, idx: usize) -> bool {
        let s = self.south[idx];
        s != idx && self.open_north[s]
    }
}

fn fluid_pair(mask: &GeometryMask, a: usize, b: usize) -> bool {
    mask.is_fluid_idx(a) && mask.is_fluid_idx(b)
}

/// All physical fields at one solver step.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub t: f64,
    pub velocity: VectorField,
    pub pressure: ScalarField,
    pub phase: ScalarField,
    /// Ion concentrations, indexed like [`crate::material::SPECIES_CHARGES`].
    pub solutes: [ScalarField; 2],
    pub potential: ScalarField,
    /// Divergence-controlled face-normal velocities from the last
    /// projection; transports advect with these.
    pub face_flux: FaceFlux,
}

impl SolverState {
    pub fn quiescent(grid: GridSpec, phase: ScalarField, concentration: f64) -> Self {
        Self {
            t: 0.0,
            velocity: VectorField::zeros(grid),
            pressure: ScalarField::zeros(grid),
            solutes: [
                ScalarField::constant(grid, concentration),
                ScalarField::constant(grid, concentration),
            ],
            potential: ScalarField::zeros(grid),
            face_flux: FaceFlux::zeros(&grid),
            phase,
        }
    }

    pub fn grid(&self) -> GridSpec {
        self.phase.grid()
    }

    /// Interpolate collocated velocities onto open faces (used to seed
    /// analytic initial conditions; the projection maintains them after).
    pub fn init_faces_from_cells(&mut self, topo: &FaceTopology) {
        let u = self.velocity.u().values();
        let v = self.velocity.v().values();
        for idx in 0..u.len() {
            self.face_flux.u[idx] = if topo.open_east[idx] {
                0.5 * (u[idx] + u[topo.east[idx]])
            } else {
                0.0
            };
            self.face_flux.v[idx] = if topo.open_north[idx] {
                0.5 * (v[idx] + v[topo.north[idx]])
            } else {
                0.0
            };
        }
    }

    /// Kinetic energy over fluid cells.
    pub fn kinetic_energy(&self, mask: &GeometryMask, rho: &[f64]) -> f64 {
        let grid = self.grid();
        let u = self.velocity.u().values();
        let v = self.velocity.v().values();
        let mut sum = 0.0;
        for idx in 0..grid.len() {
            if mask.is_fluid_idx(idx) {
                sum += 0.5 * rho[idx] * (u[idx] * u[idx] + v[idx] * v[idx]);
            }
        }
        sum * grid.dx() * grid.dx()
    }
}

/// Per-step solver diagnostics.
#[derive(Debug, Clone, Default)]
pub struct StepDiagnostics {
    pub electrostatics_iterations: usize,
    pub electrostatics_residual: f64,
    pub pressure_iterations: usize,
    /// Max |div v| over fluid cells after projection.
    pub max_divergence: f64,
    /// Mass removed by clipping negative concentrations, per species.
    pub clipped_mass: [f64; 2],
    /// Advective CFL number max |u_f| dt / dx of the step.
    pub cfl: f64,
}
