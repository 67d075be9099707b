//! Pointwise and stencil operators: chemical potentials, charge density,
//! gradients and the variable-coefficient electrostatics solve.

use crate::error::Result;
use crate::linsolve::{SolveStats, StencilMatrix, StencilRow};
use crate::material::{MaterialModel, CONCENTRATION_FLOOR, SPECIES_CHARGES};
use crate::state::{FaceTopology, SolverConfig, SolverState};
use oilpore_core::{GeometryMask, ScalarField};

/// Derived quantities entering the momentum and transport steps.
#[derive(Debug, Clone)]
pub struct DerivedFields {
    /// Phase chemical potential: double-well part plus the dielectric
    /// coupling `-eps'(phi) |grad V|^2 / 2`.
    pub g_phi: ScalarField,
    /// Electrochemical potentials `ln(c_j + floor) + z_j V`.
    pub g_c: [ScalarField; 2],
    /// Charge density `sum_j z_j c_j`.
    pub rho_e: ScalarField,
    /// Cell-centered velocity gradients (du/dx, du/dy, dv/dx, dv/dy).
    pub du_dx: Vec<f64>,
    pub du_dy: Vec<f64>,
    pub dv_dx: Vec<f64>,
    pub dv_dy: Vec<f64>,
}

impl DerivedFields {
    /// Symmetric velocity gradient at a cell: (Dxx, Dxy, Dyy).
    #[inline]
    pub fn strain(&self, idx: usize) -> (f64, f64, f64) {
        (
            self.du_dx[idx],
             0.5 * (self.du_dy[idx] + self.dv_dx[idx]),
            self.dv_dy[idx],
        )
    }
}

/// Masked 5-point Laplacian with periodic x, zero normal gradient at
/// closed faces. Solid cells map to 0.
pub fn masked_laplacian(field: &ScalarField, topo: &FaceTopology) -> Vec<f64> {
    let grid = field.grid();
    let dx2 = grid.dx() * grid.dx();
    let v = field.values();
    let mut out = vec![0.0; v.len()];
    for idx in 0..v.len() {
        if !topo.fluid[idx] {
            continue;
        }
        let mut acc = 0.0;
        if topo.open_east[idx] {
            acc += v[topo.east[idx]] - v[idx];
        }
        if topo.open_west(idx) {
            acc += v[topo.west[idx]] - v[idx];
        }
        if topo.open_north[idx] {
            acc += v[topo.north[idx]] - v[idx];
        }
        if topo.open_south(idx) {
            acc += v[topo.south[idx]] - v[idx];
        }
        out[idx] = acc / dx2;
    }
    out
}

/// Cell-centered gradient with zero-normal-gradient ghosts at closed faces
/// (for potentials and pressure).
pub fn neumann_gradient(values: &[f64], topo: &FaceTopology, dx: f64) -> (Vec<f64>, Vec<f64>) {
    let n = values.len();
    let mut gx = vec![0.0; n];
    let mut gy = vec![0.0; n];
    let inv_2dx = 0.5 / dx;
    for idx in 0..n {
        if !topo.fluid[idx] {
            continue;
        }
        let e = if topo.open_east[idx] { values[topo.east[idx]] } else { values[idx] };
        let w = if topo.open_west(idx) { values[topo.west[idx]] } else { values[idx] };
        let nn = if topo.open_north[idx] { values[topo.north[idx]] } else { values[idx] };
        let s = if topo.open_south(idx) { values[topo.south[idx]] } else { values[idx] };
        gx[idx] = (e - w) * inv_2dx;
        gy[idx] = (nn - s) * inv_2dx;
    }
    (gx, gy)
}

/// Cell-centered gradient with no-slip ghosts (value 0) at closed faces
/// (for velocity components).
pub fn noslip_gradient(values: &[f64], topo: &FaceTopology, dx: f64) -> (Vec<f64>, Vec<f64>) {
    let n = values.len();
    let mut gx = vec![0.0; n];
    let mut gy = vec![0.0; n];
    let inv_2dx = 0.5 / dx;
    for idx in 0..n {
        if !topo.fluid[idx] {
            continue;
        }
        let e = if topo.open_east[idx] { values[topo.east[idx]] } else { 0.0 };
        let w = if topo.open_west(idx) { values[topo.west[idx]] } else { 0.0 };
        let nn = if topo.open_north[idx] { values[topo.north[idx]] } else { 0.0 };
        let s = if topo.open_south(idx) { values[topo.south[idx]] } else { 0.0 };
        gx[idx] = (e - w) * inv_2dx;
        gy[idx] = (nn - s) * inv_2dx;
    }
    (gx, gy)
}

/// Double-well (Ginzburg-Landau) chemical potential
/// `a (phi^3 - phi) - b lap(phi)` with `a = 3 sigma / (2 sqrt2 delta)` and
/// `b = 3 sigma delta / (2 sqrt2)`, so the 1D equilibrium profile is
/// `tanh(y / (sqrt2 delta))`. The dielectric coupling term is added
/// separately in [`derived_fields`].
pub fn chemical_potential(
    phase: &ScalarField,
    mask: &GeometryMask,
    topo: &FaceTopology,
    model: &MaterialModel,
) -> ScalarField {
    let a = model.bulk_coefficient();
    let b = model.gradient_coefficient();
    let lap = masked_laplacian(phase, topo);
    let mut g = ScalarField::zeros(phase.grid());
    let phi = phase.values();
    let out = g.values_mut();
    for idx in 0..phi.len() {
        if mask.is_fluid_idx(idx) {
            let p = phi[idx];
            out[idx] = a * (p * p * p - p) - b * lap[idx];
        }
    }
    g
}

/// Squared potential gradient sampled from face differences. Charged pore
/// faces contribute their imposed normal derivative `q / eps`, which is
/// where the electrowetting stress concentrates; other closed faces
/// contribute zero flux.
pub fn potential_gradient_squared(
    potential: &ScalarField,
    phase: &ScalarField,
    mask: &GeometryMask,
    topo: &FaceTopology,
    surface_charge: f64,
    model: &MaterialModel,
) -> Vec<f64> {
    use oilpore_core::geometry::Face;
    let grid = potential.grid();
    let dx = grid.dx();
    let v = potential.values();
    let phi = phase.values();
    let n = grid.len();

    let mut charged = vec![0u8; n];
    for &(idx, face) in mask.pore_faces() {
        charged[idx] |= match face {
            Face::West => 1,
            Face::East => 2,
            Face::South => 4,
            Face::North => 8,
        };
    }

    let mut out = vec![0.0f64; n];
    for idx in 0..n {
        if !topo.fluid[idx] {
            continue;
        }
        let imposed = surface_charge / model.permittivity(phi[idx]);
        let face_grad = |open: bool, nidx: usize, bit: u8| -> f64 {
            if open {
                (v[nidx] - v[idx]) / dx
            } else if charged[idx] & bit != 0 {
                imposed
            } else {
                0.0
            }
        };
        let ge = face_grad(topo.open_east[idx], topo.east[idx], 2);
        let gw = face_grad(topo.open_west(idx), topo.west[idx], 1);
        let gn = face_grad(topo.open_north[idx], topo.north[idx], 8);
        let gs = face_grad(topo.open_south(idx), topo.south[idx], 4);
        out[idx] = 0.5 * (ge * ge + gw * gw) + 0.5 * (gn * gn + gs * gs);
    }
    out
}

/// Assemble every derived field entering the sub-steps.
pub fn derived_fields(
    state: &SolverState,
    mask: &GeometryMask,
    topo: &FaceTopology,
    model: &MaterialModel,
) -> DerivedFields {
    derived_fields_charged(state, mask, topo, model, 0.0)
}

/// Like [`derived_fields`] but with the surface charge available so the
/// dielectric coupling sees the imposed boundary flux.
pub fn derived_fields_charged(
    state: &SolverState,
    mask: &GeometryMask,
    topo: &FaceTopology,
    model: &MaterialModel,
    surface_charge: f64,
) -> DerivedFields {
    let grid = state.grid();
    let dx = grid.dx();
    let mut g_phi = chemical_potential(&state.phase, mask, topo, model);

    // dielectric coupling: -eps'(phi) |grad V|^2 / 2
    let grad2 = potential_gradient_squared(
        &state.potential,
        &state.phase,
        mask,
        topo,
        surface_charge,
        model,
    );
    {
        let phi = state.phase.values();
        let g = g_phi.values_mut();
        for idx in 0..g.len() {
            if mask.is_fluid_idx(idx) {
                g[idx] -= 0.5 * model.permittivity_slope(phi[idx]) * grad2[idx];
            }
        }
    }

    let mut g_c = [ScalarField::zeros(grid), ScalarField::zeros(grid)];
    let mut rho_e = ScalarField::zeros(grid);
    for species in 0..2 {
        let z = SPECIES_CHARGES[species];
        let c = state.solutes[species].values();
        let v = state.potential.values();
        let out = g_c[species].values_mut();
        for idx in 0..c.len() {
            if mask.is_fluid_idx(idx) {
                out[idx] = (c[idx] + CONCENTRATION_FLOOR).ln() + z * v[idx];
            }
        }
        let re = rho_e.values_mut();
        for idx in 0..c.len() {
            if mask.is_fluid_idx(idx) {
                re[idx] += z * c[idx];
            }
        }
    }

    let (du_dx, du_dy) = noslip_gradient(state.velocity.u().values(), topo, dx);
    let (dv_dx, dv_dy) = noslip_gradient(state.velocity.v().values(), topo, dx);

    DerivedFields {
        g_phi,
        g_c,
        rho_e,
        du_dx,
        du_dy,
        dv_dx,
        dv_dy,
    }
}

fn harmonic(a: f64, b: f64) -> f64 {
    2.0 * a * b / (a + b)
}

/// Solve the variable-coefficient Gauss law
/// `div(eps(phi) grad V) = -rho_e` with the surface-charge Neumann flux on
/// pore faces, zero flux on other solid faces, periodic x. The discrete
/// Neumann problem requires a compatible right-hand side; any imbalance
/// between the boundary flux and the volume charge is absorbed by a
/// uniform background density over fluid cells. The solution is normalized
/// to zero mean over fluid cells.
pub fn electrostatics_solve(
    phase: &ScalarField,
    rho_e: &ScalarField,
    mask: &GeometryMask,
    topo: &FaceTopology,
    surface_charge: f64,
    model: &MaterialModel,
    cfg: &SolverConfig,
    warm_start: Option<&ScalarField>,
) -> Result<(ScalarField, SolveStats)> {
    let grid = phase.grid();
    let dx = grid.dx();
    let n = grid.len();
    let phi = phase.values();

    let eps: Vec<f64> = phi.iter().map(|p| model.permittivity(*p)).collect();

    let mut matrix = StencilMatrix::new(n, grid.width());
    for idx in 0..n {
        if !topo.fluid[idx] {
            continue;
        }
        let mut row = StencilRow {
            diag: 0.0,
            neighbors: [(usize::MAX, 0.0); 4],
            active: true,
        };
        let mut slot = 0;
        let couple = |nidx: usize, row: &mut StencilRow, slot: &mut usize| {
            let ef = harmonic(eps[idx], eps[nidx]);
            row.diag += ef;
            row.neighbors[*slot] = (nidx, -ef);
            *slot += 1;
        };
        if topo.open_east[idx] {
            couple(topo.east[idx], &mut row, &mut slot);
        }
        if topo.open_west(idx) {
            couple(topo.west[idx], &mut row, &mut slot);
        }
        if topo.open_north[idx] {
            couple(topo.north[idx], &mut row, &mut slot);
        }
        if topo.open_south(idx) {
            couple(topo.south[idx], &mut row, &mut slot);
        }
        matrix.rows[idx] = row;
    }

    // right-hand side: volume charge plus imposed boundary flux
    let mut b = vec![0.0; n];
    let re = rho_e.values();
    for idx in 0..n {
        if topo.fluid[idx] {
            b[idx] = re[idx] * dx * dx;
        }
    }
    for &(idx, _face) in mask.pore_faces() {
        b[idx] += surface_charge * dx;
    }

    // compatibility: project out the nullspace component
    let fluid_count = mask.fluid_count().max(1) as f64;
    let imbalance: f64 = b.iter().sum::<f64>() / fluid_count;
    for idx in 0..n {
        if topo.fluid[idx] {
            b[idx] -= imbalance;
        }
    }

    let mut v = vec![0.0; n];
    if let Some(prev) = warm_start {
        v.copy_from_slice(prev.values());
        for (idx, value) in v.iter_mut().enumerate() {
            if !topo.fluid[idx] {
                *value = 0.0;
            }
        }
    }
    let stats = matrix.solve_pcg(
        &mut v,
        &b,
        cfg.tolerance,
        0.0,
        cfg.max_iterations,
        "electrostatics",
    )?;

    // zero-mean normalization over fluid cells
    let mean: f64 = v
        .iter()
        .enumerate()
        .filter(|(idx, _)| topo.fluid[*idx])
        .map(|(_, value)| *value)
        .sum::<f64>()
        / fluid_count;
    for idx in 0..n {
        v[idx] = if topo.fluid[idx] { v[idx] - mean } else { 0.0 };
    }

    Ok((ScalarField::from_values(grid, v)?, stats))
}

/// Net discrete flux of `eps grad V` out of a rectangular contour of fluid
/// cells (used by the divergence-theorem checks).
pub fn contour_flux(
    potential: &ScalarField,
    phase: &ScalarField,
    topo: &FaceTopology,
    model: &MaterialModel,
    i_range: (usize, usize),
    j_range: (usize, usize),
) -> f64 {
    let grid = potential.grid();
    let v = potential.values();
    let phi = phase.values();
    let inside = |i: usize, j: usize| {
        i >= i_range.0 && i <= i_range.1 && j >= j_range.0 && j <= j_range.1
    };
    let mut flux = 0.0;
    for j in j_range.0..=j_range.1 {
        for i in i_range.0..=i_range.1 {
            let idx = grid.idx(i, j);
            // outward flux through faces whose neighbor is outside the box
            let mut face = |open: bool, nidx: usize, ni: usize, nj: usize| {
                if open && !inside(ni, nj) {
                    let ef = harmonic(model.permittivity(phi[idx]), model.permittivity(phi[nidx]));
                    flux += ef * (v[nidx] - v[idx]);
                }
            };
            face(
                topo.open_east[idx],
                topo.east[idx],
                grid.wrap_i(i as isize + 1),
                j,
            );
            face(
                topo.open_west(idx),
                topo.west[idx],
                grid.wrap_i(i as isize - 1),
                j,
            );
            if j + 1 < grid.height() {
                face(topo.open_north[idx], topo.north[idx], i, j + 1);
            }
            if j > 0 {
                face(topo.open_south(idx), topo.south[idx], i, j - 1);
            }
        }
    }
    flux
}

/// Pore faces keyed by direction, for flux bookkeeping in tests.
pub fn pore_face_summary(mask: &GeometryMask) -> (usize, f64) {
    let count = mask.pore_faces().len();
    (count, mask.pore_surface_length())
}
