//! Conservative transport of the phase field and ion concentrations.
//!
//! Both steps accumulate one numeric flux per open face and apply it with
//! opposite signs to the two adjacent cells, so the total over fluid cells
//! telescopes to zero and mass is conserved to rounding. Advection upwinds
//! on the projected face velocities; diffusive fluxes are central.

use crate::error::{Result, SolverError};
use crate::material::{MaterialModel, SPECIES_CHARGES};
use crate::ops::DerivedFields;
use crate::state::{FaceTopology, SolverConfig, SolverState};
use oilpore_core::ScalarField;

fn check_cfl(state: &SolverState, cfg: &SolverConfig) -> Result<f64> {
    let dx = state.grid().dx();
    let cfl = state.face_flux.max_speed() * cfg.dt / dx;
    if cfl > 1.0 {
        return Err(SolverError::Cfl {
            cfl,
            advised_dt: 0.9 * dx / state.face_flux.max_speed(),
        });
    }
    Ok(cfl)
}

#[inline]
fn upwind(face_velocity: f64, here: f64, there: f64) -> f64 {
    if face_velocity >= 0.0 {
        here
    } else {
        there
    }
}

/// Van Leer slope limiter for second-order upwind reconstruction.
#[inline]
fn van_leer(theta: f64) -> f64 {
    if theta.is_finite() && theta > 0.0 {
        2.0 * theta / (1.0 + theta)
    } else {
        0.0
    }
}

/// Limited second-order upwind face value. `up2` is the cell upwind of the
/// upwind cell (`None` near closed faces, falling back to first order).
#[inline]
fn limited_face_value(up2: Option<f64>, up: f64, down: f64) -> f64 {
    match up2 {
        Some(uu) => {
            let denom = down - up;
            if denom == 0.0 {
                up
            } else {
                let theta = (up - uu) / denom;
                up + 0.5 * van_leer(theta) * denom
            }
        }
        None => up,
    }
}

/// One step of `d phi/dt + div(v phi) - div(M grad g_phi) = 0` in flux form.
///
/// Advection uses limited second-order upwind on the projected face
/// velocities. The chemical-potential flux splits into an explicit part
/// (double-well bulk term, dielectric coupling, minus the linear
/// stabilization shift) and an implicit part
/// `M (b lap^2 - a s lap) phi'` with stabilization `s = 2 >= max f'`,
/// which removes the explicit biharmonic time-step restriction. Both parts
/// telescope over faces, so mass is conserved to solver tolerance.
///
/// Returns the new phase field and the step's CFL number.
pub fn phase_transport_step(
    state: &SolverState,
    derived: &DerivedFields,
    topo: &FaceTopology,
    model: &MaterialModel,
    cfg: &SolverConfig,
) -> Result<(ScalarField, f64)> {
    const STABILIZER: f64 = 2.0; // >= max d(phi^3 - phi)/dphi on [-1, 1]

    let cfl = check_cfl(state, cfg)?;
    let grid = state.grid();
    let dx = grid.dx();
    let phi = state.phase.values();
    let g = derived.g_phi.values();
    let mobility = model.mobility;
    let a = model.bulk_coefficient();
    let b = model.gradient_coefficient();
    let scale = cfg.dt / dx;

    // explicit face fluxes: limited advection plus the mobility flux of
    // the non-implicit chemical potential remainder
    //   g_expl = g_phi + M-free terms - (b lap phi - handled implicitly)
    // Writing g_phi = a f(phi) - b lap(phi) + g_dielectric, the implicit
    // side takes  -b lap phi' + a s phi'  and the explicit side keeps
    //   a (f(phi) - s phi) + g_dielectric
    // which equals g_phi + b lap(phi) - a s phi evaluated at time n.
    let lap_phi = crate::ops::masked_laplacian(&state.phase, topo);
    let mut g_expl = vec![0.0f64; grid.len()];
    for idx in 0..grid.len() {
        if topo.fluid[idx] {
            g_expl[idx] = g[idx] + b * lap_phi[idx] - a * STABILIZER * phi[idx];
        }
    }

    let mut rhs = vec![0.0f64; grid.len()];
    for idx in 0..grid.len() {
        if topo.open_east[idx] {
            let nidx = topo.east[idx];
            let uf = state.face_flux.u[idx];
            let face_phi = if uf >= 0.0 {
                let up2 = topo
                    .open_west(idx)
                    .then(|| phi[topo.west[idx]]);
                limited_face_value(up2, phi[idx], phi[nidx])
            } else {
                let up2 = topo.open_east[nidx].then(|| phi[topo.east[nidx]]);
                limited_face_value(up2, phi[nidx], phi[idx])
            };
            let flux = uf * face_phi - mobility * (g_expl[nidx] - g_expl[idx]) / dx;
            let transfer = flux * scale;
            rhs[idx] -= transfer;
            rhs[nidx] += transfer;
        }
        if topo.open_north[idx] {
            let nidx = topo.north[idx];
            let vf = state.face_flux.v[idx];
            let face_phi = if vf >= 0.0 {
                let up2 = topo
                    .open_south(idx)
                    .then(|| phi[topo.south[idx]]);
                limited_face_value(up2, phi[idx], phi[nidx])
            } else {
                let up2 = topo.open_north[nidx].then(|| phi[topo.north[nidx]]);
                limited_face_value(up2, phi[nidx], phi[idx])
            };
            let flux = vf * face_phi - mobility * (g_expl[nidx] - g_expl[idx]) / dx;
            let transfer = flux * scale;
            rhs[idx] -= transfer;
            rhs[nidx] += transfer;
        }
    }
    for idx in 0..grid.len() {
        rhs[idx] = if topo.fluid[idx] { phi[idx] + rhs[idx] } else { 0.0 };
    }

    // implicit solve: (I + dt M (b lap^2 - a s lap)) phi' = rhs
    let coef_biharmonic = cfg.dt * mobility * b;
    let coef_diffusion = cfg.dt * mobility * a * STABILIZER;
    let dx2 = dx * dx;
    let apply = |x: &[f64], out: &mut [f64]| {
        // first masked Laplacian
        let mut lap1 = vec![0.0f64; x.len()];
        for idx in 0..x.len() {
            if !topo.fluid[idx] {
                continue;
            }
            let mut acc = 0.0;
            if topo.open_east[idx] {
                acc += x[topo.east[idx]] - x[idx];
            }
            if topo.open_west(idx) {
                acc += x[topo.west[idx]] - x[idx];
            }
            if topo.open_north[idx] {
                acc += x[topo.north[idx]] - x[idx];
            }
            if topo.open_south(idx) {
                acc += x[topo.south[idx]] - x[idx];
            }
            lap1[idx] = acc / dx2;
        }
        for idx in 0..x.len() {
            if !topo.fluid[idx] {
                out[idx] = 0.0;
                continue;
            }
            let mut acc = 0.0;
            if topo.open_east[idx] {
                acc += lap1[topo.east[idx]] - lap1[idx];
            }
            if topo.open_west(idx) {
                acc += lap1[topo.west[idx]] - lap1[idx];
            }
            if topo.open_north[idx] {
                acc += lap1[topo.north[idx]] - lap1[idx];
            }
            if topo.open_south(idx) {
                acc += lap1[topo.south[idx]] - lap1[idx];
            }
            let lap2 = acc / dx2;
            out[idx] = x[idx] + coef_biharmonic * lap2 - coef_diffusion * lap1[idx];
        }
    };

    let mut solution: Vec<f64> = rhs.clone();
    crate::linsolve::cg_matrix_free(
        apply,
        &mut solution,
        &rhs,
        grid.width(),
        (cfg.tolerance * 1e-4).max(1e-14),
        cfg.max_iterations,
        "phase",
    )?;

    let mut out = ScalarField::zeros(grid);
    let values = out.values_mut();
    for idx in 0..values.len() {
        if topo.fluid[idx] {
            values[idx] = solution[idx];
        }
    }
    Ok((out, cfl))
}

/// One step of
/// `d c_j/dt + div(v c_j) - div(K_j(phi) c_j grad g_cj) = 0`
/// per species, clipping negative undershoots to zero. The explicit update
/// is sub-stepped when `dt` exceeds half the diffusive stability limit of
/// the steepest electrochemical gradient, so stiff Debye layers do not
/// constrain the outer time step. Returns the new concentrations and the
/// clipped mass per species.
pub fn solute_transport_step(
    state: &SolverState,
    derived: &DerivedFields,
    topo: &FaceTopology,
    model: &MaterialModel,
    cfg: &SolverConfig,
) -> Result<([ScalarField; 2], [f64; 2])> {
    check_cfl(state, cfg)?;
    let grid = state.grid();
    let dx = grid.dx();
    let phi = state.phase.values();

    let mut outputs: [ScalarField; 2] = [state.solutes[0].clone(), state.solutes[1].clone()];
    let mut clipped = [0.0f64; 2];

    for species in 0..2 {
        debug_assert_eq!(SPECIES_CHARGES.len(), 2);
        let k_max = model
            .species_diffusivity(species, -1.0)
            .max(model.species_diffusivity(species, 1.0));
        // explicit diffusion limit dt < dx^2 / (4 K); halve it for margin
        let dt_stable = 0.5 * dx * dx / (4.0 * k_max);
        let substeps = (cfg.dt / dt_stable).ceil().max(1.0) as usize;
        let dt_sub = cfg.dt / substeps as f64;
        let scale = dt_sub / dx;

        let z = SPECIES_CHARGES[species];
        let v_pot = state.potential.values();
        let mut c: Vec<f64> = outputs[species].values().to_vec();
        let mut g: Vec<f64> = derived.g_c[species].values().to_vec();
        for sub in 0..substeps {
            if sub > 0 {
                // refresh the electrochemical potential from the updated
                // concentrations (potential held fixed within the step)
                for idx in 0..c.len() {
                    if topo.fluid[idx] {
                        g[idx] = (c[idx] + crate::material::CONCENTRATION_FLOOR).ln()
                            + z * v_pot[idx];
                    }
                }
            }
            let mut delta = vec![0.0f64; grid.len()];
            for idx in 0..grid.len() {
                if topo.open_east[idx] {
                    let nidx = topo.east[idx];
                    let uf = state.face_flux.u[idx];
                    let kf = 0.5
                        * (model.species_diffusivity(species, phi[idx])
                            + model.species_diffusivity(species, phi[nidx]));
                    let cf = 0.5 * (c[idx] + c[nidx]);
                    let flux =
                        uf * upwind(uf, c[idx], c[nidx]) - kf * cf * (g[nidx] - g[idx]) / dx;
                    let transfer = flux * scale;
                    delta[idx] -= transfer;
                    delta[nidx] += transfer;
                }
                if topo.open_north[idx] {
                    let nidx = topo.north[idx];
                    let vf = state.face_flux.v[idx];
                    let kf = 0.5
                        * (model.species_diffusivity(species, phi[idx])
                            + model.species_diffusivity(species, phi[nidx]));
                    let cf = 0.5 * (c[idx] + c[nidx]);
                    let flux =
                        vf * upwind(vf, c[idx], c[nidx]) - kf * cf * (g[nidx] - g[idx]) / dx;
                    let transfer = flux * scale;
                    delta[idx] -= transfer;
                    delta[nidx] += transfer;
                }
            }
            for idx in 0..c.len() {
                if topo.fluid[idx] {
                    c[idx] += delta[idx];
                    if c[idx] < 0.0 {
                        clipped[species] -= c[idx];
                        c[idx] = 0.0;
                    }
                }
            }
        }
        outputs[species] = ScalarField::from_values(grid, c).expect("grid size");
    }
    Ok((outputs, clipped))
}

/// Total of a field over fluid cells (f64 accumulation, fixed order).
pub fn fluid_total(field: &ScalarField, topo: &FaceTopology) -> f64 {
    field
        .values()
        .iter()
        .enumerate()
        .filter(|(idx, _)| topo.fluid[*idx])
        .map(|(_, value)| *value)
        .sum()
}
