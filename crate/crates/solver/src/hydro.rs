//! Semi-implicit projection step for the variable-density momentum balance.
//!
//! Advection, capillary/electric forcing and the phase-flux momentum
//! correction are explicit; the component-Laplacian part of the viscous
//! stress is implicit (backward Euler); the transpose part of the stress is
//! explicit. No-slip enters through half-cell viscous wall fluxes on closed
//! faces plus hard zeroing of solid-cell velocities. The divergence
//! constraint is enforced on face-normal velocities, which later transports
//! advect with.

use crate::error::{Result, SolverError};
use crate::linsolve::{StencilMatrix, StencilRow};
use crate::material::PropertyFields;
use crate::ops::{neumann_gradient, DerivedFields};
use crate::state::{FaceFlux, FaceTopology, SolverConfig, SolverState};
use oilpore_core::{ScalarField, VectorField};

#[derive(Debug, Clone)]
pub struct HydroOutput {
    pub velocity: VectorField,
    pub pressure: ScalarField,
    pub face_flux: FaceFlux,
    pub pressure_iterations: usize,
    pub viscous_iterations: usize,
    pub max_divergence: f64,
    pub cfl: f64,
}

fn harmonic(a: f64, b: f64) -> f64 {
    2.0 * a * b / (a + b)
}

/// Advance velocity and pressure by one projection step.
pub fn hydrodynamic_step(
    state: &SolverState,
    derived: &DerivedFields,
    topo: &FaceTopology,
    props: &PropertyFields,
    cfg: &SolverConfig,
) -> Result<HydroOutput> {
    let grid = state.grid();
    let dx = grid.dx();
    let dt = cfg.dt;
    let n = grid.len();
    let u = state.velocity.u().values();
    let v = state.velocity.v().values();
    let rho = &props.rho;
    let mu = &props.mu;

    let cfl_in = state.face_flux.max_speed() * dt / dx;
    if cfl_in > 1.0 {
        return Err(SolverError::Cfl {
            cfl: cfl_in,
            advised_dt: 0.9 * dx / state.face_flux.max_speed(),
        });
    }

    // --- explicit momentum fluxes over faces -----------------------------
    // combined advective + phase-diffusion momentum flux per unit length:
    // (rho_f * u_f - J_f) * centered(velocity), with J = rho'(phi) M grad g
    let mut adv_u = vec![0.0f64; n];
    let mut adv_v = vec![0.0f64; n];
    {
        let phi = state.phase.values();
        let g = derived.g_phi.values();
        let mobility = props.mobility;
        let inv_dx = 1.0 / dx;
        let slope_at = |phi_face: f64| {
            if (-1.0..=1.0).contains(&phi_face) {
                props.rho_slope
            } else {
                0.0
            }
        };
        for idx in 0..n {
            if topo.open_east[idx] {
                let e = topo.east[idx];
                let rho_f = 0.5 * (rho[idx] + rho[e]);
                let j_f = slope_at(0.5 * (phi[idx] + phi[e])) * mobility * (g[e] - g[idx]) * inv_dx;
                let mflux = rho_f * state.face_flux.u[idx] - j_f;
                let fu = mflux * 0.5 * (u[idx] + u[e]);
                let fv = mflux * 0.5 * (v[idx] + v[e]);
                adv_u[idx] += fu * inv_dx;
                adv_u[e] -= fu * inv_dx;
                adv_v[idx] += fv * inv_dx;
                adv_v[e] -= fv * inv_dx;
            }
            if topo.open_north[idx] {
                let nn = topo.north[idx];
                let rho_f = 0.5 * (rho[idx] + rho[nn]);
                let j_f = slope_at(0.5 * (phi[idx] + phi[nn])) * mobility * (g[nn] - g[idx]) * inv_dx;
                let mflux = rho_f * state.face_flux.v[idx] - j_f;
                let fu = mflux * 0.5 * (u[idx] + u[nn]);
                let fv = mflux * 0.5 * (v[idx] + v[nn]);
                adv_u[idx] += fu * inv_dx;
                adv_u[nn] -= fu * inv_dx;
                adv_v[idx] += fv * inv_dx;
                adv_v[nn] -= fv * inv_dx;
            }
        }
    }

    // --- capillary / electric / body forces -------------------------------
    let (gpx, gpy) = neumann_gradient(derived.g_phi.values(), topo, dx);
    let (gc0x, gc0y) = neumann_gradient(derived.g_c[0].values(), topo, dx);
    let (gc1x, gc1y) = neumann_gradient(derived.g_c[1].values(), topo, dx);

    // --- explicit transpose part of the viscous stress --------------------
    let tp_x: Vec<f64> = (0..n).map(|idx| mu[idx] * derived.du_dx[idx]).collect();
    let tp_xy: Vec<f64> = (0..n).map(|idx| mu[idx] * derived.dv_dx[idx]).collect();
    let tp_yx: Vec<f64> = (0..n).map(|idx| mu[idx] * derived.du_dy[idx]).collect();
    let tp_y: Vec<f64> = (0..n).map(|idx| mu[idx] * derived.dv_dy[idx]).collect();
    let (txx, _) = neumann_gradient(&tp_x, topo, dx);
    let (_, txy) = neumann_gradient(&tp_xy, topo, dx);
    let (tyx, _) = neumann_gradient(&tp_yx, topo, dx);
    let (_, tyy) = neumann_gradient(&tp_y, topo, dx);

    // --- implicit viscous systems -----------------------------------------
    let inv_dx2 = 1.0 / (dx * dx);
    let mut matrix = StencilMatrix::new(n, grid.width());
    for idx in 0..n {
        if !topo.fluid[idx] {
            continue;
        }
        let mut row = StencilRow {
            diag: rho[idx] / dt,
            neighbors: [(usize::MAX, 0.0); 4],
            active: true,
        };
        let mut slot = 0;
        let face = |open: bool, nidx: usize, row: &mut StencilRow, slot: &mut usize| {
            if open {
                let mu_f = harmonic(mu[idx], mu[nidx]);
                row.diag += mu_f * inv_dx2;
                row.neighbors[*slot] = (nidx, -mu_f * inv_dx2);
                *slot += 1;
            } else {
                // no-slip wall half a cell away
                row.diag += 2.0 * mu[idx] * inv_dx2;
            }
        };
        face(topo.open_east[idx], topo.east[idx], &mut row, &mut slot);
        face(topo.open_west(idx), topo.west[idx], &mut row, &mut slot);
        face(topo.open_north[idx], topo.north[idx], &mut row, &mut slot);
        face(topo.open_south(idx), topo.south[idx], &mut row, &mut slot);
        matrix.rows[idx] = row;
    }

    let phi = state.phase.values();
    let c0 = state.solutes[0].values();
    let c1 = state.solutes[1].values();
    let mut rhs_u = vec![0.0f64; n];
    let mut rhs_v = vec![0.0f64; n];
    for idx in 0..n {
        if !topo.fluid[idx] {
            continue;
        }
        let fx = -phi[idx] * gpx[idx] - c0[idx] * gc0x[idx] - c1[idx] * gc1x[idx]
            + cfg.body_force;
        let fy = -phi[idx] * gpy[idx] - c0[idx] * gc0y[idx] - c1[idx] * gc1y[idx];
        rhs_u[idx] = rho[idx] / dt * u[idx] - adv_u[idx] + fx + txx[idx] + txy[idx];
        rhs_v[idx] = rho[idx] / dt * v[idx] - adv_v[idx] + fy + tyx[idx] + tyy[idx];
    }

    let mut u_star = u.to_vec();
    let mut v_star = v.to_vec();
    for (value, fluid) in u_star.iter_mut().zip(&topo.fluid) {
        if !fluid {
            *value = 0.0;
        }
    }
    for (value, fluid) in v_star.iter_mut().zip(&topo.fluid) {
        if !fluid {
            *value = 0.0;
        }
    }
    let stats_u = matrix.solve_pcg(&mut u_star, &rhs_u, cfg.tolerance, 0.0, cfg.max_iterations, "viscous-u")?;
    let stats_v = matrix.solve_pcg(&mut v_star, &rhs_v, cfg.tolerance, 0.0, cfg.max_iterations, "viscous-v")?;

    // --- provisional face velocities and their divergence -----------------
    let mut face_u = vec![0.0f64; n];
    let mut face_v = vec![0.0f64; n];
    for idx in 0..n {
        if topo.open_east[idx] {
            face_u[idx] = 0.5 * (u_star[idx] + u_star[topo.east[idx]]);
        }
        if topo.open_north[idx] {
            face_v[idx] = 0.5 * (v_star[idx] + v_star[topo.north[idx]]);
        }
    }
    let divergence = |fu: &[f64], fv: &[f64], out: &mut Vec<f64>| {
        out.clear();
        out.resize(n, 0.0);
        for idx in 0..n {
            if !topo.fluid[idx] {
                continue;
            }
            let mut d = 0.0;
            if topo.open_east[idx] {
                d += fu[idx];
            }
            if topo.open_west(idx) {
                d -= fu[topo.west[idx]];
            }
            if topo.open_north[idx] {
                d += fv[idx];
            }
            if topo.open_south(idx) {
                d -= fv[topo.south[idx]];
            }
            out[idx] = d / dx;
        }
    };
    let mut div_star = Vec::new();
    divergence(&face_u, &face_v, &mut div_star);

    // --- variable-density pressure Poisson ---------------------------------
    let mut pressure_matrix = StencilMatrix::new(n, grid.width());
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
        let face = |open: bool, nidx: usize, row: &mut StencilRow, slot: &mut usize| {
            if open {
                let beta = 0.5 * (1.0 / rho[idx] + 1.0 / rho[nidx]);
                row.diag += beta * inv_dx2;
                row.neighbors[*slot] = (nidx, -beta * inv_dx2);
                *slot += 1;
            }
        };
        face(topo.open_east[idx], topo.east[idx], &mut row, &mut slot);
        face(topo.open_west(idx), topo.west[idx], &mut row, &mut slot);
        face(topo.open_north[idx], topo.north[idx], &mut row, &mut slot);
        face(topo.open_south(idx), topo.south[idx], &mut row, &mut slot);
        pressure_matrix.rows[idx] = row;
    }
    // A = -L, so solve A p = -div*/dt; then div' = -dt * residual
    let mut b: Vec<f64> = div_star.iter().map(|d| -d / dt).collect();
    let fluid_count = topo.fluid.iter().filter(|f| **f).count().max(1) as f64;
    let imbalance: f64 = b.iter().sum::<f64>() / fluid_count;
    for idx in 0..n {
        if topo.fluid[idx] {
            b[idx] -= imbalance;
        } else {
            b[idx] = 0.0;
        }
    }
    let mut p = state.pressure.values().to_vec();
    for idx in 0..n {
        if !topo.fluid[idx] {
            p[idx] = 0.0;
        }
    }
    let stats_p = pressure_matrix.solve_pcg(
        &mut p,
        &b,
        cfg.tolerance,
        // keep the post-projection divergence within the contract
        2.0 * cfg.tolerance / dt,
        cfg.max_iterations,
        "pressure",
    )?;

    let mean_p: f64 = p
        .iter()
        .enumerate()
        .filter(|(idx, _)| topo.fluid[*idx])
        .map(|(_, value)| *value)
        .sum::<f64>()
        / fluid_count;
    for idx in 0..n {
        p[idx] = if topo.fluid[idx] { p[idx] - mean_p } else { 0.0 };
    }

    // --- corrections --------------------------------------------------------
    for idx in 0..n {
        if topo.open_east[idx] {
            let e = topo.east[idx];
            let beta = 0.5 * (1.0 / rho[idx] + 1.0 / rho[e]);
            face_u[idx] -= dt * beta * (p[e] - p[idx]) / dx;
        }
        if topo.open_north[idx] {
            let nn = topo.north[idx];
            let beta = 0.5 * (1.0 / rho[idx] + 1.0 / rho[nn]);
            face_v[idx] -= dt * beta * (p[nn] - p[idx]) / dx;
        }
    }
    let mut div_after = Vec::new();
    divergence(&face_u, &face_v, &mut div_after);
    let max_divergence = div_after.iter().fold(0.0f64, |m, d| m.max(d.abs()));

    // cell-centered corrections from open-face pressure gradients
    let mut u_new = vec![0.0f64; n];
    let mut v_new = vec![0.0f64; n];
    for idx in 0..n {
        if !topo.fluid[idx] {
            continue;
        }
        let mut gx = 0.0;
        let mut cx = 0.0;
        if topo.open_east[idx] {
            gx += (p[topo.east[idx]] - p[idx]) / dx;
            cx += 1.0;
        }
        if topo.open_west(idx) {
            gx += (p[idx] - p[topo.west[idx]]) / dx;
            cx += 1.0;
        }
        let mut gy = 0.0;
        let mut cy = 0.0;
        if topo.open_north[idx] {
            gy += (p[topo.north[idx]] - p[idx]) / dx;
            cy += 1.0;
        }
        if topo.open_south(idx) {
            gy += (p[idx] - p[topo.south[idx]]) / dx;
            cy += 1.0;
        }
        if cx > 0.0 {
            gx /= cx;
        }
        if cy > 0.0 {
            gy /= cy;
        }
        u_new[idx] = u_star[idx] - dt * gx / rho[idx];
        v_new[idx] = v_star[idx] - dt * gy / rho[idx];
    }

    let face_flux = FaceFlux { u: face_u, v: face_v };
    let cfl = face_flux.max_speed() * dt / dx;
    Ok(HydroOutput {
        velocity: VectorField::from_components(
            ScalarField::from_values(grid, u_new).expect("grid size"),
            ScalarField::from_values(grid, v_new).expect("grid size"),
        )
        .expect("matching grids"),
        pressure: ScalarField::from_values(grid, p).expect("grid size"),
        face_flux,
        pressure_iterations: stats_p.iterations,
        viscous_iterations: stats_u.iterations + stats_v.iterations,
        max_divergence,
        cfl,
    })
}
