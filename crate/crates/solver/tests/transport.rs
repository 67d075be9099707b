//! Conservative transport verification: telescoping mass conservation,
//! stationary interface profiles, and the Boltzmann steady state of the
//! ion transport.

use oilpore_core::{
    build_geometry_mask, oil_mass, GeometryMask, GridSpec, ObstacleSpec, ScalarField,
    ScenarioParams, SplitMix64,
};
use oilpore_solver::{
    derived_fields, fluid_total, phase_transport_step, solute_transport_step, FaceTopology,
    MaterialModel, SolverConfig, SolverError, SolverState, VerticalBc,
};

/// Exactly divergence-free face velocities from a random streamfunction on
/// cell corners (fully periodic).
fn streamfunction_flux(state: &mut SolverState, topo: &FaceTopology, seed: u64, scale: f64) {
    let grid = state.grid();
    let (w, h) = (grid.width(), grid.height());
    let dx = grid.dx();
    let mut rng = SplitMix64::new(seed);
    let mut psi = vec![0.0f64; w * h];
    for value in psi.iter_mut() {
        *value = rng.range_f64(-scale, scale) * dx;
    }
    let corner = |i: usize, j: usize| psi[(j % h) * w + (i % w)];
    for j in 0..h {
        for i in 0..w {
            let idx = grid.idx(i, j);
            // east face: u = d psi / dy across the face's two corners
            state.face_flux.u[idx] = if topo.open_east[idx] {
                (corner(i + 1, j + 1) - corner(i + 1, j)) / dx
            } else {
                0.0
            };
            // north face: v = -d psi / dx
            state.face_flux.v[idx] = if topo.open_north[idx] {
                -(corner(i + 1, j + 1) - corner(i, j + 1)) / dx
            } else {
                0.0
            };
        }
    }
}

#[test]
fn uniform_phase_is_unchanged_by_divergence_free_advection() {
    let grid = GridSpec::new(32, 24, 3.0).unwrap();
    let mask = GeometryMask::all_fluid(grid);
    let topo = FaceTopology::build(&mask, VerticalBc::Periodic);
    let model = MaterialModel::default_for_grid(&grid);
    let mut cfg = SolverConfig::default();
    cfg.vertical_bc = VerticalBc::Periodic;

    let mut state = SolverState::quiescent(grid, ScalarField::constant(grid, 0.3), 0.0);
    streamfunction_flux(&mut state, &topo, 7, 0.5);
    let derived = derived_fields(&state, &mask, &topo, &model);
    let (next, _) = phase_transport_step(&state, &derived, &topo, &model, &cfg).unwrap();
    for idx in 0..grid.len() {
        assert!(
            (next.values()[idx] - 0.3).abs() < 1e-13,
            "cell {idx} drifted: {}",
            next.values()[idx]
        );
    }
}

#[test]
fn phase_mass_conserved_to_rounding_with_obstacles() {
    let grid = GridSpec::standard(48, 32).unwrap();
    let scenario = ScenarioParams {
        pore_radius: 0.2,
        surface_charge: -5.0,
        obstacles: vec![ObstacleSpec { center_x: 0.8, center_y: 0.7, radius: 0.15 }],
        rng_seed: 0,
    };
    let mask = build_geometry_mask(&scenario, grid).unwrap();
    let topo = FaceTopology::build(&mask, VerticalBc::Wall);
    let mut model = MaterialModel::default_for_grid(&grid);
    // non-trivial diffusive flux, still inside the explicit stability limit
    // dt < dx^4 / (32 M b)
    model.mobility = 2e-3;
    let cfg = SolverConfig::default();

    let phase0 = ScalarField::from_fn(grid, |x, y| {
        ((x * 2.0).sin() * (y * 3.0).cos()).clamp(-0.95, 0.95)
    });
    let mut state = SolverState::quiescent(grid, phase0, 0.0);
    streamfunction_flux(&mut state, &topo, 11, 0.8);

    let mut mass = oil_mass(&state.phase, &mask);
    for _ in 0..50 {
        let derived = derived_fields(&state, &mask, &topo, &model);
        let (next, _) = phase_transport_step(&state, &derived, &topo, &model, &cfg).unwrap();
        state.phase = next;
        let new_mass = oil_mass(&state.phase, &mask);
        assert!(
            (new_mass - mass).abs() <= 1e-10 * mass.abs().max(1.0),
            "mass drifted {mass} -> {new_mass}"
        );
        mass = new_mass;
    }
}

#[test]
fn tanh_interface_profile_is_stationary() {
    // 1D equilibrium: phi = tanh((y - y0) / (sqrt2 delta)); the flux form
    // should hold it in place up to discretization residuals. The sampled
    // profile relaxes toward the discrete equilibrium by O((dx/delta)^2),
    // so the interface needs a few more cells than the solver minimum.
    let grid = GridSpec::new(8, 96, 0.75).unwrap();
    let mask = GeometryMask::all_fluid(grid);
    let topo = FaceTopology::build(&mask, VerticalBc::Wall);
    let mut model = MaterialModel::default_for_grid(&grid);
    model.delta = 5.0 * grid.dx();
    model.mobility = 1e-2;
    let cfg = SolverConfig::default();

    let y0 = grid.domain_height() * 0.5;
    let width = std::f64::consts::SQRT_2 * model.delta;
    let phase0 = ScalarField::from_fn(grid, |_, y| ((y - y0) / width).tanh());
    let mut state = SolverState::quiescent(grid, phase0.clone(), 0.0);

    for _ in 0..100 {
        let derived = derived_fields(&state, &mask, &topo, &model);
        let (next, _) = phase_transport_step(&state, &derived, &topo, &model, &cfg).unwrap();
        state.phase = next;
    }
    let mut drift = 0.0f64;
    for idx in 0..grid.len() {
        drift = drift.max((state.phase.values()[idx] - phase0.values()[idx]).abs());
    }
    assert!(drift < 1e-3, "profile drifted by {drift}");
}

#[test]
fn uniform_solutes_stay_uniform() {
    let grid = GridSpec::new(24, 24, 3.0).unwrap();
    let mask = GeometryMask::all_fluid(grid);
    let topo = FaceTopology::build(&mask, VerticalBc::Periodic);
    let model = MaterialModel::default_for_grid(&grid);
    let mut cfg = SolverConfig::default();
    cfg.vertical_bc = VerticalBc::Periodic;

    let mut state = SolverState::quiescent(grid, ScalarField::constant(grid, -1.0), 0.7);
    streamfunction_flux(&mut state, &topo, 3, 0.5);
    let derived = derived_fields(&state, &mask, &topo, &model);
    let (next, clipped) = solute_transport_step(&state, &derived, &topo, &model, &cfg).unwrap();
    assert_eq!(clipped, [0.0, 0.0]);
    for species in &next {
        for value in species.values() {
            assert!((value - 0.7).abs() < 1e-13);
        }
    }
}

#[test]
fn solute_totals_conserved_modulo_clipping() {
    let grid = GridSpec::standard(48, 32).unwrap();
    let scenario = ScenarioParams {
        pore_radius: 0.15,
        surface_charge: -3.0,
        obstacles: Vec::new(),
        rng_seed: 0,
    };
    let mask = build_geometry_mask(&scenario, grid).unwrap();
    let topo = FaceTopology::build(&mask, VerticalBc::Wall);
    let mut model = MaterialModel::default_for_grid(&grid);
    model.diffusivity = [[5e-2; 2]; 2];
    let cfg = SolverConfig::default();

    let mut state = SolverState::quiescent(grid, ScalarField::constant(grid, -1.0), 0.0);
    // uneven but positive concentrations
    for species in 0..2 {
        let field = ScalarField::from_fn(grid, |x, y| 0.5 + 0.45 * ((x * 3.0 + species as f64).sin() * (y * 2.0).cos()));
        state.solutes[species] = field;
        for (idx, value) in state.solutes[species].values_mut().iter_mut().enumerate() {
            if !mask.is_fluid_idx(idx) {
                *value = 0.0;
            }
        }
    }
    streamfunction_flux(&mut state, &topo, 23, 0.8);
    // a potential gradient to push ions around
    state.potential = ScalarField::from_fn(grid, |x, _| 0.5 * (std::f64::consts::TAU * x / 3.0).cos());

    for _ in 0..50 {
        let before = [
            fluid_total(&state.solutes[0], &topo),
            fluid_total(&state.solutes[1], &topo),
        ];
        let derived = derived_fields(&state, &mask, &topo, &model);
        let (next, clipped) = solute_transport_step(&state, &derived, &topo, &model, &cfg).unwrap();
        state.solutes = next;
        for species in 0..2 {
            let after = fluid_total(&state.solutes[species], &topo);
            // total + clipped mass telescopes
            let balance = (after - clipped[species]) - before[species];
            assert!(
                balance.abs() <= 1e-10 * before[species].abs().max(1.0),
                "species {species}: balance off by {balance:e}"
            );
        }
    }
}

#[test]
fn solutes_relax_to_boltzmann_equilibrium() {
    let grid = GridSpec::new(16, 16, 3.0).unwrap();
    let mask = GeometryMask::all_fluid(grid);
    let topo = FaceTopology::build(&mask, VerticalBc::Wall);
    let mut model = MaterialModel::default_for_grid(&grid);
    model.diffusivity = [[0.1; 2]; 2];
    let mut cfg = SolverConfig::default();
    cfg.dt = 0.05;

    let mut state = SolverState::quiescent(grid, ScalarField::constant(grid, -1.0), 1.0);
    // fixed linear potential ramp in y
    let slope = 1.0 / grid.domain_height();
    state.potential = ScalarField::from_fn(grid, |_, y| slope * y * 3.0);

    for _ in 0..3000 {
        let derived = derived_fields(&state, &mask, &topo, &model);
        let (next, _) = solute_transport_step(&state, &derived, &topo, &model, &cfg).unwrap();
        state.solutes = next;
    }

    // steady state: c proportional to exp(-z V) per species
    for (species, z) in [(0usize, 1.0f64), (1, -1.0)] {
        let c = state.solutes[species].values();
        let v = state.potential.values();
        let scaled: Vec<f64> = (0..grid.len()).map(|i| c[i] * (z * v[i]).exp()).collect();
        let mean = scaled.iter().sum::<f64>() / scaled.len() as f64;
        for value in &scaled {
            assert!(
                (value - mean).abs() <= 0.02 * mean,
                "species {species}: c*exp(zV) = {value} vs mean {mean}"
            );
        }
    }
}

#[test]
fn cfl_violation_is_reported() {
    let grid = GridSpec::new(16, 16, 3.0).unwrap();
    let mask = GeometryMask::all_fluid(grid);
    let topo = FaceTopology::build(&mask, VerticalBc::Periodic);
    let model = MaterialModel::default_for_grid(&grid);
    let mut cfg = SolverConfig::default();
    cfg.vertical_bc = VerticalBc::Periodic;

    let mut state = SolverState::quiescent(grid, ScalarField::constant(grid, 0.0), 0.0);
    for (idx, value) in state.face_flux.u.iter_mut().enumerate() {
        if topo.open_east[idx] {
            *value = 20.0; // dt * 20 / dx > 1
        }
    }
    let derived = derived_fields(&state, &mask, &topo, &model);
    let err = phase_transport_step(&state, &derived, &topo, &model, &cfg).unwrap_err();
    match err {
        SolverError::Cfl { cfl, advised_dt } => {
            assert!(cfl > 1.0);
            assert!(advised_dt < cfg.dt);
        }
        other => panic!("expected CFL error, got {other}"),
    }
}
