//! Operator-level verification: chemical potential linearization,
//! electrostatics (manufactured solution, flux balance), and coefficient
//! handling.

use oilpore_core::{GeometryMask, GridSpec, ScalarField, ScenarioParams};
use oilpore_solver::{
    chemical_potential, electrostatics_solve, ops::contour_flux, FaceTopology, MaterialModel,
    SolverConfig, SolverError, VerticalBc,
};

fn uniform_eps_model(grid: &GridSpec) -> MaterialModel {
    let mut model = MaterialModel::default_for_grid(grid);
    model.eps_water = 1.0;
    model.eps_oil = 1.0;
    model
}

#[test]
fn chemical_potential_vanishes_on_uniform_fields() {
    let grid = GridSpec::standard(48, 32).unwrap();
    let mask = GeometryMask::all_fluid(grid);
    let topo = FaceTopology::build(&mask, VerticalBc::Wall);
    let model = MaterialModel::default_for_grid(&grid);
    for value in [-1.0, 0.0, 1.0] {
        let phase = ScalarField::constant(grid, value);
        let g = chemical_potential(&phase, &mask, &topo, &model);
        assert!(g.max_abs() < 1e-14, "phi={value}: max |g| = {}", g.max_abs());
    }
}

#[test]
fn chemical_potential_matches_linearized_sinusoid() {
    // phi = A sin(2 pi x / L): for small A,
    //   g ~ -a A sin + b k_c^2 A sin  (continuous curvature k_c = 2 pi / L)
    // discrepancy is O(A^3) from the cubic term plus O(dx^2) from the stencil
    let grid = GridSpec::standard(96, 64).unwrap();
    let mask = GeometryMask::all_fluid(grid);
    let topo = FaceTopology::build(&mask, VerticalBc::Periodic);
    let model = MaterialModel::default_for_grid(&grid);
    let amplitude = 1e-2;
    let k = std::f64::consts::TAU / grid.domain_width();
    let phase = ScalarField::from_fn(grid, |x, _| amplitude * (k * x).sin());
    let g = chemical_potential(&phase, &mask, &topo, &model);

    let a = model.bulk_coefficient();
    let b = model.gradient_coefficient();
    let mut worst = 0.0f64;
    for j in 0..grid.height() {
        for i in 0..grid.width() {
            let expected = (-a + b * k * k) * phase.at(i, j);
            worst = worst.max((g.at(i, j) - expected).abs());
        }
    }
    let tolerance = a * amplitude.powi(3)
        + 1.5 * b * amplitude * k.powi(4) * grid.dx() * grid.dx() / 12.0
        + 1e-12;
    assert!(worst < tolerance, "worst {worst:.3e} tolerance {tolerance:.3e}");
}

#[test]
fn electrostatics_trivial_case_is_zero() {
    let grid = GridSpec::standard(48, 32).unwrap();
    let mask = GeometryMask::all_fluid(grid);
    let topo = FaceTopology::build(&mask, VerticalBc::Wall);
    let model = uniform_eps_model(&grid);
    let cfg = SolverConfig::default();
    let phase = ScalarField::constant(grid, -1.0);
    let rho_e = ScalarField::zeros(grid);
    let (v, stats) =
        electrostatics_solve(&phase, &rho_e, &mask, &topo, 0.0, &model, &cfg, None).unwrap();
    assert_eq!(stats.iterations, 0);
    assert!(v.max_abs() < 1e-14);
}

fn mms_error(cells: usize) -> f64 {
    let grid = GridSpec::new(cells, cells, 3.0).unwrap();
    let mask = GeometryMask::all_fluid(grid);
    let topo = FaceTopology::build(&mask, VerticalBc::Wall);
    let model = uniform_eps_model(&grid);
    let mut cfg = SolverConfig::default();
    cfg.tolerance = 1e-10;
    cfg.max_iterations = 50_000;

    let lx = grid.domain_width();
    let ly = grid.domain_height();
    let kx = std::f64::consts::TAU / lx;
    let ky = std::f64::consts::PI / ly;
    // manufactured solution with zero normal derivative at y = 0 and y = ly
    let exact = ScalarField::from_fn(grid, |x, y| (kx * x).sin() * (ky * y).cos());
    let rho_e = ScalarField::from_fn(grid, |x, y| {
        (kx * kx + ky * ky) * (kx * x).sin() * (ky * y).cos()
    });
    let phase = ScalarField::constant(grid, -1.0);
    let (v, _) =
        electrostatics_solve(&phase, &rho_e, &mask, &topo, 0.0, &model, &cfg, None).unwrap();

    let mean_exact: f64 = exact.values().iter().sum::<f64>() / exact.values().len() as f64;
    let mut err = 0.0f64;
    for idx in 0..grid.len() {
        err = err.max((v.values()[idx] - (exact.values()[idx] - mean_exact)).abs());
    }
    err
}

#[test]
fn electrostatics_manufactured_solution_second_order() {
    let coarse = mms_error(32);
    let fine = mms_error(64);
    let order = (coarse / fine).log2();
    assert!(order > 1.8, "convergence order {order:.2} (errors {coarse:.3e} -> {fine:.3e})");
}

#[test]
fn electrostatics_surface_charge_flux_balance() {
    // rho_e = 0 and a charged pore: the discrete divergence theorem fixes
    // the flux through any contour around the pore up to the uniform
    // compatibility background.
    let grid = GridSpec::standard(96, 64).unwrap();
    let scenario = ScenarioParams {
        pore_radius: 0.25,
        surface_charge: -10.0,
        obstacles: Vec::new(),
        rng_seed: 0,
    };
    let mask = oilpore_core::build_geometry_mask(&scenario, grid).unwrap();
    let topo = FaceTopology::build(&mask, VerticalBc::Wall);
    let model = uniform_eps_model(&grid);
    let mut cfg = SolverConfig::default();
    cfg.tolerance = 1e-10;
    cfg.max_iterations = 50_000;
    let phase = ScalarField::constant(grid, -1.0);
    let rho_e = ScalarField::zeros(grid);
    let (v, _) = electrostatics_solve(
        &phase,
        &rho_e,
        &mask,
        &topo,
        scenario.surface_charge,
        &model,
        &cfg,
        None,
    )
    .unwrap();

    let pore_length = mask.pore_surface_length();
    assert!(pore_length > 0.0);

    // box around the pore cavity: a couple of tube rows plus everything above
    let j_tube_top = (0..grid.height())
        .find(|j| grid.y(*j) > oilpore_core::TUBE_TOP)
        .unwrap();
    let i_lo = grid.width() / 2 - 12;
    let i_hi = grid.width() / 2 + 12;
    let outward = contour_flux(
        &v,
        &phase,
        &topo,
        &model,
        (i_lo, i_hi),
        (j_tube_top - 4, grid.height() - 1),
    );

    let mut fluid_in_box = 0usize;
    for j in j_tube_top - 4..grid.height() {
        for i in i_lo..=i_hi {
            if mask.is_fluid(i, j) {
                fluid_in_box += 1;
            }
        }
    }
    let q_total = scenario.surface_charge * pore_length;
    let background_share = fluid_in_box as f64 / mask.fluid_count() as f64;
    let expected = -q_total * (1.0 - background_share);
    assert!(
        (outward - expected).abs() <= 0.02 * q_total.abs(),
        "outward {outward:.5} expected {expected:.5} (q_total {q_total:.5})"
    );
}

#[test]
fn electrostatics_reports_non_convergence() {
    let grid = GridSpec::standard(48, 32).unwrap();
    let mask = GeometryMask::all_fluid(grid);
    let topo = FaceTopology::build(&mask, VerticalBc::Wall);
    let model = uniform_eps_model(&grid);
    let mut cfg = SolverConfig::default();
    cfg.max_iterations = 2;
    let phase = ScalarField::constant(grid, -1.0);
    let rho_e = ScalarField::from_fn(grid, |x, _| (std::f64::consts::TAU * x / 3.0).sin());
    let err = electrostatics_solve(&phase, &rho_e, &mask, &topo, 0.0, &model, &cfg, None)
        .unwrap_err();
    match err {
        SolverError::Divergence { residual, .. } => assert!(residual > 0.0),
        other => panic!("expected divergence error, got {other}"),
    }
}
