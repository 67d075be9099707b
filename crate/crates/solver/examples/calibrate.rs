//! Exploration harness for material defaults: prints Taylor-Green decay
//! error, splitting-order ratios, and droplet trajectories for a few
//! charges so the nondimensional defaults can be tuned by hand.
//!
//! ```sh
//! cargo run --release -p oilpore-solver --example calibrate [tg|order|droplet|speed]
//! ```

use oilpore_core::{
    build_geometry_mask, droplet_center, oil_mass, GeometryMask, GridSpec, ScalarField,
    ScenarioParams,
};
use oilpore_solver::{
    derived_fields, hydrodynamic_step, initial_state, material_properties, periodic_box_config,
    simulate, FaceTopology, MaterialModel, SolverConfig, SolverState, Stepper, VerticalBc,
};
use std::time::Instant;

fn taylor_green() {
    let grid = GridSpec::new(64, 64, std::f64::consts::TAU).unwrap();
    let mask = GeometryMask::all_fluid(grid);
    let topo = FaceTopology::build(&mask, VerticalBc::Periodic);
    let nu = 0.0173;
    let mut model = MaterialModel::default_for_grid(&grid);
    model.rho_water = 1.0;
    model.rho_oil = 1.0;
    model.mu_water = nu;
    model.mu_oil = nu;
    let cfg = periodic_box_config(0.02, 1e-10);

    let mut state = SolverState::quiescent(grid, ScalarField::constant(grid, 1.0), 0.0);
    let dx = grid.dx();
    *state.velocity.u_mut() = ScalarField::from_fn(grid, |x, y| x.sin() * y.cos());
    *state.velocity.v_mut() = ScalarField::from_fn(grid, |x, y| -x.cos() * y.sin());
    for j in 0..grid.height() {
        for i in 0..grid.width() {
            let idx = grid.idx(i, j);
            state.face_flux.u[idx] = ((i as f64 + 1.0) * dx).sin() * grid.y(j).cos();
            state.face_flux.v[idx] = -grid.x(i).cos() * ((j as f64 + 1.0) * dx).sin();
        }
    }
    let props = material_properties(&state.phase, &model);
    let e0 = state.kinetic_energy(&mask, &props.rho);
    let start = Instant::now();
    for step in 1..=500 {
        let derived = derived_fields(&state, &mask, &topo, &model);
        let out = hydrodynamic_step(&state, &derived, &topo, &props, &cfg).unwrap();
        state.velocity = out.velocity;
        state.pressure = out.pressure;
        state.face_flux = out.face_flux;
        if step % 100 == 0 {
            let t = step as f64 * cfg.dt;
            let ratio = state.kinetic_energy(&mask, &props.rho) / e0;
            let exact = (-4.0 * nu * t).exp();
            println!(
                "step {step:4} t={t:5.1} E/E0={ratio:.6} exact={exact:.6} rel_err={:+.5}",
                ratio / exact - 1.0
            );
        }
    }
    println!("500 TG steps took {:?}", start.elapsed());
}

fn scenario() -> ScenarioParams {
    ScenarioParams {
        pore_radius: 0.2,
        surface_charge: -8.0,
        obstacles: Vec::new(),
        rng_seed: 0,
    }
}

fn splitting_order() {
    let grid = GridSpec::standard(48, 32).unwrap();
    let scn = scenario();
    let mask = build_geometry_mask(&scn, grid).unwrap();
    let model = MaterialModel::default_for_grid(&grid);

    let evolve = |dt: f64, t_end: f64| -> SolverState {
        let mut cfg = SolverConfig::default();
        cfg.dt = dt;
        cfg.tolerance = 1e-11;
        let stepper = Stepper::new(&mask, model.clone(), cfg.clone()).unwrap();
        let mut state = initial_state(&scn, &mask, &stepper.topo, &model, &cfg).unwrap();
        let steps = (t_end / dt).round() as usize;
        for _ in 0..steps {
            let (next, _) = stepper.step(&state, scn.surface_charge).unwrap();
            state = next;
        }
        state
    };

    let t_end = 0.16;
    let diff = |a: &SolverState, b: &SolverState| -> f64 {
        let mut sum = 0.0;
        for (x, y) in a.phase.values().iter().zip(b.phase.values()) {
            sum += (x - y).powi(2);
        }
        for (x, y) in a.velocity.u().values().iter().zip(b.velocity.u().values()) {
            sum += (x - y).powi(2);
        }
        for (x, y) in a.velocity.v().values().iter().zip(b.velocity.v().values()) {
            sum += (x - y).powi(2);
        }
        sum.sqrt()
    };
    let coarse = evolve(0.02, t_end);
    let medium = evolve(0.01, t_end);
    let fine = evolve(0.005, t_end);
    let finest = evolve(0.0025, t_end);
    let d1 = diff(&coarse, &medium);
    let d2 = diff(&medium, &fine);
    let d3 = diff(&fine, &finest);
    println!("|S_dt - S_dt/2| = {d1:.6e}");
    println!("|S_dt/2 - S_dt/4| = {d2:.6e}  ratio {:.3}", d1 / d2);
    println!("|S_dt/4 - S_dt/8| = {d3:.6e}  ratio {:.3}", d2 / d3);
}

fn droplet(charge: f64, body_force: f64) {
    let grid = GridSpec::standard(48, 32).unwrap();
    let mut scn = scenario();
    scn.surface_charge = charge;
    let mask = build_geometry_mask(&scn, grid).unwrap();
    let model = MaterialModel::default_for_grid(&grid);
    let mut cfg = SolverConfig::default();
    cfg.body_force = body_force;
    let start = Instant::now();
    let run = simulate(&scn, grid, &model, &cfg, 10.0).unwrap();
    println!(
        "charge {charge} body {body_force}: {} frames valid={} in {:?}",
        run.frames.len(),
        run.valid,
        start.elapsed()
    );
    for (f, frame) in run.frames.iter().enumerate() {
        if f % 20 != 0 {
            continue;
        }
        let field = ScalarField::from_values(
            grid,
            frame.iter().map(|v| *v as f64).collect(),
        )
        .unwrap();
        let mass = oil_mass(&field, &mask);
        let mut cavity = 0.0;
        for j in 0..grid.height() {
            for i in 0..grid.width() {
                if mask.is_fluid(i, j) && grid.y(j) > oilpore_core::TUBE_TOP {
                    cavity += (field.at(i, j) + 1.0) * 0.5;
                }
            }
        }
        match droplet_center(&field, &mask, 0.0) {
            Some((x, y)) => println!(
                "  frame {f:3} t={:5.2} center=({x:.3}, {y:.3}) mass={mass:.2} in_cavity={:.1}%",
                f as f64 * cfg.dt * cfg.stride as f64,
                100.0 * cavity / mass
            ),
            None => println!("  frame {f:3} droplet disintegrated (cavity share {:.1}%)", 100.0 * cavity / mass),
        }
    }
}

fn solver_speed() {
    let grid = GridSpec::standard(96, 64).unwrap();
    let scn = scenario();
    let mask = build_geometry_mask(&scn, grid).unwrap();
    let model = MaterialModel::default_for_grid(&grid);
    let cfg = SolverConfig::default();
    let stepper = Stepper::new(&mask, model.clone(), cfg.clone()).unwrap();
    let mut state = initial_state(&scn, &mask, &stepper.topo, &model, &cfg).unwrap();
    // warm up
    for _ in 0..5 {
        let (next, _) = stepper.step(&state, scn.surface_charge).unwrap();
        state = next;
    }
    let start = Instant::now();
    let steps = 125;
    for _ in 0..steps {
        let (next, _) = stepper.step(&state, scn.surface_charge).unwrap();
        state = next;
    }
    let elapsed = start.elapsed();
    println!(
        "{steps} steps at 96x64: {elapsed:?} ({:.1} ms/step)",
        elapsed.as_secs_f64() * 1e3 / steps as f64
    );
}

fn main() {
    let mode = std::env::args().nth(1).unwrap_or_else(|| "tg".into());
    match mode.as_str() {
        "tg" => taylor_green(),
        "order" => splitting_order(),
        "droplet" => {
            for charge in [-1.0, -5.0, -10.0] {
                droplet(charge, SolverConfig::default().body_force);
            }
        }
        "speed" => solver_speed(),
        other => eprintln!("unknown mode {other}; use tg|order|droplet|speed"),
    }
}
