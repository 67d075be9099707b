//! Parameter sweep for the nondimensional defaults: for each combination,
//! report droplet coherence and cavity drainage at weak and strong charge.

use oilpore_core::{build_geometry_mask, droplet_center, GridSpec, ScalarField, ScenarioParams};
use oilpore_solver::{simulate, MaterialModel, SolverConfig};

fn run(sigma: f64, mobility: f64, eps_water: f64, k_water: f64, charge: f64) -> (f64, f64, bool, f64) {
    let grid = GridSpec::standard(48, 32).unwrap();
    let scn = ScenarioParams {
        pore_radius: 0.2,
        surface_charge: charge,
        obstacles: Vec::new(),
        rng_seed: 0,
    };
    let mask = build_geometry_mask(&scn, grid).unwrap();
    let mut model = MaterialModel::default_for_grid(&grid);
    model.sigma = sigma;
    model.mobility = mobility;
    model.eps_water = eps_water;
    model.eps_oil = eps_water / 2.0;
    // ions live in the water phase
    model.diffusivity = [[k_water, k_water * 0.01]; 2];
    let mut cfg = SolverConfig::default();
    cfg.initial_concentration = 2.0;
    let run = match simulate(&scn, grid, &model, &cfg, 10.0) {
        Ok(r) => r,
        Err(_) => return (f64::NAN, f64::NAN, false, f64::NAN),
    };
    if !run.valid {
        return (f64::NAN, f64::NAN, false, run.frames.len() as f64);
    }
    let cavity_share = |frame: &Vec<f32>| -> f64 {
        let mut inside = 0.0;
        let mut total = 0.0;
        for j in 0..grid.height() {
            for i in 0..grid.width() {
                if mask.is_fluid(i, j) {
                    let o = (frame[grid.idx(i, j)] as f64 + 1.0) * 0.5;
                    total += o;
                    if grid.y(j) > oilpore_core::TUBE_TOP {
                        inside += o;
                    }
                }
            }
        }
        inside / total
    };
    let last = run.frames.last().unwrap();
    let field = ScalarField::from_values(grid, last.iter().map(|v| *v as f64).collect()).unwrap();
    let center = droplet_center(&field, &mask, 0.0);
    let survived = center.is_some();
    let y_last = center.map(|(_, y)| y).unwrap_or(f64::NAN);
    (cavity_share(&run.frames[0]), cavity_share(last), survived, y_last)
}

fn main() {
    println!("sigma  mobility  eps_w | q=-1: cav0->cavT alive yT | q=-10: cav0->cavT alive yT");
    for sigma in [0.1] {
        for mobility in [2e-4] {
            for eps_water in [5.0, 15.0] {
            for k_water in [2e-2, 5e-2] {
                let weak = run(sigma, mobility, eps_water, k_water, -1.0);
                let strong = run(sigma, mobility, eps_water, k_water, -10.0);
                println!(
                    "{sigma:5.2} {mobility:9.0e} {eps_water:6.0} k={k_water:5.0e} | {:5.1}%->{:5.1}% {} y={:5.2} | {:5.1}%->{:5.1}% {} y={:5.2}",
                    weak.0 * 100.0,
                    weak.1 * 100.0,
                    if weak.2 { "yes" } else { "NO " },
                    weak.3,
                    strong.0 * 100.0,
                    strong.1 * 100.0,
                    if strong.2 { "yes" } else { "NO " },
                    strong.3,
                );
            }
            }
        }
    }
}
