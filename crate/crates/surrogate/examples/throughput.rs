use oilpore_core::{build_geometry_mask, GridSpec, ScenarioParams, SplitMix64};
use oilpore_surrogate::{HasParams, ModelSpec, SurrogateModel, Tens, TimeBundle};
use std::time::Instant;

fn main() {
    let grid = GridSpec::standard(48, 32).unwrap();
    let scenario = ScenarioParams { pore_radius: 0.2, surface_charge: -5.0, obstacles: vec![], rng_seed: 0 };
    let mask = build_geometry_mask(&scenario, grid).unwrap();
    let spec = ModelSpec::unet(10, 16, vec![1, 2], 1);
    let mut model = SurrogateModel::build(&spec, 32, 48, 1).unwrap();
    println!("params: {}", model.parameter_count());
    let mut rng = SplitMix64::new(2);
    let mut frames = vec![0.0f32; 10 * 32 * 48];
    for (i, v) in frames.iter_mut().enumerate() {
        if mask.is_fluid_idx(i % (32*48)) { *v = rng.range_f64(-0.9, 0.9) as f32; }
    }
    let bundle = TimeBundle::new(10, 32, 48, 0, frames).unwrap();
    // forward only
    let start = Instant::now();
    for _ in 0..20 { let _ = model.predict_bundle(&bundle, &mask).unwrap(); }
    println!("fwd: {:.1} ms", start.elapsed().as_secs_f64() * 50.0);
    // forward + backward
    let start = Instant::now();
    for _ in 0..20 {
        let pass = model.forward(&bundle, &mask).unwrap();
        let g = Tens::zeros(10, 32, 48);
        let _ = model.backward(&pass, &mask, &g);
    }
    println!("fwd+bwd: {:.1} ms", start.elapsed().as_secs_f64() * 50.0);

    // and the 96x64 inference candidates for the speed criterion
    let grid96 = GridSpec::standard(96, 64).unwrap();
    let mask96 = build_geometry_mask(&scenario, grid96).unwrap();
    for (name, spec) in [
        ("drn-1x3x12-d4", {
            let mut s = ModelSpec::drn(25, 12, 1, 3);
            s.decoder.features = 4;
            s
        }),
        ("unet-(1,2)x16", ModelSpec::unet(25, 16, vec![1, 2], 1)),
    ] {
        let model = SurrogateModel::build(&spec, 64, 96, 1).unwrap();
        let mut frames = vec![0.0f32; 25 * 64 * 96];
        for (i, v) in frames.iter_mut().enumerate() {
            if mask96.is_fluid_idx(i % (64*96)) { *v = rng.range_f64(-0.9, 0.9) as f32; }
        }
        let b = TimeBundle::new(25, 64, 96, 0, frames).unwrap();
        for _ in 0..3 { let _ = model.predict_bundle(&b, &mask96).unwrap(); }
        let start = Instant::now();
        for _ in 0..10 { let _ = model.predict_bundle(&b, &mask96).unwrap(); }
        println!("{name}: {:.1} ms/block ({} params)", start.elapsed().as_secs_f64() * 100.0, model.parameter_count());
    }
}
