// scratch probe: dark-wire recipes for the paper-shaped dataset
use wattmap::fit::{cross_validate, FitProblem};
use wattmap::metrics::min_power_sweep;
use wattmap::presets;
use wattmap::simulate::generate_dataset;
use wattmap::{ModelParams, Variant};

fn recipe(eps: [f64; 3], inpaint: bool) -> ModelParams {
    let base = presets::demo_params();
    let p = ModelParams::from_upper_triangle(
        3,
        &base.upper_triangle(),
        eps.to_vec(),
        base.h,
        base.r,
        Variant::Int,
    )
    .unwrap();
    if inpaint {
        p.with_low_emissivity_materials(vec![presets::MATERIAL_WIRE])
            .unwrap()
    } else {
        p
    }
}

fn run(name: &str, params: ModelParams, sigma: f64, seed: u64) {
    let spec = presets::demo_dataset_spec(params.clone(), sigma, if sigma == 0.0 { 1 } else { 5 }, seed);
    let ds = generate_dataset(&spec).unwrap();
    let mut problem = FitProblem::new(ds, Variant::Int, 10, 7).unwrap();
    problem.initial = problem
        .initial
        .with_low_emissivity_materials(params.low_emissivity_materials.clone())
        .unwrap();
    let cv = cross_validate(&problem).unwrap();
    println!(
        "{name} sigma={sigma}: pooled e_rel {:.4}% e_std {:.4} mW",
        cv.pooled.e_rel * 100.0,
        cv.pooled.e_std * 1e3
    );
    if sigma > 0.0 {
        let grid: Vec<f64> = (0..=10).map(|i| i as f64 * 0.05).collect();
        let pts = min_power_sweep(&cv.predictions, &grid).unwrap();
        let mut prev = -1.0;
        let mut monotone = true;
        for p in &pts {
            if let Some(s) = p.summary {
                let mark = if s.e_std < prev { " DIP" } else { "" };
                if s.e_std < prev {
                    monotone = false;
                }
                println!(
                    "   pmin {:>4.0}: e_rel {:>8.3}% e_std {:>8.4} mW (n={}){}",
                    p.p_min * 1e3,
                    s.e_rel * 100.0,
                    s.e_std * 1e3,
                    s.samples,
                    mark
                );
                prev = s.e_std;
            }
        }
        println!("   monotone e_std: {monotone}");
    }
}

fn main() {
    for seed in [42u64, 43, 44] {
        run("R2 wires0.2", recipe([1.0, 0.2, 1.0], true), 0.0, seed);
        run("R2 wires0.2", recipe([1.0, 0.2, 1.0], true), 0.1, seed);
    }
    run("R3 grey-all", recipe([0.97, 0.2, 0.95], true), 0.0, 42);
    run("R3 grey-all", recipe([0.97, 0.2, 0.95], true), 0.1, 42);
}
