// scratch probe for tuning; not part of the deliverable
use std::time::Instant;

use wattmap::fit::{cross_validate, fit_parameters, FitProblem};
use wattmap::metrics::{min_power_sweep, spread, summarize, ReadingEstimates};
use wattmap::powerflow::estimate_pixel_powers;
use wattmap::presets;
use wattmap::simulate::generate_dataset;
use wattmap::Variant;

fn main() {
    let t0 = Instant::now();
    // criterion 1 style round trip
    let (layout, injections) = presets::injection_board();
    let scenario = wattmap::simulate::Scenario {
        layout: std::sync::Arc::new(layout),
        params: presets::demo_params(),
        t_amb: 300.0,
        injections: injections.clone(),
        sigma: 0.0,
        readings: 1,
        seed: 1,
    };
    let t = wattmap::simulate::solve_steady_state(&scenario).unwrap();
    println!("solve injection board: {:?}, Tmax={:.2}", t0.elapsed(), t.max());
    let pm = estimate_pixel_powers(&t, &scenario.layout, &scenario.params, 300.0).unwrap();
    for (&id, &p) in &injections {
        let est = wattmap::aggregate::aggregate(&pm, &scenario.layout, id).unwrap();
        println!("  id {id}: inj {p:.6} est {est:.9} rel {:.3e}", (est - p).abs() / p);
    }

    // paper-shaped dataset, sigma=0.1
    let t1 = Instant::now();
    let spec = presets::demo_dataset_spec(presets::demo_params(), 0.1, 5, 42);
    let ds = generate_dataset(&spec).unwrap();
    println!(
        "dataset: {} instances, {} maps in {:?}",
        ds.instances.len(),
        ds.instances.iter().map(|i| i.maps.len()).sum::<usize>(),
        t1.elapsed()
    );
    let tmax = ds
        .instances
        .iter()
        .flat_map(|i| i.maps.iter().map(|m| m.max()))
        .fold(0.0f64, f64::max);
    println!("hottest observed cell: {tmax:.2} K");

    // INT cross-validation
    let t2 = Instant::now();
    let problem = FitProblem::new(ds.clone(), Variant::Int, 10, 7).unwrap();
    let cv = cross_validate(&problem).unwrap();
    println!(
        "cv int: pooled e_rel {:.4}% e_std {:.4} mW in {:?}",
        cv.pooled.e_rel * 100.0,
        cv.pooled.e_std * 1e3,
        t2.elapsed()
    );
    for f in &cv.folds {
        println!(
            "  fold {}: train {} validate {} e_rel {:.3}% iters {} conv {} warn {:?}",
            f.fold,
            f.train_size,
            f.validation_size,
            f.summary.e_rel * 100.0,
            f.fit.iterations,
            f.fit.converged,
            f.fit.warnings
        );
    }

    // sweep shape
    let grid: Vec<f64> = (0..=10).map(|i| i as f64 * 0.05).collect();
    let points = min_power_sweep(&cv.predictions, &grid).unwrap();
    for p in &points {
        match p.summary {
            Some(s) => println!(
                "  pmin {:>5.0} mW: e_rel {:>8.3}% e_std {:>8.4} mW n={}",
                p.p_min * 1e3,
                s.e_rel * 100.0,
                s.e_std * 1e3,
                s.samples
            ),
            None => println!("  pmin {:>5.0} mW: no samples", p.p_min * 1e3),
        }
    }

    // variant comparison on the same dataset
    for variant in [Variant::Norad, Variant::Noflux] {
        let t3 = Instant::now();
        let problem = FitProblem::new(ds.clone(), variant, 10, 7).unwrap();
        let cv = cross_validate(&problem).unwrap();
        println!(
            "cv {variant:?}: pooled e_rel {:.3}% e_std {:.4} mW in {:?}",
            cv.pooled.e_rel * 100.0,
            cv.pooled.e_std * 1e3,
            t3.elapsed()
        );
    }

    // noiseless: fit from default start
    let t4 = Instant::now();
    let spec0 = presets::demo_dataset_spec(presets::demo_params(), 0.0, 1, 42);
    let ds0 = generate_dataset(&spec0).unwrap();
    let problem0 = FitProblem::new(ds0.clone(), Variant::Int, 10, 7).unwrap();
    let fit0 = fit_parameters(&problem0).unwrap();
    println!(
        "noiseless fit: objective {:.3e} iters {} conv {} in {:?}",
        fit0.objective, fit0.iterations, fit0.converged, t4.elapsed()
    );
    println!("  fitted upper {:?}", fit0.params.upper_triangle());
    println!("  h {:.3e} r {:.3e}", fit0.params.h, fit0.params.r);
    let cv0 = cross_validate(&problem0).unwrap();
    println!("noiseless cv e_rel {:.6}%", cv0.pooled.e_rel * 100.0);

    // criterion 10 scenario: reflective wires, INT pipeline with inpainting
    let t5 = Instant::now();
    let mut params_rw = presets::demo_params_reflective_wires();
    params_rw = params_rw.with_variant(Variant::Int);
    let spec_rw = presets::demo_dataset_spec(params_rw.clone(), 0.1, 5, 99);
    let ds_rw = generate_dataset(&spec_rw).unwrap();
    let mut problem_rw = FitProblem::new(ds_rw.clone(), Variant::Int, 10, 7).unwrap();
    problem_rw.initial = problem_rw
        .initial
        .with_low_emissivity_materials(vec![presets::MATERIAL_WIRE])
        .unwrap();
    let fit_rw = fit_parameters(&problem_rw).unwrap();
    println!("reflective fit done in {:?} (obj {:.3e})", t5.elapsed(), fit_rw.objective);

    // spread vs error with the fitted params
    let mut spreads = Vec::new();
    let mut errors = Vec::new();
    for inst in &ds_rw.instances {
        let mut per_reading = Vec::new();
        for map in &inst.maps {
            let prep = wattmap::preprocess::inpaint_low_emissivity(
                map,
                &inst.layout,
                &[presets::MATERIAL_WIRE],
            )
            .unwrap();
            let pm = estimate_pixel_powers(&prep, &inst.layout, &fit_rw.params, ds_rw.t_amb).unwrap();
            let est: Vec<f64> = inst
                .powered_ids()
                .iter()
                .map(|&id| wattmap::aggregate::aggregate(&pm, &inst.layout, id).unwrap())
                .collect();
            per_reading.push(est);
        }
        // mean-map error
        let mean = inst.mean_map().unwrap();
        let prep = wattmap::preprocess::inpaint_low_emissivity(
            &mean,
            &inst.layout,
            &[presets::MATERIAL_WIRE],
        )
        .unwrap();
        let pm = estimate_pixel_powers(&prep, &inst.layout, &fit_rw.params, ds_rw.t_amb).unwrap();
        let mut err_acc = 0.0;
        for &id in &inst.powered_ids() {
            let est = wattmap::aggregate::aggregate(&pm, &inst.layout, id).unwrap();
            err_acc += (est - inst.truth_of(id).unwrap()).abs();
        }
        errors.push(err_acc / inst.powered_ids().len() as f64);
        spreads.push(ReadingEstimates { per_reading });
    }
    let sp = spread(&spreads).unwrap();
    let mean_err = errors.iter().sum::<f64>() / errors.len() as f64;
    println!(
        "spread mean {:.4} mW max {:.4} mW | mean abs error {:.4} mW | spread<err: {}",
        sp.mean * 1e3,
        sp.max * 1e3,
        mean_err * 1e3,
        sp.mean < mean_err
    );

    // how do the reflective-wire predictions score?
    let problem_rw_cv = {
        let mut p = FitProblem::new(ds_rw, Variant::Int, 10, 7).unwrap();
        p.initial = p
            .initial
            .with_low_emissivity_materials(vec![presets::MATERIAL_WIRE])
            .unwrap();
        p
    };
    let cv_rw = cross_validate(&problem_rw_cv).unwrap();
    println!(
        "reflective cv: e_rel {:.3}% e_std {:.4} mW",
        cv_rw.pooled.e_rel * 100.0,
        cv_rw.pooled.e_std * 1e3
    );
    let _ = summarize(&cv_rw.predictions, 0.0);

    println!("total {:?}", t0.elapsed());
}
