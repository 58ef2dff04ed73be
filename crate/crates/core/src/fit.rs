//! Parameter training by regularized nonlinear least squares, with k-fold
//! cross-validation.
//!
//! For every measurement instance the residual vector holds one estimated-
//! minus-true power entry per powered component, one entry for the board and
//! one for the wiring. The latter two are the pixel-wise L2 norms of the
//! estimated power over the respective masks; their squares penalize any
//! power attributed to components that cannot dissipate, acting as
//! regularizers.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dataset::{Dataset, MeasurementInstance};
use crate::error::{Error, Result};
use crate::grid::TemperatureMap;
use crate::layout::ComponentLayout;
use crate::lm::{minimize, LmOptions};
use crate::metrics::{summarize, ErrorSummary, SamplePrediction};
use crate::params::{ModelParams, Variant};
use crate::powerflow::estimate_pixel_powers;
use crate::preprocess::inpaint_low_emissivity;

/// A training task: dataset, variant, start point, bounds, and the
/// cross-validation shape.
#[derive(Debug, Clone)]
pub struct FitProblem {
    pub dataset: Dataset,
    pub variant: Variant,
    pub initial: ModelParams,
    /// Per-free-parameter bounds; `None` uses [`default_bounds`].
    pub bounds: Option<(Vec<f64>, Vec<f64>)>,
    pub folds: usize,
    pub seed: u64,
}

impl FitProblem {
    pub fn new(dataset: Dataset, variant: Variant, folds: usize, seed: u64) -> Result<Self> {
        let mu = dataset
            .instances
            .first()
            .map(|i| i.layout.mu())
            .ok_or_else(|| Error::InvalidArgument("empty dataset".into()))?;
        let initial = default_initial(mu, variant)?;
        Ok(Self {
            dataset,
            variant,
            initial,
            bounds: None,
            folds,
            seed,
        })
    }
}

/// Fit outcome: parameters, objective history, and diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub params: ModelParams,
    pub objective: f64,
    #[serde(skip)]
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub objective_trace: Vec<f64>,
    pub warnings: Vec<String>,
}

/// One cross-validation fold: which instances it held out and how the model
/// trained on the rest performed on them.
#[derive(Debug, Clone, Serialize)]
pub struct FoldReport {
    pub fold: usize,
    pub train_size: usize,
    pub validation_size: usize,
    pub summary: ErrorSummary,
    pub fit: FitResult,
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossValidation {
    pub folds: Vec<FoldReport>,
    /// Metrics over all validation predictions pooled together.
    pub pooled: ErrorSummary,
    #[serde(skip)]
    pub predictions: Vec<SamplePrediction>,
}

/// Spec-recommended start point: order-of-magnitude physical priors.
pub fn default_initial(mu: usize, variant: Variant) -> Result<ModelParams> {
    let upper = vec![1e-2; mu * (mu + 1) / 2];
    let mut emissivity = vec![0.95; mu];
    if mu == 3 {
        emissivity[1] = 0.2; // reflective wire material
    }
    if !matches!(variant, Variant::Full) {
        emissivity = vec![1.0; mu];
    }
    ModelParams::from_upper_triangle(mu, &upper, emissivity, 1e-3, 1e-11, variant)
}

/// Free-parameter layout for a variant: conductance upper triangle, then
/// emissivities (full model only), then `h`, then `r`, with the pinned
/// values of the reduced variants applied on unpacking.
struct ParamSpace {
    mu: usize,
    variant: Variant,
    low_emissivity_materials: Vec<usize>,
}

impl ParamSpace {
    fn dim(&self) -> usize {
        self.variant.trained_param_count(self.mu)
    }

    fn pack(&self, params: &ModelParams) -> Vec<f64> {
        let mut x = params.upper_triangle();
        if matches!(self.variant, Variant::Full) {
            x.extend_from_slice(params.emissivity());
        }
        if self.variant.uses_convection() {
            x.push(params.h);
        }
        if self.variant.uses_radiation() {
            x.push(params.r);
        }
        x
    }

    fn unpack(&self, x: &[f64]) -> Result<ModelParams> {
        let nc = self.mu * (self.mu + 1) / 2;
        let mut rest = &x[nc..];
        let emissivity = if matches!(self.variant, Variant::Full) {
            let e = rest[..self.mu].to_vec();
            rest = &rest[self.mu..];
            e
        } else {
            vec![1.0; self.mu]
        };
        let h = if self.variant.uses_convection() {
            let h = rest[0];
            rest = &rest[1..];
            h
        } else {
            0.0
        };
        let r = if self.variant.uses_radiation() {
            rest[0]
        } else {
            0.0
        };
        ModelParams::from_upper_triangle(self.mu, &x[..nc], emissivity, h, r, self.variant)?
            .with_low_emissivity_materials(self.low_emissivity_materials.clone())
    }

    fn default_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let nc = self.mu * (self.mu + 1) / 2;
        let mut lower = vec![0.0; nc];
        let mut upper = vec![1e3; nc];
        if matches!(self.variant, Variant::Full) {
            lower.extend(vec![0.01; self.mu]);
            upper.extend(vec![1.0; self.mu]);
        }
        if self.variant.uses_convection() {
            lower.push(0.0);
            upper.push(1e3);
        }
        if self.variant.uses_radiation() {
            lower.push(0.0);
            upper.push(1e-6);
        }
        (lower, upper)
    }

    /// Finite-difference scales per parameter, from the start point.
    fn scales(&self, initial: &ModelParams) -> Vec<f64> {
        self.pack(initial)
            .into_iter()
            .map(|v| if v == 0.0 { 1e-6 } else { v.abs() })
            .collect()
    }
}

/// An instance with its variant preprocessing already applied: readings
/// averaged, unreliable regions inpainted for the interpolation variants.
struct PreparedInstance {
    config: String,
    voltage_index: usize,
    voltage: f64,
    layout: std::sync::Arc<ComponentLayout>,
    map: TemperatureMap,
    powered: Vec<(u32, f64)>,
    board_mask: Vec<bool>,
    wire_mask: Vec<bool>,
}

fn prepare_instances(
    dataset: &Dataset,
    variant: Variant,
    low_emissivity_materials: &[usize],
) -> Result<Vec<PreparedInstance>> {
    let mut order: Vec<&MeasurementInstance> = dataset.instances.iter().collect();
    order.sort_by(|a, b| {
        a.config
            .cmp(&b.config)
            .then(a.voltage_index.cmp(&b.voltage_index))
    });

    let mut prepared = Vec::with_capacity(order.len());
    for inst in order {
        inst.validate()?;
        let mean = inst.mean_map()?;
        let map = if variant.uses_compensation() || low_emissivity_materials.is_empty() {
            mean
        } else {
            inpaint_low_emissivity(&mean, &inst.layout, low_emissivity_materials)?
        };

        let layout = &inst.layout;
        let wire_ids = inst.wire_ids();
        let n = layout.height() * layout.width();
        let mut board_mask = vec![false; n];
        let mut wire_mask = vec![false; n];
        for row in 0..layout.height() {
            for col in 0..layout.width() {
                let id = layout.id_at(row, col);
                if id == 0 {
                    board_mask[row * layout.width() + col] = true;
                } else if wire_ids.contains(&id) {
                    wire_mask[row * layout.width() + col] = true;
                }
            }
        }

        let mut powered: Vec<(u32, f64)> = inst.truth.clone();
        powered.sort_by_key(|&(id, _)| id);
        prepared.push(PreparedInstance {
            config: inst.config.clone(),
            voltage_index: inst.voltage_index,
            voltage: inst.voltage,
            layout: inst.layout.clone(),
            map,
            powered,
            board_mask,
            wire_mask,
        });
    }
    Ok(prepared)
}

/// Residual entries of one prepared instance under `params`:
/// per-component power errors, then the board and wire power norms.
fn instance_residuals(
    inst: &PreparedInstance,
    params: &ModelParams,
    t_amb: f64,
    out: &mut Vec<f64>,
) -> Result<()> {
    let pm = estimate_pixel_powers(&inst.map, &inst.layout, params, t_amb)?;
    let width = inst.layout.width();
    let mut board_sq = 0.0;
    let mut wire_sq = 0.0;
    let mut powered_sums = vec![0.0; inst.powered.len()];
    for (row, col, p) in pm.interior() {
        let cell = row * width + col;
        if inst.board_mask[cell] {
            board_sq += p * p;
        } else if inst.wire_mask[cell] {
            wire_sq += p * p;
        } else {
            let id = inst.layout.id_at(row, col);
            if let Some(k) = inst.powered.iter().position(|&(pid, _)| pid == id) {
                powered_sums[k] += p;
            }
        }
    }
    for (k, &(_, truth)) in inst.powered.iter().enumerate() {
        out.push(powered_sums[k] - truth);
    }
    out.push(board_sq.sqrt());
    out.push(wire_sq.sqrt());
    Ok(())
}

/// Same objective as [`instance_residuals`], but with the board and wire
/// norms expanded into one entry per pixel. The squared sums are identical;
/// the expanded entries are linear in the parameters wherever the pixel
/// powers are, which is what lets the optimizer take full Gauss-Newton
/// steps.
fn instance_residuals_expanded(
    inst: &PreparedInstance,
    params: &ModelParams,
    t_amb: f64,
    out: &mut Vec<f64>,
) -> Result<()> {
    let pm = estimate_pixel_powers(&inst.map, &inst.layout, params, t_amb)?;
    let width = inst.layout.width();
    let start = out.len();
    let mut powered_sums = vec![0.0; inst.powered.len()];
    out.resize(start + inst.powered.len(), 0.0);
    for (row, col, p) in pm.interior() {
        let cell = row * width + col;
        if inst.board_mask[cell] || inst.wire_mask[cell] {
            out.push(p);
        } else {
            let id = inst.layout.id_at(row, col);
            if let Some(k) = inst.powered.iter().position(|&(pid, _)| pid == id) {
                powered_sums[k] += p;
            }
        }
    }
    for (k, &(_, truth)) in inst.powered.iter().enumerate() {
        out[start + k] = powered_sums[k] - truth;
    }
    Ok(())
}

/// The full residual vector of a dataset under `params`, instances in
/// canonical (configuration, voltage) order. Readings of an instance are
/// averaged before evaluation.
pub fn residuals(params: &ModelParams, dataset: &Dataset) -> Result<Vec<f64>> {
    let prepared = prepare_instances(
        dataset,
        params.variant,
        &params.low_emissivity_materials,
    )?;
    let mut out = Vec::new();
    for inst in &prepared {
        instance_residuals(inst, params, dataset.t_amb, &mut out)?;
    }
    Ok(out)
}

fn fit_prepared(
    prepared: &[&PreparedInstance],
    t_amb: f64,
    variant: Variant,
    initial: &ModelParams,
    bounds: Option<&(Vec<f64>, Vec<f64>)>,
) -> Result<FitResult> {
    let mu = initial.mu();
    let space = ParamSpace {
        mu,
        variant,
        low_emissivity_materials: initial.low_emissivity_materials.clone(),
    };
    let parameters = space.dim();
    if prepared.len() < parameters {
        return Err(Error::UnderDetermined {
            instances: prepared.len(),
            parameters,
        });
    }

    let (lower, upper) = match bounds {
        Some((lo, hi)) => (lo.clone(), hi.clone()),
        None => space.default_bounds(),
    };
    if lower.len() != parameters || upper.len() != parameters {
        return Err(Error::DimensionMismatch(format!(
            "bounds must have {parameters} entries"
        )));
    }

    let objective = |x: &[f64]| -> Result<Vec<f64>> {
        let params = space.unpack(x)?;
        let mut out = Vec::new();
        for inst in prepared {
            instance_residuals_expanded(inst, &params, t_amb, &mut out)?;
        }
        Ok(out)
    };

    let x0 = space.pack(initial);
    let scales = space.scales(initial);
    let outcome = minimize(
        objective,
        &x0,
        &lower,
        &upper,
        &scales,
        &LmOptions::default(),
    )?;

    // report the contract-shaped residual vector at the fitted point
    let fitted = space.unpack(&outcome.x)?;
    let mut contract_residuals = Vec::new();
    for inst in prepared {
        instance_residuals(inst, &fitted, t_amb, &mut contract_residuals)?;
    }

    let mut warnings = Vec::new();
    if prepared.len() < 2 * parameters {
        warnings.push(format!(
            "marginal sample count: {} instances for {} parameters",
            prepared.len(),
            parameters
        ));
    }
    if !outcome.dead_parameters.is_empty() {
        warnings.push(format!(
            "rank-deficient fit: parameters {:?} have no influence on the residuals",
            outcome.dead_parameters
        ));
    }

    Ok(FitResult {
        params: fitted,
        objective: outcome.objective,
        residuals: contract_residuals,
        iterations: outcome.iterations,
        converged: outcome.converged,
        objective_trace: outcome.trace,
        warnings,
    })
}

/// Trains the variant's free parameters on the whole dataset.
pub fn fit_parameters(problem: &FitProblem) -> Result<FitResult> {
    let prepared = prepare_instances(
        &problem.dataset,
        problem.variant,
        &problem.initial.low_emissivity_materials,
    )?;
    let refs: Vec<&PreparedInstance> = prepared.iter().collect();
    fit_prepared(
        &refs,
        problem.dataset.t_amb,
        problem.variant,
        &problem.initial,
        problem.bounds.as_ref(),
    )
}

/// Component power predictions of `params` on prepared instances.
fn predict(
    prepared: &[&PreparedInstance],
    params: &ModelParams,
    t_amb: f64,
) -> Result<Vec<SamplePrediction>> {
    let mut out = Vec::new();
    for inst in prepared {
        let pm = estimate_pixel_powers(&inst.map, &inst.layout, params, t_amb)?;
        let mut sums = vec![0.0; inst.powered.len()];
        for (row, col, p) in pm.interior() {
            let id = inst.layout.id_at(row, col);
            if let Some(k) = inst.powered.iter().position(|&(pid, _)| pid == id) {
                sums[k] += p;
            }
        }
        for (k, &(id, truth)) in inst.powered.iter().enumerate() {
            out.push(SamplePrediction {
                config: inst.config.clone(),
                voltage_index: inst.voltage_index,
                voltage: inst.voltage,
                component_id: id,
                truth,
                estimate: sums[k],
            });
        }
    }
    Ok(out)
}

/// K-fold cross-validation: folds partition instances (all readings of an
/// instance stay together), assignment is a seeded shuffle of the canonical
/// instance order, so it does not depend on input order.
pub fn cross_validate(problem: &FitProblem) -> Result<CrossValidation> {
    let folds = problem.folds;
    let n = problem.dataset.instances.len();
    if folds < 2 || folds > n {
        return Err(Error::InvalidArgument(format!(
            "fold count {folds} must be in 2..={n}"
        )));
    }
    let prepared = prepare_instances(
        &problem.dataset,
        problem.variant,
        &problem.initial.low_emissivity_materials,
    )?;

    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(problem.seed);
    order.shuffle(&mut rng);

    // fold sizes differ by at most one
    let base = n / folds;
    let extra = n % folds;
    let mut assignments = vec![0usize; n];
    let mut cursor = 0;
    for fold in 0..folds {
        let size = base + usize::from(fold < extra);
        for &idx in &order[cursor..cursor + size] {
            assignments[idx] = fold;
        }
        cursor += size;
    }

    let mut fold_reports = Vec::with_capacity(folds);
    let mut pooled_predictions = Vec::new();
    for fold in 0..folds {
        let train: Vec<&PreparedInstance> = prepared
            .iter()
            .enumerate()
            .filter(|(i, _)| assignments[*i] != fold)
            .map(|(_, p)| p)
            .collect();
        let validation: Vec<&PreparedInstance> = prepared
            .iter()
            .enumerate()
            .filter(|(i, _)| assignments[*i] == fold)
            .map(|(_, p)| p)
            .collect();

        let fit = fit_prepared(
            &train,
            problem.dataset.t_amb,
            problem.variant,
            &problem.initial,
            problem.bounds.as_ref(),
        )?;

        let predictions = predict(&validation, &fit.params, problem.dataset.t_amb)?;
        let summary = summarize(&predictions, 0.0)?;
        pooled_predictions.extend(predictions);
        fold_reports.push(FoldReport {
            fold,
            train_size: train.len(),
            validation_size: validation.len(),
            summary,
            fit,
        });
    }

    let pooled = summarize(&pooled_predictions, 0.0)?;
    Ok(CrossValidation {
        folds: fold_reports,
        pooled,
        predictions: pooled_predictions,
    })
}
