//! Forward steady-state heat simulation and observation synthesis.
//!
//! The solver is the ground-truth oracle for the estimator: it finds the
//! temperature field whose per-cell power flow balances a prescribed
//! electrical injection, so running the estimator on the solution must give
//! the injection back.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, MeasurementInstance};
use crate::error::{Error, Result};
use crate::grid::TemperatureMap;
use crate::layout::ComponentLayout;
use crate::params::ModelParams;
use crate::powerflow::conductance_fields;
use crate::preprocess::apply_emissivity;

/// Electrical power dissipated in a resistance under a supply voltage.
pub fn ohmic_power(voltage: f64, resistance: f64) -> Result<f64> {
    if !(resistance > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "resistance must be positive, got {resistance}"
        )));
    }
    Ok(voltage * voltage / resistance)
}

/// One steady state to simulate: a board, the generating model parameters,
/// and per-component injected powers.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub layout: Arc<ComponentLayout>,
    pub params: ModelParams,
    pub t_amb: f64,
    /// Total electrical power per component id, watts; spread uniformly
    /// over the component's cells.
    pub injections: BTreeMap<u32, f64>,
    pub sigma: f64,
    pub readings: usize,
    pub seed: u64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.layout.mu() != self.params.mu() {
            return Err(Error::DimensionMismatch(
                "layout and params disagree on material count".into(),
            ));
        }
        if !(self.t_amb > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "ambient temperature must be positive, got {}",
                self.t_amb
            )));
        }
        if self.sigma < 0.0 {
            return Err(Error::InvalidArgument("noise sigma must be >= 0".into()));
        }
        if self.readings == 0 {
            return Err(Error::InvalidArgument("need at least one reading".into()));
        }
        for (&id, &p) in &self.injections {
            if !self.layout.contains(id) {
                return Err(Error::UnknownComponent { id });
            }
            if !(p >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "injection into component {id} is {p}, must be >= 0"
                )));
            }
        }
        Ok(())
    }

    /// Per-cell injection field, uniform over each component's cells.
    fn injection_field(&self) -> Vec<f64> {
        let layout = &self.layout;
        let mut field = vec![0.0; layout.height() * layout.width()];
        for (&id, &total) in &self.injections {
            let cells = layout.cell_count(id);
            if cells == 0 || total == 0.0 {
                continue;
            }
            let per_cell = total / cells as f64;
            for row in 0..layout.height() {
                for col in 0..layout.width() {
                    if layout.id_at(row, col) == id {
                        field[row * layout.width() + col] = per_cell;
                    }
                }
            }
        }
        field
    }
}

/// Newton convergence target on the per-cell power residual, watts.
pub const SOLVER_TOLERANCE_W: f64 = 1e-12;
/// Newton iteration budget.
pub const SOLVER_MAX_ITERATIONS: usize = 100;

/// Solves for the true surface temperatures of a scenario.
///
/// Interior cells satisfy a zero net power flow (injection + conduction +
/// convection + radiation); the border ring is held at the ambient
/// temperature. Newton iteration on the residual, with a Jacobi
/// preconditioned conjugate gradient inner solve; the radiative term is the
/// only nonlinearity and is mild at board temperatures, so a handful of
/// Newton steps suffices.
pub fn solve_steady_state(scenario: &Scenario) -> Result<TemperatureMap> {
    scenario.validate()?;
    let layout = &scenario.layout;
    let params = &scenario.params;
    let height = layout.height();
    let width = layout.width();
    let t_amb = scenario.t_amb;

    let fields = conductance_fields(layout, params);
    let injections = scenario.injection_field();

    // interior unknowns, row-major
    let iw = width - 2;
    let ih = height - 2;
    let n = iw * ih;
    let idx = |row: usize, col: usize| (row - 1) * iw + (col - 1);

    let mut temps = vec![t_amb; height * width];
    let mut x = vec![t_amb; n];

    // cell emissivity for the radiative term
    let mut eps = vec![0.0; height * width];
    for row in 0..height {
        for col in 0..width {
            eps[row * width + col] = params.emissivity_of(layout.material_at(row, col));
        }
    }

    let residual = |x: &[f64], out: &mut Vec<f64>| {
        out.clear();
        let amb4 = t_amb.powi(4);
        for row in 1..height - 1 {
            for col in 1..width - 1 {
                let i = row * width + col;
                let t0 = x[idx(row, col)];
                let t_at = |r: usize, c: usize| {
                    if r == 0 || c == 0 || r == height - 1 || c == width - 1 {
                        t_amb
                    } else {
                        x[idx(r, c)]
                    }
                };
                let p_cond = fields.top[i] * (t_at(row - 1, col) - t0)
                    + fields.bottom[i] * (t_at(row + 1, col) - t0)
                    + fields.left[i] * (t_at(row, col - 1) - t0)
                    + fields.right[i] * (t_at(row, col + 1) - t0);
                let p_conv = params.h * (t_amb - t0);
                let p_rad = params.r * eps[i] * (amb4 - t0.powi(4));
                out.push(injections[i] + p_cond + p_conv + p_rad);
            }
        }
    };

    let mut f = Vec::with_capacity(n);
    let mut iterations = 0;
    loop {
        residual(&x, &mut f);
        let max_res = f.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        if max_res < SOLVER_TOLERANCE_W {
            break;
        }
        if iterations >= SOLVER_MAX_ITERATIONS {
            return Err(Error::SolverDiverged {
                max_residual: max_res,
                iterations,
            });
        }
        iterations += 1;

        // Solve J * delta = f with J the (negated, SPD) residual Jacobian:
        // diag = sum of edge conductances + h + 4 r eps T^3, off-diag = -C.
        let diag: Vec<f64> = (1..height - 1)
            .flat_map(|row| (1..width - 1).map(move |col| (row, col)))
            .map(|(row, col)| {
                let i = row * width + col;
                let t0 = x[idx(row, col)];
                fields.top[i]
                    + fields.bottom[i]
                    + fields.left[i]
                    + fields.right[i]
                    + params.h
                    + 4.0 * params.r * eps[i] * t0.powi(3)
            })
            .collect();
        if diag.iter().any(|&d| d <= 0.0) {
            return Err(Error::SingularSystem);
        }

        let apply = |v: &[f64], out: &mut [f64]| {
            for row in 1..height - 1 {
                for col in 1..width - 1 {
                    let i = row * width + col;
                    let k = idx(row, col);
                    let mut acc = diag[k] * v[k];
                    if row > 1 {
                        acc -= fields.top[i] * v[idx(row - 1, col)];
                    }
                    if row < height - 2 {
                        acc -= fields.bottom[i] * v[idx(row + 1, col)];
                    }
                    if col > 1 {
                        acc -= fields.left[i] * v[idx(row, col - 1)];
                    }
                    if col < width - 2 {
                        acc -= fields.right[i] * v[idx(row, col + 1)];
                    }
                    out[k] = acc;
                }
            }
        };

        let delta = conjugate_gradient(n, apply, &f, &diag)?;
        for (xi, di) in x.iter_mut().zip(&delta) {
            *xi += di;
        }
    }

    for row in 1..height - 1 {
        for col in 1..width - 1 {
            temps[row * width + col] = x[idx(row, col)];
        }
    }
    TemperatureMap::new(height, width, temps)
}

/// Jacobi-preconditioned conjugate gradient for the SPD Newton systems.
fn conjugate_gradient(
    n: usize,
    apply: impl Fn(&[f64], &mut [f64]),
    rhs: &[f64],
    diag: &[f64],
) -> Result<Vec<f64>> {
    let mut x = vec![0.0; n];
    let mut r = rhs.to_vec();
    let mut z: Vec<f64> = r.iter().zip(diag).map(|(ri, di)| ri / di).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];

    let rhs_norm = rhs.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    if rhs_norm == 0.0 {
        return Ok(x);
    }
    let target = rhs_norm * 1e-16;

    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let max_iters = 100 * n.max(100);
    for _ in 0..max_iters {
        apply(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            return Err(Error::SingularSystem);
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let res = r.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        if res <= target || res == 0.0 {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_next: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    // stagnated below target progress; report how close we got
    let res = r.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    if res <= rhs_norm * 1e-10 {
        Ok(x)
    } else {
        Err(Error::SolverDiverged {
            max_residual: res,
            iterations: max_iters,
        })
    }
}

/// Grey-body observation of a true temperature field with sensor noise.
///
/// `t_obs^4 = e * t_true^4 + (1 - e) * t_box^4`, then i.i.d. Gaussian noise
/// of standard deviation `sigma` kelvin per cell. Deterministic for a given
/// seed.
pub fn synthesize_observation(
    true_map: &TemperatureMap,
    layout: &ComponentLayout,
    emissivity: &[f64],
    t_box: f64,
    sigma: f64,
    seed: u64,
) -> Result<TemperatureMap> {
    let observed = apply_emissivity(true_map, layout, emissivity, t_box)?;
    if sigma == 0.0 {
        return Ok(observed);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma)
        .map_err(|e| Error::InvalidArgument(format!("bad noise sigma: {e}")))?;
    let values = observed
        .values()
        .iter()
        .map(|&v| v + normal.sample(&mut rng))
        .collect();
    observed.with_values(values)
}

/// Derives a per-(instance, reading) RNG seed from the dataset seed.
pub fn derive_seed(seed: u64, instance: u64, reading: u64) -> u64 {
    let mut z = seed ^ splitmix64(instance.wrapping_add(0x9e37_79b9_7f4a_7c15));
    z = splitmix64(z ^ splitmix64(reading.wrapping_add(0x2545_f491_4f6c_dd1d)));
    z
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// How the components of one configuration are driven.
#[derive(Debug, Clone)]
pub enum Drive {
    /// Per-component resistances; one instance per supply voltage, powers
    /// from Ohm's law with an optional series resistance in the feed line.
    Resistors {
        resistances: BTreeMap<u32, f64>,
        series_resistance: f64,
    },
    /// Fixed per-component powers; a single instance.
    Injections(BTreeMap<u32, f64>),
}

#[derive(Debug, Clone)]
pub struct ConfigSpec {
    pub label: String,
    pub layout: Arc<ComponentLayout>,
    pub drive: Drive,
}

/// Recipe for a whole dataset: configurations, the voltage sweep, the
/// generating parameters, and the acquisition knobs.
#[derive(Debug, Clone)]
pub struct DatasetSpec {
    pub configs: Vec<ConfigSpec>,
    /// Supply voltages; one instance per (resistor-driven config, voltage).
    pub voltages: Vec<f64>,
    pub params: ModelParams,
    pub t_amb: f64,
    pub sigma: f64,
    pub readings: usize,
    pub seed: u64,
}

/// Simulates every instance of the spec: solve the steady state, observe it
/// through the material emissivities, add sensor noise per reading.
pub fn generate_dataset(spec: &DatasetSpec) -> Result<Dataset> {
    let mut instances = Vec::new();
    let mut instance_index = 0u64;
    for config in &spec.configs {
        let cases: Vec<(usize, f64, BTreeMap<u32, f64>)> = match &config.drive {
            Drive::Resistors {
                resistances,
                series_resistance,
            } => {
                let mut cases = Vec::new();
                for (i, &v) in spec.voltages.iter().enumerate() {
                    let mut injections = BTreeMap::new();
                    for (&id, &r) in resistances {
                        let p = if *series_resistance > 0.0 {
                            let i_total = v / (r + series_resistance);
                            i_total * i_total * r
                        } else {
                            ohmic_power(v, r)?
                        };
                        injections.insert(id, p);
                    }
                    cases.push((i + 1, v, injections));
                }
                cases
            }
            Drive::Injections(injections) => vec![(0, 0.0, injections.clone())],
        };

        for (voltage_index, voltage, injections) in cases {
            let scenario = Scenario {
                layout: config.layout.clone(),
                params: spec.params.clone(),
                t_amb: spec.t_amb,
                injections: injections.clone(),
                sigma: spec.sigma,
                readings: spec.readings,
                seed: spec.seed,
            };
            let true_map = solve_steady_state(&scenario)?;
            let mut maps = Vec::with_capacity(spec.readings);
            for reading in 0..spec.readings {
                maps.push(synthesize_observation(
                    &true_map,
                    &config.layout,
                    spec.params.emissivity(),
                    spec.t_amb,
                    spec.sigma,
                    derive_seed(spec.seed, instance_index, reading as u64),
                )?);
            }
            instances.push(MeasurementInstance {
                config: config.label.clone(),
                voltage_index,
                voltage,
                layout: config.layout.clone(),
                maps,
                truth: injections.into_iter().collect(),
            });
            instance_index += 1;
        }
    }
    let dataset = Dataset {
        t_amb: spec.t_amb,
        sigma: spec.sigma,
        readings: spec.readings,
        seed: spec.seed,
        instances,
    };
    dataset.validate()?;
    Ok(dataset)
}

/// On-disk scenario description consumed by the `simulate` command.
#[derive(Serialize, Deserialize)]
struct ScenarioFile {
    t_amb: f64,
    sigma: f64,
    readings: usize,
    seed: u64,
    params: ModelParams,
    #[serde(default)]
    voltages: Vec<f64>,
    configs: Vec<ScenarioConfig>,
}

#[derive(Serialize, Deserialize)]
struct ScenarioConfig {
    label: String,
    layout: String,
    #[serde(default)]
    resistances: BTreeMap<u32, f64>,
    #[serde(default)]
    series_resistance: f64,
    #[serde(default)]
    injections: BTreeMap<u32, f64>,
}

/// Loads a scenario JSON file; layout paths resolve relative to it.
pub fn load_dataset_spec(path: impl AsRef<Path>) -> Result<DatasetSpec> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: ScenarioFile = serde_json::from_str(&text)
        .map_err(|e| Error::parse(path, e.line(), e.to_string()))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));

    let mut configs = Vec::with_capacity(file.configs.len());
    for c in file.configs {
        let layout = Arc::new(ComponentLayout::load(base.join(&c.layout))?);
        let drive = if !c.injections.is_empty() {
            if !c.resistances.is_empty() {
                return Err(Error::Validation(format!(
                    "configuration {} declares both resistances and injections",
                    c.label
                )));
            }
            Drive::Injections(c.injections)
        } else if !c.resistances.is_empty() {
            Drive::Resistors {
                resistances: c.resistances,
                series_resistance: c.series_resistance,
            }
        } else {
            return Err(Error::Validation(format!(
                "configuration {} declares neither resistances nor injections",
                c.label
            )));
        };
        configs.push(ConfigSpec {
            label: c.label,
            layout,
            drive,
        });
    }
    if configs
        .iter()
        .any(|c| matches!(c.drive, Drive::Resistors { .. }))
        && file.voltages.is_empty()
    {
        return Err(Error::Validation(
            "resistor-driven configurations need a voltage list".into(),
        ));
    }
    Ok(DatasetSpec {
        configs,
        voltages: file.voltages,
        params: file.params,
        t_amb: file.t_amb,
        sigma: file.sigma,
        readings: file.readings,
        seed: file.seed,
    })
}

/// Writes a scenario JSON file describing `spec`, saving layouts next to it.
pub fn save_dataset_spec(spec: &DatasetSpec, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(base).map_err(|e| Error::io(base, e))?;
    let mut configs = Vec::with_capacity(spec.configs.len());
    for c in &spec.configs {
        let layout_name = format!("layout_{}.json", c.label);
        c.layout.save(base.join(&layout_name))?;
        let (resistances, series_resistance, injections) = match &c.drive {
            Drive::Resistors {
                resistances,
                series_resistance,
            } => (resistances.clone(), *series_resistance, BTreeMap::new()),
            Drive::Injections(inj) => (BTreeMap::new(), 0.0, inj.clone()),
        };
        configs.push(ScenarioConfig {
            label: c.label.clone(),
            layout: layout_name,
            resistances,
            series_resistance,
            injections,
        });
    }
    let file = ScenarioFile {
        t_amb: spec.t_amb,
        sigma: spec.sigma,
        readings: spec.readings,
        seed: spec.seed,
        params: spec.params.clone(),
        voltages: spec.voltages.clone(),
        configs,
    };
    let json = serde_json::to_string_pretty(&file).expect("scenario serializes");
    fs::write(path, json).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::ComponentInfo;
    use crate::params::Variant;

    fn small_board() -> Arc<ComponentLayout> {
        let (h, w) = (8, 8);
        let mut ids = vec![0u32; h * w];
        for row in 3..5 {
            for col in 3..5 {
                ids[row * w + col] = 1;
            }
        }
        Arc::new(
            ComponentLayout::new(
                h,
                w,
                ids,
                vec![
                    ComponentInfo {
                        id: 0,
                        name: "board".into(),
                        material: 1,
                    },
                    ComponentInfo {
                        id: 1,
                        name: "r1".into(),
                        material: 3,
                    },
                ],
                3,
            )
            .unwrap(),
        )
    }

    fn params(h: f64, r: f64) -> ModelParams {
        ModelParams::from_upper_triangle(
            3,
            &[8e-5, 1.2e-4, 1.0e-4, 3e-4, 1.5e-4, 2e-4],
            vec![1.0; 3],
            h,
            r,
            Variant::Int,
        )
        .unwrap()
    }

    fn scenario(injection: f64, h: f64, r: f64) -> Scenario {
        let mut injections = BTreeMap::new();
        if injection > 0.0 {
            injections.insert(1, injection);
        }
        Scenario {
            layout: small_board(),
            params: params(h, r),
            t_amb: 300.0,
            injections,
            sigma: 0.0,
            readings: 1,
            seed: 1,
        }
    }

    #[test]
    fn ohmic_power_examples() {
        assert!((ohmic_power(1.0, 10.0).unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(ohmic_power(0.0, 47.0).unwrap(), 0.0);
        // nominal pair: the formula is literal
        assert!((ohmic_power(2.5, 15.0).unwrap() - 0.416_666_666_666_666_7).abs() < 1e-12);
        assert!(ohmic_power(1.0, 0.0).is_err());
        assert!(ohmic_power(1.0, -5.0).is_err());
    }

    #[test]
    fn zero_injection_gives_ambient_everywhere() {
        let t = solve_steady_state(&scenario(0.0, 3e-5, 5e-14)).unwrap();
        for &v in t.values() {
            assert_eq!(v, 300.0);
        }
    }

    #[test]
    fn injection_heats_the_component() {
        let t = solve_steady_state(&scenario(0.2, 3e-5, 0.0)).unwrap();
        assert!(t.at(3, 3) > 310.0, "component cell at {}", t.at(3, 3));
        assert!(t.at(3, 3) > t.at(1, 6));
        // border ring pinned at ambient
        assert_eq!(t.at(0, 4), 300.0);
        assert_eq!(t.at(7, 7), 300.0);
    }

    #[test]
    fn doubling_injection_never_cools_any_cell() {
        let t1 = solve_steady_state(&scenario(0.1, 3e-5, 0.0)).unwrap();
        let t2 = solve_steady_state(&scenario(0.2, 3e-5, 0.0)).unwrap();
        for (a, b) in t1.values().iter().zip(t2.values()) {
            assert!(b >= a);
        }
    }

    #[test]
    fn component_relabeling_does_not_change_temperatures() {
        let base = solve_steady_state(&scenario(0.15, 3e-5, 5e-14)).unwrap();

        let (h, w) = (8, 8);
        let mut ids = vec![0u32; h * w];
        for row in 3..5 {
            for col in 3..5 {
                ids[row * w + col] = 5;
            }
        }
        let relabeled = Arc::new(
            ComponentLayout::new(
                h,
                w,
                ids,
                vec![
                    ComponentInfo {
                        id: 0,
                        name: "board".into(),
                        material: 1,
                    },
                    ComponentInfo {
                        id: 5,
                        name: "r5".into(),
                        material: 3,
                    },
                ],
                3,
            )
            .unwrap(),
        );
        let mut injections = BTreeMap::new();
        injections.insert(5, 0.15);
        let other = solve_steady_state(&Scenario {
            layout: relabeled,
            params: params(3e-5, 5e-14),
            t_amb: 300.0,
            injections,
            sigma: 0.0,
            readings: 1,
            seed: 1,
        })
        .unwrap();
        assert_eq!(base.values(), other.values());
    }

    #[test]
    fn no_sink_is_singular() {
        let mut s = scenario(0.1, 0.0, 0.0);
        s.params =
            ModelParams::from_upper_triangle(3, &[0.0; 6], vec![1.0; 3], 0.0, 0.0, Variant::Int)
                .unwrap();
        assert!(matches!(
            solve_steady_state(&s),
            Err(Error::SingularSystem)
        ));
    }

    #[test]
    fn energy_balance_at_linear_solution() {
        // r = 0: injected power leaves through convection and the border
        let s = scenario(0.25, 4e-5, 0.0);
        let t = solve_steady_state(&s).unwrap();
        let layout = &s.layout;
        let fields = conductance_fields(layout, &s.params);
        let (h, w) = (8usize, 8usize);
        let mut convective = 0.0;
        let mut border_flux = 0.0;
        for row in 1..h - 1 {
            for col in 1..w - 1 {
                let i = row * w + col;
                convective += s.params.h * (t.at(row, col) - 300.0);
                if row == 1 {
                    border_flux += fields.top[i] * (t.at(row, col) - 300.0);
                }
                if row == h - 2 {
                    border_flux += fields.bottom[i] * (t.at(row, col) - 300.0);
                }
                if col == 1 {
                    border_flux += fields.left[i] * (t.at(row, col) - 300.0);
                }
                if col == w - 2 {
                    border_flux += fields.right[i] * (t.at(row, col) - 300.0);
                }
            }
        }
        assert!(
            (convective + border_flux - 0.25).abs() < 1e-9,
            "balance off: {}",
            convective + border_flux - 0.25
        );
    }

    #[test]
    fn synthesis_identity_without_noise_or_emissivity() {
        let t = solve_steady_state(&scenario(0.1, 3e-5, 0.0)).unwrap();
        let obs = synthesize_observation(&t, &small_board(), &[1.0; 3], 300.0, 0.0, 42).unwrap();
        assert_eq!(t, obs);
    }

    #[test]
    fn low_emissivity_cells_read_darker() {
        // true wire at 320 K in a 300 K box reads between the two
        let layout = small_board();
        let mut vals = vec![310.0; 64];
        for row in 3..5 {
            for col in 3..5 {
                vals[row * 8 + col] = 320.0;
            }
        }
        let t = TemperatureMap::new(8, 8, vals).unwrap();
        let obs = synthesize_observation(&t, &layout, &[1.0, 1.0, 0.2], 300.0, 0.0, 1).unwrap();
        let read = obs.at(3, 3);
        assert!(read > 300.0 && read < 320.0, "wire reads {read}");
        assert_eq!(obs.at(1, 1), 310.0);
    }

    #[test]
    fn synthesis_is_deterministic_per_seed() {
        let t = solve_steady_state(&scenario(0.1, 3e-5, 0.0)).unwrap();
        let layout = small_board();
        let a = synthesize_observation(&t, &layout, &[1.0; 3], 300.0, 0.1, 7).unwrap();
        let b = synthesize_observation(&t, &layout, &[1.0; 3], 300.0, 0.1, 7).unwrap();
        let c = synthesize_observation(&t, &layout, &[1.0; 3], 300.0, 0.1, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn dataset_generation_counts_and_truths() {
        let layout = small_board();
        let mut resistances = BTreeMap::new();
        resistances.insert(1, 150.0);
        let spec = DatasetSpec {
            configs: vec![ConfigSpec {
                label: "d".into(),
                layout,
                drive: Drive::Resistors {
                    resistances,
                    series_resistance: 0.0,
                },
            }],
            voltages: vec![1.0, 2.5],
            params: params(3e-5, 0.0),
            t_amb: 300.0,
            sigma: 0.0,
            readings: 3,
            seed: 11,
        };
        let ds = generate_dataset(&spec).unwrap();
        assert_eq!(ds.instances.len(), 2);
        assert_eq!(ds.instances[0].maps.len(), 3);
        // zero noise: all readings identical
        assert_eq!(ds.instances[0].maps[0], ds.instances[0].maps[2]);
        let t = ds.instances[1].truth_of(1).unwrap();
        assert!((t - 0.041_666_666_666_666_664).abs() < 1e-15);
    }
}
