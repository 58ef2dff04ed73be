//! Box-constrained Levenberg-Marquardt for small nonlinear least squares.
//!
//! Finite-difference Jacobian, Marquardt diagonal scaling, steps projected
//! onto the bounds. The problems this crate fits have at most a dozen
//! parameters, so the normal equations are solved densely.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub struct LmOptions {
    pub max_iterations: usize,
    /// Stop when the relative objective decrease of an accepted step falls
    /// below this.
    pub objective_tolerance: f64,
    /// Stop when the max-norm of the gradient J^T f falls below this.
    pub gradient_tolerance: f64,
    /// Relative finite-difference step.
    pub fd_step: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            objective_tolerance: 1e-10,
            gradient_tolerance: 1e-10,
            fd_step: 1e-6,
        }
    }
}

pub struct LmOutcome {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after the start point and after each accepted step;
    /// non-increasing by construction.
    pub trace: Vec<f64>,
    /// Indices of parameters whose Jacobian column was (numerically) zero
    /// at the start point.
    pub dead_parameters: Vec<usize>,
}

/// Minimizes `||f(x)||^2` over the box `[lower, upper]`.
///
/// `scale` gives per-parameter typical magnitudes; the search runs in the
/// rescaled variables `x / scale` so that parameters of wildly different
/// units (conductances against a fourth-power radiative coefficient) leave
/// the normal equations well conditioned. Residual evaluations that fail
/// reject the trial step; a failure at the current point is fatal.
pub fn minimize<F>(
    mut f_raw: F,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    scale: &[f64],
    options: &LmOptions,
) -> Result<LmOutcome>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let n = x0.len();
    if lower.len() != n || upper.len() != n || scale.len() != n {
        return Err(Error::DimensionMismatch(
            "bounds and scales must match the parameter count".into(),
        ));
    }
    if scale.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::InvalidArgument(
            "parameter scales must be positive".into(),
        ));
    }

    // everything below works on y = x / scale
    let to_x = |y: &[f64]| -> Vec<f64> { y.iter().zip(scale).map(|(yi, si)| yi * si).collect() };
    let mut f = move |y: &[f64]| -> Result<Vec<f64>> { f_raw(&to_x(y)) };
    let lower: Vec<f64> = lower.iter().zip(scale).map(|(v, s)| v / s).collect();
    let upper: Vec<f64> = upper.iter().zip(scale).map(|(v, s)| v / s).collect();
    let clamp = |x: &mut [f64]| {
        for i in 0..n {
            x[i] = x[i].clamp(lower[i], upper[i]);
        }
    };

    let mut x: Vec<f64> = x0.iter().zip(scale).map(|(v, s)| v / s).collect();
    clamp(&mut x);
    let mut fx = f(&x)?;
    let m = fx.len();
    if m == 0 {
        return Err(Error::InvalidArgument("no residual entries".into()));
    }
    let mut cost = norm_squared(&fx);
    let mut trace = vec![cost];
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut dead_parameters = Vec::new();
    let mut iterations = 0;

    'outer: for iter in 0..options.max_iterations {
        iterations = iter + 1;

        // forward-difference Jacobian, stepping inward at the bounds
        let mut jacobian = DMatrix::<f64>::zeros(m, n);
        for j in 0..n {
            let mag = x[j].abs().max(1.0);
            let mut step = options.fd_step * mag;
            if x[j] + step > upper[j] {
                step = -step;
            }
            let mut xj = x.clone();
            xj[j] = (xj[j] + step).clamp(lower[j], upper[j]);
            let actual = xj[j] - x[j];
            if actual == 0.0 {
                continue; // pinched between bounds; column stays zero
            }
            let fj = f(&xj)?;
            for i in 0..m {
                jacobian[(i, j)] = (fj[i] - fx[i]) / actual;
            }
        }

        if iter == 0 {
            for j in 0..n {
                if jacobian.column(j).amax() == 0.0 {
                    dead_parameters.push(j);
                }
            }
        }

        let fvec = DVector::from_column_slice(&fx);
        let gradient = jacobian.transpose() * &fvec;
        if gradient.amax() < options.gradient_tolerance {
            converged = true;
            break;
        }
        let jtj = jacobian.transpose() * &jacobian;
        let max_diag = (0..n).map(|j| jtj[(j, j)]).fold(0.0f64, f64::max);
        if max_diag == 0.0 {
            converged = true;
            break;
        }

        // inner loop: grow lambda until a step improves the objective
        loop {
            let mut a = jtj.clone();
            for j in 0..n {
                let d = a[(j, j)];
                a[(j, j)] = (d + lambda * d).max(1e-14 * max_diag);
            }
            let step = match a.clone().cholesky() {
                Some(ch) => ch.solve(&(-&gradient)),
                None => match a.lu().solve(&(-&gradient)) {
                    Some(s) => s,
                    None => {
                        lambda *= 10.0;
                        if lambda > 1e14 {
                            break 'outer;
                        }
                        continue;
                    }
                },
            };

            let mut candidate = x.clone();
            for j in 0..n {
                candidate[j] += step[j];
            }
            clamp(&mut candidate);

            match f(&candidate) {
                Ok(fc) => {
                    let c = norm_squared(&fc);
                    if c < cost {
                        let decrease = (cost - c) / cost.max(f64::MIN_POSITIVE);
                        x = candidate;
                        fx = fc;
                        cost = c;
                        trace.push(cost);
                        lambda = (lambda * 0.1).max(1e-12);
                        if decrease < options.objective_tolerance {
                            converged = true;
                            break 'outer;
                        }
                        break;
                    }
                }
                Err(_) => {} // infeasible trial, treat as no improvement
            }
            lambda *= 10.0;
            if lambda > 1e14 {
                // no downhill step left at any damping; the point is as
                // converged as the model allows
                converged = true;
                break 'outer;
            }
        }
    }

    let _ = &fx;
    Ok(LmOutcome {
        x: x.iter().zip(scale).map(|(yi, si)| yi * si).collect(),
        objective: cost,
        iterations,
        converged,
        trace,
        dead_parameters,
    })
}

fn norm_squared(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum()
}
