//! Pixel-wise temperature-to-power conversion.
//!
//! In the steady state every cell's net power flow is zero, so the
//! electrical power dissipated in a cell equals the negated sum of the
//! powers it receives: conduction from its four neighbors, convective
//! exchange with the ambient air, and net thermal radiation. A steadily hot
//! cell therefore yields a positive electrical power.

use crate::error::{Error, Result};
use crate::grid::{PowerMap, TemperatureMap};
use crate::layout::ComponentLayout;
use crate::params::ModelParams;
use crate::preprocess::compensate_emissivity;

/// Per-direction conductance fields for a layout.
///
/// `top[row * width + col]` is the conductance of the edge between
/// `(row, col)` and `(row - 1, col)`, looked up in the material-pair matrix;
/// `bottom`, `left`, `right` analogously. Only interior cells are filled;
/// the border ring stays zero. Symmetry of the material matrix makes
/// opposing edges agree: `bottom(r, c) == top(r + 1, c)`.
#[derive(Debug, Clone)]
pub struct ConductanceFields {
    pub height: usize,
    pub width: usize,
    pub top: Vec<f64>,
    pub bottom: Vec<f64>,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

pub fn conductance_fields(layout: &ComponentLayout, params: &ModelParams) -> ConductanceFields {
    assert_eq!(
        layout.mu(),
        params.mu(),
        "layout and params disagree on material count"
    );
    let height = layout.height();
    let width = layout.width();
    let n = height * width;
    let mut fields = ConductanceFields {
        height,
        width,
        top: vec![0.0; n],
        bottom: vec![0.0; n],
        left: vec![0.0; n],
        right: vec![0.0; n],
    };
    for row in 1..height - 1 {
        for col in 1..width - 1 {
            let m = layout.material_at(row, col);
            let i = row * width + col;
            fields.top[i] = params.conductance_between(m, layout.material_at(row - 1, col));
            fields.bottom[i] = params.conductance_between(m, layout.material_at(row + 1, col));
            fields.left[i] = params.conductance_between(m, layout.material_at(row, col - 1));
            fields.right[i] = params.conductance_between(m, layout.material_at(row, col + 1));
        }
    }
    fields
}

/// Converts a preprocessed temperature map into per-cell electrical power.
///
/// Under `Full` the map is emissivity-compensated here (box temperature
/// taken as `t_amb`); the interpolation variants expect inpainting already
/// applied upstream and treat all emissivities as 1. The radiative and
/// convective terms are dropped per variant by zeroing their coefficients,
/// so variants that coincide for a parameter set produce bit-identical maps.
pub fn estimate_pixel_powers(
    map: &TemperatureMap,
    layout: &ComponentLayout,
    params: &ModelParams,
    t_amb: f64,
) -> Result<PowerMap> {
    if map.height() != layout.height() || map.width() != layout.width() {
        return Err(Error::DimensionMismatch(format!(
            "map is {}x{} but layout is {}x{}",
            map.height(),
            map.width(),
            layout.height(),
            layout.width()
        )));
    }
    if !(t_amb > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "ambient temperature must be positive, got {t_amb}"
        )));
    }

    let temps = if params.variant.uses_compensation() {
        compensate_emissivity(map, layout, params.emissivity(), t_amb)?
    } else {
        map.clone()
    };

    let fields = conductance_fields(layout, params);
    let eff_h = if params.variant.uses_convection() {
        params.h
    } else {
        0.0
    };
    let eff_r = if params.variant.uses_radiation() {
        params.r
    } else {
        0.0
    };

    let height = map.height();
    let width = map.width();
    let amb4 = t_amb.powi(4);
    let mut powers = vec![0.0; height * width];
    for row in 1..height - 1 {
        for col in 1..width - 1 {
            let i = row * width + col;
            let t0 = temps.at(row, col);
            // powers received by the cell
            let p_cond = fields.top[i] * (temps.at(row - 1, col) - t0)
                + fields.bottom[i] * (temps.at(row + 1, col) - t0)
                + fields.left[i] * (temps.at(row, col - 1) - t0)
                + fields.right[i] * (temps.at(row, col + 1) - t0);
            let p_conv = eff_h * (t_amb - t0);
            let emissivity = if params.variant.uses_compensation() {
                params.emissivity_of(layout.material_at(row, col))
            } else {
                1.0
            };
            let p_rad = eff_r * emissivity * (amb4 - t0.powi(4));
            let p_el = -(p_cond + p_conv + p_rad);
            if !p_el.is_finite() {
                return Err(Error::NonFinitePower { row, col });
            }
            powers[i] = p_el;
        }
    }
    PowerMap::from_values(height, width, powers)
}
