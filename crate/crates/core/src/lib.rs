//! Per-component electrical power estimation from thermal images of
//! electronic boards.
//!
//! A thermal camera sees a board in its steady state; every cell of the
//! image must conduct, convect, and radiate away exactly the electrical
//! power dissipated in it. This crate inverts that balance: it converts a
//! temperature map into a per-cell power map, aggregates cells into
//! per-component powers using a component layout, trains the thermal
//! parameters against known loads, and ships a forward heat simulator that
//! serves as ground truth for all of it.
//!
//! The main pipeline, in order:
//!
//! 1. [`preprocess::estimate_ambient`] reads the ambient level off the
//!    image histogram.
//! 2. [`preprocess::compensate_emissivity`] or
//!    [`preprocess::inpaint_low_emissivity`] deals with reflective
//!    (low-emissivity) regions such as metal wires.
//! 3. [`powerflow::estimate_pixel_powers`] converts temperatures to
//!    per-cell powers.
//! 4. [`aggregate::report`] sums cells into component powers.
//! 5. [`fit::fit_parameters`] / [`fit::cross_validate`] train and evaluate
//!    the model parameters; [`metrics`] scores predictions.
//! 6. [`simulate`] generates synthetic boards with known powers.

pub mod aggregate;
pub mod dataset;
pub mod error;
pub mod fit;
pub mod grid;
pub mod layout;
mod lm;
pub mod metrics;
pub mod params;
pub mod powerflow;
pub mod preprocess;
pub mod presets;
pub mod simulate;

pub use dataset::{Dataset, MeasurementInstance};
pub use error::{Error, Result};
pub use grid::{PowerMap, TemperatureMap};
pub use layout::{ComponentInfo, ComponentLayout};
pub use params::{ModelParams, Variant};
