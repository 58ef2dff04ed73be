//! Temperature and power grids with the plain-text grid file format.
//!
//! A grid file starts with a header line
//!
//! ```text
//! # unit=K height=156 width=206
//! ```
//!
//! followed by `height` comma-separated rows of `width` decimal values.
//! Temperatures are stored in kelvin internally; files may declare
//! `unit=C`, in which case values are converted on load.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const CELSIUS_OFFSET: f64 = 273.15;

/// Grid of absolute surface temperatures, one value per cell, in kelvin.
#[derive(Debug, Clone, PartialEq)]
pub struct TemperatureMap {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl TemperatureMap {
    /// Builds a map from row-major values, validating shape and positivity.
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if height < 3 || width < 3 {
            return Err(Error::Validation(format!(
                "temperature map must be at least 3x3, got {height}x{width}"
            )));
        }
        if values.len() != height * width {
            return Err(Error::DimensionMismatch(format!(
                "expected {} values for a {height}x{width} map, got {}",
                height * width,
                values.len()
            )));
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::Validation(format!(
                    "temperature at cell ({}, {}) is {v}, must be finite and > 0 K",
                    i / width,
                    i % width
                )));
            }
        }
        Ok(Self {
            height,
            width,
            values,
        })
    }

    /// Constant-valued map.
    pub fn constant(height: usize, width: usize, value: f64) -> Result<Self> {
        Self::new(height, width, vec![value; height * width])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Replaces the values, keeping the shape. Runs full validation.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.height, self.width, values)
    }

    /// Pixel-wise mean of several same-shaped maps.
    pub fn mean_of(maps: &[TemperatureMap]) -> Result<TemperatureMap> {
        let first = maps
            .first()
            .ok_or_else(|| Error::InvalidArgument("mean of zero maps".into()))?;
        let mut acc = vec![0.0; first.values.len()];
        for m in maps {
            if m.height != first.height || m.width != first.width {
                return Err(Error::DimensionMismatch(
                    "maps of different shapes cannot be averaged".into(),
                ));
            }
            for (a, v) in acc.iter_mut().zip(&m.values) {
                *a += v;
            }
        }
        let n = maps.len() as f64;
        first.with_values(acc.into_iter().map(|a| a / n).collect())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let (unit, height, width, values) = parse_grid(path, &text)?;
        let values = match unit {
            Unit::Kelvin => values,
            Unit::Celsius => values.into_iter().map(|v| v + CELSIUS_OFFSET).collect(),
        };
        Self::new(height, width, values)
    }

    /// Writes the kelvin grid; `load` of the result is bit-exact.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = format_grid("K", self.height, self.width, &self.values);
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// Per-cell electrical power estimates in watts.
///
/// Power is only defined on interior cells (the power-flow stencil needs all
/// four neighbors); border cells hold NaN and are skipped by aggregation.
#[derive(Debug, Clone)]
pub struct PowerMap {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

/// Bitwise equality, so that the NaN border sentinels compare equal.
impl PartialEq for PowerMap {
    fn eq(&self, other: &Self) -> bool {
        self.height == other.height
            && self.width == other.width
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl PowerMap {
    /// Builds a map from row-major values; interior cells must be finite,
    /// border cells are forced to the NaN sentinel.
    pub fn from_values(height: usize, width: usize, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != height * width {
            return Err(Error::DimensionMismatch(format!(
                "expected {} values for a {height}x{width} power map, got {}",
                height * width,
                values.len()
            )));
        }
        for row in 0..height {
            for col in 0..width {
                let border = row == 0 || col == 0 || row == height - 1 || col == width - 1;
                let v = values[row * width + col];
                if border {
                    values[row * width + col] = f64::NAN;
                } else if !v.is_finite() {
                    return Err(Error::NonFinitePower { row, col });
                }
            }
        }
        Ok(Self {
            height,
            width,
            values,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn is_border(&self, row: usize, col: usize) -> bool {
        row == 0 || col == 0 || row == self.height - 1 || col == self.width - 1
    }

    /// Power at an interior cell; `None` on the undefined border ring.
    pub fn at(&self, row: usize, col: usize) -> Option<f64> {
        if self.is_border(row, col) {
            None
        } else {
            Some(self.values[row * self.width + col])
        }
    }

    /// Iterates `(row, col, watts)` over interior cells in row-major order.
    pub fn interior(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let w = self.width;
        (1..self.height - 1)
            .flat_map(move |row| (1..w - 1).map(move |col| (row, col)))
            .map(move |(row, col)| (row, col, self.values[row * w + col]))
    }

    /// Writes the grid with `unit=W`; border cells are written as `nan`.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = format_grid("W", self.height, self.width, &self.values);
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Unit {
    Kelvin,
    Celsius,
}

fn parse_grid(path: &Path, text: &str) -> Result<(Unit, usize, usize, Vec<f64>)> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::parse(path, 1, "empty file"))?;
    let (unit, height, width) = parse_header(path, header)?;

    let mut values = Vec::with_capacity(height * width);
    for row in 0..height {
        // line numbers are 1-based and the header is line 1
        let line_no = row + 2;
        let line = lines
            .next()
            .ok_or_else(|| Error::parse(path, line_no, format!("missing row {row}")))?;
        let mut count = 0;
        for field in line.split(',') {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::parse(path, line_no, format!("row {row}: bad value {field:?}"))
            })?;
            values.push(v);
            count += 1;
        }
        if count != width {
            return Err(Error::parse(
                path,
                line_no,
                format!("row {row} has {count} values, expected {width}"),
            ));
        }
    }
    if lines.any(|l| !l.trim().is_empty()) {
        return Err(Error::parse(
            path,
            height + 2,
            format!("more than {height} data rows"),
        ));
    }
    Ok((unit, height, width, values))
}

fn parse_header(path: &Path, header: &str) -> Result<(Unit, usize, usize)> {
    let bad = |msg: &str| Error::parse(path, 1, msg.to_string());
    let rest = header
        .strip_prefix('#')
        .ok_or_else(|| bad("header must start with '#'"))?;
    let mut unit = None;
    let mut height = None;
    let mut width = None;
    for token in rest.split_whitespace() {
        let (key, value) = token
            .split_once('=')
            .ok_or_else(|| bad("header fields must look like key=value"))?;
        match key {
            "unit" => {
                unit = Some(match value {
                    "K" => Unit::Kelvin,
                    "C" => Unit::Celsius,
                    "W" => Unit::Kelvin, // power grids reuse the format; no conversion
                    _ => return Err(bad(&format!("unknown unit {value:?}"))),
                })
            }
            "height" => height = Some(value.parse().map_err(|_| bad("bad height"))?),
            "width" => width = Some(value.parse().map_err(|_| bad("bad width"))?),
            _ => return Err(bad(&format!("unknown header field {key:?}"))),
        }
    }
    match (unit, height, width) {
        (Some(u), Some(h), Some(w)) => Ok((u, h, w)),
        _ => Err(bad("header must declare unit, height and width")),
    }
}

fn format_grid(unit: &str, height: usize, width: usize, values: &[f64]) -> String {
    let mut out = String::new();
    writeln!(out, "# unit={unit} height={height} width={width}").unwrap();
    for row in 0..height {
        for col in 0..width {
            if col > 0 {
                out.push(',');
            }
            let v = values[row * width + col];
            if v.is_nan() {
                out.push_str("nan");
            } else {
                write!(out, "{v}").unwrap();
            }
        }
        out.push('\n');
    }
    out
}
