//! Thermal model parameters and estimator variants.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Estimator variant.
///
/// `Full` compensates low-emissivity readings analytically and keeps both
/// ambient loss terms. `Int` relies on inpainting instead of compensation
/// (emissivities treated as 1). `Norad` additionally drops the radiative
/// term, `Noflux` drops the convective term as well, leaving conduction
/// only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Full,
    Int,
    Norad,
    Noflux,
}

impl Variant {
    pub fn uses_compensation(self) -> bool {
        matches!(self, Variant::Full)
    }

    pub fn uses_radiation(self) -> bool {
        matches!(self, Variant::Full | Variant::Int)
    }

    pub fn uses_convection(self) -> bool {
        !matches!(self, Variant::Noflux)
    }

    /// Number of trainable parameters for a `mu`-material model:
    /// the conductance matrix upper triangle, plus per-variant extras.
    pub fn trained_param_count(self, mu: usize) -> usize {
        let conductances = mu * (mu + 1) / 2;
        match self {
            Variant::Full => conductances + mu + 2,
            Variant::Int => conductances + 2,
            Variant::Norad => conductances + 1,
            Variant::Noflux => conductances,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::Int => "int",
            Variant::Norad => "norad",
            Variant::Noflux => "noflux",
        }
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "full" => Ok(Variant::Full),
            "int" => Ok(Variant::Int),
            "norad" => Ok(Variant::Norad),
            "noflux" => Ok(Variant::Noflux),
            other => Err(Error::InvalidArgument(format!(
                "unknown variant {other:?}, expected full|int|norad|noflux"
            ))),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Model parameters: material-pair conductances, per-material emissivities,
/// convective coefficient `h`, radiative coefficient `r`, and the variant the
/// parameters were trained for.
///
/// Conductances are per cell edge (W/K), `h` per cell (W/K), `r` per cell
/// (W/K^4); the cell area is absorbed into the coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamsRepr", into = "ParamsRepr")]
pub struct ModelParams {
    mu: usize,
    /// Row-major mu x mu symmetric matrix.
    conductance: Vec<f64>,
    emissivity: Vec<f64>,
    pub h: f64,
    pub r: f64,
    pub variant: Variant,
    /// Material classes whose readings are unreliable enough to inpaint
    /// under the interpolation variants. Empty means no inpainting.
    pub low_emissivity_materials: Vec<usize>,
}

impl ModelParams {
    pub fn new(
        mu: usize,
        conductance: Vec<f64>,
        emissivity: Vec<f64>,
        h: f64,
        r: f64,
        variant: Variant,
    ) -> Result<Self> {
        let p = Self {
            mu,
            conductance,
            emissivity,
            h,
            r,
            variant,
            low_emissivity_materials: Vec::new(),
        };
        p.validate()?;
        Ok(p)
    }

    /// Builds the symmetric matrix from its upper triangle, row by row:
    /// `[c11, c12, .., c1mu, c22, c23, ..]`.
    pub fn from_upper_triangle(
        mu: usize,
        upper: &[f64],
        emissivity: Vec<f64>,
        h: f64,
        r: f64,
        variant: Variant,
    ) -> Result<Self> {
        if upper.len() != mu * (mu + 1) / 2 {
            return Err(Error::DimensionMismatch(format!(
                "expected {} upper-triangle conductances for mu={mu}, got {}",
                mu * (mu + 1) / 2,
                upper.len()
            )));
        }
        let mut conductance = vec![0.0; mu * mu];
        let mut k = 0;
        for i in 0..mu {
            for j in i..mu {
                conductance[i * mu + j] = upper[k];
                conductance[j * mu + i] = upper[k];
                k += 1;
            }
        }
        Self::new(mu, conductance, emissivity, h, r, variant)
    }

    fn validate(&self) -> Result<()> {
        if self.mu == 0 {
            return Err(Error::Validation("material count must be positive".into()));
        }
        if self.conductance.len() != self.mu * self.mu {
            return Err(Error::DimensionMismatch(format!(
                "conductance matrix must be {0}x{0}",
                self.mu
            )));
        }
        if self.emissivity.len() != self.mu {
            return Err(Error::DimensionMismatch(format!(
                "emissivity vector must have length {}",
                self.mu
            )));
        }
        for i in 0..self.mu {
            for j in 0..self.mu {
                let c = self.conductance[i * self.mu + j];
                if !c.is_finite() || c < 0.0 {
                    return Err(Error::Validation(format!(
                        "conductance[{}][{}] = {c}, must be finite and >= 0",
                        i + 1,
                        j + 1
                    )));
                }
                if c != self.conductance[j * self.mu + i] {
                    return Err(Error::Validation(format!(
                        "conductance matrix not symmetric at ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        for (i, &e) in self.emissivity.iter().enumerate() {
            if !(e > 0.0 && e <= 1.0) {
                return Err(Error::Validation(format!(
                    "emissivity of material {} is {e}, must be in (0, 1]",
                    i + 1
                )));
            }
        }
        if !self.h.is_finite() || self.h < 0.0 {
            return Err(Error::Validation(format!("h = {}, must be >= 0", self.h)));
        }
        if !self.r.is_finite() || self.r < 0.0 {
            return Err(Error::Validation(format!("r = {}, must be >= 0", self.r)));
        }
        for &m in &self.low_emissivity_materials {
            if m == 0 || m > self.mu {
                return Err(Error::Validation(format!(
                    "low-emissivity material {m} outside 1..={}",
                    self.mu
                )));
            }
        }
        Ok(())
    }

    pub fn mu(&self) -> usize {
        self.mu
    }

    /// Conductance between two material classes (1-based indices).
    #[inline]
    pub fn conductance_between(&self, a: usize, b: usize) -> f64 {
        self.conductance[(a - 1) * self.mu + (b - 1)]
    }

    /// Emissivity of a material class (1-based index).
    #[inline]
    pub fn emissivity_of(&self, material: usize) -> f64 {
        self.emissivity[material - 1]
    }

    pub fn emissivity(&self) -> &[f64] {
        &self.emissivity
    }

    /// Upper triangle of the conductance matrix, row by row.
    pub fn upper_triangle(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.mu * (self.mu + 1) / 2);
        for i in 0..self.mu {
            for j in i..self.mu {
                out.push(self.conductance[i * self.mu + j]);
            }
        }
        out
    }

    pub fn with_low_emissivity_materials(mut self, materials: Vec<usize>) -> Result<Self> {
        self.low_emissivity_materials = materials;
        self.validate()?;
        Ok(self)
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string_pretty(self).expect("params serialize");
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }
}

/// Serialized shape of [`ModelParams`]; kept separate so deserialization
/// runs the same validation as the constructors.
#[derive(Serialize, Deserialize)]
struct ParamsRepr {
    mu: usize,
    conductance: Vec<Vec<f64>>,
    emissivity: Vec<f64>,
    h: f64,
    r: f64,
    variant: Variant,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    low_emissivity_materials: Vec<usize>,
}

impl TryFrom<ParamsRepr> for ModelParams {
    type Error = Error;

    fn try_from(repr: ParamsRepr) -> Result<Self> {
        let mu = repr.mu;
        if repr.conductance.len() != mu || repr.conductance.iter().any(|r| r.len() != mu) {
            return Err(Error::DimensionMismatch(format!(
                "conductance matrix must be {mu}x{mu}"
            )));
        }
        let flat: Vec<f64> = repr.conductance.into_iter().flatten().collect();
        let params = ModelParams::new(mu, flat, repr.emissivity, repr.h, repr.r, repr.variant)?;
        params.with_low_emissivity_materials(repr.low_emissivity_materials)
    }
}

impl From<ModelParams> for ParamsRepr {
    fn from(p: ModelParams) -> Self {
        let rows = (0..p.mu)
            .map(|i| p.conductance[i * p.mu..(i + 1) * p.mu].to_vec())
            .collect();
        ParamsRepr {
            mu: p.mu,
            conductance: rows,
            emissivity: p.emissivity,
            h: p.h,
            r: p.r,
            variant: p.variant,
            low_emissivity_materials: p.low_emissivity_materials,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trained_param_counts_match_variants() {
        assert_eq!(Variant::Full.trained_param_count(3), 11);
        assert_eq!(Variant::Int.trained_param_count(3), 8);
        assert_eq!(Variant::Norad.trained_param_count(3), 7);
        assert_eq!(Variant::Noflux.trained_param_count(3), 6);
    }

    #[test]
    fn upper_triangle_round_trips() {
        let upper = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
        let p = ModelParams::from_upper_triangle(
            3,
            &upper,
            vec![1.0, 0.2, 0.9],
            1e-3,
            1e-12,
            Variant::Full,
        )
        .unwrap();
        assert_eq!(p.upper_triangle(), upper);
        assert_eq!(p.conductance_between(1, 2), p.conductance_between(2, 1));
        assert_eq!(p.conductance_between(2, 3), 0.5);
    }

    #[test]
    fn asymmetric_matrix_is_rejected() {
        let mut c = vec![0.1; 9];
        c[1] = 0.2; // [0][1] != [1][0]
        assert!(ModelParams::new(3, c, vec![1.0; 3], 0.0, 0.0, Variant::Int).is_err());
    }

    #[test]
    fn out_of_range_values_are_rejected() {
        let ok = |e| ModelParams::from_upper_triangle(2, &[0.1, 0.1, 0.1], e, 0.0, 0.0, Variant::Int);
        assert!(ok(vec![1.0, 1.0]).is_ok());
        assert!(ok(vec![0.0, 1.0]).is_err());
        assert!(ok(vec![1.0, 1.1]).is_err());
        assert!(
            ModelParams::from_upper_triangle(2, &[-0.1, 0.1, 0.1], vec![1.0; 2], 0.0, 0.0, Variant::Int)
                .is_err()
        );
    }

    #[test]
    fn json_round_trip() {
        let p = ModelParams::from_upper_triangle(
            3,
            &[1e-4, 2e-4, 3e-4, 4e-4, 5e-4, 6e-4],
            vec![0.97, 0.2, 0.95],
            3e-5,
            5e-14,
            Variant::Full,
        )
        .unwrap()
        .with_low_emissivity_materials(vec![2])
        .unwrap();
        let json = serde_json::to_string(&p).unwrap();
        let back: ModelParams = serde_json::from_str(&json).unwrap();
        assert_eq!(p, back);
    }
}
