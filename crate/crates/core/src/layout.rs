//! Component layout: which component occupies each cell, and what each
//! component is made of.
//!
//! On disk a layout is a JSON manifest plus an id grid:
//!
//! ```json
//! { "mu": 3,
//!   "components": [ {"id": 0, "name": "board", "material": 1}, ... ],
//!   "grid": "layout_a_grid.csv" }
//! ```
//!
//! The grid file holds comma-separated integer component ids, one row per
//! line, same row/column convention as temperature grids. The `grid` path is
//! resolved relative to the manifest file.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One manifest entry: a component id, a display name, and the 1-based
/// material class index it is made of.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentInfo {
    pub id: u32,
    pub name: String,
    pub material: usize,
}

/// Per-cell component ids plus the manifest mapping ids to materials.
///
/// Component id 0 is always the carrier board. The same grid serves two
/// purposes: aggregation masks are keyed by component id, conductance and
/// emissivity lookups are keyed by the component's material class.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentLayout {
    height: usize,
    width: usize,
    ids: Vec<u32>,
    manifest: Vec<ComponentInfo>,
    mu: usize,
    material_of: BTreeMap<u32, usize>,
}

impl ComponentLayout {
    pub fn new(
        height: usize,
        width: usize,
        ids: Vec<u32>,
        manifest: Vec<ComponentInfo>,
        mu: usize,
    ) -> Result<Self> {
        if height < 3 || width < 3 {
            return Err(Error::Validation(format!(
                "layout must be at least 3x3, got {height}x{width}"
            )));
        }
        if ids.len() != height * width {
            return Err(Error::DimensionMismatch(format!(
                "expected {} ids for a {height}x{width} layout, got {}",
                height * width,
                ids.len()
            )));
        }
        if mu == 0 {
            return Err(Error::Validation("material count must be positive".into()));
        }

        let mut material_of = BTreeMap::new();
        for c in &manifest {
            if material_of.insert(c.id, c.material).is_some() {
                return Err(Error::DuplicateComponent { id: c.id });
            }
            if c.material == 0 || c.material > mu {
                return Err(Error::Validation(format!(
                    "component {} has material {} outside 1..={mu}",
                    c.id, c.material
                )));
            }
        }
        match manifest.iter().find(|c| c.id == 0) {
            Some(board) if board.name == "board" => {}
            _ => return Err(Error::MissingBoard),
        }
        for &id in &ids {
            if !material_of.contains_key(&id) {
                return Err(Error::UnknownComponent { id });
            }
        }

        Ok(Self {
            height,
            width,
            ids,
            manifest,
            mu,
            material_of,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn mu(&self) -> usize {
        self.mu
    }

    pub fn manifest(&self) -> &[ComponentInfo] {
        &self.manifest
    }

    #[inline]
    pub fn id_at(&self, row: usize, col: usize) -> u32 {
        self.ids[row * self.width + col]
    }

    /// Material class (1-based) of the cell.
    #[inline]
    pub fn material_at(&self, row: usize, col: usize) -> usize {
        self.material_of[&self.id_at(row, col)]
    }

    pub fn material_of(&self, id: u32) -> Result<usize> {
        self.material_of
            .get(&id)
            .copied()
            .ok_or(Error::UnknownComponent { id })
    }

    pub fn contains(&self, id: u32) -> bool {
        self.material_of.contains_key(&id)
    }

    /// Binary mask: 1 exactly where the grid holds `id`. Masks taken over
    /// every manifest id partition the grid.
    pub fn component_mask(&self, id: u32) -> Result<Vec<u8>> {
        if !self.contains(id) {
            return Err(Error::UnknownComponent { id });
        }
        Ok(self.ids.iter().map(|&c| u8::from(c == id)).collect())
    }

    /// Ids actually present in the grid, ascending.
    pub fn ids_in_grid(&self) -> Vec<u32> {
        let set: BTreeSet<u32> = self.ids.iter().copied().collect();
        set.into_iter().collect()
    }

    /// Cell count per component id (whole grid, border included).
    pub fn cell_count(&self, id: u32) -> usize {
        self.ids.iter().filter(|&&c| c == id).count()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let manifest: ManifestFile = serde_json::from_str(&text)
            .map_err(|e| Error::parse(path, e.line(), e.to_string()))?;
        let grid_path = path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join(&manifest.grid);
        let (height, width, ids) = load_id_grid(&grid_path)?;
        Self::new(height, width, ids, manifest.components, manifest.mu)
    }

    /// Writes the manifest JSON to `path` and the id grid next to it.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let grid_name = format!(
            "{}_grid.csv",
            path.file_stem().unwrap_or_default().to_string_lossy()
        );
        let manifest = ManifestFile {
            mu: self.mu,
            components: self.manifest.clone(),
            grid: grid_name.clone(),
        };
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        fs::write(path, json).map_err(|e| Error::io(path, e))?;

        let mut out = String::new();
        for row in 0..self.height {
            for col in 0..self.width {
                if col > 0 {
                    out.push(',');
                }
                write!(out, "{}", self.id_at(row, col)).unwrap();
            }
            out.push('\n');
        }
        let grid_path = path.parent().unwrap_or_else(|| Path::new(".")).join(grid_name);
        fs::write(&grid_path, out).map_err(|e| Error::io(grid_path, e))
    }
}

#[derive(Serialize, Deserialize)]
struct ManifestFile {
    mu: usize,
    components: Vec<ComponentInfo>,
    grid: String,
}

fn load_id_grid(path: &Path) -> Result<(usize, usize, Vec<u32>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut ids = Vec::new();
    let mut width = None;
    let mut height = 0;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut count = 0;
        for field in line.split(',') {
            let id: u32 = field.trim().parse().map_err(|_| {
                Error::parse(path, i + 1, format!("bad component id {field:?}"))
            })?;
            ids.push(id);
            count += 1;
        }
        match width {
            None => width = Some(count),
            Some(w) if w != count => {
                return Err(Error::parse(
                    path,
                    i + 1,
                    format!("row {height} has {count} ids, expected {w}"),
                ))
            }
            _ => {}
        }
        height += 1;
    }
    let width = width.ok_or_else(|| Error::parse(path, 1, "empty grid"))?;
    Ok((height, width, ids))
}
