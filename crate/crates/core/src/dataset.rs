//! Measurement instances and the on-disk dataset manifest.
//!
//! A dataset directory holds one layout per configuration, one temperature
//! grid per reading, and a `manifest.json` tying them together with the
//! ground-truth powers.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TemperatureMap;
use crate::layout::ComponentLayout;

/// One (configuration, voltage) measurement: repeated temperature readings
/// of the same steady state, plus the known per-component powers.
#[derive(Debug, Clone)]
pub struct MeasurementInstance {
    pub config: String,
    pub voltage_index: usize,
    pub voltage: f64,
    pub layout: Arc<ComponentLayout>,
    pub maps: Vec<TemperatureMap>,
    /// `(component id, watts)` for every powered component.
    pub truth: Vec<(u32, f64)>,
}

impl MeasurementInstance {
    pub fn validate(&self) -> Result<()> {
        if self.maps.is_empty() {
            return Err(Error::Validation(format!(
                "instance {}/{} has no readings",
                self.config, self.voltage_index
            )));
        }
        for m in &self.maps {
            if m.height() != self.layout.height() || m.width() != self.layout.width() {
                return Err(Error::DimensionMismatch(format!(
                    "instance {}/{}: map is {}x{} but layout is {}x{}",
                    self.config,
                    self.voltage_index,
                    m.height(),
                    m.width(),
                    self.layout.height(),
                    self.layout.width()
                )));
            }
        }
        let mut seen = BTreeMap::new();
        for &(id, power) in &self.truth {
            if id == 0 {
                return Err(Error::Validation(
                    "the board cannot carry a ground-truth power".into(),
                ));
            }
            if !self.layout.contains(id) {
                return Err(Error::UnknownComponent { id });
            }
            if seen.insert(id, power).is_some() {
                return Err(Error::DuplicateComponent { id });
            }
        }
        Ok(())
    }

    /// Pixel-wise mean of the readings.
    pub fn mean_map(&self) -> Result<TemperatureMap> {
        TemperatureMap::mean_of(&self.maps)
    }

    /// Components with a known power, ascending by id.
    pub fn powered_ids(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.truth.iter().map(|&(id, _)| id).collect();
        ids.sort_unstable();
        ids
    }

    /// Unpowered, non-board components (the wiring), ascending by id.
    pub fn wire_ids(&self) -> Vec<u32> {
        let powered = self.powered_ids();
        self.layout
            .manifest()
            .iter()
            .map(|c| c.id)
            .filter(|&id| id != 0 && powered.binary_search(&id).is_err())
            .collect()
    }

    pub fn truth_of(&self, id: u32) -> Option<f64> {
        self.truth.iter().find(|(c, _)| *c == id).map(|&(_, p)| p)
    }
}

/// A full set of measurement instances sharing one acquisition setup.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub t_amb: f64,
    pub sigma: f64,
    pub readings: usize,
    pub seed: u64,
    pub instances: Vec<MeasurementInstance>,
}

impl Dataset {
    pub fn validate(&self) -> Result<()> {
        for inst in &self.instances {
            inst.validate()?;
        }
        Ok(())
    }

    /// Writes layouts, per-reading grids, and `manifest.json` under `dir`.
    /// Returns the manifest path.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<PathBuf> {
        let dir = dir.as_ref();
        let maps_dir = dir.join("maps");
        fs::create_dir_all(&maps_dir).map_err(|e| Error::io(&maps_dir, e))?;

        // one layout file per configuration
        let mut layout_files: BTreeMap<String, String> = BTreeMap::new();
        for inst in &self.instances {
            if !layout_files.contains_key(&inst.config) {
                let name = format!("layout_{}.json", inst.config);
                inst.layout.save(dir.join(&name))?;
                layout_files.insert(inst.config.clone(), name);
            }
        }

        let mut entries = Vec::with_capacity(self.instances.len());
        for inst in &self.instances {
            let mut map_files = Vec::with_capacity(inst.maps.len());
            for (j, map) in inst.maps.iter().enumerate() {
                let name = format!(
                    "maps/{}_v{:02}_r{}.csv",
                    inst.config, inst.voltage_index, j
                );
                map.save(dir.join(&name))?;
                map_files.push(name);
            }
            entries.push(InstanceEntry {
                config: inst.config.clone(),
                voltage_index: inst.voltage_index,
                voltage: inst.voltage,
                maps: map_files,
                truth: inst
                    .truth
                    .iter()
                    .map(|&(id, power_w)| TruthEntry { id, power_w })
                    .collect(),
            });
        }

        let manifest = ManifestFile {
            t_amb: self.t_amb,
            sigma: self.sigma,
            readings: self.readings,
            seed: self.seed,
            layouts: layout_files,
            instances: entries,
        };
        let path = dir.join("manifest.json");
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    pub fn load(manifest_path: impl AsRef<Path>) -> Result<Self> {
        let manifest_path = manifest_path.as_ref();
        let text =
            fs::read_to_string(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
        let manifest: ManifestFile = serde_json::from_str(&text)
            .map_err(|e| Error::parse(manifest_path, e.line(), e.to_string()))?;
        let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));

        let mut layouts: BTreeMap<String, Arc<ComponentLayout>> = BTreeMap::new();
        for (config, file) in &manifest.layouts {
            layouts.insert(
                config.clone(),
                Arc::new(ComponentLayout::load(base.join(file))?),
            );
        }

        let mut instances = Vec::with_capacity(manifest.instances.len());
        for entry in manifest.instances {
            let layout = layouts
                .get(&entry.config)
                .ok_or_else(|| {
                    Error::Validation(format!("no layout for configuration {}", entry.config))
                })?
                .clone();
            let mut maps = Vec::with_capacity(entry.maps.len());
            for file in &entry.maps {
                maps.push(TemperatureMap::load(base.join(file))?);
            }
            instances.push(MeasurementInstance {
                config: entry.config,
                voltage_index: entry.voltage_index,
                voltage: entry.voltage,
                layout,
                maps,
                truth: entry.truth.iter().map(|t| (t.id, t.power_w)).collect(),
            });
        }

        let dataset = Dataset {
            t_amb: manifest.t_amb,
            sigma: manifest.sigma,
            readings: manifest.readings,
            seed: manifest.seed,
            instances,
        };
        dataset.validate()?;
        Ok(dataset)
    }
}

#[derive(Serialize, Deserialize)]
struct ManifestFile {
    t_amb: f64,
    sigma: f64,
    readings: usize,
    seed: u64,
    layouts: BTreeMap<String, String>,
    instances: Vec<InstanceEntry>,
}

#[derive(Serialize, Deserialize)]
struct InstanceEntry {
    config: String,
    voltage_index: usize,
    voltage: f64,
    maps: Vec<String>,
    truth: Vec<TruthEntry>,
}

#[derive(Serialize, Deserialize)]
struct TruthEntry {
    id: u32,
    power_w: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::ComponentInfo;

    fn small_instance() -> MeasurementInstance {
        let mut ids = vec![0u32; 25];
        ids[12] = 1;
        ids[7] = 9;
        let layout = Arc::new(
            ComponentLayout::new(
                5,
                5,
                ids,
                vec![
                    ComponentInfo {
                        id: 0,
                        name: "board".into(),
                        material: 1,
                    },
                    ComponentInfo {
                        id: 9,
                        name: "wire".into(),
                        material: 2,
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
        );
        MeasurementInstance {
            config: "a".into(),
            voltage_index: 1,
            voltage: 0.25,
            layout,
            maps: vec![
                TemperatureMap::constant(5, 5, 300.0).unwrap(),
                TemperatureMap::constant(5, 5, 302.0).unwrap(),
            ],
            truth: vec![(1, 0.1)],
        }
    }

    #[test]
    fn classifies_powered_and_wire_components() {
        let inst = small_instance();
        inst.validate().unwrap();
        assert_eq!(inst.powered_ids(), vec![1]);
        assert_eq!(inst.wire_ids(), vec![9]);
        let mean = inst.mean_map().unwrap();
        assert_eq!(mean.at(2, 2), 301.0);
    }

    #[test]
    fn rejects_truth_for_board_or_unknown_components() {
        let mut inst = small_instance();
        inst.truth = vec![(0, 0.1)];
        assert!(inst.validate().is_err());
        inst.truth = vec![(42, 0.1)];
        assert!(matches!(
            inst.validate().unwrap_err(),
            Error::UnknownComponent { id: 42 }
        ));
    }

    #[test]
    fn dataset_save_load_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let dataset = Dataset {
            t_amb: 300.0,
            sigma: 0.1,
            readings: 2,
            seed: 7,
            instances: vec![small_instance()],
        };
        let manifest = dataset.save(dir.path()).unwrap();
        let back = Dataset::load(&manifest).unwrap();
        assert_eq!(back.instances.len(), 1);
        let a = &dataset.instances[0];
        let b = &back.instances[0];
        assert_eq!(a.config, b.config);
        assert_eq!(a.truth, b.truth);
        assert_eq!(a.maps, b.maps);
        assert_eq!(*a.layout, *b.layout);
    }
}
