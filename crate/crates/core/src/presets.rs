//! Ready-made synthetic boards for demos and validation.
//!
//! The demo boards mimic a resistor carrier board seen by a low-resolution
//! thermal camera: rectangular resistors of a third material, two-cell-wide
//! metal wires running to the board edges, everything else carrier plastic.
//! Material convention: 1 = board, 2 = wire, 3 = resistor.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::layout::{ComponentInfo, ComponentLayout};
use crate::params::{ModelParams, Variant};
use crate::simulate::{ConfigSpec, DatasetSpec, Drive};

pub const MATERIAL_BOARD: usize = 1;
pub const MATERIAL_WIRE: usize = 2;
pub const MATERIAL_RESISTOR: usize = 3;
pub const WIRE_ID: u32 = 9;

struct BoardBuilder {
    height: usize,
    width: usize,
    ids: Vec<u32>,
}

impl BoardBuilder {
    fn new(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            ids: vec![0; height * width],
        }
    }

    fn rect(&mut self, id: u32, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) {
        for row in rows {
            for col in cols.clone() {
                self.ids[row * self.width + col] = id;
            }
        }
    }

    /// Draws over board cells only; existing components win.
    fn wire(&mut self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) {
        for row in rows {
            for col in cols.clone() {
                let cell = &mut self.ids[row * self.width + col];
                if *cell == 0 {
                    *cell = WIRE_ID;
                }
            }
        }
    }

    fn build(self, resistor_ids: &[u32]) -> ComponentLayout {
        let mut manifest = vec![ComponentInfo {
            id: 0,
            name: "board".into(),
            material: MATERIAL_BOARD,
        }];
        if self.ids.contains(&WIRE_ID) {
            manifest.push(ComponentInfo {
                id: WIRE_ID,
                name: "wire".into(),
                material: MATERIAL_WIRE,
            });
        }
        for &id in resistor_ids {
            manifest.push(ComponentInfo {
                id,
                name: format!("r{id}"),
                material: MATERIAL_RESISTOR,
            });
        }
        ComponentLayout::new(self.height, self.width, self.ids, manifest, 3)
            .expect("preset layout is valid")
    }
}

/// Generating parameters for the demo boards: conductances per cell edge,
/// convective and radiative coefficients per cell. The wire material is
/// reflective (emissivity 0.2), so its readings are flagged for inpainting
/// under the interpolation variants.
pub fn demo_params() -> ModelParams {
    ModelParams::from_upper_triangle(
        3,
        // c11, c12, c13, c22, c23, c33
        &[8e-5, 1.2e-4, 1.0e-4, 3e-4, 1.5e-4, 2e-4],
        vec![1.0, 0.2, 1.0],
        3e-5,
        5e-14,
        Variant::Int,
    )
    .expect("demo params are valid")
    .with_low_emissivity_materials(vec![MATERIAL_WIRE])
    .expect("wire material index is valid")
}

/// Demo parameters with every emissivity at 1 and no inpainting: the
/// observation equals the true temperature field (plus noise), which makes
/// the estimator an exact inverse of the simulator.
pub fn ideal_params() -> ModelParams {
    let base = demo_params();
    ModelParams::from_upper_triangle(
        3,
        &base.upper_triangle(),
        vec![1.0, 1.0, 1.0],
        base.h,
        base.r,
        Variant::Int,
    )
    .expect("demo params are valid")
}

/// Demo boards, 32x44 cells. `"a"` and `"c"`/`"d"` carry four resistors in
/// a middle band, `"b"` carries eight in two bands with one touching pair.
/// Wires run from each resistor to the nearest horizontal board edge.
pub fn demo_layout(label: &str) -> ComponentLayout {
    let (h, w) = (32, 44);
    let mut b = BoardBuilder::new(h, w);
    match label {
        "a" | "c" | "d" => {
            let slots = [4usize, 14, 24, 34];
            for (i, &c0) in slots.iter().enumerate() {
                let id = i as u32 + 1;
                b.rect(id, 13..19, c0..c0 + 7);
                let wc = c0 + 3;
                b.wire(0..13, wc..wc + 2);
                b.wire(19..32, wc..wc + 2);
            }
            b.build(&[1, 2, 3, 4])
        }
        "b" => {
            let slots = [4usize, 14, 24, 34];
            for (i, &c0) in slots.iter().enumerate() {
                let id = i as u32 + 1;
                b.rect(id, 6..12, c0..c0 + 7);
                let wc = c0 + 3;
                b.wire(0..6, wc..wc + 2);
                b.wire(12..15, wc..wc + 2);
            }
            // lower band; resistors 5 and 6 share an edge
            b.rect(5, 20..26, 4..11);
            b.rect(6, 20..26, 11..18);
            b.rect(7, 20..26, 24..31);
            b.rect(8, 20..26, 34..41);
            for wc in [7usize, 14, 27, 37] {
                b.wire(26..32, wc..wc + 2);
                b.wire(17..20, wc..wc + 2);
            }
            b.build(&[1, 2, 3, 4, 5, 6, 7, 8])
        }
        other => panic!("unknown demo configuration {other:?}"),
    }
}

/// Per-component resistances of the demo configurations, ohms.
pub fn demo_resistances(label: &str) -> BTreeMap<u32, f64> {
    let values: &[(u32, f64)] = match label {
        "a" => &[(1, 27.0), (2, 27.0), (3, 10.0), (4, 10.0)],
        "b" => &[
            (1, 12.0),
            (2, 15.0),
            (3, 18.0),
            (4, 22.0),
            (5, 10.0),
            (6, 10.0),
            (7, 27.0),
            (8, 27.0),
        ],
        "c" => &[(1, 1000.0), (2, 1000.0), (3, 100.0), (4, 100.0)],
        "d" => &[(1, 150.0), (2, 150.0), (3, 220.0), (4, 220.0)],
        other => panic!("unknown demo configuration {other:?}"),
    };
    values.iter().copied().collect()
}

pub const DEMO_CONFIG_LABELS: [&str; 4] = ["a", "b", "c", "d"];

/// The voltage sweep of the demo datasets: 0.25 V to 2.50 V in 0.25 V steps.
pub fn demo_voltages() -> Vec<f64> {
    (1..=10).map(|i| i as f64 * 0.25).collect()
}

/// Full demo dataset recipe: four configurations, ten voltages each.
pub fn demo_dataset_spec(params: ModelParams, sigma: f64, readings: usize, seed: u64) -> DatasetSpec {
    let configs = DEMO_CONFIG_LABELS
        .iter()
        .map(|&label| ConfigSpec {
            label: label.to_string(),
            layout: Arc::new(demo_layout(label)),
            drive: Drive::Resistors {
                resistances: demo_resistances(label),
                series_resistance: 0.0,
            },
        })
        .collect();
    DatasetSpec {
        configs,
        voltages: demo_voltages(),
        params,
        t_amb: 300.0,
        sigma,
        readings,
        seed,
    }
}

/// A 24x32 board with four directly injected components, for round-trip
/// checks against known powers.
pub fn injection_board() -> (ComponentLayout, BTreeMap<u32, f64>) {
    let (h, w) = (24, 32);
    let mut b = BoardBuilder::new(h, w);
    let slots = [3usize, 10, 17, 24];
    for (i, &c0) in slots.iter().enumerate() {
        let id = i as u32 + 1;
        b.rect(id, 9..15, c0..c0 + 6);
        let wc = c0 + 2;
        b.wire(0..9, wc..wc + 2);
        b.wire(15..24, wc..wc + 2);
    }
    let layout = b.build(&[1, 2, 3, 4]);
    let injections = [(1, 0.050), (2, 0.100), (3, 0.300), (4, 1.000)]
        .into_iter()
        .collect();
    (layout, injections)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demo_layouts_are_consistent() {
        for label in DEMO_CONFIG_LABELS {
            let layout = demo_layout(label);
            let resistances = demo_resistances(label);
            for &id in resistances.keys() {
                assert!(layout.contains(id), "config {label} missing component {id}");
                assert!(layout.cell_count(id) > 0);
            }
            // powered components stay clear of the border ring
            for row in 0..layout.height() {
                for col in 0..layout.width() {
                    let border = row == 0
                        || col == 0
                        || row == layout.height() - 1
                        || col == layout.width() - 1;
                    if border {
                        let id = layout.id_at(row, col);
                        assert!(id == 0 || id == WIRE_ID);
                    }
                }
            }
        }
    }

    #[test]
    fn config_b_has_a_touching_resistor_pair() {
        let layout = demo_layout("b");
        let mut touching = false;
        for row in 0..layout.height() {
            for col in 0..layout.width() - 1 {
                let a = layout.id_at(row, col);
                let b = layout.id_at(row, col + 1);
                if a != b
                    && a != 0
                    && b != 0
                    && layout.material_of(a).unwrap() == MATERIAL_RESISTOR
                    && layout.material_of(b).unwrap() == MATERIAL_RESISTOR
                {
                    touching = true;
                }
            }
        }
        assert!(touching);
    }

    #[test]
    fn wires_reach_the_border() {
        for label in DEMO_CONFIG_LABELS {
            let layout = demo_layout(label);
            let top_wires = (0..layout.width())
                .filter(|&c| layout.id_at(0, c) == WIRE_ID)
                .count();
            let bottom_wires = (0..layout.width())
                .filter(|&c| layout.id_at(layout.height() - 1, c) == WIRE_ID)
                .count();
            assert!(top_wires > 0 && bottom_wires > 0, "config {label}");
        }
    }

    #[test]
    fn injection_board_shape() {
        let (layout, injections) = injection_board();
        assert_eq!((layout.height(), layout.width()), (24, 32));
        assert_eq!(injections.len(), 4);
        assert_eq!(layout.mu(), 3);
    }
}
