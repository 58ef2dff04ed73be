//! Preprocessing of raw temperature maps: ambient-temperature estimation,
//! analytic emissivity compensation, and inpainting of unreliable
//! low-emissivity regions.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::grid::TemperatureMap;
use crate::layout::ComponentLayout;

/// Ambient temperature extracted from the histogram of a map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmbientEstimate {
    pub t_amb: f64,
    pub bin_width: f64,
    pub peak_bin: usize,
}

/// Estimates the ambient temperature from the value histogram of `map`.
///
/// Builds `bins` equal-width bins over `[min, max]`, finds the most
/// populated bin, and returns the count-weighted mean of the center
/// temperatures of that bin and its two neighbors (clipped at the histogram
/// edges). Most cells of a board image sit at background temperature, so the
/// histogram peak tracks the ambient level; no emissivity handling is
/// applied here.
pub fn estimate_ambient(map: &TemperatureMap, bins: usize) -> Result<AmbientEstimate> {
    if bins < 3 {
        return Err(Error::InvalidArgument(format!(
            "ambient histogram needs at least 3 bins, got {bins}"
        )));
    }
    let min = map.min();
    let max = map.max();
    if min == max {
        return Ok(AmbientEstimate {
            t_amb: min,
            bin_width: 0.0,
            peak_bin: 0,
        });
    }

    let width = (max - min) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in map.values() {
        let mut b = ((v - min) / width) as usize;
        if b >= bins {
            b = bins - 1; // v == max lands in the last bin
        }
        counts[b] += 1;
    }
    // ties resolve to the lowest bin index
    let peak = counts
        .iter()
        .enumerate()
        .max_by(|(ia, ca), (ib, cb)| ca.cmp(cb).then(ib.cmp(ia)))
        .map(|(i, _)| i)
        .expect("bins >= 3");

    let lo = peak.saturating_sub(1);
    let hi = (peak + 1).min(bins - 1);
    let mut weighted = 0.0;
    let mut total = 0usize;
    for b in lo..=hi {
        let center = min + (b as f64 + 0.5) * width;
        weighted += center * counts[b] as f64;
        total += counts[b];
    }
    Ok(AmbientEstimate {
        t_amb: weighted / total as f64,
        bin_width: width,
        peak_bin: peak,
    })
}

pub const DEFAULT_AMBIENT_BINS: usize = 100;

/// Recovers true surface temperatures from grey-body readings.
///
/// For a cell of emissivity `e` observed at `t_in` inside an enclosure at
/// `t_box`, the radiant balance gives
/// `t_out^4 = (t_in^4 - (1 - e) * t_box^4) / e`. Cells of emissivity 1 are
/// returned unchanged, bit for bit.
pub fn compensate_emissivity(
    map: &TemperatureMap,
    layout: &ComponentLayout,
    emissivity: &[f64],
    t_box: f64,
) -> Result<TemperatureMap> {
    check_shapes(map, layout)?;
    if emissivity.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
        return Err(Error::InvalidArgument(
            "emissivities must lie in (0, 1]".into(),
        ));
    }
    if !(t_box > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "box temperature must be positive, got {t_box}"
        )));
    }

    let box4 = t_box.powi(4);
    let mut out = Vec::with_capacity(map.values().len());
    for row in 0..map.height() {
        for col in 0..map.width() {
            let e = emissivity[layout.material_at(row, col) - 1];
            let t_in = map.at(row, col);
            if e == 1.0 {
                out.push(t_in);
                continue;
            }
            let radicand = (t_in.powi(4) - (1.0 - e) * box4) / e;
            if radicand < 0.0 {
                return Err(Error::NegativeRadicand { row, col });
            }
            out.push(radicand.powf(0.25));
        }
    }
    map.with_values(out)
}

/// Forward grey-body observation model, the inverse of
/// [`compensate_emissivity`]: `t_obs^4 = e * t_true^4 + (1 - e) * t_box^4`.
pub fn apply_emissivity(
    map: &TemperatureMap,
    layout: &ComponentLayout,
    emissivity: &[f64],
    t_box: f64,
) -> Result<TemperatureMap> {
    check_shapes(map, layout)?;
    let box4 = t_box.powi(4);
    let mut out = Vec::with_capacity(map.values().len());
    for row in 0..map.height() {
        for col in 0..map.width() {
            let e = emissivity[layout.material_at(row, col) - 1];
            let t = map.at(row, col);
            if e == 1.0 {
                out.push(t);
            } else {
                out.push((e * t.powi(4) + (1.0 - e) * box4).powf(0.25));
            }
        }
    }
    map.with_values(out)
}

/// Replaces readings over low-emissivity materials (and their 4-neighbors,
/// whose readings are blurred by the sensor) with a smooth interpolant of
/// the surrounding cells.
///
/// The unknown region is filled by solving the discrete biharmonic equation
/// with the known cells as boundary data, falling back to axis-wise second
/// differences where the wide stencil leaves the grid. The interpolant
/// reproduces affine temperature fields exactly and never touches known
/// cells.
pub fn inpaint_low_emissivity(
    map: &TemperatureMap,
    layout: &ComponentLayout,
    low_emissivity_materials: &[usize],
) -> Result<TemperatureMap> {
    check_shapes(map, layout)?;
    let height = map.height();
    let width = map.width();

    let mut unknown = vec![false; height * width];
    for row in 0..height {
        for col in 0..width {
            if low_emissivity_materials.contains(&layout.material_at(row, col)) {
                unknown[row * width + col] = true;
                if row > 0 {
                    unknown[(row - 1) * width + col] = true;
                }
                if row + 1 < height {
                    unknown[(row + 1) * width + col] = true;
                }
                if col > 0 {
                    unknown[row * width + col - 1] = true;
                }
                if col + 1 < width {
                    unknown[row * width + col + 1] = true;
                }
            }
        }
    }
    if unknown.iter().all(|&u| !u) {
        return Ok(map.clone());
    }
    if unknown.iter().all(|&u| u) {
        return Err(Error::NoKnownCells);
    }

    // unknown cell -> solver column
    let mut index = vec![usize::MAX; height * width];
    let mut cells = Vec::new();
    for (i, &u) in unknown.iter().enumerate() {
        if u {
            index[i] = cells.len();
            cells.push((i / width, i % width));
        }
    }

    let n = cells.len();
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut b = DVector::<f64>::zeros(n);
    for (eq, &(row, col)) in cells.iter().enumerate() {
        let mut add = |r: i64, c: i64, w: f64| {
            let cell = r as usize * width + c as usize;
            if unknown[cell] {
                a[(eq, index[cell])] += w;
            } else {
                b[eq] -= w * map.at(r as usize, c as usize);
            }
        };
        let r = row as i64;
        let c = col as i64;
        let interior2 = row >= 2 && col >= 2 && row + 2 < height && col + 2 < width;
        if interior2 {
            // 13-point biharmonic stencil
            add(r, c, 20.0);
            for (dr, dc) in [(-1, 0), (1, 0), (0, -1), (0, 1)] {
                add(r + dr, c + dc, -8.0);
            }
            for (dr, dc) in [(-1, -1), (-1, 1), (1, -1), (1, 1)] {
                add(r + dr, c + dc, 2.0);
            }
            for (dr, dc) in [(-2, 0), (2, 0), (0, -2), (0, 2)] {
                add(r + dr, c + dc, 1.0);
            }
        } else {
            // near the grid edge: one second difference per axis, shifted
            // inward where the centered stencil would leave the grid
            let vr = second_difference_offsets(row, height);
            add(r + vr[0], c, 1.0);
            add(r + vr[1], c, -2.0);
            add(r + vr[2], c, 1.0);
            let vc = second_difference_offsets(col, width);
            add(r, c + vc[0], 1.0);
            add(r, c + vc[1], -2.0);
            add(r, c + vc[2], 1.0);
        }
    }

    let solution = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Validation("inpainting system is singular".into()))?;

    let mut out = map.values().to_vec();
    for (k, &(row, col)) in cells.iter().enumerate() {
        out[row * width + col] = solution[k];
    }
    map.with_values(out)
}

/// Offsets of a three-point second difference centered as close to 0 as the
/// grid allows: `[-1, 0, 1]` in the interior, `[0, 1, 2]` / `[-2, -1, 0]` at
/// the edges. All variants vanish on affine fields.
fn second_difference_offsets(pos: usize, len: usize) -> [i64; 3] {
    if pos == 0 {
        [0, 1, 2]
    } else if pos + 1 == len {
        [-2, -1, 0]
    } else {
        [-1, 0, 1]
    }
}

fn check_shapes(map: &TemperatureMap, layout: &ComponentLayout) -> Result<()> {
    if map.height() != layout.height() || map.width() != layout.width() {
        return Err(Error::DimensionMismatch(format!(
            "map is {}x{} but layout is {}x{}",
            map.height(),
            map.width(),
            layout.height(),
            layout.width()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::ComponentInfo;

    fn board_layout(height: usize, width: usize) -> ComponentLayout {
        ComponentLayout::new(
            height,
            width,
            vec![0; height * width],
            vec![ComponentInfo {
                id: 0,
                name: "board".into(),
                material: 1,
            }],
            1,
        )
        .unwrap()
    }

    /// Layout with a vertical stripe of a second material in [c0, c1).
    fn stripe_layout(height: usize, width: usize, c0: usize, c1: usize) -> ComponentLayout {
        let mut ids = vec![0u32; height * width];
        for row in 0..height {
            for col in c0..c1 {
                ids[row * width + col] = 9;
            }
        }
        ComponentLayout::new(
            height,
            width,
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
            ],
            2,
        )
        .unwrap()
    }

    #[test]
    fn ambient_constant_map_is_exact() {
        let map = TemperatureMap::constant(8, 8, 300.0).unwrap();
        let est = estimate_ambient(&map, DEFAULT_AMBIENT_BINS).unwrap();
        assert_eq!(est.t_amb, 300.0);
        assert_eq!(est.bin_width, 0.0);
    }

    #[test]
    fn ambient_tracks_background_under_hot_spot() {
        // 95% of cells near 299 K, a 350 K hot spot on the rest
        let (h, w) = (20, 20);
        let mut vals = Vec::with_capacity(h * w);
        for i in 0..h * w {
            if i < 380 {
                vals.push(299.0 + 0.4 * ((i % 11) as f64 / 10.0 - 0.5));
            } else {
                vals.push(350.0);
            }
        }
        let map = TemperatureMap::new(h, w, vals).unwrap();
        let est = estimate_ambient(&map, DEFAULT_AMBIENT_BINS).unwrap();
        assert!(
            (est.t_amb - 299.0).abs() <= 0.5,
            "ambient {} too far from 299",
            est.t_amb
        );
    }

    #[test]
    fn ambient_finds_27_celsius_background() {
        // four active hot regions over a ~27 C background
        let (h, w) = (30, 40);
        let mut vals = vec![0.0; h * w];
        for (i, v) in vals.iter_mut().enumerate() {
            *v = 300.15 + 0.2 * (((i * 7) % 13) as f64 / 13.0 - 0.5);
        }
        for block in 0..4 {
            let r0 = 8 + (block / 2) * 8;
            let c0 = 10 + (block % 2) * 12;
            for r in r0..r0 + 4 {
                for c in c0..c0 + 5 {
                    vals[r * w + c] = 360.0 + block as f64 * 10.0;
                }
            }
        }
        let map = TemperatureMap::new(h, w, vals).unwrap();
        let est = estimate_ambient(&map, DEFAULT_AMBIENT_BINS).unwrap();
        assert!(
            (est.t_amb - 300.15).abs() <= 0.5,
            "ambient {} too far from 300.15",
            est.t_amb
        );
    }

    #[test]
    fn ambient_needs_three_bins() {
        let map = TemperatureMap::constant(3, 3, 300.0).unwrap();
        assert!(estimate_ambient(&map, 2).is_err());
    }

    #[test]
    fn compensation_with_unit_emissivity_is_identity() {
        let map = TemperatureMap::constant(4, 4, 311.5).unwrap();
        let layout = board_layout(4, 4);
        let out = compensate_emissivity(&map, &layout, &[1.0], 300.0).unwrap();
        assert_eq!(out, map);
    }

    #[test]
    fn box_temperature_is_a_fixed_point() {
        let map = TemperatureMap::constant(4, 4, 300.0).unwrap();
        let layout = board_layout(4, 4);
        let out = compensate_emissivity(&map, &layout, &[0.37], 300.0).unwrap();
        for &v in out.values() {
            assert!((v - 300.0).abs() < 1e-9);
        }
    }

    #[test]
    fn compensation_scalar_case() {
        // e = 0.2, t_in = 310 K, t_box = 300 K
        let map = TemperatureMap::constant(3, 3, 310.0).unwrap();
        let layout = board_layout(3, 3);
        let out = compensate_emissivity(&map, &layout, &[0.2], 300.0).unwrap();
        let expected = 342.595_124_028_650_73;
        assert!(
            (out.at(1, 1) - expected).abs() < 1e-9,
            "got {}",
            out.at(1, 1)
        );
    }

    #[test]
    fn negative_radicand_names_the_cell() {
        // t_in far below box temperature with low emissivity
        let mut vals = vec![300.0; 9];
        vals[4] = 150.0;
        let map = TemperatureMap::new(3, 3, vals).unwrap();
        let layout = board_layout(3, 3);
        let err = compensate_emissivity(&map, &layout, &[0.2], 300.0).unwrap_err();
        assert!(matches!(err, Error::NegativeRadicand { row: 1, col: 1 }));
    }

    #[test]
    fn forward_then_compensate_round_trips() {
        let vals: Vec<f64> = (0..36).map(|i| 280.0 + i as f64 * 3.0).collect();
        let map = TemperatureMap::new(6, 6, vals).unwrap();
        let layout = stripe_layout(6, 6, 2, 4);
        let eps = [0.9, 0.2];
        let observed = apply_emissivity(&map, &layout, &eps, 300.0).unwrap();
        let back = compensate_emissivity(&observed, &layout, &eps, 300.0).unwrap();
        for (a, b) in map.values().iter().zip(back.values()) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn inpaint_without_marked_cells_is_identity() {
        let vals: Vec<f64> = (0..30).map(|i| 300.0 + i as f64).collect();
        let map = TemperatureMap::new(5, 6, vals).unwrap();
        let layout = board_layout(5, 6);
        let out = inpaint_low_emissivity(&map, &layout, &[2]).unwrap();
        assert_eq!(out, map);
    }

    #[test]
    fn inpaint_restores_linear_ramp() {
        let (h, w) = (9, 12);
        let vals: Vec<f64> = (0..h * w).map(|i| 300.0 + 0.5 * (i % w) as f64).collect();
        let map = TemperatureMap::new(h, w, vals).unwrap();
        let layout = stripe_layout(h, w, 4, 6);
        let out = inpaint_low_emissivity(&map, &layout, &[2]).unwrap();
        for row in 0..h {
            for col in 0..w {
                let expected = 300.0 + 0.5 * col as f64;
                assert!(
                    (out.at(row, col) - expected).abs() < 1e-6,
                    "({row},{col}): {} vs {expected}",
                    out.at(row, col)
                );
            }
        }
    }

    #[test]
    fn inpaint_keeps_known_cells_and_is_idempotent() {
        let (h, w) = (10, 10);
        let vals: Vec<f64> = (0..h * w)
            .map(|i| 300.0 + ((i * 31) % 17) as f64 * 0.7)
            .collect();
        let map = TemperatureMap::new(h, w, vals).unwrap();
        let layout = stripe_layout(h, w, 5, 6);
        let once = inpaint_low_emissivity(&map, &layout, &[2]).unwrap();
        for row in 0..h {
            for col in 0..w {
                if !(4..=7).contains(&col) {
                    assert_eq!(once.at(row, col), map.at(row, col));
                }
            }
        }
        let twice = inpaint_low_emissivity(&once, &layout, &[2]).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn inpaint_cold_wire_lands_between_neighbors() {
        // wire stripe reads colder than the board around it; inpainted values
        // must fall between the adjacent board columns
        let (h, w) = (8, 9);
        let mut vals: Vec<f64> = (0..h * w)
            .map(|i| 320.0 - ((i % w) as f64 - 4.0).abs())
            .collect();
        for row in 0..h {
            vals[row * w + 4] = 305.0; // depressed reading on the wire
        }
        let map = TemperatureMap::new(h, w, vals).unwrap();
        let layout = stripe_layout(h, w, 4, 5);
        let out = inpaint_low_emissivity(&map, &layout, &[2]).unwrap();
        for row in 0..h {
            let left = out.at(row, 2);
            let right = out.at(row, 6);
            let wire = out.at(row, 4);
            let lo = left.min(right) - 1e-9;
            let hi = left.max(right).max(320.0) + 1e-9;
            assert!(
                wire >= lo && wire <= hi,
                "row {row}: wire {wire} outside [{lo}, {hi}]"
            );
            assert!(wire > 305.0 + 1.0, "wire not lifted at row {row}: {wire}");
        }
    }

    #[test]
    fn inpaint_with_no_known_cells_errors() {
        let map = TemperatureMap::constant(3, 3, 300.0).unwrap();
        let layout = stripe_layout(3, 3, 0, 3);
        assert!(matches!(
            inpaint_low_emissivity(&map, &layout, &[1, 2]),
            Err(Error::NoKnownCells)
        ));
    }
}
