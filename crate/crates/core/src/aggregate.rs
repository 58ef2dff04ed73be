//! Component-wise power aggregation.

use crate::error::{Error, Result};
use crate::grid::PowerMap;
use crate::layout::ComponentLayout;

/// Sums estimated per-cell power over the interior cells of one component.
pub fn aggregate(power_map: &PowerMap, layout: &ComponentLayout, id: u32) -> Result<f64> {
    if power_map.height() != layout.height() || power_map.width() != layout.width() {
        return Err(Error::DimensionMismatch(format!(
            "power map is {}x{} but layout is {}x{}",
            power_map.height(),
            power_map.width(),
            layout.height(),
            layout.width()
        )));
    }
    if !layout.contains(id) {
        return Err(Error::UnknownComponent { id });
    }
    let mut total = 0.0;
    for (row, col, p) in power_map.interior() {
        if layout.id_at(row, col) == id {
            total += p;
        }
    }
    Ok(total)
}

/// Estimated power for every component of one map, with instance metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentPowerReport {
    pub config: String,
    pub voltage: f64,
    /// One `(id, watts)` entry per manifest component, ascending by id.
    pub estimates: Vec<(u32, f64)>,
}

impl ComponentPowerReport {
    pub fn power_of(&self, id: u32) -> Option<f64> {
        self.estimates
            .iter()
            .find(|(c, _)| *c == id)
            .map(|(_, p)| *p)
    }

    pub fn board_power(&self) -> f64 {
        self.power_of(0).unwrap_or(0.0)
    }
}

/// Aggregates every manifest component of `layout` over `power_map`.
pub fn report(
    power_map: &PowerMap,
    layout: &ComponentLayout,
    config: &str,
    voltage: f64,
) -> Result<ComponentPowerReport> {
    let mut ids: Vec<u32> = layout.manifest().iter().map(|c| c.id).collect();
    ids.sort_unstable();
    let mut estimates = Vec::with_capacity(ids.len());
    for id in ids {
        estimates.push((id, aggregate(power_map, layout, id)?));
    }
    Ok(ComponentPowerReport {
        config: config.to_string(),
        voltage,
        estimates,
    })
}
