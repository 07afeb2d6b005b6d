//! Channel measurement: width and centerline length of a generated
//! staircase grid, derived from the cells alone so the staircase type
//! invariants can be checked against what was actually built.

use std::collections::BTreeMap;

use crate::building::{CellGrid, CellKind};
use crate::flowfield::distance_from_cells;
use crate::vec2::Vec2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelMeasurement {
    /// Free-space width of the channel in meters.
    pub width_m: f64,
    /// Walkable centerline length in meters.
    pub centerline_m: f64,
}

/// Measure a channel grid (entry band marked `StairExit`, downstream band
/// marked `Exit`).
///
/// The centerline is traced as the polyline through the centroids of
/// equal-path-distance wavefronts expanding from the entry band, plus half
/// a cell at each end to reach the channel faces. The width follows from
/// the free area divided by that length; for straight and constant-
/// curvature channels the quotient is the exact channel width.
pub fn measure_channel(grid: &CellGrid) -> ChannelMeasurement {
    let seeds = grid.cells_of_kind(CellKind::StairExit);
    let dist = distance_from_cells(grid, &seeds);
    let cell = grid.cell_size();

    let mut buckets: BTreeMap<i64, (Vec2, usize)> = BTreeMap::new();
    let mut walkable = 0usize;
    for y in 0..grid.height() {
        for x in 0..grid.width() {
            if !grid.kind(x, y).is_walkable() {
                continue;
            }
            walkable += 1;
            let d = dist[y * grid.width() + x];
            if !d.is_finite() {
                continue;
            }
            let entry = buckets.entry(d.round() as i64).or_insert((Vec2::default(), 0));
            entry.0 += grid.cell_center(x, y);
            entry.1 += 1;
        }
    }

    let centroids: Vec<Vec2> = buckets
        .values()
        .map(|&(sum, n)| sum * (1.0 / n as f64))
        .collect();

    let mut centerline = cell; // half a cell beyond each end centroid
    for pair in centroids.windows(2) {
        centerline += (pair[1] - pair[0]).norm();
    }

    let area = walkable as f64 * cell * cell;
    let width = if centerline > 0.0 { area / centerline } else { 0.0 };

    ChannelMeasurement {
        width_m: width,
        centerline_m: centerline,
    }
}
