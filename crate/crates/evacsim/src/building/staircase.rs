//! Staircase shapes unfolded into 2-D channels.
//!
//! The force model is planar, so every escape path is rendered as a flat
//! walkable channel: ladders become straight corridors, a standard
//! staircase becomes two flights joined by a switchback landing, a helical
//! staircase becomes a constant-curvature annular channel. The channel's
//! entry band is marked `StairExit` (agents arrive there from the floor
//! above) and its downstream band `Exit`.

use crate::building::measure::measure_channel;
use crate::building::{CellGrid, CellKind, GeometryError, Staircase, StaircaseKind};
use crate::vec2::Vec2;

/// Relative tolerance on the measured centerline length.
pub(crate) const LENGTH_TOLERANCE: f64 = 0.05;

/// Depth of the downstream Exit band in cells. The band must be deep enough
/// that the equilibrium between the end wall's repulsion and the driving
/// force lies inside it; otherwise a lone agent stalls just short of the
/// goal cells.
const EXIT_BAND_DEPTH: usize = 3;

/// Build the unfolded channel for a staircase of the given shape.
///
/// `length_ls` is the walkable centerline length and `width_cs` the free
/// channel width; the generated grid satisfies both within the staircase
/// invariants (width within one cell, length within 5%).
pub fn unfold_staircase(
    kind: StaircaseKind,
    length_ls: f64,
    width_cs: f64,
    cell_size: f64,
) -> Result<Staircase, GeometryError> {
    if !(cell_size > 0.0) {
        return Err(GeometryError::BadCellSize(cell_size));
    }
    if width_cs < 2.0 * cell_size {
        return Err(GeometryError::ChannelTooNarrow {
            width_cs,
            minimum: 2.0 * cell_size,
        });
    }
    if !(length_ls > 0.0) {
        return Err(GeometryError::ChannelTooShort {
            length_ls,
            minimum: 2.0 * cell_size,
        });
    }

    let width_cells = (width_cs / cell_size).round() as usize;
    let unfolded = match kind {
        StaircaseKind::LadderShort | StaircaseKind::LadderLong => {
            straight_channel(length_ls, width_cells, cell_size)?
        }
        StaircaseKind::Standard => switchback_channel(length_ls, width_cells, cell_size)?,
        StaircaseKind::Helical => annular_channel(length_ls, width_cs, cell_size)?,
    };

    Ok(Staircase {
        kind,
        length_ls,
        width_cs,
        unfolded,
    })
}

/// Straight corridor along +x: entry column on the west end, exit column on
/// the east end, obstacle border all around.
fn straight_channel(
    length_ls: f64,
    width_cells: usize,
    cell_size: f64,
) -> Result<CellGrid, GeometryError> {
    let length_cells = (length_ls / cell_size).round() as usize;
    if length_cells < EXIT_BAND_DEPTH + 2 {
        return Err(GeometryError::ChannelTooShort {
            length_ls,
            minimum: (EXIT_BAND_DEPTH + 2) as f64 * cell_size,
        });
    }
    let (w, h) = (length_cells + 2, width_cells + 2);
    let mut cells = vec![CellKind::Obstacle; w * h];
    for y in 1..=width_cells {
        for x in 1..=length_cells {
            cells[y * w + x] = if x == 1 {
                CellKind::StairExit
            } else if x > length_cells - EXIT_BAND_DEPTH {
                CellKind::Exit
            } else {
                CellKind::Free
            };
        }
    }
    CellGrid::new(w, h, cell_size, cells)
}

/// Two parallel flights joined by a landing chamber on the east end, the
/// whole channel folded back on itself. Entry is the west end of the south
/// flight, exit the west end of the north flight. The flight length is
/// calibrated against the measured centerline.
fn switchback_channel(
    length_ls: f64,
    width_cells: usize,
    cell_size: f64,
) -> Result<CellGrid, GeometryError> {
    let w = width_cells;
    let target_cells = length_ls / cell_size;
    // Turn contribution estimate: across the divider plus into and out of
    // the landing. Refined by measuring the generated grid.
    let turn_est = (2 * w + 1) as f64;
    let min_flight = (EXIT_BAND_DEPTH + 1) as i64;
    let mut flight = (((target_cells - turn_est) / 2.0).round() as i64).max(min_flight) as usize;

    let mut best: Option<(f64, CellGrid)> = None;
    for _ in 0..4 {
        let grid = build_switchback(flight, w, cell_size)?;
        let measured = measure_channel(&grid).centerline_m;
        let err = length_ls - measured;
        if best.as_ref().map_or(true, |(e, _)| err.abs() < e.abs()) {
            best = Some((err, grid));
        }
        let adjust = (err / (2.0 * cell_size)).round() as i64;
        if adjust == 0 {
            break;
        }
        let next = flight as i64 + adjust;
        if next < min_flight {
            break;
        }
        flight = next as usize;
    }

    let (err, grid) = best.expect("at least one switchback candidate");
    if err.abs() > LENGTH_TOLERANCE * length_ls {
        return Err(GeometryError::ChannelTooShort {
            length_ls,
            minimum: (turn_est + 4.0) * cell_size,
        });
    }
    Ok(grid)
}

fn build_switchback(
    flight: usize,
    width_cells: usize,
    cell_size: f64,
) -> Result<CellGrid, GeometryError> {
    let wc = width_cells;
    let landing_depth = wc;
    let w = flight + landing_depth + 2;
    let h = 2 * wc + 3; // two flights, one divider row, two border rows
    let mut cells = vec![CellKind::Obstacle; w * h];

    // South flight (entry) occupies rows 1..=wc, north flight rows wc+2..=2wc+1.
    for y in 1..=wc {
        for x in 1..=flight {
            cells[y * w + x] = if x == 1 {
                CellKind::StairExit
            } else {
                CellKind::Free
            };
        }
    }
    for y in (wc + 2)..=(2 * wc + 1) {
        for x in 1..=flight {
            cells[y * w + x] = if x <= EXIT_BAND_DEPTH {
                CellKind::Exit
            } else {
                CellKind::Free
            };
        }
    }
    // Landing chamber spans both flights and the divider.
    for y in 1..=(2 * wc + 1) {
        for x in (flight + 1)..=(flight + landing_depth) {
            cells[y * w + x] = CellKind::Free;
        }
    }
    CellGrid::new(w, h, cell_size, cells)
}

/// Constant-curvature annular channel. The centerline radius is chosen so
/// the sweep stays below 315 degrees; the sweep angle is calibrated against
/// the measured centerline.
fn annular_channel(
    length_ls: f64,
    width_cs: f64,
    cell_size: f64,
) -> Result<CellGrid, GeometryError> {
    let max_sweep = 1.75 * std::f64::consts::PI;
    let radius = (1.25 * width_cs).max(length_ls / max_sweep);
    let mut sweep = length_ls / radius;

    let mut best: Option<(f64, CellGrid)> = None;
    for _ in 0..4 {
        let grid = build_annulus(radius, sweep, width_cs, cell_size)?;
        let measured = measure_channel(&grid).centerline_m;
        let err = length_ls - measured;
        if best.as_ref().map_or(true, |(e, _)| err.abs() < e.abs()) {
            best = Some((err, grid));
        }
        if measured <= 0.0 {
            break;
        }
        let next = sweep * length_ls / measured;
        if !(next > 0.0) || next > max_sweep * 1.05 {
            break;
        }
        if (next - sweep).abs() < 1e-6 {
            break;
        }
        sweep = next;
    }

    let (err, grid) = best.expect("at least one annulus candidate");
    if err.abs() > LENGTH_TOLERANCE * length_ls {
        return Err(GeometryError::ChannelTooShort {
            length_ls,
            minimum: 2.0 * width_cs,
        });
    }
    Ok(grid)
}

fn build_annulus(
    radius: f64,
    sweep: f64,
    width_cs: f64,
    cell_size: f64,
) -> Result<CellGrid, GeometryError> {
    let r_outer = radius + width_cs / 2.0;
    let r_inner = radius - width_cs / 2.0;
    let span = (2.0 * (r_outer + cell_size) / cell_size).ceil() as usize + 2;
    let center = Vec2::new(span as f64 * cell_size / 2.0, span as f64 * cell_size / 2.0);

    let mut cells = vec![CellKind::Obstacle; span * span];
    for y in 0..span {
        for x in 0..span {
            if x == 0 || y == 0 || x == span - 1 || y == span - 1 {
                continue; // border stays obstacle
            }
            let p = Vec2::new(
                (x as f64 + 0.5) * cell_size,
                (y as f64 + 0.5) * cell_size,
            ) - center;
            let r = p.norm();
            if r < r_inner || r > r_outer {
                continue;
            }
            let mut theta = p.y.atan2(p.x);
            if theta < 0.0 {
                theta += 2.0 * std::f64::consts::PI;
            }
            if theta > sweep {
                continue;
            }
            let arc = theta * radius;
            cells[y * span + x] = if arc < cell_size {
                CellKind::StairExit
            } else if arc > sweep * radius - EXIT_BAND_DEPTH as f64 * cell_size {
                CellKind::Exit
            } else {
                CellKind::Free
            };
        }
    }
    CellGrid::new(span, span, cell_size, cells)
}
