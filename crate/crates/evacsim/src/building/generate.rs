//! Floor-plan construction: rectangular generated floors and ASCII plans.

use crate::building::{CellGrid, CellKind, FloorPlan, GeometryError};

/// Whether a floor plan drains into the staircase below (upper floors) or
/// through the building exit (the ground floor). The two roles share
/// geometry; only the kind of the exit band differs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FloorRole {
    Upper,
    Lower,
}

impl FloorRole {
    fn goal_kind(self) -> CellKind {
        match self {
            FloorRole::Upper => CellKind::StairEntry,
            FloorRole::Lower => CellKind::Exit,
        }
    }
}

/// Rectangular floor: free interior of `width_m` x `height_m`, obstacle
/// border, exit band of width `exit_width_cf` centered in the east wall,
/// and an arrival band of width `arrival_width` just inside the west wall.
pub fn generated_floor(
    width_m: f64,
    height_m: f64,
    cell_size: f64,
    exit_width_cf: f64,
    arrival_width: f64,
    initial_agent_count: usize,
    role: FloorRole,
) -> Result<FloorPlan, GeometryError> {
    if !(cell_size > 0.0) {
        return Err(GeometryError::BadCellSize(cell_size));
    }
    let iw = (width_m / cell_size).round() as usize;
    let ih = (height_m / cell_size).round() as usize;
    if iw < 3 || ih < 3 {
        return Err(GeometryError::BadDimensions {
            width: iw,
            height: ih,
        });
    }
    let exit_cells = (exit_width_cf / cell_size).round().max(1.0) as usize;
    let arrival_cells = (arrival_width / cell_size).round().max(1.0) as usize;
    if exit_cells > ih || arrival_cells > ih {
        return Err(GeometryError::BadDimensions {
            width: iw,
            height: ih,
        });
    }

    let (w, h) = (iw + 2, ih + 2);
    let mut cells = vec![CellKind::Obstacle; w * h];
    for y in 1..=ih {
        for x in 1..=iw {
            cells[y * w + x] = CellKind::Free;
        }
    }
    // Exit band: boundary door centered in the east wall.
    let exit_y0 = 1 + (ih - exit_cells) / 2;
    for y in exit_y0..exit_y0 + exit_cells {
        cells[y * w + (w - 1)] = role.goal_kind();
    }
    // Arrival band: interior column against the west wall.
    let arr_y0 = 1 + (ih - arrival_cells) / 2;
    for y in arr_y0..arr_y0 + arrival_cells {
        cells[y * w + 1] = CellKind::StairExit;
    }

    Ok(FloorPlan {
        grid: CellGrid::new(w, h, cell_size, cells)?,
        exit_width_cf,
        initial_agent_count,
    })
}

/// Parse a floor plan from rows of glyphs. `#` obstacle, `.` free, `E` the
/// floor's exit band (Exit or StairEntry depending on role), `S` an
/// explicit StairEntry cell, `X` the arrival band. The first row of text is
/// the top of the floor.
pub fn ascii_floor(
    rows: &[String],
    cell_size: f64,
    exit_width_cf: f64,
    initial_agent_count: usize,
    role: FloorRole,
) -> Result<FloorPlan, GeometryError> {
    if rows.is_empty() {
        return Err(GeometryError::BadDimensions {
            width: 0,
            height: 0,
        });
    }
    let w = rows[0].chars().count();
    if rows.iter().any(|r| r.chars().count() != w) {
        return Err(GeometryError::RaggedRows);
    }
    let h = rows.len();
    let mut cells = vec![CellKind::Obstacle; w * h];
    for (row_idx, row) in rows.iter().enumerate() {
        let y = h - 1 - row_idx; // text top row is the highest y
        for (x, glyph) in row.chars().enumerate() {
            cells[y * w + x] = match glyph {
                '#' => CellKind::Obstacle,
                '.' => CellKind::Free,
                'E' => role.goal_kind(),
                'S' => CellKind::StairEntry,
                'X' => CellKind::StairExit,
                other => return Err(GeometryError::UnknownGlyph(other)),
            };
        }
    }
    Ok(FloorPlan {
        grid: CellGrid::new(w, h, cell_size, cells)?,
        exit_width_cf,
        initial_agent_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_floor_has_closed_boundary_and_bands() {
        let plan = generated_floor(6.0, 4.5, 0.3, 1.2, 1.2, 10, FloorRole::Lower).unwrap();
        assert!(plan.grid.open_boundary_cells().is_empty());
        assert_eq!(plan.grid.count_of_kind(CellKind::Exit), 4);
        assert_eq!(plan.grid.count_of_kind(CellKind::StairExit), 4);
        let upper = generated_floor(6.0, 4.5, 0.3, 1.2, 1.2, 10, FloorRole::Upper).unwrap();
        assert_eq!(upper.grid.count_of_kind(CellKind::StairEntry), 4);
        assert_eq!(upper.grid.count_of_kind(CellKind::Exit), 0);
    }

    #[test]
    fn ascii_floor_round_trips_glyphs() {
        let rows = vec![
            "#####".to_string(),
            "#..E#".to_string(),
            "#X..#".to_string(),
            "#####".to_string(),
        ];
        let plan = ascii_floor(&rows, 0.5, 0.5, 2, FloorRole::Upper).unwrap();
        assert_eq!(plan.grid.kind(3, 2), CellKind::StairEntry);
        assert_eq!(plan.grid.kind(1, 1), CellKind::StairExit);
        assert!(matches!(
            ascii_floor(&["#?#".to_string()], 0.5, 0.5, 0, FloorRole::Upper),
            Err(GeometryError::UnknownGlyph('?'))
        ));
    }
}
