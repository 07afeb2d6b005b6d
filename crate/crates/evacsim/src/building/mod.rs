//! Building geometry: floors as cell grids, staircases unfolded into 2-D
//! channels, and the two-floor unit cell replicated into an N-floor stack.
//!
//! Floor space is discretized into square cells. Each cell is an obstacle,
//! free space, or one of the coupling kinds that tie regions together:
//! `Exit` marks the band agents leave a region through, `StairEntry` marks a
//! floor's doorway into the downward staircase, and `StairExit` marks the
//! band where agents arriving from the region above are placed.

mod generate;
mod measure;
mod staircase;
mod validate;

pub use generate::{ascii_floor, generated_floor, FloorRole};
pub use measure::{measure_channel, ChannelMeasurement};
pub use staircase::unfold_staircase;
pub use validate::{validate_scenario, AgentParams, Diagnostic, DiagnosticCode};

use std::fmt;

use crate::vec2::Vec2;

/// What a single grid cell contains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellKind {
    Obstacle,
    Free,
    /// Band through which agents leave the region for good (the building
    /// exit on the ground floor, the downstream end of a staircase).
    Exit,
    /// Floor band feeding the downward staircase.
    StairEntry,
    /// Arrival band for agents coming from the region above. Walkable.
    StairExit,
}

impl CellKind {
    /// Whether agents can stand on this cell.
    pub fn is_walkable(self) -> bool {
        !matches!(self, CellKind::Obstacle)
    }

    /// Whether the flow field treats this cell as a target (distance zero).
    pub fn is_goal(self) -> bool {
        matches!(self, CellKind::Exit | CellKind::StairEntry)
    }
}

/// Errors raised while constructing geometry.
#[derive(Debug, Clone, PartialEq)]
pub enum GeometryError {
    BadCellSize(f64),
    BadDimensions { width: usize, height: usize },
    CellCountMismatch { expected: usize, got: usize },
    ChannelTooNarrow { width_cs: f64, minimum: f64 },
    ChannelTooShort { length_ls: f64, minimum: f64 },
    NotUnitCell,
    TooFewFloors(usize),
    UnknownGlyph(char),
    RaggedRows,
}

impl fmt::Display for GeometryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeometryError::BadCellSize(s) => write!(f, "cell size must be > 0, got {s}"),
            GeometryError::BadDimensions { width, height } => {
                write!(f, "grid dimensions must be >= 1, got {width}x{height}")
            }
            GeometryError::CellCountMismatch { expected, got } => {
                write!(f, "cell array length {got} does not match {expected}")
            }
            GeometryError::ChannelTooNarrow { width_cs, minimum } => write!(
                f,
                "staircase width {width_cs} m is below the discretizable minimum {minimum} m"
            ),
            GeometryError::ChannelTooShort { length_ls, minimum } => write!(
                f,
                "staircase length {length_ls} m is too short for this shape (minimum {minimum} m)"
            ),
            GeometryError::NotUnitCell => {
                write!(f, "replication requires a building in unit-cell mode")
            }
            GeometryError::TooFewFloors(n) => {
                write!(f, "a building needs at least 2 floors, got {n}")
            }
            GeometryError::UnknownGlyph(c) => write!(f, "unknown floor-plan glyph {c:?}"),
            GeometryError::RaggedRows => write!(f, "floor-plan rows differ in length"),
        }
    }
}

impl std::error::Error for GeometryError {}

/// Row-major grid of cells with a fixed metric cell size.
///
/// Coordinates: `x` grows east along a row, `y` grows north across rows.
/// A point `p` (meters) lies in cell `(floor(p.x/s), floor(p.y/s))`; cells
/// are half-open, lower edges inclusive.
#[derive(Debug, Clone, PartialEq)]
pub struct CellGrid {
    width: usize,
    height: usize,
    cell_size: f64,
    cells: Vec<CellKind>,
    /// Obstacle component label per cell (8-connected), `NO_COMPONENT`
    /// on non-obstacle cells. Wall forces sum one term per component.
    components: Vec<u32>,
    component_count: u32,
}

pub const NO_COMPONENT: u32 = u32::MAX;

impl CellGrid {
    pub fn new(
        width: usize,
        height: usize,
        cell_size: f64,
        cells: Vec<CellKind>,
    ) -> Result<Self, GeometryError> {
        if !(cell_size > 0.0) {
            return Err(GeometryError::BadCellSize(cell_size));
        }
        if width == 0 || height == 0 {
            return Err(GeometryError::BadDimensions { width, height });
        }
        if cells.len() != width * height {
            return Err(GeometryError::CellCountMismatch {
                expected: width * height,
                got: cells.len(),
            });
        }
        let (components, component_count) = label_components(width, height, &cells);
        Ok(CellGrid {
            width,
            height,
            cell_size,
            cells,
            components,
            component_count,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn width_m(&self) -> f64 {
        self.width as f64 * self.cell_size
    }

    pub fn height_m(&self) -> f64 {
        self.height as f64 * self.cell_size
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    #[inline]
    pub fn idx(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    #[inline]
    pub fn kind(&self, x: usize, y: usize) -> CellKind {
        self.cells[self.idx(x, y)]
    }

    pub fn in_bounds(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }

    /// Center of cell `(x, y)` in meters.
    pub fn cell_center(&self, x: usize, y: usize) -> Vec2 {
        Vec2::new(
            (x as f64 + 0.5) * self.cell_size,
            (y as f64 + 0.5) * self.cell_size,
        )
    }

    /// Cell containing `p`, or `None` when `p` is outside the grid.
    /// Cells are half-open: a point exactly on an interior edge belongs to
    /// the cell whose lower edge it sits on.
    pub fn cell_at(&self, p: Vec2) -> Option<(usize, usize)> {
        if p.x < 0.0 || p.y < 0.0 {
            return None;
        }
        let x = (p.x / self.cell_size).floor() as usize;
        let y = (p.y / self.cell_size).floor() as usize;
        if x < self.width && y < self.height {
            Some((x, y))
        } else {
            None
        }
    }

    pub fn kind_at(&self, p: Vec2) -> Option<CellKind> {
        self.cell_at(p).map(|(x, y)| self.kind(x, y))
    }

    /// Distance from `p` to the closed square of cell `(x, y)` and the
    /// nearest point on that square. Zero when `p` is inside the square.
    pub fn distance_to_cell(&self, p: Vec2, x: usize, y: usize) -> (f64, Vec2) {
        let s = self.cell_size;
        let nearest = Vec2::new(
            p.x.clamp(x as f64 * s, (x + 1) as f64 * s),
            p.y.clamp(y as f64 * s, (y + 1) as f64 * s),
        );
        ((p - nearest).norm(), nearest)
    }

    /// Obstacle component label of a cell.
    pub fn component(&self, x: usize, y: usize) -> u32 {
        self.components[self.idx(x, y)]
    }

    pub fn component_count(&self) -> u32 {
        self.component_count
    }

    /// Distance from `p` to the nearest obstacle-cell boundary within
    /// `search_radius`, or `None` if no obstacle is that close.
    pub fn obstacle_clearance(&self, p: Vec2, search_radius: f64) -> Option<f64> {
        let (cx, cy) = match self.cell_at(p) {
            Some(c) => c,
            None => return None,
        };
        let reach = (search_radius / self.cell_size).ceil() as i64 + 1;
        let mut best: Option<f64> = None;
        for dy in -reach..=reach {
            for dx in -reach..=reach {
                let (x, y) = (cx as i64 + dx, cy as i64 + dy);
                if !self.in_bounds(x, y) {
                    continue;
                }
                let (x, y) = (x as usize, y as usize);
                if self.kind(x, y) != CellKind::Obstacle {
                    continue;
                }
                let (d, _) = self.distance_to_cell(p, x, y);
                if d <= search_radius && best.map_or(true, |b| d < b) {
                    best = Some(d);
                }
            }
        }
        best
    }

    /// All cells of a given kind, in row-major scan order.
    pub fn cells_of_kind(&self, kind: CellKind) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for y in 0..self.height {
            for x in 0..self.width {
                if self.kind(x, y) == kind {
                    out.push((x, y));
                }
            }
        }
        out
    }

    pub fn count_of_kind(&self, kind: CellKind) -> usize {
        self.cells.iter().filter(|&&c| c == kind).count()
    }

    pub fn walkable_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_walkable()).count()
    }

    /// Whether a boundary cell violates the closed-domain rule
    /// (boundary cells must be obstacles unless they are Exit/StairEntry).
    pub fn open_boundary_cells(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for y in 0..self.height {
            for x in 0..self.width {
                let boundary = x == 0 || y == 0 || x == self.width - 1 || y == self.height - 1;
                if !boundary {
                    continue;
                }
                match self.kind(x, y) {
                    CellKind::Obstacle | CellKind::Exit | CellKind::StairEntry => {}
                    _ => out.push((x, y)),
                }
            }
        }
        out
    }
}

fn label_components(width: usize, height: usize, cells: &[CellKind]) -> (Vec<u32>, u32) {
    let mut labels = vec![NO_COMPONENT; cells.len()];
    let mut next = 0u32;
    let mut stack = Vec::new();
    for start in 0..cells.len() {
        if cells[start] != CellKind::Obstacle || labels[start] != NO_COMPONENT {
            continue;
        }
        labels[start] = next;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (x, y) = ((i % width) as i64, (i / width) as i64);
            for dy in -1..=1i64 {
                for dx in -1..=1i64 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx as usize >= width || ny as usize >= height {
                        continue;
                    }
                    let j = ny as usize * width + nx as usize;
                    if cells[j] == CellKind::Obstacle && labels[j] == NO_COMPONENT {
                        labels[j] = next;
                        stack.push(j);
                    }
                }
            }
        }
        next += 1;
    }
    (labels, next)
}

/// A straight band of cells that couples two regions: the geometry needed
/// to map an agent's lateral offset from one side to the other.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Portal {
    /// Center of the band, region-local meters.
    pub center: Vec2,
    /// Unit vector along the band (the lateral direction).
    pub lateral: Vec2,
    /// Half of the band's free width in meters.
    pub half_width: f64,
}

impl Portal {
    /// Fit a portal to a band of cells: centroid, principal axis as the
    /// lateral direction, and the half extent along that axis. Works for
    /// one-cell-thick runs and thicker bands alike.
    pub fn from_band(grid: &CellGrid, cells: &[(usize, usize)]) -> Option<Portal> {
        if cells.is_empty() {
            return None;
        }
        let centers: Vec<Vec2> = cells.iter().map(|&(x, y)| grid.cell_center(x, y)).collect();
        let n = centers.len() as f64;
        let mut center = Vec2::default();
        for c in &centers {
            center += *c;
        }
        center = center * (1.0 / n);

        // Principal axis of the scatter; falls back to +y for single cells.
        let (mut xx, mut xy, mut yy) = (0.0, 0.0, 0.0);
        for c in &centers {
            let d = *c - center;
            xx += d.x * d.x;
            xy += d.x * d.y;
            yy += d.y * d.y;
        }
        let lateral = if centers.len() == 1 {
            Vec2::new(0.0, 1.0)
        } else {
            let lambda = 0.5 * (xx + yy + ((xx - yy).powi(2) + 4.0 * xy * xy).sqrt());
            let a = Vec2::new(xy, lambda - xx);
            let b = Vec2::new(lambda - yy, xy);
            let v = if a.norm_sq() >= b.norm_sq() { a } else { b };
            let v = if v.is_zero() { Vec2::new(0.0, 1.0) } else { v.normalized() };
            // Deterministic sign: point toward positive y, then positive x.
            if v.y < 0.0 || (v.y == 0.0 && v.x < 0.0) {
                -v
            } else {
                v
            }
        };

        let half_extent = centers
            .iter()
            .map(|c| (*c - center).dot(lateral).abs())
            .fold(0.0, f64::max);
        Some(Portal {
            center,
            lateral,
            half_width: half_extent + grid.cell_size() / 2.0,
        })
    }

    /// Signed lateral offset of a point from the band center.
    pub fn lateral_offset(&self, p: Vec2) -> f64 {
        (p - self.center).dot(self.lateral)
    }

    /// Point on the band at a clamped lateral offset. The clamp keeps the
    /// mapped point at least half a cell inside the band's free span.
    pub fn point_at_offset(&self, offset: f64, margin: f64) -> Vec2 {
        let bound = (self.half_width - margin).max(0.0);
        self.center + self.lateral * offset.clamp(-bound, bound)
    }
}

/// Escape-path shapes supported by the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StaircaseKind {
    LadderShort,
    LadderLong,
    Standard,
    Helical,
}

impl fmt::Display for StaircaseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            StaircaseKind::LadderShort => "ladder_short",
            StaircaseKind::LadderLong => "ladder_long",
            StaircaseKind::Standard => "standard",
            StaircaseKind::Helical => "helical",
        };
        f.write_str(name)
    }
}

/// A staircase unfolded into the 2-D simulation plane as a walkable channel.
///
/// `unfolded` carries a `StairExit` band where agents arrive from the floor
/// above and an `Exit` band at the downstream end.
#[derive(Debug, Clone, PartialEq)]
pub struct Staircase {
    pub kind: StaircaseKind,
    pub length_ls: f64,
    pub width_cs: f64,
    pub unfolded: CellGrid,
}

impl Staircase {
    pub fn entry_portal(&self) -> Option<Portal> {
        Portal::from_band(
            &self.unfolded,
            &self.unfolded.cells_of_kind(CellKind::StairExit),
        )
    }

    pub fn exit_portal(&self) -> Option<Portal> {
        Portal::from_band(&self.unfolded, &self.unfolded.cells_of_kind(CellKind::Exit))
    }

    /// Measure the generated channel (width, centerline length).
    pub fn measure(&self) -> ChannelMeasurement {
        measure_channel(&self.unfolded)
    }
}

/// One floor of the building.
#[derive(Debug, Clone, PartialEq)]
pub struct FloorPlan {
    pub grid: CellGrid,
    /// Width of the floor's exit band in meters (the symbol `c_f`).
    pub exit_width_cf: f64,
    pub initial_agent_count: usize,
}

impl FloorPlan {
    /// Band agents leave this floor through (Exit or StairEntry cells).
    pub fn goal_portal(&self) -> Option<Portal> {
        let mut cells = self.grid.cells_of_kind(CellKind::Exit);
        cells.extend(self.grid.cells_of_kind(CellKind::StairEntry));
        Portal::from_band(&self.grid, &cells)
    }

    /// Band where agents from the staircase above are placed.
    pub fn arrival_portal(&self) -> Option<Portal> {
        Portal::from_band(&self.grid, &self.grid.cells_of_kind(CellKind::StairExit))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuildingMode {
    /// The two-floor motif the translational symmetry reduces a tower to.
    UnitCell,
    /// An explicit N-floor stack of identical floors.
    FullStack,
}

/// A building: the unit cell (upper floor, staircase, lower floor) plus a
/// floor count. In a full stack, floor 0 is the lower plan (its exit is the
/// building exit) and floors 1..N-1 are copies of the upper plan.
#[derive(Debug, Clone, PartialEq)]
pub struct Building {
    pub upper: FloorPlan,
    pub staircase: Staircase,
    pub lower: FloorPlan,
    pub floor_count: usize,
    pub mode: BuildingMode,
}

impl Building {
    pub fn unit_cell(upper: FloorPlan, staircase: Staircase, lower: FloorPlan) -> Building {
        Building {
            upper,
            staircase,
            lower,
            floor_count: 2,
            mode: BuildingMode::UnitCell,
        }
    }

    /// Expand the unit cell into an N-floor stack. Floor `n`'s staircase
    /// feeds floor `n-1`; floor 0's exit is the final building exit.
    pub fn replicate_unit_cell(&self, floor_count: usize) -> Result<Building, GeometryError> {
        if self.mode != BuildingMode::UnitCell {
            return Err(GeometryError::NotUnitCell);
        }
        if floor_count < 2 {
            return Err(GeometryError::TooFewFloors(floor_count));
        }
        Ok(Building {
            upper: self.upper.clone(),
            staircase: self.staircase.clone(),
            lower: self.lower.clone(),
            floor_count,
            mode: BuildingMode::FullStack,
        })
    }

    /// The plan of floor `n` (0 = ground floor with the building exit).
    pub fn floor_plan(&self, floor: usize) -> &FloorPlan {
        if floor == 0 {
            &self.lower
        } else {
            &self.upper
        }
    }

    /// Number of staircase instances in the stack.
    pub fn staircase_count(&self) -> usize {
        self.floor_count - 1
    }

    pub fn total_agent_count(&self) -> usize {
        (0..self.floor_count)
            .map(|f| self.floor_plan(f).initial_agent_count)
            .sum()
    }
}
