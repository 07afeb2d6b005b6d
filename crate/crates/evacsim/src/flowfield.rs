//! Desired-velocity flow fields over floor grids.
//!
//! Every walkable cell gets a unit vector agents take as their desired
//! direction. Construction is hybrid: each cell aims at the lowest-distance
//! cell it can see (ray casting), falling back to steepest descent on an
//! 8-neighbor shortest-path distance field. Naive "aim at the door"
//! guidance strands agents in dead-end pockets; the distance field cannot,
//! and a final repair pass guarantees that greedily following the vectors
//! from any reachable cell terminates at an exit.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::building::{CellGrid, CellKind};
use crate::vec2::Vec2;

/// Default visibility radius for ray-cast target selection, in cells.
pub const R_VIS_CELLS: f64 = 20.0;

/// Fixed neighbor order used for all tie-breaking: E, N, W, S, NE, NW, SW, SE.
pub const NEIGHBOR_ORDER: [(i64, i64); 8] = [
    (1, 0),
    (0, 1),
    (-1, 0),
    (0, -1),
    (1, 1),
    (-1, 1),
    (-1, -1),
    (1, -1),
];

/// Per-cell desired-velocity vectors plus the distance field they were
/// derived from. Distances are in cells; `f64::INFINITY` means unreachable.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    width: usize,
    height: usize,
    cell_size: f64,
    vectors: Vec<Vec2>,
    distance: Vec<f64>,
}

/// Result of sampling the field at a position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub direction: Vec2,
    /// Set when the position is out of bounds or on an obstacle cell.
    pub anomaly: bool,
}

impl FlowField {
    pub(crate) fn from_parts(
        width: usize,
        height: usize,
        cell_size: f64,
        vectors: Vec<Vec2>,
        distance: Vec<f64>,
    ) -> FlowField {
        assert_eq!(vectors.len(), width * height);
        assert_eq!(distance.len(), width * height);
        FlowField {
            width,
            height,
            cell_size,
            vectors,
            distance,
        }
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

    pub fn vector(&self, x: usize, y: usize) -> Vec2 {
        self.vectors[y * self.width + x]
    }

    pub fn distance(&self, x: usize, y: usize) -> f64 {
        self.distance[y * self.width + x]
    }

    pub fn matches_grid(&self, grid: &CellGrid) -> bool {
        self.width == grid.width()
            && self.height == grid.height()
            && self.cell_size == grid.cell_size()
    }

    /// The containing cell's vector, nearest-cell semantics (no
    /// interpolation). Cells are half-open with lower edges inclusive.
    pub fn lookup(&self, grid: &CellGrid, position: Vec2) -> FieldSample {
        match grid.cell_at(position) {
            Some((x, y)) if grid.kind(x, y) != CellKind::Obstacle => FieldSample {
                direction: self.vector(x, y),
                anomaly: false,
            },
            _ => FieldSample {
                direction: Vec2::default(),
                anomaly: true,
            },
        }
    }
}

/// True iff the straight segment between the two cell centers touches no
/// obstacle cell. Traversal enumerates every cell the segment touches;
/// grazing a corner shared with an obstacle counts as blocked.
pub fn ray_cast(grid: &CellGrid, from: (usize, usize), to: (usize, usize)) -> bool {
    let mut clear = true;
    visit_touched_cells(from, to, |x, y| {
        if grid.kind(x as usize, y as usize) == CellKind::Obstacle {
            clear = false;
        }
    });
    clear
}

/// Walk the supercover of the segment between two cell centers, invoking
/// `visit` for every touched cell. Exact integer arithmetic on a doubled
/// lattice: cell centers land on odd coordinates, grid lines on even ones,
/// so corner crossings are detected without rounding.
fn visit_touched_cells(
    from: (usize, usize),
    to: (usize, usize),
    mut visit: impl FnMut(i64, i64),
) {
    let (ax, ay) = (2 * from.0 as i64 + 1, 2 * from.1 as i64 + 1);
    let (bx, by) = (2 * to.0 as i64 + 1, 2 * to.1 as i64 + 1);
    let (dx, dy) = (bx - ax, by - ay);
    let (sx, sy) = (dx.signum(), dy.signum());

    let (mut x, mut y) = (from.0 as i64, from.1 as i64);
    visit(x, y);
    let (tx, ty) = (to.0 as i64, to.1 as i64);

    while (x, y) != (tx, ty) {
        // Parameter along the segment of the next vertical / horizontal
        // grid-line crossing, as exact fractions |num|/|den|.
        let num_x = if sx != 0 { (2 * x + 1 + sx) - ax } else { 0 };
        let num_y = if sy != 0 { (2 * y + 1 + sy) - ay } else { 0 };
        let cross_x = sx != 0;
        let cross_y = sy != 0;

        let step = if cross_x && cross_y {
            // Compare num_x/dx vs num_y/dy; both fractions are >= 0.
            let lhs = num_x.abs() * dy.abs();
            let rhs = num_y.abs() * dx.abs();
            if lhs < rhs {
                (sx, 0)
            } else if lhs > rhs {
                (0, sy)
            } else {
                // Exact corner crossing: the segment touches all four
                // cells around the corner.
                visit(x + sx, y);
                visit(x, y + sy);
                (sx, sy)
            }
        } else if cross_x {
            (sx, 0)
        } else {
            (0, sy)
        };

        x += step.0;
        y += step.1;
        visit(x, y);
    }
}

/// Shortest-path distance (8-neighbor, unit straight steps, sqrt(2)
/// diagonals, no cutting past obstacle corners) from each walkable cell to
/// the nearest seed cell. Obstacles and unreached cells get infinity.
pub(crate) fn distance_from_cells(grid: &CellGrid, seeds: &[(usize, usize)]) -> Vec<f64> {
    let (w, h) = (grid.width(), grid.height());
    let mut dist = vec![f64::INFINITY; w * h];
    // Non-negative finite f64 order matches the order of its bit pattern,
    // so the heap can key on bits and stay fully deterministic.
    let mut heap: BinaryHeap<Reverse<(u64, usize)>> = BinaryHeap::new();

    for &(x, y) in seeds {
        let i = y * w + x;
        if grid.kind(x, y).is_walkable() && dist[i] != 0.0 {
            dist[i] = 0.0;
            heap.push(Reverse((0u64, i)));
        }
    }

    while let Some(Reverse((dbits, i))) = heap.pop() {
        let d = f64::from_bits(dbits);
        if d > dist[i] {
            continue;
        }
        let (x, y) = ((i % w) as i64, (i / w) as i64);
        for &(ox, oy) in &NEIGHBOR_ORDER {
            let (nx, ny) = (x + ox, y + oy);
            if !grid.in_bounds(nx, ny) {
                continue;
            }
            if !legal_move(grid, x, y, ox, oy) {
                continue;
            }
            let cost = if ox != 0 && oy != 0 {
                std::f64::consts::SQRT_2
            } else {
                1.0
            };
            let nd = d + cost;
            let j = ny as usize * w + nx as usize;
            if nd < dist[j] {
                dist[j] = nd;
                heap.push(Reverse((nd.to_bits(), j)));
            }
        }
    }
    dist
}

/// A move from (x, y) by (ox, oy) is legal when the target is walkable and,
/// for diagonals, neither adjacent orthogonal cell is an obstacle.
fn legal_move(grid: &CellGrid, x: i64, y: i64, ox: i64, oy: i64) -> bool {
    let (nx, ny) = (x + ox, y + oy);
    if !grid.in_bounds(nx, ny) || !grid.kind(nx as usize, ny as usize).is_walkable() {
        return false;
    }
    if ox != 0 && oy != 0 {
        let side_a = grid.in_bounds(x + ox, y) && grid.kind((x + ox) as usize, y as usize).is_walkable();
        let side_b = grid.in_bounds(x, y + oy) && grid.kind(x as usize, (y + oy) as usize).is_walkable();
        if !(side_a && side_b) {
            return false;
        }
    }
    true
}

/// Distance (in cells) from every cell to the nearest Exit/StairEntry cell.
pub fn compute_distance_field(grid: &CellGrid) -> Vec<f64> {
    let mut seeds = grid.cells_of_kind(CellKind::Exit);
    seeds.extend(grid.cells_of_kind(CellKind::StairEntry));
    distance_from_cells(grid, &seeds)
}

pub fn compute_flow_field(grid: &CellGrid) -> FlowField {
    compute_flow_field_with(grid, R_VIS_CELLS)
}

/// Build the flow field with an explicit visibility radius (in cells).
pub fn compute_flow_field_with(grid: &CellGrid, r_vis_cells: f64) -> FlowField {
    let (w, h) = (grid.width(), grid.height());
    let distance = compute_distance_field(grid);
    let mut vectors = vec![Vec2::default(); w * h];

    let r_cells = r_vis_cells.max(1.0);
    let r_int = r_cells.ceil() as i64;
    let r_sq = r_cells * r_cells;

    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if !grid.kind(x, y).is_walkable() {
                continue;
            }
            let d_here = distance[i];
            if !d_here.is_finite() || d_here == 0.0 {
                continue;
            }

            // Candidate targets: strictly closer-to-exit cells within the
            // visibility radius, nearest exit-distance first, then nearest
            // to us, then scan order. First visible one wins.
            let mut candidates: Vec<(u64, u64, usize, usize)> = Vec::new();
            for oy in -r_int..=r_int {
                for ox in -r_int..=r_int {
                    let (cx, cy) = (x as i64 + ox, y as i64 + oy);
                    if !grid.in_bounds(cx, cy) {
                        continue;
                    }
                    let eucl_sq = (ox * ox + oy * oy) as f64;
                    if eucl_sq > r_sq {
                        continue;
                    }
                    let (cx, cy) = (cx as usize, cy as usize);
                    let j = cy * w + cx;
                    if distance[j] < d_here {
                        candidates.push((distance[j].to_bits(), eucl_sq.to_bits(), cx, cy));
                    }
                }
            }
            candidates.sort_unstable_by_key(|&(d, e, cx, cy)| (d, e, cy, cx));

            let mut chosen = None;
            for &(_, _, cx, cy) in &candidates {
                if ray_cast(grid, (x, y), (cx, cy)) {
                    chosen = Some((cx, cy));
                    break;
                }
            }

            vectors[i] = match chosen {
                Some((cx, cy)) => (grid.cell_center(cx, cy) - grid.cell_center(x, y)).normalized(),
                None => descent_vector(grid, &distance, x, y),
            };
        }
    }

    let mut field = FlowField::from_parts(w, h, grid.cell_size(), vectors, distance);
    repair_unreachable_walks(grid, &mut field);
    field
}

/// Unit vector toward the steepest-descent neighbor of the distance field,
/// ties broken by the fixed neighbor order.
pub fn descent_vector(grid: &CellGrid, distance: &[f64], x: usize, y: usize) -> Vec2 {
    match descent_neighbor(grid, distance, x, y) {
        Some((nx, ny)) => (grid.cell_center(nx, ny) - grid.cell_center(x, y)).normalized(),
        None => Vec2::default(),
    }
}

/// The legal neighbor with the smallest distance, if strictly smaller
/// neighbors exist.
pub fn descent_neighbor(
    grid: &CellGrid,
    distance: &[f64],
    x: usize,
    y: usize,
) -> Option<(usize, usize)> {
    let w = grid.width();
    let mut best: Option<((usize, usize), f64)> = None;
    for &(ox, oy) in &NEIGHBOR_ORDER {
        if !legal_move(grid, x as i64, y as i64, ox, oy) {
            continue;
        }
        let (nx, ny) = ((x as i64 + ox) as usize, (y as i64 + oy) as usize);
        let nd = distance[ny * w + nx];
        if best.map_or(true, |(_, bd)| nd < bd) {
            best = Some(((nx, ny), nd));
        }
    }
    match best {
        Some((cell, bd)) if bd < distance[y * w + x] => Some(cell),
        _ => None,
    }
}

/// Successor cell of the greedy walk from (x, y): the legal neighbor move
/// whose compass direction best matches the cell's vector.
pub fn walk_successor(
    grid: &CellGrid,
    field: &FlowField,
    x: usize,
    y: usize,
) -> Option<(usize, usize)> {
    let v = field.vector(x, y);
    if v.is_zero() {
        return None;
    }
    let mut best: Option<((i64, i64), f64)> = None;
    for &(ox, oy) in &NEIGHBOR_ORDER {
        let unit = Vec2::new(ox as f64, oy as f64).normalized();
        let score = v.dot(unit);
        if best.map_or(true, |(_, b)| score > b) {
            best = Some(((ox, oy), score));
        }
    }
    let (ox, oy) = best?.0;
    if legal_move(grid, x as i64, y as i64, ox, oy) {
        Some(((x as i64 + ox) as usize, (y as i64 + oy) as usize))
    } else {
        None
    }
}

/// Follow the field greedily from `start`; returns the number of steps to
/// reach a distance-zero cell, or `None` when the walk dead-ends or exceeds
/// the walkable-cell budget.
pub fn greedy_walk(grid: &CellGrid, field: &FlowField, start: (usize, usize)) -> Option<usize> {
    let budget = grid.walkable_count();
    let (mut x, mut y) = start;
    for step in 0..=budget {
        if field.distance(x, y) == 0.0 {
            return Some(step);
        }
        match walk_successor(grid, field, x, y) {
            Some((nx, ny)) => {
                x = nx;
                y = ny;
            }
            None => return None,
        }
    }
    None
}

/// Replace the vector of every cell whose greedy walk fails to reach an
/// exit with the steepest-descent direction. Descent strictly reduces the
/// distance each step, so one pass makes every reachable cell's walk
/// terminate.
pub(crate) fn repair_unreachable_walks(grid: &CellGrid, field: &mut FlowField) {
    let (w, h) = (field.width, field.height);
    let n = w * h;

    // successor index per cell, usize::MAX = none
    let mut succ = vec![usize::MAX; n];
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut reached = vec![false; n];
    let mut queue = Vec::new();

    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if !grid.kind(x, y).is_walkable() || !field.distance[i].is_finite() {
                continue;
            }
            if field.distance[i] == 0.0 {
                reached[i] = true;
                queue.push(i);
                continue;
            }
            if let Some((nx, ny)) = walk_successor(grid, field, x, y) {
                let j = ny * w + nx;
                if field.distance[j].is_finite() {
                    succ[i] = j;
                    preds[j].push(i);
                }
            }
        }
    }

    // Reverse reachability from the goal set over successor edges.
    while let Some(i) = queue.pop() {
        for &p in &preds[i] {
            if !reached[p] {
                reached[p] = true;
                queue.push(p);
            }
        }
    }

    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if !grid.kind(x, y).is_walkable() || !field.distance[i].is_finite() {
                continue;
            }
            if field.distance[i] > 0.0 && !reached[i] {
                field.vectors[i] = descent_vector(grid, &field.distance, x, y);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn grid_from(rows: &[&str]) -> CellGrid {
        let w = rows[0].len();
        let h = rows.len();
        let mut cells = vec![CellKind::Obstacle; w * h];
        for (ri, row) in rows.iter().enumerate() {
            let y = h - 1 - ri;
            for (x, c) in row.chars().enumerate() {
                cells[y * w + x] = match c {
                    '#' => CellKind::Obstacle,
                    '.' => CellKind::Free,
                    'E' => CellKind::Exit,
                    _ => panic!("bad glyph"),
                };
            }
        }
        CellGrid::new(w, h, 1.0, cells).unwrap()
    }

    // --- exact segment/square intersection oracle, doubled-integer lattice ---

    fn orient(p: (i64, i64), q: (i64, i64), r: (i64, i64)) -> i64 {
        ((q.0 - p.0) * (r.1 - p.1) - (q.1 - p.1) * (r.0 - p.0)).signum()
    }

    fn on_segment(p: (i64, i64), q: (i64, i64), r: (i64, i64)) -> bool {
        orient(p, q, r) == 0
            && r.0 >= p.0.min(q.0)
            && r.0 <= p.0.max(q.0)
            && r.1 >= p.1.min(q.1)
            && r.1 <= p.1.max(q.1)
    }

    fn segments_intersect(a: (i64, i64), b: (i64, i64), c: (i64, i64), d: (i64, i64)) -> bool {
        let (d1, d2) = (orient(c, d, a), orient(c, d, b));
        let (d3, d4) = (orient(a, b, c), orient(a, b, d));
        if d1 != d2 && d3 != d4 && d1 != 0 && d2 != 0 && d3 != 0 && d4 != 0 {
            return true;
        }
        on_segment(c, d, a) || on_segment(c, d, b) || on_segment(a, b, c) || on_segment(a, b, d)
    }

    /// Closed-square semantics: the segment between the two cell centers
    /// touches cell (x, y).
    fn oracle_touches(from: (usize, usize), to: (usize, usize), x: usize, y: usize) -> bool {
        let a = (2 * from.0 as i64 + 1, 2 * from.1 as i64 + 1);
        let b = (2 * to.0 as i64 + 1, 2 * to.1 as i64 + 1);
        let (x0, y0, x1, y1) = (2 * x as i64, 2 * y as i64, 2 * x as i64 + 2, 2 * y as i64 + 2);
        let inside = |p: (i64, i64)| p.0 >= x0 && p.0 <= x1 && p.1 >= y0 && p.1 <= y1;
        if inside(a) || inside(b) {
            return true;
        }
        let corners = [(x0, y0), (x1, y0), (x1, y1), (x0, y1)];
        (0..4).any(|i| segments_intersect(a, b, corners[i], corners[(i + 1) % 4]))
    }

    #[test]
    fn supercover_matches_exact_oracle() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..500 {
            let (w, h) = (8usize, 8usize);
            let from = (rng.gen_range(0..w), rng.gen_range(0..h));
            let to = (rng.gen_range(0..w), rng.gen_range(0..h));
            let mut visited = vec![false; w * h];
            visit_touched_cells(from, to, |x, y| {
                visited[y as usize * w + x as usize] = true;
            });
            for y in 0..h {
                for x in 0..w {
                    assert_eq!(
                        visited[y * w + x],
                        oracle_touches(from, to, x, y),
                        "cell ({x},{y}) for segment {from:?}->{to:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn ray_cast_clear_row() {
        let g = grid_from(&["....E"]);
        assert!(ray_cast(&g, (0, 0), (4, 0)));
    }

    #[test]
    fn ray_cast_blocked_by_obstacle_between() {
        let g = grid_from(&["..#.E"]);
        assert!(!ray_cast(&g, (0, 0), (4, 0)));
    }

    #[test]
    fn ray_cast_corner_graze_is_blocked() {
        // Segment (0,0)->(2,2) passes exactly through the corner shared
        // with (1,0); the conservative rule counts that as blocked.
        let g = grid_from(&[
            "...", //
            "...", //
            ".#.",
        ]);
        assert_eq!(g.kind(1, 0), CellKind::Obstacle);
        assert!(oracle_touches((0, 0), (2, 2), 1, 0));
        assert!(!ray_cast(&g, (0, 0), (2, 2)));
        // Without the obstacle the same segment is clear.
        let g2 = grid_from(&["...", "...", "..."]);
        assert!(ray_cast(&g2, (0, 0), (2, 2)));
    }

    #[test]
    fn distance_adjacent_to_exit_is_one() {
        let g = grid_from(&["E...."]);
        let d = compute_distance_field(&g);
        assert_eq!(d[1], 1.0);
        assert_eq!(d[0], 0.0);
    }

    #[test]
    fn distance_diagonal_across_open_room() {
        let mut rows = vec!["....."; 5].iter().map(|s| s.to_string()).collect::<Vec<_>>();
        rows[4] = "E....".to_string(); // exit at (0,0) after row flip
        let refs: Vec<&str> = rows.iter().map(|s| s.as_str()).collect();
        let g = grid_from(&refs);
        let d = compute_distance_field(&g);
        let far = d[4 * 5 + 4];
        assert!((far - 4.0 * std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn distance_walled_in_is_unreachable() {
        let g = grid_from(&[
            "....E", //
            ".###.", //
            ".#.#.", //
            ".###.", //
            ".....",
        ]);
        let d = compute_distance_field(&g);
        // The single cell inside the 3x3 box, at text row 2 col 2 -> y=2.
        assert_eq!(g.kind(2, 2), CellKind::Free);
        assert!(d[2 * 5 + 2].is_infinite());
    }

    #[test]
    fn open_room_vectors_aim_straight_at_exit() {
        let mut rows: Vec<String> = vec!["........."; 9].iter().map(|s| s.to_string()).collect();
        rows[4] = "....E....".to_string();
        let refs: Vec<&str> = rows.iter().map(|s| s.as_str()).collect();
        let g = grid_from(&refs);
        let f = compute_flow_field(&g);
        let exit = g.cell_center(4, 4);
        for y in 0..9 {
            for x in 0..9 {
                if (x, y) == (4, 4) {
                    continue;
                }
                let expect = (exit - g.cell_center(x, y)).normalized();
                let got = f.vector(x, y);
                assert!(
                    (got - expect).norm() < 1e-9,
                    "cell ({x},{y}): got {got:?}, expected {expect:?}"
                );
            }
        }
    }

    #[test]
    fn dead_end_pocket_points_back_to_mouth() {
        // Exit on the east wall; a pocket opens west. Cells inside the
        // pocket must head west (out the mouth), not east toward the wall
        // nearest the exit.
        let g = grid_from(&[
            "############", //
            "#..........#", //
            "#.######...#", //
            "#......#...E", //
            "#......#...E", //
            "#.######...#", //
            "#..........#", //
            "############",
        ]);
        let f = compute_flow_field(&g);
        for (x, y) in [(4, 3), (5, 3), (6, 3), (4, 4), (5, 4), (6, 4)] {
            assert_eq!(g.kind(x, y), CellKind::Free);
            let v = f.vector(x, y);
            assert!(v.x < 0.0, "pocket cell ({x},{y}) should point west, got {v:?}");
            assert!((v.norm() - 1.0).abs() < 1e-9);
        }
        // Every reachable cell walks out.
        for y in 0..g.height() {
            for x in 0..g.width() {
                if g.kind(x, y).is_walkable() && f.distance(x, y).is_finite() {
                    assert!(greedy_walk(&g, &f, (x, y)).is_some(), "stuck at ({x},{y})");
                }
            }
        }
    }

    fn random_map(rng: &mut StdRng, w: usize, h: usize, obstacle_frac: f64) -> CellGrid {
        let mut cells: Vec<CellKind> = (0..w * h)
            .map(|_| {
                if rng.gen_bool(obstacle_frac) {
                    CellKind::Obstacle
                } else {
                    CellKind::Free
                }
            })
            .collect();
        // One exit on a free cell (retry until we hit one).
        loop {
            let i = rng.gen_range(0..w * h);
            if cells[i] == CellKind::Free {
                cells[i] = CellKind::Exit;
                break;
            }
        }
        CellGrid::new(w, h, 0.5, cells).unwrap()
    }

    #[test]
    fn greedy_walks_reach_exit_on_random_maps() {
        for seed in 0..5u64 {
            let mut rng = StdRng::seed_from_u64(seed);
            let g = random_map(&mut rng, 30, 30, 0.2);
            let f = compute_flow_field(&g);
            for y in 0..30 {
                for x in 0..30 {
                    if !g.kind(x, y).is_walkable() || !f.distance(x, y).is_finite() {
                        continue;
                    }
                    assert!(
                        greedy_walk(&g, &f, (x, y)).is_some(),
                        "seed {seed}: stuck at ({x},{y})"
                    );
                }
            }
        }
    }

    #[test]
    fn unit_norm_and_monotone_descent_properties() {
        let mut rng = StdRng::seed_from_u64(11);
        let g = random_map(&mut rng, 25, 25, 0.25);
        let f = compute_flow_field(&g);
        let d = compute_distance_field(&g);
        for y in 0..25 {
            for x in 0..25 {
                let i = y * 25 + x;
                match g.kind(x, y) {
                    CellKind::Obstacle => assert!(f.vector(x, y).is_zero()),
                    k if k.is_walkable() => {
                        if d[i].is_finite() && d[i] > 0.0 {
                            assert!((f.vector(x, y).norm() - 1.0).abs() < 1e-9);
                            let (nx, ny) = descent_neighbor(&g, &d, x, y).unwrap();
                            assert!(d[ny * 25 + nx] < d[i]);
                        } else if !d[i].is_finite() {
                            assert!(f.vector(x, y).is_zero());
                        }
                    }
                    _ => {}
                }
            }
        }
    }

    #[test]
    fn field_construction_is_deterministic() {
        let mut rng = StdRng::seed_from_u64(3);
        let g = random_map(&mut rng, 20, 20, 0.2);
        assert_eq!(compute_flow_field(&g), compute_flow_field(&g));
    }

    #[test]
    fn lookup_cell_ownership_and_anomalies() {
        let g = grid_from(&["#..E"]);
        let f = compute_flow_field(&g);
        // Exact center of a free cell.
        let s = f.lookup(&g, g.cell_center(1, 0));
        assert!(!s.anomaly);
        assert_eq!(s.direction, f.vector(1, 0));
        // Just inside the lower edge of cell 2 (half-open ownership).
        let s = f.lookup(&g, Vec2::new(2.0 + 1e-9, 0.5));
        assert_eq!(s.direction, f.vector(2, 0));
        // Lower edge itself belongs to the upper cell.
        let s = f.lookup(&g, Vec2::new(2.0, 0.5));
        assert_eq!(s.direction, f.vector(2, 0));
        // Obstacle cell: zero vector plus anomaly flag.
        let s = f.lookup(&g, g.cell_center(0, 0));
        assert!(s.anomaly);
        assert!(s.direction.is_zero());
        // Out of bounds: same contract.
        let s = f.lookup(&g, Vec2::new(-1.0, 0.0));
        assert!(s.anomaly);
    }
}
