//! Grid path planning over the obstacle map.
//!
//! 8-connected A* with sqrt(2) diagonal cost. Unknown cells are traversable
//! at a configurable cost factor (they border every frontier midpoint); with
//! the factor disabled only free cells are passable. Diagonal moves require
//! both orthogonal neighbors to be passable so paths never cut corners.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::grid::{cell_center, point_to_cell, Cell, Grid, Point};

use super::{CellState, ObstacleMap};

/// A found path: waypoints at cell centers (excluding the start cell) and
/// its metric length.
#[derive(Clone, Debug, PartialEq)]
pub struct PathResult {
    pub waypoints: Vec<Point>,
    pub length: f64,
}

#[derive(Clone, Copy, Debug)]
struct TraversalCosts {
    unknown_factor: Option<f64>,
}

impl TraversalCosts {
    fn factor(&self, state: CellState) -> Option<f64> {
        match state {
            CellState::Free => Some(1.0),
            CellState::Unknown => self.unknown_factor,
            CellState::Occupied => None,
        }
    }
}

#[derive(PartialEq)]
struct HeapEntry {
    priority: f64,
    cost: f64,
    cell: Cell,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on priority; break ties row-major for determinism.
        other
            .priority
            .partial_cmp(&self.priority)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.cell.row_major().cmp(&self.cell.row_major()))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

const DIRS: [(i64, i64); 8] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (1, -1),
    (-1, 1),
    (-1, -1),
];

/// Shortest path between two metric points over the obstacle map.
///
/// `unknown_factor`: `Some(k)` lets the path traverse unknown cells at `k`
/// times the base cost; `None` restricts traversal to known-free cells.
/// Returns `None` when no path exists.
pub fn shortest_path(
    map: &ObstacleMap,
    from: Point,
    to: Point,
    unknown_factor: Option<f64>,
) -> Option<PathResult> {
    let res = map.resolution;
    let start = point_to_cell(from, res, map.width(), map.height())?;
    let goal = point_to_cell(to, res, map.width(), map.height())?;
    if start == goal {
        return Some(PathResult {
            waypoints: Vec::new(),
            length: 0.0,
        });
    }
    let costs = TraversalCosts { unknown_factor };
    // The start cell is always passable (the robot stands on it).
    costs.factor(map.state(goal))?;

    let octile = |c: Cell| -> f64 {
        let dx = (c.x as f64 - goal.x as f64).abs();
        let dy = (c.y as f64 - goal.y as f64).abs();
        let (lo, hi) = if dx < dy { (dx, dy) } else { (dy, dx) };
        (hi - lo + std::f64::consts::SQRT_2 * lo) * res
    };

    let mut dist: Grid<f64> = Grid::filled(map.width(), map.height(), f64::INFINITY);
    let mut parent: Grid<Option<Cell>> = Grid::filled(map.width(), map.height(), None);
    let mut heap = BinaryHeap::new();
    dist.set(start, 0.0);
    heap.push(HeapEntry {
        priority: octile(start),
        cost: 0.0,
        cell: start,
    });

    while let Some(HeapEntry { cost, cell, .. }) = heap.pop() {
        if cost > *dist.get(cell) + 1e-12 {
            continue;
        }
        if cell == goal {
            break;
        }
        for &(dx, dy) in &DIRS {
            let Some(next) = map.cells.offset(cell, dx, dy) else {
                continue;
            };
            let Some(factor) = costs.factor(map.state(next)) else {
                continue;
            };
            let diagonal = dx != 0 && dy != 0;
            if diagonal {
                // No corner cutting: both orthogonal neighbors must pass.
                let side_a = map.cells.offset(cell, dx, 0).map(|c| map.state(c));
                let side_b = map.cells.offset(cell, 0, dy).map(|c| map.state(c));
                let ok = |s: Option<CellState>| s.map(|s| costs.factor(s).is_some()).unwrap_or(false);
                if !ok(side_a) || !ok(side_b) {
                    continue;
                }
            }
            let step = if diagonal {
                std::f64::consts::SQRT_2 * res
            } else {
                res
            } * factor;
            let next_cost = cost + step;
            if next_cost < *dist.get(next) - 1e-12 {
                dist.set(next, next_cost);
                parent.set(next, Some(cell));
                heap.push(HeapEntry {
                    priority: next_cost + octile(next),
                    cost: next_cost,
                    cell: next,
                });
            }
        }
    }

    if dist.get(goal).is_infinite() {
        return None;
    }

    let mut cells = vec![goal];
    let mut cur = goal;
    while let Some(p) = parent.get(cur) {
        cells.push(*p);
        cur = *p;
    }
    cells.reverse();
    // Length reported in plain metric cost (factor-free), matching actual
    // travel distance along the cell path.
    let mut length = 0.0;
    for w in cells.windows(2) {
        let diagonal = w[0].x != w[1].x && w[0].y != w[1].y;
        length += if diagonal {
            std::f64::consts::SQRT_2 * res
        } else {
            res
        };
    }
    let waypoints = cells[1..].iter().map(|&c| cell_center(c, res)).collect();
    Some(PathResult { waypoints, length })
}

/// All-cells distance field from one source, same traversal rules as
/// [`shortest_path`] but with the unknown factor folded into the distances.
/// Used as the planner's movement-cost oracle.
#[derive(Clone, Debug)]
pub struct DistanceField {
    pub resolution: f64,
    pub dist: Grid<f64>,
}

impl DistanceField {
    /// Cost-to-reach of the cell containing `point` (infinite when
    /// unreachable or out of bounds).
    pub fn at(&self, point: Point) -> f64 {
        match point_to_cell(
            point,
            self.resolution,
            self.dist.width(),
            self.dist.height(),
        ) {
            Some(cell) => *self.dist.get(cell),
            None => f64::INFINITY,
        }
    }
}

/// Dijkstra from `source` over the obstacle map.
pub fn dijkstra_field(map: &ObstacleMap, source: Point, unknown_factor: Option<f64>) -> DistanceField {
    let res = map.resolution;
    let mut dist: Grid<f64> = Grid::filled(map.width(), map.height(), f64::INFINITY);
    let costs = TraversalCosts { unknown_factor };
    let Some(start) = point_to_cell(source, res, map.width(), map.height()) else {
        return DistanceField {
            resolution: res,
            dist,
        };
    };
    let mut heap = BinaryHeap::new();
    dist.set(start, 0.0);
    heap.push(HeapEntry {
        priority: 0.0,
        cost: 0.0,
        cell: start,
    });
    while let Some(HeapEntry { cost, cell, .. }) = heap.pop() {
        if cost > *dist.get(cell) + 1e-12 {
            continue;
        }
        for &(dx, dy) in &DIRS {
            let Some(next) = map.cells.offset(cell, dx, dy) else {
                continue;
            };
            let Some(factor) = costs.factor(map.state(next)) else {
                continue;
            };
            let diagonal = dx != 0 && dy != 0;
            if diagonal {
                let ok = |c: Option<Cell>| {
                    c.map(|c| costs.factor(map.state(c)).is_some()).unwrap_or(false)
                };
                if !ok(map.cells.offset(cell, dx, 0)) || !ok(map.cells.offset(cell, 0, dy)) {
                    continue;
                }
            }
            let step = if diagonal {
                std::f64::consts::SQRT_2 * res
            } else {
                res
            } * factor;
            let next_cost = cost + step;
            if next_cost < *dist.get(next) - 1e-12 {
                dist.set(next, next_cost);
                heap.push(HeapEntry {
                    priority: next_cost,
                    cost: next_cost,
                    cell: next,
                });
            }
        }
    }
    DistanceField {
        resolution: res,
        dist,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geomap::ObstacleMap;

    fn free_map(width: usize, height: usize) -> ObstacleMap {
        let mut map = ObstacleMap::new(width, height, 0.25);
        for cell in map.cells.clone().iter_cells() {
            map.cells.set(cell, CellState::Free);
        }
        map
    }

    #[test]
    fn identical_endpoints_give_empty_path() {
        let map = free_map(10, 10);
        let p = Point::new(1.0, 1.0);
        let r = shortest_path(&map, p, p, None).unwrap();
        assert!(r.waypoints.is_empty());
        assert_eq!(r.length, 0.0);
    }

    #[test]
    fn straight_corridor_length() {
        // 10-cell corridor at 0.25 m/cell: 9 steps = 2.25 m.
        let mut map = ObstacleMap::new(10, 1, 0.25);
        for cell in map.cells.clone().iter_cells() {
            map.cells.set(cell, CellState::Free);
        }
        let from = cell_center(Cell::new(0, 0), 0.25);
        let to = cell_center(Cell::new(9, 0), 0.25);
        let r = shortest_path(&map, from, to, None).unwrap();
        assert!((r.length - 2.25).abs() < 1e-12);
        assert_eq!(r.waypoints.len(), 9);
    }

    #[test]
    fn sealed_goal_is_unreachable() {
        let mut map = free_map(7, 7);
        for &(x, y) in &[(3usize, 2usize), (2, 3), (4, 3), (3, 4), (2, 2), (4, 2), (2, 4), (4, 4)] {
            map.cells.set(Cell::new(x, y), CellState::Occupied);
        }
        let from = cell_center(Cell::new(0, 0), 0.25);
        let to = cell_center(Cell::new(3, 3), 0.25);
        assert!(shortest_path(&map, from, to, None).is_none());
        assert!(shortest_path(&map, from, to, Some(2.0)).is_none());
    }

    #[test]
    fn unknown_cells_need_penalty_mode() {
        let mut map = free_map(5, 1);
        map.cells.set(Cell::new(2, 0), CellState::Unknown);
        let from = cell_center(Cell::new(0, 0), 0.25);
        let to = cell_center(Cell::new(4, 0), 0.25);
        assert!(shortest_path(&map, from, to, None).is_none());
        let r = shortest_path(&map, from, to, Some(2.0)).unwrap();
        // Reported length is actual travel distance, not penalty-inflated.
        assert!((r.length - 1.0).abs() < 1e-12);
    }

    #[test]
    fn path_length_at_least_euclidean() {
        let mut map = free_map(12, 12);
        for y in 0..9 {
            map.cells.set(Cell::new(6, y), CellState::Occupied);
        }
        let from = cell_center(Cell::new(2, 2), 0.25);
        let to = cell_center(Cell::new(10, 2), 0.25);
        let r = shortest_path(&map, from, to, None).unwrap();
        assert!(r.length >= from.distance(to) - 1e-12);
        // The wall forces a detour strictly longer than the straight line.
        assert!(r.length > from.distance(to) + 0.5);
    }

    #[test]
    fn straight_line_matches_euclidean_up_to_quantization() {
        let map = free_map(20, 20);
        let from = cell_center(Cell::new(2, 2), 0.25);
        let to = cell_center(Cell::new(14, 2), 0.25);
        let r = shortest_path(&map, from, to, None).unwrap();
        assert!((r.length - from.distance(to)).abs() < 1e-9);
    }

    #[test]
    fn no_corner_cutting() {
        let mut map = free_map(3, 3);
        map.cells.set(Cell::new(1, 0), CellState::Occupied);
        map.cells.set(Cell::new(0, 1), CellState::Occupied);
        let from = cell_center(Cell::new(0, 0), 0.25);
        let to = cell_center(Cell::new(1, 1), 0.25);
        assert!(shortest_path(&map, from, to, None).is_none());
    }

    #[test]
    fn dijkstra_field_matches_astar() {
        let mut map = free_map(15, 15);
        for y in 3..12 {
            map.cells.set(Cell::new(7, y), CellState::Occupied);
        }
        let source = cell_center(Cell::new(2, 7), 0.25);
        let field = dijkstra_field(&map, source, Some(2.0));
        for &(x, y) in &[(12usize, 7usize), (7, 1), (14, 14)] {
            let to = cell_center(Cell::new(x, y), 0.25);
            let a = shortest_path(&map, source, to, Some(2.0)).unwrap();
            // Field distances include the unknown factor; this map has no
            // unknown cells so both agree exactly.
            assert!(
                (field.at(to) - a.length).abs() < 1e-9,
                "mismatch at ({x},{y}): {} vs {}",
                field.at(to),
                a.length
            );
        }
    }
}
