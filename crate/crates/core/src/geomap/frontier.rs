//! Frontier extraction: boundaries between explored free space and unknown
//! space, grouped into components with a representative midpoint waypoint.

use serde::{Deserialize, Serialize};

use crate::grid::{cell_center, Cell, Grid, Point};
use crate::valuemap::AggregateValueMap;

use super::{CellState, ObstacleMap};

/// One frontier: an 8-connected component of boundary cells.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Frontier {
    /// The component cell closest to the component centroid, in meters.
    pub midpoint: Point,
    pub midpoint_cell: Cell,
    pub boundary_cells: Vec<Cell>,
    /// Mean aggregate value around the midpoint; filled by [`best_frontier`].
    pub score: f64,
}

/// Extract frontiers from the obstacle map.
///
/// Boundary cells are free cells 4-adjacent to at least one unknown cell.
/// They group into 8-connected components; components smaller than
/// `min_cells` are dropped. The result is ordered by midpoint, row-major.
pub fn extract_frontiers(map: &ObstacleMap, min_cells: usize) -> Vec<Frontier> {
    let is_boundary = |cell: Cell| -> bool {
        map.state(cell) == CellState::Free
            && map
                .cells
                .neighbors4(cell)
                .any(|n| map.state(n) == CellState::Unknown)
    };

    let mut assigned: Grid<bool> = Grid::filled(map.width(), map.height(), false);
    let mut frontiers = Vec::new();

    for seed in map.cells.iter_cells() {
        if *assigned.get(seed) || !is_boundary(seed) {
            continue;
        }
        // BFS over 8-connected boundary cells.
        let mut component = vec![seed];
        assigned.set(seed, true);
        let mut head = 0;
        while head < component.len() {
            let cell = component[head];
            head += 1;
            for n in map.cells.neighbors8(cell) {
                if !*assigned.get(n) && is_boundary(n) {
                    assigned.set(n, true);
                    component.push(n);
                }
            }
        }
        if component.len() < min_cells {
            continue;
        }
        component.sort_unstable_by_key(|c| c.row_major());

        let cx = component.iter().map(|c| c.x as f64).sum::<f64>() / component.len() as f64;
        let cy = component.iter().map(|c| c.y as f64).sum::<f64>() / component.len() as f64;
        // Closest-to-centroid cell; ties resolve to the row-major least
        // because the component is sorted and the comparison is strict.
        let mut midpoint_cell = component[0];
        let mut best_d = f64::INFINITY;
        for &cell in &component {
            let d = (cell.x as f64 - cx).powi(2) + (cell.y as f64 - cy).powi(2);
            if d < best_d - 1e-12 {
                best_d = d;
                midpoint_cell = cell;
            }
        }

        frontiers.push(Frontier {
            midpoint: cell_center(midpoint_cell, map.resolution),
            midpoint_cell,
            boundary_cells: component,
            score: 0.0,
        });
    }

    frontiers.sort_unstable_by_key(|f| f.midpoint_cell.row_major());
    frontiers
}

/// Mean aggregate value over the disc of radius `value_radius` around a
/// frontier midpoint.
pub fn frontier_score(frontier: &Frontier, agg: &AggregateValueMap, value_radius: f64) -> f64 {
    let res = agg.resolution;
    let r_cells = (value_radius / res).ceil() as i64;
    let center = frontier.midpoint_cell;
    let mut sum = 0.0;
    let mut count = 0usize;
    for dy in -r_cells..=r_cells {
        for dx in -r_cells..=r_cells {
            let Some(cell) = agg.value.offset(center, dx, dy) else {
                continue;
            };
            if cell_center(cell, res).distance(frontier.midpoint) <= value_radius + 1e-12 {
                sum += *agg.value.get(cell);
                count += 1;
            }
        }
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Pick the frontier with the highest disc-mean aggregate value. Ties keep
/// the earlier frontier in the deterministic row-major ordering.
pub fn best_frontier(
    frontiers: &[Frontier],
    agg: &AggregateValueMap,
    value_radius: f64,
) -> Option<Frontier> {
    let mut best: Option<Frontier> = None;
    for f in frontiers {
        let score = frontier_score(f, agg, value_radius);
        if best.as_ref().map(|b| score > b.score + 1e-15).unwrap_or(true) {
            let mut chosen = f.clone();
            chosen.score = score;
            best = Some(chosen);
        }
    }
    best
}
