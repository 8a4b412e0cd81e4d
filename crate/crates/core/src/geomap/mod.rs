//! Exploration-side geometry: obstacle map, frontiers, path planning, and
//! the discrete navigation controller.

pub mod drive;
pub mod frontier;
pub mod path;

use serde::{Deserialize, Serialize};

use crate::grid::{Cell, Grid};
use crate::world::{GridScene, RobotPose, VisibleSet};

pub use drive::{drive_to, drive_to_sensed, ControllerConfig, DriveOutcome, DriveStop};
pub use frontier::{best_frontier, extract_frontiers, Frontier};
pub use path::{dijkstra_field, shortest_path, DistanceField, PathResult};

/// Knowledge state of one obstacle-map cell.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum CellState {
    Unknown,
    Free,
    Occupied,
}

/// Top-down 2D obstacle map accumulated from observations.
///
/// Cells only ever transition `Unknown -> {Free, Occupied}`; the scene is
/// static so observed cells never change state afterwards.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ObstacleMap {
    pub resolution: f64,
    pub cells: Grid<CellState>,
}

impl ObstacleMap {
    pub fn new(width: usize, height: usize, resolution: f64) -> Self {
        ObstacleMap {
            resolution,
            cells: Grid::filled(width, height, CellState::Unknown),
        }
    }

    pub fn width(&self) -> usize {
        self.cells.width()
    }

    pub fn height(&self) -> usize {
        self.cells.height()
    }

    pub fn state(&self, cell: Cell) -> CellState {
        *self.cells.get(cell)
    }

    pub fn unknown_count(&self) -> usize {
        self.cells
            .values()
            .filter(|&&s| s == CellState::Unknown)
            .count()
    }

    /// ASCII dump: `?` unknown, `.` free, `#` occupied, `F` frontier
    /// boundary cells.
    pub fn dump_ascii(&self, frontiers: &[Frontier]) -> String {
        let mut chars: Grid<char> = Grid::filled(self.width(), self.height(), '?');
        for cell in self.cells.iter_cells() {
            let ch = match self.state(cell) {
                CellState::Unknown => '?',
                CellState::Free => '.',
                CellState::Occupied => '#',
            };
            chars.set(cell, ch);
        }
        for f in frontiers {
            for &cell in &f.boundary_cells {
                chars.set(cell, 'F');
            }
        }
        let mut out = String::new();
        for y in 0..self.height() {
            for x in 0..self.width() {
                out.push(*chars.get(Cell::new(x, y)));
            }
            out.push('\n');
        }
        out
    }
}

/// Fold one observation into the obstacle map: visible scene-free cells
/// become `Free`, visible scene-occupied cells (the ray terminators) become
/// `Occupied`, everything else is untouched.
pub fn update_obstacle_map(map: &mut ObstacleMap, scene: &GridScene, visible: &VisibleSet) {
    for &cell in visible.cells() {
        let state = if scene.is_occupied(cell) {
            CellState::Occupied
        } else {
            CellState::Free
        };
        map.cells.set(cell, state);
    }
}

/// Free cells 4-connected to the cell containing `pose`.
pub fn reachable_free_cells(map: &ObstacleMap, pose: &RobotPose) -> Grid<bool> {
    let mut reachable = Grid::filled(map.width(), map.height(), false);
    let Some(start) = crate::grid::point_to_cell(
        pose.position(),
        map.resolution,
        map.width(),
        map.height(),
    ) else {
        return reachable;
    };
    let mut stack = vec![start];
    reachable.set(start, true);
    while let Some(cell) = stack.pop() {
        for n in map.cells.neighbors4(cell) {
            if map.state(n) == CellState::Free && !*reachable.get(n) {
                reachable.set(n, true);
                stack.push(n);
            }
        }
    }
    reachable
}
