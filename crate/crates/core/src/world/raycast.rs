//! Field-of-view raycasting over the occupancy grid.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{angle_diff, cell_center, Cell, Grid, Point};
use crate::world::scene::GridScene;
use crate::world::RobotPose;

/// Camera model: horizontal field of view, range, and angular sampling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorSpec {
    /// Horizontal field of view in radians, in `(0, 2*pi]`.
    pub fov: f64,
    /// Maximum sensing range in meters.
    pub max_range: f64,
    /// Number of rays cast across the field of view.
    pub ray_count: usize,
}

impl SensorSpec {
    pub fn validate(&self) -> Result<(), PoseError> {
        if !(self.fov > 0.0 && self.fov <= 2.0 * std::f64::consts::PI + 1e-12) {
            return Err(PoseError::InvalidSensor(format!("fov {} out of range", self.fov)));
        }
        if !(self.max_range > 0.0) {
            return Err(PoseError::InvalidSensor(format!(
                "max_range {} must be positive",
                self.max_range
            )));
        }
        if self.ray_count < 2 {
            return Err(PoseError::InvalidSensor(format!(
                "ray_count {} must be at least 2",
                self.ray_count
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum PoseError {
    #[error("pose ({x}, {y}) is outside the scene or on an occupied cell")]
    InvalidPose { x: f64, y: f64 },
    #[error("invalid sensor: {0}")]
    InvalidSensor(String),
}

/// The set of cells visible from one pose.
///
/// Iteration order is row-major, so downstream consumers are deterministic.
#[derive(Clone, Debug)]
pub struct VisibleSet {
    mask: Grid<bool>,
    cells: Vec<Cell>,
}

impl VisibleSet {
    pub fn from_mask(mask: Grid<bool>) -> Self {
        let cells = mask.iter_cells().filter(|&c| *mask.get(c)).collect();
        VisibleSet { mask, cells }
    }

    pub fn empty(width: usize, height: usize) -> Self {
        VisibleSet {
            mask: Grid::filled(width, height, false),
            cells: Vec::new(),
        }
    }

    pub fn contains(&self, cell: Cell) -> bool {
        self.mask.in_bounds(cell) && *self.mask.get(cell)
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

/// Cast `sensor.ray_count` rays across the field of view and collect every
/// traversed cell until the first occupied cell (included) or `max_range`.
///
/// A cell is visible only if its center bearing also lies inside the field
/// of view; the robot's own cell is always visible.
pub fn raycast_visibility(
    scene: &GridScene,
    pose: &RobotPose,
    sensor: &SensorSpec,
) -> Result<VisibleSet, PoseError> {
    sensor.validate()?;
    let origin_cell = scene
        .cell_of(pose.position())
        .filter(|&c| scene.is_free(c))
        .ok_or(PoseError::InvalidPose {
            x: pose.x,
            y: pose.y,
        })?;

    let mut mask = Grid::filled(scene.width(), scene.height(), false);
    mask.set(origin_cell, true);

    let origin = pose.position();
    let half_fov = sensor.fov / 2.0;
    for i in 0..sensor.ray_count {
        let angle = pose.phi - half_fov + (i as f64 + 0.5) * sensor.fov / sensor.ray_count as f64;
        cast_ray(scene, origin, angle, sensor.max_range, &mut |cell| {
            if bearing_within(origin, pose.phi, half_fov, cell, scene.resolution) {
                mask.set(cell, true);
            }
        });
    }
    Ok(VisibleSet::from_mask(mask))
}

fn bearing_within(origin: Point, phi: f64, half_fov: f64, cell: Cell, resolution: f64) -> bool {
    let center = cell_center(cell, resolution);
    let dx = center.x - origin.x;
    let dy = center.y - origin.y;
    if dx == 0.0 && dy == 0.0 {
        return true;
    }
    angle_diff(dy.atan2(dx), phi).abs() <= half_fov + 1e-12
}

/// Amanatides–Woo traversal: visit every grid cell along the ray from
/// `origin` at `angle`, stopping past `max_range`, outside the grid, or at
/// the first occupied cell (which is still visited).
fn cast_ray(
    scene: &GridScene,
    origin: Point,
    angle: f64,
    max_range: f64,
    visit: &mut impl FnMut(Cell),
) {
    let res = scene.resolution;
    let dir_x = angle.cos();
    let dir_y = angle.sin();

    let Some(mut cell) = scene.cell_of(origin) else {
        return;
    };

    let step_x: i64 = if dir_x > 0.0 { 1 } else { -1 };
    let step_y: i64 = if dir_y > 0.0 { 1 } else { -1 };

    // Distance along the ray to the first x/y cell boundary.
    let next_boundary = |coord: f64, cell_i: usize, step: i64| -> f64 {
        if step > 0 {
            (cell_i as f64 + 1.0) * res - coord
        } else {
            coord - cell_i as f64 * res
        }
    };
    let mut t_max_x = if dir_x.abs() < 1e-12 {
        f64::INFINITY
    } else {
        next_boundary(origin.x, cell.x, step_x) / dir_x.abs()
    };
    let mut t_max_y = if dir_y.abs() < 1e-12 {
        f64::INFINITY
    } else {
        next_boundary(origin.y, cell.y, step_y) / dir_y.abs()
    };
    let t_delta_x = if dir_x.abs() < 1e-12 {
        f64::INFINITY
    } else {
        res / dir_x.abs()
    };
    let t_delta_y = if dir_y.abs() < 1e-12 {
        f64::INFINITY
    } else {
        res / dir_y.abs()
    };

    loop {
        visit(cell);
        if scene.is_occupied(cell) {
            return;
        }
        let t = t_max_x.min(t_max_y);
        if t > max_range {
            return;
        }
        if t_max_x <= t_max_y {
            let nx = cell.x as i64 + step_x;
            if nx < 0 || nx as usize >= scene.width() {
                return;
            }
            cell = Cell::new(nx as usize, cell.y);
            t_max_x += t_delta_x;
        } else {
            let ny = cell.y as i64 + step_y;
            if ny < 0 || ny as usize >= scene.height() {
                return;
            }
            cell = Cell::new(cell.x, ny as usize);
            t_max_y += t_delta_y;
        }
    }
}
