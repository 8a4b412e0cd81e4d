//! Raster and coordinate primitives shared by every map layer.
//!
//! World coordinates are continuous meters; rasters are indexed by [`Cell`]
//! (column `x`, row `y`). Cell `(0, 0)` is the first character of the first
//! scene row, and the center of cell `(x, y)` lies at
//! `((x + 0.5) * res, (y + 0.5) * res)`.

use serde::{Deserialize, Serialize};

/// A raster cell index (column, row).
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct Cell {
    pub x: usize,
    pub y: usize,
}

impl Cell {
    pub fn new(x: usize, y: usize) -> Self {
        Cell { x, y }
    }

    /// Row-major sort key: row first, then column.
    pub fn row_major(self) -> (usize, usize) {
        (self.y, self.x)
    }
}

/// A continuous position in meters.
#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Dense row-major raster of `T` values.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct Grid<T> {
    width: usize,
    height: usize,
    cells: Vec<T>,
}

impl<T: Clone> Grid<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Grid {
            width,
            height,
            cells: vec![value; width * height],
        }
    }
}

impl<T> Grid<T> {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn same_shape<U>(&self, other: &Grid<U>) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn in_bounds(&self, cell: Cell) -> bool {
        cell.x < self.width && cell.y < self.height
    }

    fn index(&self, cell: Cell) -> usize {
        debug_assert!(self.in_bounds(cell));
        cell.y * self.width + cell.x
    }

    pub fn get(&self, cell: Cell) -> &T {
        &self.cells[self.index(cell)]
    }

    pub fn get_mut(&mut self, cell: Cell) -> &mut T {
        let i = self.index(cell);
        &mut self.cells[i]
    }

    pub fn set(&mut self, cell: Cell, value: T) {
        let i = self.index(cell);
        self.cells[i] = value;
    }

    /// All cells in row-major order.
    pub fn iter_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        let w = self.width;
        (0..self.cells.len()).map(move |i| Cell::new(i % w, i / w))
    }

    pub fn values(&self) -> impl Iterator<Item = &T> {
        self.cells.iter()
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut T> {
        self.cells.iter_mut()
    }

    /// 4-connected in-bounds neighbors.
    pub fn neighbors4(&self, cell: Cell) -> impl Iterator<Item = Cell> + '_ {
        const DELTAS: [(i64, i64); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
        DELTAS
            .iter()
            .filter_map(move |&(dx, dy)| self.offset(cell, dx, dy))
    }

    /// 8-connected in-bounds neighbors.
    pub fn neighbors8(&self, cell: Cell) -> impl Iterator<Item = Cell> + '_ {
        const DELTAS: [(i64, i64); 8] = [
            (-1, -1),
            (0, -1),
            (1, -1),
            (-1, 0),
            (1, 0),
            (-1, 1),
            (0, 1),
            (1, 1),
        ];
        DELTAS
            .iter()
            .filter_map(move |&(dx, dy)| self.offset(cell, dx, dy))
    }

    pub fn offset(&self, cell: Cell, dx: i64, dy: i64) -> Option<Cell> {
        let nx = cell.x as i64 + dx;
        let ny = cell.y as i64 + dy;
        if nx < 0 || ny < 0 || nx as usize >= self.width || ny as usize >= self.height {
            None
        } else {
            Some(Cell::new(nx as usize, ny as usize))
        }
    }
}

/// Center of `cell` in meters at the given resolution.
pub fn cell_center(cell: Cell, resolution: f64) -> Point {
    Point::new(
        (cell.x as f64 + 0.5) * resolution,
        (cell.y as f64 + 0.5) * resolution,
    )
}

/// Cell containing `point`, or `None` outside the `width x height` raster.
pub fn point_to_cell(point: Point, resolution: f64, width: usize, height: usize) -> Option<Cell> {
    if point.x < 0.0 || point.y < 0.0 {
        return None;
    }
    let x = (point.x / resolution).floor() as usize;
    let y = (point.y / resolution).floor() as usize;
    if x < width && y < height {
        Some(Cell::new(x, y))
    } else {
        None
    }
}

/// Normalize an angle into `[-pi, pi)`.
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut r = (a + std::f64::consts::PI).rem_euclid(two_pi) - std::f64::consts::PI;
    if r >= std::f64::consts::PI {
        r -= two_pi;
    }
    r
}

/// Smallest signed rotation taking `from` to `to`, in `[-pi, pi)`.
pub fn angle_diff(to: f64, from: f64) -> f64 {
    wrap_angle(to - from)
}
