//! Static scene description: occupancy grid plus placed objects.
//!
//! Scenes load from a plain-text format:
//!
//! ```text
//! scene <width> <height> <resolution>
//! <height rows of '#' (occupied) / '.' (free)>
//! object <id> <category> <x> <y> <radius>
//! ```
//!
//! The loader rejects malformed files with line-numbered errors and
//! validates that every object sits on a free in-bounds cell and that all
//! free cells form a single 4-connected component.

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{cell_center, point_to_cell, Cell, Grid, Point};

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("scene validation failed: {0}")]
    Invalid(String),
}

/// One placed object with a category label and a ground-truth position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub id: String,
    pub category: String,
    pub position: Point,
    pub footprint_radius: f64,
}

/// Occupancy state of one scene cell.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum Occupancy {
    Free,
    Occupied,
}

/// Static occupancy grid plus objects. Immutable during an episode.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridScene {
    pub resolution: f64,
    pub occupancy: Grid<Occupancy>,
    pub objects: Vec<SceneObject>,
}

impl GridScene {
    pub fn width(&self) -> usize {
        self.occupancy.width()
    }

    pub fn height(&self) -> usize {
        self.occupancy.height()
    }

    pub fn is_free(&self, cell: Cell) -> bool {
        *self.occupancy.get(cell) == Occupancy::Free
    }

    pub fn is_occupied(&self, cell: Cell) -> bool {
        *self.occupancy.get(cell) == Occupancy::Occupied
    }

    pub fn cell_of(&self, point: Point) -> Option<Cell> {
        point_to_cell(point, self.resolution, self.width(), self.height())
    }

    pub fn cell_center(&self, cell: Cell) -> Point {
        cell_center(cell, self.resolution)
    }

    /// All free cells in row-major order.
    pub fn free_cells(&self) -> Vec<Cell> {
        self.occupancy
            .iter_cells()
            .filter(|&c| self.is_free(c))
            .collect()
    }

    /// Objects whose category matches `category`.
    pub fn objects_of_category<'a>(
        &'a self,
        category: &'a str,
    ) -> impl Iterator<Item = &'a SceneObject> {
        self.objects.iter().filter(move |o| o.category == category)
    }

    /// Construct and validate a scene.
    pub fn new(
        resolution: f64,
        occupancy: Grid<Occupancy>,
        objects: Vec<SceneObject>,
    ) -> Result<Self, SceneError> {
        let scene = GridScene {
            resolution,
            occupancy,
            objects,
        };
        scene.validate()?;
        Ok(scene)
    }

    fn validate(&self) -> Result<(), SceneError> {
        if self.width() == 0 || self.height() == 0 {
            return Err(SceneError::Invalid("empty grid".into()));
        }
        if !(self.resolution > 0.0) {
            return Err(SceneError::Invalid(format!(
                "resolution must be positive, got {}",
                self.resolution
            )));
        }
        let free = self.free_cells();
        if free.is_empty() {
            return Err(SceneError::Invalid("scene has no free cells".into()));
        }
        // All free cells must be mutually reachable (4-connected).
        let component = flood_fill_free(&self.occupancy, free[0]);
        if component.len() != free.len() {
            return Err(SceneError::Invalid(format!(
                "free space is disconnected: {} of {} free cells reachable from {:?}",
                component.len(),
                free.len(),
                free[0]
            )));
        }
        let mut ids = HashSet::new();
        for obj in &self.objects {
            if obj.category.is_empty() {
                return Err(SceneError::Invalid(format!(
                    "object {} has an empty category",
                    obj.id
                )));
            }
            if obj.footprint_radius < 0.0 {
                return Err(SceneError::Invalid(format!(
                    "object {} has a negative footprint radius",
                    obj.id
                )));
            }
            if !ids.insert(obj.id.clone()) {
                return Err(SceneError::Invalid(format!("duplicate object id {}", obj.id)));
            }
            match self.cell_of(obj.position) {
                Some(cell) if self.is_free(cell) => {}
                Some(_) => {
                    return Err(SceneError::Invalid(format!(
                        "object {} at ({}, {}) lies on an occupied cell",
                        obj.id, obj.position.x, obj.position.y
                    )))
                }
                None => {
                    return Err(SceneError::Invalid(format!(
                        "object {} at ({}, {}) lies outside the grid",
                        obj.id, obj.position.x, obj.position.y
                    )))
                }
            }
        }
        Ok(())
    }

    /// Parse the text scene format.
    pub fn parse(text: &str) -> Result<Self, SceneError> {
        let mut lines = text.lines().enumerate();
        let (n, header) = lines
            .next()
            .ok_or_else(|| SceneError::Parse {
                line: 1,
                message: "empty file".into(),
            })?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 4 || fields[0] != "scene" {
            return Err(SceneError::Parse {
                line: n + 1,
                message: format!("expected `scene <width> <height> <resolution>`, got `{header}`"),
            });
        }
        let width: usize = fields[1].parse().map_err(|_| SceneError::Parse {
            line: n + 1,
            message: format!("invalid width `{}`", fields[1]),
        })?;
        let height: usize = fields[2].parse().map_err(|_| SceneError::Parse {
            line: n + 1,
            message: format!("invalid height `{}`", fields[2]),
        })?;
        let resolution: f64 = fields[3].parse().map_err(|_| SceneError::Parse {
            line: n + 1,
            message: format!("invalid resolution `{}`", fields[3]),
        })?;
        if width == 0 || height == 0 {
            return Err(SceneError::Parse {
                line: n + 1,
                message: "width and height must be at least 1".into(),
            });
        }

        let mut occupancy = Grid::filled(width, height, Occupancy::Free);
        for row in 0..height {
            let (n, line) = lines.next().ok_or_else(|| SceneError::Parse {
                line: row + 2,
                message: format!("missing grid row {} of {height}", row + 1),
            })?;
            if line.chars().count() != width {
                return Err(SceneError::Parse {
                    line: n + 1,
                    message: format!(
                        "grid row has {} characters, expected {width}",
                        line.chars().count()
                    ),
                });
            }
            for (col, ch) in line.chars().enumerate() {
                let state = match ch {
                    '#' => Occupancy::Occupied,
                    '.' => Occupancy::Free,
                    other => {
                        return Err(SceneError::Parse {
                            line: n + 1,
                            message: format!("invalid grid character `{other}` in column {}", col + 1),
                        })
                    }
                };
                occupancy.set(Cell::new(col, row), state);
            }
        }

        let mut objects = Vec::new();
        for (n, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 6 || fields[0] != "object" {
                return Err(SceneError::Parse {
                    line: n + 1,
                    message: format!(
                        "expected `object <id> <category> <x> <y> <radius>`, got `{line}`"
                    ),
                });
            }
            let parse_f = |s: &str, what: &str| -> Result<f64, SceneError> {
                s.parse().map_err(|_| SceneError::Parse {
                    line: n + 1,
                    message: format!("invalid {what} `{s}`"),
                })
            };
            objects.push(SceneObject {
                id: fields[1].to_string(),
                category: fields[2].to_string(),
                position: Point::new(parse_f(fields[3], "x")?, parse_f(fields[4], "y")?),
                footprint_radius: parse_f(fields[5], "radius")?,
            });
        }

        GridScene::new(resolution, occupancy, objects)
    }

    /// Serialize back to the text format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "scene {} {} {}",
            self.width(),
            self.height(),
            self.resolution
        );
        for y in 0..self.height() {
            for x in 0..self.width() {
                out.push(if self.is_occupied(Cell::new(x, y)) {
                    '#'
                } else {
                    '.'
                });
            }
            out.push('\n');
        }
        for obj in &self.objects {
            let _ = writeln!(
                out,
                "object {} {} {} {} {}",
                obj.id, obj.category, obj.position.x, obj.position.y, obj.footprint_radius
            );
        }
        out
    }
}

/// Free cells 4-connected to `start`.
pub fn flood_fill_free(occupancy: &Grid<Occupancy>, start: Cell) -> HashSet<Cell> {
    let mut seen = HashSet::new();
    if *occupancy.get(start) != Occupancy::Free {
        return seen;
    }
    let mut stack = vec![start];
    seen.insert(start);
    while let Some(cell) = stack.pop() {
        for n in occupancy.neighbors4(cell) {
            if *occupancy.get(n) == Occupancy::Free && seen.insert(n) {
                stack.push(n);
            }
        }
    }
    seen
}

#[cfg(test)]
mod tests {
    use super::*;

    fn open_room(size: usize) -> String {
        let mut s = format!("scene {size} {size} 0.25\n");
        for y in 0..size {
            for x in 0..size {
                let border = x == 0 || y == 0 || x == size - 1 || y == size - 1;
                s.push(if border { '#' } else { '.' });
            }
            s.push('\n');
        }
        s
    }

    #[test]
    fn parse_roundtrip() {
        let mut text = open_room(8);
        text.push_str("object cup0 cup 1.0 1.0 0.1\n");
        let scene = GridScene::parse(&text).unwrap();
        assert_eq!(scene.width(), 8);
        assert_eq!(scene.objects.len(), 1);
        let again = GridScene::parse(&scene.to_text()).unwrap();
        assert_eq!(again.objects, scene.objects);
        assert_eq!(again.occupancy, scene.occupancy);
    }

    #[test]
    fn parse_rejects_bad_row_width() {
        let text = "scene 3 2 0.25\n...\n..\n";
        let err = GridScene::parse(text).unwrap_err();
        assert!(matches!(err, SceneError::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn parse_rejects_bad_header() {
        let err = GridScene::parse("grid 3 3 0.25\n").unwrap_err();
        assert!(matches!(err, SceneError::Parse { line: 1, .. }));
    }

    #[test]
    fn parse_rejects_object_on_wall() {
        let mut text = open_room(8);
        text.push_str("object cup0 cup 0.1 0.1 0.1\n");
        let err = GridScene::parse(&text).unwrap_err();
        assert!(matches!(err, SceneError::Invalid(_)), "{err}");
    }

    #[test]
    fn parse_rejects_disconnected_free_space() {
        let text = "scene 5 3 0.25\n#####\n#.#.#\n#####\n";
        let err = GridScene::parse(text).unwrap_err();
        assert!(err.to_string().contains("disconnected"), "{err}");
    }

    #[test]
    fn parse_rejects_duplicate_ids() {
        let mut text = open_room(8);
        text.push_str("object a cup 1.0 1.0 0.1\nobject a mug 1.2 1.2 0.1\n");
        let err = GridScene::parse(&text).unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }
}
