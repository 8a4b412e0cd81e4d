//! Procedural multi-room scene generation.
//!
//! Rooms come from recursive axis splits with door gaps carved into every
//! dividing wall, so the free space stays 4-connected by construction.
//! Objects are placed on corner-adjacent free cells, which keeps them off
//! the natural travel paths; each of the first `decoys` target categories
//! also gets a look-alike object in a different room.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::grid::{Cell, Grid, Point};
use crate::world::{GridScene, Occupancy, SceneError, SceneObject};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneratorSpec {
    pub width: usize,
    pub height: usize,
    pub resolution: f64,
    /// Target number of rooms (1 = a single open rectangle).
    pub rooms: usize,
    /// Number of placed objects, cycling through `categories`.
    pub objects: usize,
    /// Look-alike objects added for the first N distinct categories.
    pub decoys: usize,
    /// Probability that an object gets a clutter block between itself and
    /// the room center, shadowing it from drive-by viewpoints.
    pub shadow: f64,
    pub seed: u64,
    /// Smallest allowed room side, in cells.
    pub min_room: usize,
    /// Door gap width, in cells.
    pub door_width: usize,
    pub categories: Vec<String>,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec {
            width: 44,
            height: 36,
            resolution: 0.25,
            rooms: 5,
            objects: 6,
            decoys: 2,
            shadow: 0.0,
            seed: 0,
            min_room: 6,
            door_width: 2,
            categories: vec![
                "cup".into(),
                "book".into(),
                "plant".into(),
                "ball".into(),
                "lamp".into(),
            ],
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Rect {
    x0: usize,
    y0: usize,
    x1: usize, // exclusive
    y1: usize, // exclusive
}

impl Rect {
    fn width(&self) -> usize {
        self.x1 - self.x0
    }
    fn height(&self) -> usize {
        self.y1 - self.y0
    }
    fn contains(&self, c: Cell) -> bool {
        c.x >= self.x0 && c.x < self.x1 && c.y >= self.y0 && c.y < self.y1
    }
}

/// Generate a scene. Identical specs produce identical scenes.
pub fn generate_scene(spec: &GeneratorSpec) -> Result<GridScene, SceneError> {
    if spec.width < 4 || spec.height < 4 {
        return Err(SceneError::Invalid(format!(
            "grid {}x{} too small to generate",
            spec.width, spec.height
        )));
    }
    if spec.objects > 0 && spec.categories.is_empty() {
        return Err(SceneError::Invalid(
            "object placement needs a non-empty category palette".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut occ = Grid::filled(spec.width, spec.height, Occupancy::Free);
    for x in 0..spec.width {
        occ.set(Cell::new(x, 0), Occupancy::Occupied);
        occ.set(Cell::new(x, spec.height - 1), Occupancy::Occupied);
    }
    for y in 0..spec.height {
        occ.set(Cell::new(0, y), Occupancy::Occupied);
        occ.set(Cell::new(spec.width - 1, y), Occupancy::Occupied);
    }

    let interior = Rect {
        x0: 1,
        y0: 1,
        x1: spec.width - 1,
        y1: spec.height - 1,
    };
    let mut rooms = vec![interior];
    // Repeatedly split the largest splittable room until the target count.
    while rooms.len() < spec.rooms.max(1) {
        let Some(idx) = rooms
            .iter()
            .enumerate()
            .filter(|(_, r)| {
                r.width() > 2 * spec.min_room || r.height() > 2 * spec.min_room
            })
            .max_by_key(|(_, r)| r.width() * r.height())
            .map(|(i, _)| i)
        else {
            break;
        };
        let room = rooms.swap_remove(idx);
        let split_vertical = if room.width() > 2 * spec.min_room
            && room.height() > 2 * spec.min_room
        {
            room.width() >= room.height()
        } else {
            room.width() > 2 * spec.min_room
        };
        if split_vertical {
            let wall_x = rng.gen_range(room.x0 + spec.min_room..=room.x1 - spec.min_room - 1);
            let door_y0 =
                rng.gen_range(room.y0..=room.y1.saturating_sub(spec.door_width).max(room.y0));
            for y in room.y0..room.y1 {
                if y < door_y0 || y >= door_y0 + spec.door_width {
                    occ.set(Cell::new(wall_x, y), Occupancy::Occupied);
                }
            }
            rooms.push(Rect { x1: wall_x, ..room });
            rooms.push(Rect {
                x0: wall_x + 1,
                ..room
            });
        } else {
            let wall_y = rng.gen_range(room.y0 + spec.min_room..=room.y1 - spec.min_room - 1);
            let door_x0 =
                rng.gen_range(room.x0..=room.x1.saturating_sub(spec.door_width).max(room.x0));
            for x in room.x0..room.x1 {
                if x < door_x0 || x >= door_x0 + spec.door_width {
                    occ.set(Cell::new(x, wall_y), Occupancy::Occupied);
                }
            }
            rooms.push(Rect { y1: wall_y, ..room });
            rooms.push(Rect {
                y0: wall_y + 1,
                ..room
            });
        }
    }

    let objects = place_objects(spec, &occ, &rooms, &mut rng)?;
    place_shadows(spec, &mut occ, &rooms, &objects, &mut rng);
    GridScene::new(spec.resolution, occ, objects)
}

/// Drop a clutter block between an object and its room center, keeping the
/// free space connected.
fn place_shadows(
    spec: &GeneratorSpec,
    occ: &mut Grid<Occupancy>,
    rooms: &[Rect],
    objects: &[SceneObject],
    rng: &mut ChaCha8Rng,
) {
    for obj in objects {
        if !rng.gen_bool(spec.shadow.clamp(0.0, 1.0)) {
            continue;
        }
        let Some(cell) = crate::grid::point_to_cell(
            obj.position,
            spec.resolution,
            spec.width,
            spec.height,
        ) else {
            continue;
        };
        let Some(room) = rooms.iter().find(|r| r.contains(cell)) else {
            continue;
        };
        let cx = (room.x0 + room.x1) as f64 / 2.0;
        let cy = (room.y0 + room.y1) as f64 / 2.0;
        let dx = (cx - cell.x as f64).signum() as i64;
        let dy = (cy - cell.y as f64).signum() as i64;
        // Prefer the diagonal-toward-center block, then axis blocks.
        let mut options = vec![(dx, dy), (dx, 0), (0, dy)];
        options.retain(|&(a, b)| a != 0 || b != 0);
        for (a, b) in options {
            let Some(block) = occ.offset(cell, a, b) else {
                continue;
            };
            if *occ.get(block) != Occupancy::Free {
                continue;
            }
            if objects.iter().any(|o| {
                crate::grid::point_to_cell(o.position, spec.resolution, spec.width, spec.height)
                    == Some(block)
            }) {
                continue;
            }
            occ.set(block, Occupancy::Occupied);
            // Free space must stay one component.
            let free_count = occ
                .values()
                .filter(|&&s| s == Occupancy::Free)
                .count();
            let start = occ
                .iter_cells()
                .find(|&c| *occ.get(c) == Occupancy::Free)
                .expect("free cell exists");
            if crate::world::scene::flood_fill_free(occ, start).len() == free_count {
                break;
            }
            occ.set(block, Occupancy::Free);
        }
    }
}

fn place_objects(
    spec: &GeneratorSpec,
    occ: &Grid<Occupancy>,
    rooms: &[Rect],
    rng: &mut ChaCha8Rng,
) -> Result<Vec<SceneObject>, SceneError> {
    let mut objects: Vec<SceneObject> = Vec::new();
    if spec.objects == 0 {
        return Ok(objects);
    }

    // Corner-adjacent spots per room: free cells with two or more occupied
    // 8-neighbors, falling back to wall-adjacent, then any free cell.
    let spots_in = |room: &Rect, min_occupied: usize| -> Vec<Cell> {
        occ.iter_cells()
            .filter(|&c| room.contains(c) && *occ.get(c) == Occupancy::Free)
            .filter(|&c| {
                occ.neighbors8(c)
                    .filter(|&n| *occ.get(n) == Occupancy::Occupied)
                    .count()
                    >= min_occupied
            })
            .collect()
    };

    let resolution = spec.resolution;
    let min_separation = 4.0 * resolution;
    let mut room_order: Vec<usize> = (0..rooms.len()).collect();
    room_order.shuffle(rng);

    let place_one = |category: &str,
                         id: String,
                         avoid_room: Option<usize>,
                         rng: &mut ChaCha8Rng,
                         objects: &[SceneObject]|
     -> Option<(SceneObject, usize)> {
        let mut candidate_rooms: Vec<usize> = (0..rooms.len())
            .filter(|i| Some(*i) != avoid_room)
            .collect();
        if candidate_rooms.is_empty() {
            candidate_rooms = (0..rooms.len()).collect();
        }
        candidate_rooms.shuffle(rng);
        for &room_idx in &candidate_rooms {
            for min_occ in [2usize, 1, 0] {
                let mut spots = spots_in(&rooms[room_idx], min_occ);
                spots.shuffle(rng);
                for cell in spots {
                    let pos = crate::grid::cell_center(cell, resolution);
                    let clear = objects
                        .iter()
                        .all(|o| o.position.distance(pos) >= min_separation);
                    if clear {
                        return Some((
                            SceneObject {
                                id,
                                category: category.to_string(),
                                position: pos,
                                footprint_radius: 0.1,
                            },
                            room_idx,
                        ));
                    }
                }
            }
        }
        None
    };

    let mut placed_rooms: Vec<(String, usize)> = Vec::new();
    for i in 0..spec.objects {
        let category = &spec.categories[i % spec.categories.len()];
        let id = format!("{category}{}", i / spec.categories.len());
        if let Some((obj, room_idx)) = place_one(category, id, None, rng, &objects) {
            placed_rooms.push((obj.category.clone(), room_idx));
            objects.push(obj);
        } else {
            return Err(SceneError::Invalid(format!(
                "no space left to place object {i} ({category})"
            )));
        }
    }

    // Decoys avoid the room of the object they imitate.
    let mut seen = Vec::new();
    for (category, room_idx) in placed_rooms.clone() {
        if seen.contains(&category) {
            continue;
        }
        seen.push(category.clone());
        if seen.len() > spec.decoys {
            break;
        }
        let decoy_cat = format!("{category}_decoy");
        let id = format!("{decoy_cat}0");
        if let Some((obj, _)) = place_one(&decoy_cat, id, Some(room_idx), rng, &objects) {
            objects.push(obj);
        }
    }

    Ok(objects)
}

/// Point position helper for tests and the harness.
pub fn object_positions<'a>(scene: &'a GridScene, category: &'a str) -> Vec<Point> {
    scene
        .objects_of_category(category)
        .map(|o| o.position)
        .collect()
}
