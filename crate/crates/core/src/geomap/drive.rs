//! Discrete navigation controller: turn/forward command emission with
//! continuous replanning over the growing obstacle map.

use serde::{Deserialize, Serialize};

use crate::grid::{angle_diff, Point};
use crate::world::{
    raycast_visibility, step_robot, Command, GridScene, MotionConfig, RobotPose, SensorSpec,
};

use super::{shortest_path, update_obstacle_map, ObstacleMap};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerConfig {
    /// Leg finishes once the robot is within this distance of the goal (m).
    pub arrival_radius: f64,
    /// Hard per-leg command cap.
    pub leg_step_cap: usize,
    /// Abort the leg after this many blocked forward commands.
    pub blocked_limit: usize,
    /// Cost factor for traversing unknown cells while planning.
    pub unknown_cost_factor: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig {
            arrival_radius: 0.3,
            leg_step_cap: 150,
            blocked_limit: 10,
            unknown_cost_factor: 2.0,
        }
    }
}

/// Why a leg ended.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriveStop {
    Arrived,
    StepCapped,
    NoPath,
    Blocked,
    /// The per-command sensing hook asked to abort the leg.
    Aborted,
}

/// One executed command and its result.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExecutedCommand {
    pub command: Command,
    pub pose: RobotPose,
    pub blocked: bool,
    pub distance: f64,
}

#[derive(Clone, Debug)]
pub struct DriveOutcome {
    pub commands: Vec<ExecutedCommand>,
    pub distance: f64,
    pub arrived: bool,
    pub stop: DriveStop,
}

/// Drive toward `goal`, replanning over the obstacle map and folding new
/// depth observations into it after every executed command. Returns the
/// executed command list and the integrated travel distance.
///
/// `budget` bounds the number of commands this leg may execute on top of
/// the per-leg cap.
#[allow(clippy::too_many_arguments)]
pub fn drive_to(
    scene: &GridScene,
    pose: &mut RobotPose,
    map: &mut ObstacleMap,
    sensor: &SensorSpec,
    motion: &MotionConfig,
    cfg: &ControllerConfig,
    goal: Point,
    budget: usize,
) -> DriveOutcome {
    drive_to_sensed(scene, pose, map, sensor, motion, cfg, goal, budget, None)
}

/// [`drive_to`] with a per-command sensing hook. The hook sees each new
/// visibility set (the detector runs on every frame while driving) and may
/// abort the leg, e.g. on a target detection.
#[allow(clippy::too_many_arguments)]
pub fn drive_to_sensed(
    scene: &GridScene,
    pose: &mut RobotPose,
    map: &mut ObstacleMap,
    sensor: &SensorSpec,
    motion: &MotionConfig,
    cfg: &ControllerConfig,
    goal: Point,
    budget: usize,
    mut on_sense: Option<&mut dyn FnMut(&crate::world::VisibleSet, &RobotPose) -> bool>,
) -> DriveOutcome {
    let cap = cfg.leg_step_cap.min(budget);
    let mut commands: Vec<ExecutedCommand> = Vec::new();
    let mut distance = 0.0;
    let mut blocked_count = 0usize;
    // Smoothing is only safe away from walls; after any collision the
    // controller falls back to cell-by-cell waypoints for the leg.
    let mut lookahead_enabled = true;

    loop {
        if pose.position().distance(goal) <= cfg.arrival_radius {
            return DriveOutcome {
                commands,
                distance,
                arrived: true,
                stop: DriveStop::Arrived,
            };
        }
        if commands.len() >= cap {
            return DriveOutcome {
                commands,
                distance,
                arrived: false,
                stop: DriveStop::StepCapped,
            };
        }

        let Some(path) = shortest_path(
            map,
            pose.position(),
            goal,
            Some(cfg.unknown_cost_factor),
        ) else {
            return DriveOutcome {
                commands,
                distance,
                arrived: false,
                stop: DriveStop::NoPath,
            };
        };
        let waypoint = if lookahead_enabled {
            steer_point(map, pose.position(), &path.waypoints, goal)
        } else {
            path.waypoints.first().copied().unwrap_or(goal)
        };

        let desired = (waypoint.y - pose.y).atan2(waypoint.x - pose.x);
        let diff = angle_diff(desired, pose.phi);
        let command = if diff.abs() <= motion.turn_angle / 2.0 + 1e-9 {
            Command::Forward
        } else if diff > 0.0 {
            Command::TurnLeft
        } else {
            Command::TurnRight
        };

        let out = step_robot(scene, pose, command, motion);
        *pose = out.pose;
        distance += out.distance;
        commands.push(ExecutedCommand {
            command,
            pose: *pose,
            blocked: out.blocked,
            distance: out.distance,
        });

        // Depth mapping and detection continue while driving.
        if let Ok(vis) = raycast_visibility(scene, pose, sensor) {
            update_obstacle_map(map, scene, &vis);
            if let Some(hook) = on_sense.as_mut() {
                if hook(&vis, pose) {
                    return DriveOutcome {
                        commands,
                        distance,
                        arrived: false,
                        stop: DriveStop::Aborted,
                    };
                }
            }
        }

        if out.blocked {
            blocked_count += 1;
            lookahead_enabled = false;
            if blocked_count > cfg.blocked_limit {
                return DriveOutcome {
                    commands,
                    distance,
                    arrived: false,
                    stop: DriveStop::Blocked,
                };
            }
        }
    }
}

/// Steering target: the farthest path waypoint within the lookahead
/// distance whose straight line from the robot has clearance on both
/// sides. Heading for it instead of the adjacent cell avoids
/// turn/forward oscillation along 8-connected paths.
fn steer_point(map: &ObstacleMap, from: Point, waypoints: &[Point], goal: Point) -> Point {
    const LOOKAHEAD: f64 = 1.0;
    let mut chosen = match waypoints.first() {
        Some(&w) => w,
        None => return goal,
    };
    for &w in waypoints.iter().skip(1) {
        if from.distance(w) > LOOKAHEAD {
            break;
        }
        if corridor_known_clear(map, from, w) {
            chosen = w;
        } else {
            break;
        }
    }
    chosen
}

/// True when the segment plus a half-cell margin on each side crosses no
/// known-occupied cell. The margin absorbs heading quantization drift.
fn corridor_known_clear(map: &ObstacleMap, from: Point, to: Point) -> bool {
    let length = from.distance(to);
    if length < 1e-9 {
        return true;
    }
    let margin = map.resolution / 2.0;
    let nx = -(to.y - from.y) / length * margin;
    let ny = (to.x - from.x) / length * margin;
    for offset in [-1.0, 0.0, 1.0] {
        let a = Point::new(from.x + offset * nx, from.y + offset * ny);
        let b = Point::new(to.x + offset * nx, to.y + offset * ny);
        if !segment_known_clear(map, a, b) {
            return false;
        }
    }
    true
}

/// True when no cell along the segment is known occupied.
fn segment_known_clear(map: &ObstacleMap, from: Point, to: Point) -> bool {
    let length = from.distance(to);
    let samples = (length / (map.resolution * 0.25)).ceil().max(1.0) as usize;
    for i in 0..=samples {
        let t = i as f64 / samples as f64;
        let p = Point::new(from.x + t * (to.x - from.x), from.y + t * (to.y - from.y));
        match crate::grid::point_to_cell(p, map.resolution, map.width(), map.height()) {
            Some(cell) => {
                if map.state(cell) == super::CellState::Occupied {
                    return false;
                }
            }
            None => return false,
        }
    }
    true
}
