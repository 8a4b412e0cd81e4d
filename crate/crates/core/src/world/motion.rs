//! Discrete movement commands over the continuous pose.

use serde::{Deserialize, Serialize};

use crate::grid::{wrap_angle, Point};
use crate::world::scene::GridScene;
use crate::world::RobotPose;

/// The three executable movement commands.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Forward,
    TurnLeft,
    TurnRight,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MotionConfig {
    /// Distance advanced by one forward command (meters).
    pub step_length: f64,
    /// Rotation per turn command (radians).
    pub turn_angle: f64,
}

impl Default for MotionConfig {
    fn default() -> Self {
        MotionConfig {
            step_length: 0.25,
            turn_angle: 30f64.to_radians(),
        }
    }
}

/// Result of executing one command.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MotionOutcome {
    pub pose: RobotPose,
    /// True when a forward command was stopped by an obstacle; the pose is
    /// then unchanged.
    pub blocked: bool,
    /// Distance actually traveled (meters).
    pub distance: f64,
}

/// Execute one command. Deterministic; blocked motion is an outcome, not an
/// error.
pub fn step_robot(
    scene: &GridScene,
    pose: &RobotPose,
    command: Command,
    cfg: &MotionConfig,
) -> MotionOutcome {
    match command {
        Command::TurnLeft => MotionOutcome {
            pose: RobotPose::new(pose.x, pose.y, wrap_angle(pose.phi + cfg.turn_angle)),
            blocked: false,
            distance: 0.0,
        },
        Command::TurnRight => MotionOutcome {
            pose: RobotPose::new(pose.x, pose.y, wrap_angle(pose.phi - cfg.turn_angle)),
            blocked: false,
            distance: 0.0,
        },
        Command::Forward => {
            let target = Point::new(
                pose.x + cfg.step_length * pose.phi.cos(),
                pose.y + cfg.step_length * pose.phi.sin(),
            );
            if segment_clear(scene, pose.position(), target) {
                MotionOutcome {
                    pose: RobotPose::new(target.x, target.y, pose.phi),
                    blocked: false,
                    distance: cfg.step_length,
                }
            } else {
                MotionOutcome {
                    pose: *pose,
                    blocked: true,
                    distance: 0.0,
                }
            }
        }
    }
}

/// True when every cell touched by the segment `from -> to` is free and in
/// bounds. Sampled at sub-cell resolution, which is exact for step lengths
/// up to one cell.
fn segment_clear(scene: &GridScene, from: Point, to: Point) -> bool {
    let length = from.distance(to);
    let samples = (length / (scene.resolution * 0.25)).ceil().max(1.0) as usize;
    for i in 0..=samples {
        let t = i as f64 / samples as f64;
        let p = Point::new(from.x + t * (to.x - from.x), from.y + t * (to.y - from.y));
        match scene.cell_of(p) {
            Some(cell) if scene.is_free(cell) => {}
            _ => return false,
        }
    }
    true
}
