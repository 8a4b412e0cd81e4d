//! Simulated environment: scene, pose, field-of-view sensing, detection,
//! and the synthetic semantic oracle.
//!
//! Every operation here is a pure function of its inputs and an explicit
//! rng, so replaying a seed reproduces an episode trace exactly.

pub mod motion;
pub mod raycast;
pub mod scene;
pub mod sense;

use serde::{Deserialize, Serialize};

use crate::grid::{wrap_angle, Point};

pub use motion::{step_robot, Command, MotionConfig, MotionOutcome};
pub use raycast::{raycast_visibility, PoseError, SensorSpec, VisibleSet};
pub use scene::{GridScene, Occupancy, SceneError, SceneObject};
pub use sense::{
    simulate_detection, DetectionConfig, Observation, OracleConfig, SemanticOracle,
    SyntheticOracle,
};

/// Continuous robot pose over the discrete grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotPose {
    pub x: f64,
    pub y: f64,
    /// Heading in radians, wrapped into `[-pi, pi)`.
    pub phi: f64,
}

impl RobotPose {
    pub fn new(x: f64, y: f64, phi: f64) -> Self {
        RobotPose {
            x,
            y,
            phi: wrap_angle(phi),
        }
    }

    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

/// Run one full sensing step: raycast, detection draws, oracle scores.
pub fn observe(
    scene: &GridScene,
    pose: &RobotPose,
    sensor: &SensorSpec,
    det_cfg: &DetectionConfig,
    oracle: &dyn SemanticOracle,
    targets: &[String],
    det_seed: u64,
    oracle_rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<Observation, PoseError> {
    let visible = raycast_visibility(scene, pose, sensor)?;
    let detections = simulate_detection(scene, pose, &visible, det_cfg, det_seed);
    let oracle_scores = oracle.scores(scene, pose, &visible, targets, oracle_rng);
    Ok(Observation {
        visible,
        detections,
        oracle_scores,
    })
}
