//! Detection simulation and the synthetic semantic-similarity oracle.

use std::collections::BTreeMap;

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::grid::{cell_center, Point};
use crate::world::raycast::VisibleSet;
use crate::world::scene::GridScene;
use crate::world::RobotPose;

/// Ground-truth detection curve of the simulated detector.
///
/// Deliberately separate from the planner's observation-model parameters so
/// the two can disagree.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectionConfig {
    /// Range inside which a visible object is always detected (meters).
    pub delta_true: f64,
    /// Exponential falloff rate beyond `delta_true` (1/meters).
    pub beta_true: f64,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        DetectionConfig {
            delta_true: 0.6,
            beta_true: 3.0,
        }
    }
}

impl DetectionConfig {
    /// Probability that a visible object at distance `d` is detected.
    pub fn detection_prob(&self, d: f64) -> f64 {
        if d <= self.delta_true {
            1.0
        } else {
            (-self.beta_true * (d - self.delta_true)).exp()
        }
    }
}

/// Synthetic stand-in for a vision-language similarity scorer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    /// Zero-information score returned with no supporting evidence in view.
    pub base: f64,
    /// Maximum score gain contributed by a perfectly visible object.
    pub proximity_gain: f64,
    /// Length scale (meters) of the visibility-distance falloff.
    pub falloff: f64,
    /// Standard deviation of zero-mean Gaussian score noise (0 disables).
    pub noise_std: f64,
    /// Similarity of a `<category><decoy_suffix>` object to `<category>`.
    pub decoy_affinity: f64,
    /// Suffix marking look-alike objects.
    pub decoy_suffix: String,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            base: 0.0,
            proximity_gain: 0.85,
            falloff: 1.8,
            noise_std: 0.0,
            decoy_affinity: 0.7,
            decoy_suffix: "_decoy".to_string(),
        }
    }
}

/// One sensing step: visibility, per-object detections, per-target scores.
#[derive(Clone, Debug)]
pub struct Observation {
    pub visible: VisibleSet,
    /// `(object id, detected)` for every scene object, in scene order.
    pub detections: Vec<(String, bool)>,
    /// Per-target similarity score in `[0, 1]`.
    pub oracle_scores: BTreeMap<String, f64>,
}

/// Scores target categories given the current view.
///
/// Lets the synthetic oracle be swapped for a real similarity backend.
pub trait SemanticOracle {
    fn scores(
        &self,
        scene: &GridScene,
        pose: &RobotPose,
        visible: &VisibleSet,
        targets: &[String],
        rng: &mut ChaCha8Rng,
    ) -> BTreeMap<String, f64>;
}

/// Detection outcome for every scene object.
///
/// Objects outside the visible set are never detected; a visible object at
/// distance `d` is detected with probability `detection_prob(d)` over the
/// seed. Within one seed the draw is determinized per object, viewpoint
/// cell, and heading sector: a miss caused by the viewing geometry stays a
/// miss until the robot tries a genuinely different viewpoint, and any
/// approach line eventually reveals the object as `d` shrinks.
pub fn simulate_detection(
    scene: &GridScene,
    pose: &RobotPose,
    visible: &VisibleSet,
    cfg: &DetectionConfig,
    seed: u64,
) -> Vec<(String, bool)> {
    let robot_cell = scene.cell_of(pose.position());
    let sector = heading_sector(pose.phi);
    scene
        .objects
        .iter()
        .enumerate()
        .map(|(idx, obj)| {
            let cell = scene.cell_of(obj.position);
            let in_view = cell.map(|c| visible.contains(c)).unwrap_or(false);
            let detected = match (in_view, robot_cell) {
                (true, Some(rc)) => {
                    let d = pose.position().distance(obj.position);
                    let u = viewpoint_unit(seed, idx, rc, sector);
                    u < cfg.detection_prob(d)
                }
                _ => false,
            };
            (obj.id.clone(), detected)
        })
        .collect()
}

/// Heading quantized into eight 45-degree sectors.
fn heading_sector(phi: f64) -> u64 {
    let t = (phi + std::f64::consts::PI) / (2.0 * std::f64::consts::PI);
    ((t * 8.0).floor() as i64).rem_euclid(8) as u64
}

/// Deterministic uniform draw in [0, 1) for one viewpoint.
fn viewpoint_unit(seed: u64, object_idx: usize, cell: crate::grid::Cell, sector: u64) -> f64 {
    let mut z = seed
        ^ (object_idx as u64).wrapping_mul(0x9E3779B97F4A7C15)
        ^ (cell.x as u64).wrapping_mul(0xD1B54A32D192ED03)
        ^ (cell.y as u64).wrapping_mul(0x8CB92BA72F3D8DD7)
        ^ sector.wrapping_mul(0xEB44ACCAB455D165);
    // splitmix64 finalizer
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 53) as f64
}

/// Synthetic similarity oracle.
///
/// For each target the score is
/// `clamp(base + proximity_gain * signal + noise, 0, 1)` where `signal` is
/// the strongest affinity-weighted response over scene objects,
/// `affinity * exp(-d_vis / falloff)`, and `d_vis` is the distance from
/// the object to the nearest visible cell: 0 once the object is in view,
/// growing the farther the current view stays from its position.
#[derive(Clone, Debug, Default)]
pub struct SyntheticOracle {
    pub cfg: OracleConfig,
}

impl SyntheticOracle {
    pub fn new(cfg: OracleConfig) -> Self {
        SyntheticOracle { cfg }
    }

    fn affinity(&self, object_category: &str, target: &str) -> f64 {
        if object_category == target {
            1.0
        } else if object_category
            .strip_suffix(self.cfg.decoy_suffix.as_str())
            .map(|stem| stem == target)
            .unwrap_or(false)
        {
            self.cfg.decoy_affinity
        } else {
            0.0
        }
    }
}

impl SemanticOracle for SyntheticOracle {
    fn scores(
        &self,
        scene: &GridScene,
        pose: &RobotPose,
        visible: &VisibleSet,
        targets: &[String],
        rng: &mut ChaCha8Rng,
    ) -> BTreeMap<String, f64> {
        let noise = if self.cfg.noise_std > 0.0 {
            Some(Normal::new(0.0, self.cfg.noise_std).expect("valid noise std"))
        } else {
            None
        };
        targets
            .iter()
            .map(|target| {
                let mut signal: f64 = 0.0;
                for obj in &scene.objects {
                    let aff = self.affinity(&obj.category, target);
                    if aff <= 0.0 {
                        continue;
                    }
                    if let Some(d) = view_distance(scene, visible, pose.position(), obj.position)
                    {
                        signal = signal.max(aff * (-d / self.cfg.falloff).exp());
                    }
                }
                let mut score = self.cfg.base + self.cfg.proximity_gain * signal;
                if let Some(n) = &noise {
                    score += n.sample(rng);
                }
                (target.clone(), score.clamp(0.0, 1.0))
            })
            .collect()
    }
}

/// View proximity of an object: its distance to the nearest visible cell
/// (cells as regions, not centers), exactly 0 when the object itself is in
/// view. `None` when nothing is visible.
fn view_distance(
    scene: &GridScene,
    visible: &VisibleSet,
    _robot: Point,
    object: Point,
) -> Option<f64> {
    let res = scene.resolution;
    let mut best: Option<f64> = None;
    for &cell in visible.cells() {
        let center = cell_center(cell, res);
        let dx = (object.x - center.x).abs() - res / 2.0;
        let dy = (object.y - center.y).abs() - res / 2.0;
        let d = (dx.max(0.0)).hypot(dy.max(0.0));
        if best.map(|b| d < b).unwrap_or(true) {
            best = Some(d);
            if d == 0.0 {
                break;
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Cell, Grid};
    use crate::world::raycast::{raycast_visibility, SensorSpec};
    use crate::world::test_fixtures::{open_scene, open_scene_with_objects};
    use rand::SeedableRng;

    fn sensor() -> SensorSpec {
        SensorSpec {
            fov: 2.0 * std::f64::consts::PI,
            max_range: 50.0,
            ray_count: 720,
        }
    }

    #[test]
    fn occluded_objects_never_detected() {
        let scene = open_scene_with_objects(15, &[("cup0", "cup", 2.0, 2.0)]);
        let pose = RobotPose::new(1.0, 1.0, 0.0);
        let empty = VisibleSet::empty(scene.width(), scene.height());
        let cfg = DetectionConfig::default();
        for seed in 0..50 {
            let det = simulate_detection(&scene, &pose, &empty, &cfg, seed);
            assert_eq!(det, vec![("cup0".to_string(), false)]);
        }
    }

    #[test]
    fn zero_distance_always_detected() {
        let scene = open_scene_with_objects(15, &[("cup0", "cup", 1.0, 1.0)]);
        let pose = RobotPose::new(1.0, 1.0, 0.0);
        let vis = raycast_visibility(&scene, &pose, &sensor()).unwrap();
        let cfg = DetectionConfig {
            delta_true: 0.5,
            beta_true: 1.0,
        };
        for seed in 0..50 {
            let det = simulate_detection(&scene, &pose, &vis, &cfg, seed);
            assert!(det[0].1);
        }
    }

    #[test]
    fn detection_rate_matches_curve() {
        // delta_true = 1, beta_true = 0.5, d = 3 -> exp(-1) = 0.3679
        let scene = open_scene_with_objects(31, &[("cup0", "cup", 4.875, 1.875)]);
        let pose = RobotPose::new(1.875, 1.875, 0.0);
        let vis = raycast_visibility(&scene, &pose, &sensor()).unwrap();
        let cfg = DetectionConfig {
            delta_true: 1.0,
            beta_true: 0.5,
        };
        let trials = 10_000u64;
        let mut hits = 0;
        for seed in 0..trials {
            if simulate_detection(&scene, &pose, &vis, &cfg, seed)[0].1 {
                hits += 1;
            }
        }
        let rate = hits as f64 / trials as f64;
        let expected = (-1.0f64).exp();
        assert!(
            (rate - expected).abs() < 0.02,
            "rate {rate} vs expected {expected}"
        );
    }

    #[test]
    fn oracle_visible_object_scores_base_plus_gain() {
        let scene = open_scene_with_objects(15, &[("cup0", "cup", 2.125, 2.125)]);
        let pose = RobotPose::new(2.125, 2.125, 0.0);
        let vis = raycast_visibility(&scene, &pose, &sensor()).unwrap();
        let cfg = OracleConfig {
            base: 0.1,
            proximity_gain: 0.6,
            noise_std: 0.0,
            ..OracleConfig::default()
        };
        let oracle = SyntheticOracle::new(cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let scores = oracle.scores(&scene, &pose, &vis, &["cup".to_string()], &mut rng);
        assert!((scores["cup"] - 0.7).abs() < 1e-12);
    }

    #[test]
    fn oracle_absent_category_scores_base() {
        let scene = open_scene(15);
        let pose = RobotPose::new(1.875, 1.875, 0.0);
        let vis = raycast_visibility(&scene, &pose, &sensor()).unwrap();
        let cfg = OracleConfig {
            base: 0.2,
            noise_std: 0.0,
            ..OracleConfig::default()
        };
        let oracle = SyntheticOracle::new(cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let scores = oracle.scores(&scene, &pose, &vis, &["cup".to_string()], &mut rng);
        assert!((scores["cup"] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn oracle_score_decreases_with_distance() {
        // Object hidden behind the visible set boundary: compare signal when
        // the nearest visible cell is 1 m vs 5 m away.
        let cfg = OracleConfig::default();
        let g1 = (-1.0 / cfg.falloff).exp();
        let g5 = (-5.0 / cfg.falloff).exp();
        assert!(g1 > g5);

        // End-to-end: closer robot, same target, higher score.
        let scene = open_scene_with_objects(41, &[("cup0", "cup", 8.0, 1.875)]);
        let oracle = SyntheticOracle::new(OracleConfig {
            noise_std: 0.0,
            ..OracleConfig::default()
        });
        let sensor = SensorSpec {
            fov: 2.0 * std::f64::consts::PI,
            max_range: 2.0,
            ray_count: 720,
        };
        let score_at = |x: f64| {
            let pose = RobotPose::new(x, 1.875, 0.0);
            let vis = raycast_visibility(&scene, &pose, &sensor).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            oracle.scores(&scene, &pose, &vis, &["cup".to_string()], &mut rng)["cup"]
        };
        assert!(score_at(7.0) >= score_at(3.0));
    }

    #[test]
    fn decoy_scores_scaled_by_affinity() {
        let scene = open_scene_with_objects(15, &[("d0", "cup_decoy", 2.125, 2.125)]);
        let pose = RobotPose::new(2.125, 2.125, 0.0);
        let vis = raycast_visibility(&scene, &pose, &sensor()).unwrap();
        let cfg = OracleConfig {
            base: 0.0,
            proximity_gain: 0.8,
            decoy_affinity: 0.5,
            noise_std: 0.0,
            ..OracleConfig::default()
        };
        let oracle = SyntheticOracle::new(cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let scores = oracle.scores(&scene, &pose, &vis, &["cup".to_string()], &mut rng);
        assert!((scores["cup"] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn cell_membership_gates_detection() {
        let scene = open_scene_with_objects(15, &[("cup0", "cup", 2.0, 2.0)]);
        let pose = RobotPose::new(1.0, 1.0, 0.0);
        // Only the robot's own cell is visible, not the object's.
        let vis = {
            let mut mask = Grid::filled(scene.width(), scene.height(), false);
            mask.set(Cell::new(1, 1), true);
            VisibleSet::from_mask(mask)
        };
        let cfg = DetectionConfig {
            delta_true: 100.0,
            beta_true: 0.1,
        };
        let det = simulate_detection(&scene, &pose, &vis, &cfg, 3);
        assert!(!det[0].1);
    }
}
