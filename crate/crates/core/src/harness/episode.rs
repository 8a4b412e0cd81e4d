//! The episode loop.
//!
//! Each round: observe, fold the observation into the maps, rebuild
//! candidates/belief/frontier, let the policy pick a goal, and drive there.
//! A detection of a remaining target preempts planning: the robot navigates
//! straight to the detected object and calls stop; a stop within the
//! success radius marks the nearest unfound target found and freezes its
//! value layer. The episode ends when every target is found, the command
//! cap is hit, or the policy has no action left.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::config::{episode_digest, Params, Policy, RunSection};
use crate::geomap::{
    drive_to_sensed, extract_frontiers, reachable_free_cells, update_obstacle_map, DriveOutcome,
    ObstacleMap,
};
use crate::planner::{real_belief_refresh, RefreshInputs};
use crate::trace::{TraceRecord, TRACE_VERSION};
use crate::valuemap::{ingest_observation, ValueLayer, ValueMapError};
use crate::world::{
    observe, simulate_detection, step_robot, Command, GridScene, PoseError, RobotPose,
    SceneObject, SyntheticOracle,
};

use super::metrics::{optimal_length, MetricsError};
use super::policy::{select_goal, PolicyContext, PolicyDecision};
use super::{EpisodeOutcome, TargetResult};

#[derive(Debug, Error)]
pub enum EpisodeError {
    #[error("target category `{0}` does not exist in the scene")]
    MissingTarget(String),
    #[error("start pose invalid: {0}")]
    BadStart(#[from] PoseError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    ValueMap(#[from] ValueMapError),
}

/// A planning-step snapshot handed to an optional observer, one per
/// planner decision.
pub struct MapSnapshot<'a> {
    pub decision: usize,
    pub step: usize,
    pub layers: &'a [ValueLayer],
    pub map: &'a ObstacleMap,
    pub frontiers: &'a [crate::geomap::Frontier],
}

/// Run one episode. With `record_trace` the full JSON-lines trace records
/// are returned alongside the outcome.
pub fn run_episode(
    scene: &GridScene,
    scene_name: &str,
    params: &Params,
    run: &RunSection,
    record_trace: bool,
) -> Result<(EpisodeOutcome, Option<Vec<TraceRecord>>), EpisodeError> {
    run_episode_observed(scene, scene_name, params, run, record_trace, None)
}

/// [`run_episode`] with a per-decision map observer (used for map dumps).
pub fn run_episode_observed(
    scene: &GridScene,
    scene_name: &str,
    params: &Params,
    run: &RunSection,
    record_trace: bool,
    mut observer: Option<&mut dyn FnMut(MapSnapshot<'_>)>,
) -> Result<(EpisodeOutcome, Option<Vec<TraceRecord>>), EpisodeError> {
    for t in &run.targets {
        if scene.objects_of_category(t).next().is_none() {
            return Err(EpisodeError::MissingTarget(t.clone()));
        }
    }

    let sensor = params.sensor.spec();
    let motion = params.motion.config();
    let oracle = SyntheticOracle::new(params.oracle.clone());
    let decay = params.valuemap.decay();
    let max_steps = params.episode.max_steps;
    let success_radius = params.episode.success_radius;

    // Independent seeded streams so subsystems cannot perturb each other.
    let mut seeder = ChaCha8Rng::seed_from_u64(run.seed);
    let mut start_rng = ChaCha8Rng::seed_from_u64(seeder.gen());
    let det_seed: u64 = seeder.gen();
    let mut oracle_rng = ChaCha8Rng::seed_from_u64(seeder.gen());
    let mut policy_rng = ChaCha8Rng::seed_from_u64(seeder.gen());

    let mut pose = match &run.start {
        Some(s) => {
            let pose = RobotPose::new(s.x, s.y, s.phi_deg.to_radians());
            match scene.cell_of(pose.position()) {
                Some(c) if scene.is_free(c) => pose,
                _ => {
                    return Err(EpisodeError::BadStart(PoseError::InvalidPose {
                        x: s.x,
                        y: s.y,
                    }))
                }
            }
        }
        None => {
            let free = scene.free_cells();
            let cell = free[start_rng.gen_range(0..free.len())];
            let p = scene.cell_center(cell);
            let phi = start_rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
            RobotPose::new(p.x, p.y, phi)
        }
    };
    let start_position = pose.position();

    let mut layers: Vec<ValueLayer> = run
        .targets
        .iter()
        .map(|t| ValueLayer::new(t.clone(), scene.width(), scene.height(), scene.resolution))
        .collect();
    let mut found: Vec<Option<usize>> = vec![None; run.targets.len()];
    let mut map = ObstacleMap::new(scene.width(), scene.height(), scene.resolution);

    let mut steps = 0usize;
    let mut path_length = 0.0f64;
    let mut decisions = 0usize;
    let mut failure_reason: Option<String> = None;

    let mut trace: Option<Vec<TraceRecord>> = record_trace.then(Vec::new);
    if let Some(t) = trace.as_mut() {
        t.push(TraceRecord::Header {
            version: TRACE_VERSION,
            config_digest: episode_digest(
                params,
                run.policy,
                &run.targets,
                run.seed,
                &run.start,
                &scene.to_text(),
            ),
            scene_name: scene_name.to_string(),
            resolution: scene.resolution,
            policy: run.policy,
            targets: run.targets.clone(),
            seed: run.seed,
        });
    }

    let record_drive = |trace: &mut Option<Vec<TraceRecord>>, out: &DriveOutcome, steps0: usize| {
        if let Some(t) = trace.as_mut() {
            for (i, cmd) in out.commands.iter().enumerate() {
                t.push(TraceRecord::Command {
                    step: steps0 + i + 1,
                    command: cmd.command,
                    x: cmd.pose.x,
                    y: cmd.pose.y,
                    phi: cmd.pose.phi,
                    blocked: cmd.blocked,
                    distance: cmd.distance,
                });
            }
        }
    };

    loop {
        if found.iter().all(|f| f.is_some()) {
            break;
        }
        if steps >= max_steps {
            failure_reason = Some("step_cap".into());
            break;
        }

        let remaining: Vec<String> = run
            .targets
            .iter()
            .zip(&found)
            .filter(|(_, f)| f.is_none())
            .map(|(t, _)| t.clone())
            .collect();

        // The sequential single-object baseline runs one search task at a
        // time: only the pursued target's prompt is scored and mapped, and
        // detections of later targets are not acted on.
        let pursued_only: Vec<String> = remaining.first().cloned().into_iter().collect();
        let scored: &[String] = if run.policy == Policy::VlfmLike {
            &pursued_only
        } else {
            &remaining
        };

        let obs = observe(
            scene,
            &pose,
            &sensor,
            &params.detection,
            &oracle,
            scored,
            det_seed,
            &mut oracle_rng,
        )?;
        update_obstacle_map(&mut map, scene, &obs.visible);

        let steps_before = steps;
        let found_before = found.iter().filter(|f| f.is_some()).count();

        // A detection at the planning pose, or one made mid-drive below,
        // commits the robot to the detected object.
        let commit_targets: &[String] = if run.policy == Policy::VlfmLike {
            &pursued_only
        } else {
            &remaining
        };
        let mut hit = nearest_detected(scene, &pose, &obs.detections, commit_targets).cloned();
        if hit.is_none() {
            // Fold oracle scores into the layers of the unfound targets;
            // found targets' layers stay frozen.
            for (i, target) in run.targets.iter().enumerate() {
                if found[i].is_none() {
                    if let Some(&score) = obs.oracle_scores.get(target) {
                        ingest_observation(&mut layers[i], &pose, &sensor, score, &obs.visible);
                    }
                }
            }

            let mut frontiers = extract_frontiers(&map, params.frontier.min_cells);
            let reachable = reachable_free_cells(&map, &pose);
            frontiers.retain(|f| *reachable.get(f.midpoint_cell));

            let active: Vec<&ValueLayer> = layers
                .iter()
                .enumerate()
                .filter(|(i, _)| found[*i].is_none())
                .map(|(_, l)| l)
                .collect();
            let refresh = real_belief_refresh(&RefreshInputs {
                layers: &active,
                decay,
                decay_enabled: run.policy != Policy::NoDecay,
                value_floor: params.valuemap.value_floor,
                dbscan: params.candidates,
                aggregation: params.valuemap.aggregation,
                map: &map,
                frontiers: &frontiers,
                frontier_value_radius: params.frontier.value_radius,
                step: decisions,
            })?;
            decisions += 1;
            if let Some(obs_fn) = observer.as_mut() {
                obs_fn(MapSnapshot {
                    decision: decisions - 1,
                    step: steps,
                    layers: &layers,
                    map: &map,
                    frontiers: &frontiers,
                });
            }

            let decision = select_goal(
                &PolicyContext {
                    policy: run.policy,
                    pose: &pose,
                    map: &map,
                    layers: &layers,
                    found: &found,
                    targets: &run.targets,
                    frontiers: &frontiers,
                    refresh: &refresh,
                    params,
                },
                &mut policy_rng,
            );

            match decision {
                PolicyDecision::Fail { reason } => {
                    failure_reason = Some(format!("policy: {reason}"));
                    break;
                }
                PolicyDecision::Goal {
                    goal,
                    kind,
                    plan,
                    pursued,
                } => {
                    if let Some(t) = trace.as_mut() {
                        let (actions, q, visits, chosen) = match &plan {
                            Some(p) => (p.actions.clone(), p.q.clone(), p.visits.clone(), p.chosen),
                            None => (
                                vec![crate::planner::PomdpAction { kind, goal }],
                                Vec::new(),
                                Vec::new(),
                                0,
                            ),
                        };
                        t.push(TraceRecord::Decision {
                            step: steps,
                            pursued,
                            actions,
                            belief: refresh.belief.probs.clone(),
                            q,
                            visits,
                            chosen,
                            map_ascii: map.dump_ascii(&frontiers),
                        });
                    }
                    // The detector keeps running on every frame; a hit on
                    // a remaining target aborts the leg.
                    let mut mid_hit: Option<SceneObject> = None;
                    let mut hook = |vis: &crate::world::VisibleSet, at: &RobotPose| -> bool {
                        let dets = simulate_detection(scene, at, vis, &params.detection, det_seed);
                        if let Some(obj) = nearest_detected(scene, at, &dets, commit_targets) {
                            mid_hit = Some(obj.clone());
                            true
                        } else {
                            false
                        }
                    };
                    // The greedy ablation re-selects its argmax point after
                    // every executed command instead of committing to a leg.
                    let controller = if run.policy == Policy::NoPomdp {
                        crate::geomap::ControllerConfig {
                            leg_step_cap: 1,
                            ..params.controller
                        }
                    } else {
                        params.controller
                    };
                    let out = drive_to_sensed(
                        scene,
                        &mut pose,
                        &mut map,
                        &sensor,
                        &motion,
                        &controller,
                        goal,
                        max_steps - steps,
                        Some(&mut hook),
                    );
                    record_drive(&mut trace, &out, steps);
                    steps += out.commands.len();
                    path_length += out.distance;
                    hit = mid_hit;
                }
            }
        }

        // Detection commitment: head straight for the detected object and
        // call stop there.
        if let Some(obj) = &hit {
            if let Some(t) = trace.as_mut() {
                t.push(TraceRecord::Detection {
                    step: steps,
                    object: obj.id.clone(),
                    category: obj.category.clone(),
                });
            }
            let out = drive_to_sensed(
                scene,
                &mut pose,
                &mut map,
                &sensor,
                &motion,
                &params.controller,
                obj.position,
                max_steps - steps,
                None,
            );
            record_drive(&mut trace, &out, steps);
            steps += out.commands.len();
            path_length += out.distance;

            // Stop only when the detection actually placed us within the
            // success radius; otherwise keep searching.
            if pose.position().distance(obj.position) <= success_radius {
                if let Some((idx, d)) = nearest_unfound(scene, &pose, &run.targets, &found) {
                    if d <= success_radius {
                        found[idx] = Some(steps);
                        if let Some(t) = trace.as_mut() {
                            t.push(TraceRecord::Found {
                                step: steps,
                                category: run.targets[idx].clone(),
                                x: pose.x,
                                y: pose.y,
                            });
                        }
                    }
                }
            }
        }

        // A round that executed nothing would spin forever on the same
        // decision; rotating one field-of-view width gives the next
        // observation genuinely new cells and burns steps toward the cap.
        let found_now = found.iter().filter(|f| f.is_some()).count();
        if steps == steps_before && found_now == found_before && found_now < found.len() {
            let turns = (sensor.fov / motion.turn_angle).ceil().max(1.0) as usize;
            for _ in 0..turns.min(max_steps - steps) {
                let out = step_robot(scene, &pose, Command::TurnLeft, &motion);
                pose = out.pose;
                steps += 1;
                if let Some(t) = trace.as_mut() {
                    t.push(TraceRecord::Command {
                        step: steps,
                        command: Command::TurnLeft,
                        x: pose.x,
                        y: pose.y,
                        phi: pose.phi,
                        blocked: false,
                        distance: 0.0,
                    });
                }
            }
        }
    }

    let success = found.iter().all(|f| f.is_some());
    let optimal = optimal_length(scene, start_position, &run.targets)?;
    let outcome = EpisodeOutcome {
        per_target: run
            .targets
            .iter()
            .zip(&found)
            .map(|(t, f)| TargetResult {
                category: t.clone(),
                found: f.is_some(),
                step_found: *f,
            })
            .collect(),
        success,
        path_length,
        optimal_length: optimal,
        steps,
        decisions,
        failure_reason: failure_reason.clone(),
    };
    if let Some(t) = trace.as_mut() {
        t.push(TraceRecord::End {
            success,
            steps,
            path_length,
            optimal_length: optimal,
            reason: failure_reason.unwrap_or_else(|| "all_found".into()),
        });
    }
    Ok((outcome, trace))
}

/// Nearest scene object that was detected this round and whose category is
/// still being searched.
fn nearest_detected<'a>(
    scene: &'a GridScene,
    pose: &RobotPose,
    detections: &[(String, bool)],
    remaining: &[String],
) -> Option<&'a SceneObject> {
    let mut best: Option<(&SceneObject, f64)> = None;
    for (id, detected) in detections {
        if !detected {
            continue;
        }
        let Some(obj) = scene.objects.iter().find(|o| &o.id == id) else {
            continue;
        };
        if !remaining.contains(&obj.category) {
            continue;
        }
        let d = pose.position().distance(obj.position);
        if best.map(|(_, bd)| d < bd).unwrap_or(true) {
            best = Some((obj, d));
        }
    }
    best.map(|(o, _)| o)
}

/// Nearest unfound target category, measured to its closest scene object.
fn nearest_unfound(
    scene: &GridScene,
    pose: &RobotPose,
    targets: &[String],
    found: &[Option<usize>],
) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, target) in targets.iter().enumerate() {
        if found[i].is_some() {
            continue;
        }
        for obj in scene.objects_of_category(target) {
            let d = pose.position().distance(obj.position);
            if best.map(|(_, bd)| d < bd).unwrap_or(true) {
                best = Some((i, d));
            }
        }
    }
    best
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{RunSection, StartPose};
    use crate::world::test_fixtures::open_scene_with_objects;

    fn run_section(targets: &[&str], seed: u64, policy: Policy, start: Option<StartPose>) -> RunSection {
        RunSection {
            targets: targets.iter().map(|s| s.to_string()).collect(),
            seed,
            policy,
            start,
        }
    }

    #[test]
    fn degenerate_spawn_succeeds_with_near_zero_path() {
        // Both targets sit well inside the spawn view cone within the
        // success radius.
        let scene = open_scene_with_objects(
            21,
            &[("cup0", "cup", 3.0, 2.55), ("book0", "book", 3.1, 2.7)],
        );
        let params = Params::default();
        let run = run_section(
            &["cup", "book"],
            3,
            Policy::Openguide,
            Some(StartPose {
                x: 2.6,
                y: 2.6,
                phi_deg: 0.0,
            }),
        );
        let (out, _) = run_episode(&scene, "degenerate", &params, &run, false).unwrap();
        assert!(out.success, "reason: {:?}", out.failure_reason);
        assert!(out.path_length < 1.0, "path {}", out.path_length);
        assert!(out.steps < 40, "steps {}", out.steps);
    }

    #[test]
    fn stop_far_from_target_does_not_mark_found() {
        // The lone target is detected from afar but the budget dies before
        // arrival; a stop 1.5 m away must not count.
        let scene = open_scene_with_objects(21, &[("cup0", "cup", 4.0, 2.6)]);
        let mut params = Params::default();
        params.episode.success_radius = 1.0;
        params.episode.max_steps = 2; // can never reach it
        let run = run_section(
            &["cup"],
            3,
            Policy::Openguide,
            Some(StartPose {
                x: 1.0,
                y: 2.6,
                phi_deg: 0.0,
            }),
        );
        let (out, _) = run_episode(&scene, "far", &params, &run, false).unwrap();
        assert!(!out.success);
        assert!(out.per_target.iter().all(|t| !t.found));
    }

    #[test]
    fn missing_target_category_is_an_error() {
        let scene = open_scene_with_objects(15, &[("cup0", "cup", 2.0, 2.0)]);
        let params = Params::default();
        let run = run_section(&["zebra"], 1, Policy::Openguide, None);
        assert!(matches!(
            run_episode(&scene, "x", &params, &run, false),
            Err(EpisodeError::MissingTarget(_))
        ));
    }

    #[test]
    fn episode_replays_identically_from_seed() {
        let scene = open_scene_with_objects(
            25,
            &[("cup0", "cup", 5.0, 5.0), ("book0", "book", 1.5, 4.5)],
        );
        let mut params = Params::default();
        params.episode.max_steps = 120;
        let run = run_section(&["cup", "book"], 17, Policy::Openguide, None);
        let (a, ta) = run_episode(&scene, "replay", &params, &run, true).unwrap();
        let (b, tb) = run_episode(&scene, "replay", &params, &run, true).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta.unwrap(), tb.unwrap());
    }

    #[test]
    fn frozen_layer_not_updated_after_found() {
        let scene = open_scene_with_objects(
            25,
            &[("cup0", "cup", 2.0, 2.0), ("book0", "book", 4.5, 4.5)],
        );
        let mut params = Params::default();
        params.episode.max_steps = 200;
        let run = run_section(
            &["cup", "book"],
            5,
            Policy::Openguide,
            Some(StartPose {
                x: 1.8,
                y: 2.0,
                phi_deg: 0.0,
            }),
        );
        let (out, trace) = run_episode(&scene, "freeze", &params, &run, true).unwrap();
        // The cup is right next to the start: it must be found.
        let cup = &out.per_target[0];
        assert_eq!(cup.category, "cup");
        assert!(cup.found);
        // After the cup is found, no later decision may pursue it.
        let records = trace.unwrap();
        let found_step = cup.step_found.unwrap();
        for r in &records {
            if let TraceRecord::Decision { step, pursued, .. } = r {
                if *step > found_step {
                    assert_ne!(pursued.as_deref(), Some("cup"));
                }
            }
        }
    }
}
