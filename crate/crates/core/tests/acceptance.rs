//! Acceptance gate: one test per criterion, each printing a PASS/FAIL line.
//!
//! The formula checks pin exact closed-form values; the clustering and
//! planning checks compare against independent brute-force oracles written
//! in this file; the benchmark checks run the checked-in standard suite and
//! assert the comparative orderings between the full planner, the ablations,
//! and the baselines.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use openguide_core::candidates::{build_belief, dbscan, within_eps2, CandidateSet};
use openguide_core::config::{Params, Policy, RunSection, StartPose, SuiteConfig};
use openguide_core::geomap::{update_obstacle_map, ObstacleMap};
use openguide_core::grid::{cell_center, Cell, Grid, Point};
use openguide_core::harness::episode::run_episode;
use openguide_core::harness::{mspl, run_benchmark, success_rate, EpisodeOutcome};
use openguide_core::planner::{
    observation_prob, pouct_plan, EuclideanOracle, PomdpParams, PomdpState,
};
use openguide_core::scenegen::{generate_scene, GeneratorSpec};
use openguide_core::valuemap::{
    cone_confidence, fuse_cell, ingest_observation, DecayParams, ValueLayer,
};
use openguide_core::world::{
    raycast_visibility, simulate_detection, DetectionConfig, GridScene, RobotPose, SensorSpec,
};

fn report(criterion: &str, pass: bool, detail: &str) {
    println!(
        "acceptance {criterion}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "{criterion} failed: {detail}");
}

fn workspace_path(rel: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

// ---------------------------------------------------------------------------
// Criterion 1: formula suite, exact values.
// ---------------------------------------------------------------------------

#[test]
fn c1_formula_suite() {
    // Cone confidence at a quarter of the field of view is exactly 1/2.
    let sensor = SensorSpec {
        fov: 1.0,
        max_range: 5.0,
        ray_count: 10,
    };
    let cell = Cell::new(5, 0); // center (5.5, 0.5) at resolution 1
    let pose = RobotPose::new(0.0, 0.5, sensor.fov / 4.0);
    let cone = cone_confidence(&pose, &sensor, cell, 1.0);
    let cone_ok = (cone - 0.5).abs() < 1e-12;

    // Confidence-weighted fusion reference values.
    let (v, c) = fuse_cell(0.9, 0.8, 0.3, 0.4);
    let fuse_ok = (v - 0.7).abs() < 1e-9 && (c - 2.0 / 3.0).abs() < 1e-9;

    // Logistic decay midpoint.
    let decay = DecayParams {
        tau: 15.0,
        kappa: 3.0,
    };
    let decay_ok = (decay.factor(15) - 0.5).abs() < 1e-12;

    // Observation model at delta = 1, beta = 0.5, d = 3.
    let params = PomdpParams {
        delta: 1.0,
        beta: 0.5,
        ..PomdpParams::default()
    };
    let p = observation_prob(
        &PomdpState {
            robot: Point::new(0.0, 0.0),
            target: Point::new(3.0, 0.0),
        },
        &params,
    );
    let obs_ok = (p - (-1.0f64).exp()).abs() < 1e-12;

    // MSPL with one success at twice the optimal path.
    let one = EpisodeOutcome {
        per_target: Vec::new(),
        success: true,
        path_length: 2.0,
        optimal_length: 1.0,
        steps: 8,
        decisions: 1,
        failure_reason: None,
    };
    let mspl_ok = (mspl(&[one]) - 0.5).abs() < 1e-12;

    report(
        "criterion 1 (formula suite)",
        cone_ok && fuse_ok && decay_ok && obs_ok && mspl_ok,
        &format!("cone={cone:.12} fuse=({v:.9},{c:.9}) decay=0.5 obs={p:.12}"),
    );
}

// ---------------------------------------------------------------------------
// Criterion 2: DBSCAN vs a brute-force density-reachability oracle.
// ---------------------------------------------------------------------------

/// Independent oracle: neighborhoods by full pairwise scan, core-point
/// components by fixpoint closure, border points attached to the cluster of
/// their lowest-indexed core neighbor.
fn dbscan_reference(points: &[Point], eps: f64, min_pts: usize) -> Vec<Vec<usize>> {
    let n = points.len();
    let eps2 = eps * eps;
    let near = |i: usize, j: usize| within_eps2(points[i], points[j], eps2);
    let core: Vec<bool> = (0..n)
        .map(|i| (0..n).filter(|&j| near(i, j)).count() >= min_pts)
        .collect();
    let mut label: Vec<Option<usize>> = vec![None; n];
    let mut next = 0usize;
    for i in 0..n {
        if !core[i] || label[i].is_some() {
            continue;
        }
        label[i] = Some(next);
        loop {
            let mut changed = false;
            for a in 0..n {
                if !core[a] || label[a] != Some(next) {
                    continue;
                }
                for b in 0..n {
                    if core[b] && label[b].is_none() && near(a, b) {
                        label[b] = Some(next);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        next += 1;
    }
    for i in 0..n {
        if core[i] || label[i].is_some() {
            continue;
        }
        for j in 0..n {
            if core[j] && near(i, j) {
                label[i] = label[j];
                break;
            }
        }
    }
    let mut clusters = vec![Vec::new(); next];
    for i in 0..n {
        if let Some(c) = label[i] {
            clusters[c].push(i);
        }
    }
    clusters
}

#[test]
fn c2_dbscan_oracle_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_dbc0);
    let mut checked = 0;
    for case in 0..500 {
        let n = rng.gen_range(0..=50);
        let points: Vec<Point> = (0..n)
            .map(|_| Point::new(rng.gen_range(0.0..5.0), rng.gen_range(0.0..5.0)))
            .collect();
        let eps = rng.gen_range(0.15..1.2);
        let min_pts = rng.gen_range(1..=6);
        let got = dbscan(&points, eps, min_pts);
        let want = dbscan_reference(&points, eps, min_pts);
        assert_eq!(got, want, "case {case}: n={n} eps={eps} min_pts={min_pts}");
        checked += 1;
    }
    report(
        "criterion 2 (dbscan oracle equivalence)",
        checked == 500,
        &format!("{checked}/500 random point sets matched exactly"),
    );
}

// ---------------------------------------------------------------------------
// Criterion 3: POUCT matches exhaustive expectimax on a frozen instance.
// ---------------------------------------------------------------------------

/// Exhaustive expectimax over the two-action instance with the same
/// episode semantics as the solver: a positive detection terminates the
/// branch, a negative one Bayes-updates the belief.
fn expectimax_q(
    robot: Point,
    cands: &[Point],
    belief: &[f64],
    params: &PomdpParams,
    depth: usize,
    action: usize,
) -> f64 {
    let goal = cands[action];
    let move_cost = params.lambda_move * robot.distance(goal);
    let mut expected_reward = -move_cost;
    let mut p_miss = 0.0;
    let mut posterior = vec![0.0; belief.len()];
    for (i, &b) in belief.iter().enumerate() {
        let d = goal.distance(cands[i]);
        let p_detect = if d <= params.delta {
            1.0
        } else {
            (-params.beta * (d - params.delta)).exp()
        };
        if d <= params.delta {
            expected_reward += b * params.lambda_target;
        }
        p_miss += b * (1.0 - p_detect);
        posterior[i] = b * (1.0 - p_detect);
    }
    if depth > 1 && p_miss > 1e-12 {
        let total: f64 = posterior.iter().sum();
        for p in posterior.iter_mut() {
            *p /= total;
        }
        let cont = (0..cands.len())
            .map(|a| expectimax_q(goal, cands, &posterior, params, depth - 1, a))
            .fold(f64::NEG_INFINITY, f64::max);
        expected_reward += params.gamma * p_miss * cont;
    }
    expected_reward
}

#[test]
fn c3_pouct_matches_expectimax() {
    // Frozen instance: two candidates with competitive value-of-visit.
    let robot = Point::new(0.0, 0.0);
    let cands = vec![Point::new(2.5, 0.0), Point::new(0.0, 4.0)];
    let belief = vec![0.42, 0.58];
    let params = PomdpParams {
        delta: 1.0,
        beta: 0.5,
        gamma: 0.95,
        lambda_move: 1.0,
        lambda_frontier: 5.0,
        lambda_target: 100.0,
        sims: 2000,
        depth: 2,
        ucb_c: 150.0,
        unreachable_cost: 1000.0,
    };

    let q0 = expectimax_q(robot, &cands, &belief, &params, 2, 0);
    let q1 = expectimax_q(robot, &cands, &belief, &params, 2, 1);
    let oracle_argmax = if q0 >= q1 { 0 } else { 1 };
    assert!(
        (q0 - q1).abs() > 1.0,
        "instance should have a clear optimum: q0={q0:.3} q1={q1:.3}"
    );

    let support = CandidateSet {
        points: cands.clone(),
        cells: vec![Cell::new(0, 0), Cell::new(1, 0)],
        source_step: 0,
    };
    let b = openguide_core::candidates::BeliefState {
        support: support.clone(),
        probs: belief.clone(),
    };

    let mut matches = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (action, _) = pouct_plan(
            robot,
            &b,
            &support,
            None,
            &params,
            &EuclideanOracle,
            &mut rng,
        )
        .expect("plan succeeds");
        let chosen = if action.goal == cands[0] { 0 } else { 1 };
        if chosen == oracle_argmax {
            matches += 1;
        }
    }
    report(
        "criterion 3 (pouct vs expectimax)",
        matches >= 95,
        &format!("argmax agreement {matches}/100 (oracle Q = {q0:.2} vs {q1:.2})"),
    );
}

// ---------------------------------------------------------------------------
// Criterion 4: detection-model Monte-Carlo calibration.
// ---------------------------------------------------------------------------

#[test]
fn c4_detection_calibration() {
    let cfg = DetectionConfig {
        delta_true: 1.0,
        beta_true: 0.5,
    };
    let scene_size = 51usize;
    let mut rows = vec![String::new(); 0];
    for y in 0..scene_size {
        let mut row = String::new();
        for x in 0..scene_size {
            let border = x == 0 || y == 0 || x == scene_size - 1 || y == scene_size - 1;
            row.push(if border { '#' } else { '.' });
        }
        rows.push(row);
    }
    let mut text = format!("scene {scene_size} {scene_size} 0.25\n");
    text.push_str(&rows.join("\n"));
    text.push('\n');

    let pose = RobotPose::new(1.875, 6.375, 0.0);
    let sensor = SensorSpec {
        fov: 2.0 * std::f64::consts::PI,
        max_range: 50.0,
        ray_count: 1440,
    };

    let mut detail = String::new();
    let mut all_ok = true;
    for offset in [0.0, 2.0, 4.0] {
        let d = cfg.delta_true + offset;
        let mut scene_text = text.clone();
        scene_text.push_str(&format!(
            "object tgt0 tgt {} {} 0.1\n",
            pose.x + d,
            pose.y
        ));
        let scene = GridScene::parse(&scene_text).unwrap();
        let visible = raycast_visibility(&scene, &pose, &sensor).unwrap();
        let trials = 10_000u64;
        let hits = (0..trials)
            .filter(|&seed| simulate_detection(&scene, &pose, &visible, &cfg, seed)[0].1)
            .count();
        let rate = hits as f64 / trials as f64;
        let expected = cfg.detection_prob(d);
        let ok = (rate - expected).abs() <= 0.02;
        all_ok &= ok;
        detail.push_str(&format!("d={d}: {rate:.4} vs {expected:.4}; "));
    }
    report("criterion 4 (detection calibration)", all_ok, &detail);
}

// ---------------------------------------------------------------------------
// Criterion 5: occlusion-recovery fixture.
// ---------------------------------------------------------------------------

fn fixture_params() -> Params {
    let suite = SuiteConfig::load(&workspace_path("suites/standard.toml")).unwrap();
    let mut params = suite.params;
    // Leftover unknown slivers inside the alcove must not spawn frontiers,
    // and stale viewpoint glow must fade fast enough to force the revisit.
    params.frontier.min_cells = 3;
    params.valuemap.tau = 7.0;
    params.valuemap.kappa = 2.0;
    params
}

#[test]
fn c5_occlusion_recovery() {
    let scene = GridScene::parse(
        &std::fs::read_to_string(workspace_path("scenes/occlusion_corner.scene")).unwrap(),
    )
    .unwrap();
    let params = fixture_params();

    let runs = |policy: Policy| -> usize {
        (0..10u64)
            .filter(|&seed| {
                let run = RunSection {
                    targets: vec!["mug".into(), "keys".into()],
                    seed,
                    policy,
                    start: Some(StartPose {
                        x: 3.0,
                        y: 3.0,
                        phi_deg: 0.0,
                    }),
                };
                run_episode(&scene, "occlusion", &params, &run, false)
                    .expect("episode runs")
                    .0
                    .success
            })
            .count()
    };

    let openguide = runs(Policy::Openguide);
    let finder = runs(Policy::FinderLike);
    report(
        "criterion 5 (occlusion recovery)",
        openguide >= 8 && finder <= 2,
        &format!("openguide {openguide}/10 (need >=8), finder_like {finder}/10 (need <=2)"),
    );
}

// ---------------------------------------------------------------------------
// Criteria 6 and 7: comparative orderings on the standard suite.
// ---------------------------------------------------------------------------

#[test]
fn c6_c7_benchmark_orderings() {
    let suite = SuiteConfig::load(&workspace_path("suites/standard.toml")).unwrap();
    let report_data = run_benchmark(&suite, &workspace_path("suites"), None, 0).unwrap();
    let sr = |p: Policy| report_data.summary_for(p).map(|s| s.sr).unwrap_or(f64::NAN);

    let og = sr(Policy::Openguide);
    let fl = sr(Policy::FinderLike);
    let vl = sr(Policy::VlfmLike);
    let rw = sr(Policy::RandomWalk);
    let nd = sr(Policy::NoDecay);
    let np = sr(Policy::NoPomdp);

    let c6 = og > fl && fl > vl && vl >= rw && og - fl >= 0.10 && rw <= 0.05;
    report(
        "criterion 6 (comparison ordering)",
        c6,
        &format!("SR: openguide={og:.3} finder={fl:.3} vlfm={vl:.3} random={rw:.3}"),
    );

    let c7 = og > nd && nd > np;
    report(
        "criterion 7 (ablation ordering)",
        c7,
        &format!("SR: openguide={og:.3} no_decay={nd:.3} no_pomdp={np:.3}"),
    );
}

// ---------------------------------------------------------------------------
// Criterion 8: byte-identical determinism at any parallelism.
// ---------------------------------------------------------------------------

#[test]
fn c8_determinism() {
    let mut params = Params::default();
    params.episode.max_steps = 150;
    let suite = SuiteConfig {
        name: "determinism".into(),
        policies: vec![Policy::Openguide, Policy::RandomWalk],
        params,
        scenes: vec![openguide_core::config::SceneDef {
            name: "gen".into(),
            file: None,
            generator: Some(GeneratorSpec {
                width: 24,
                height: 20,
                rooms: 2,
                objects: 2,
                decoys: 1,
                seed: 9,
                ..GeneratorSpec::default()
            }),
        }],
        episodes: (0..6)
            .map(|i| openguide_core::config::SuiteEpisode {
                scene: "gen".into(),
                targets: vec!["cup".into(), "book".into()],
                seed: 400 + i,
                start: None,
            })
            .collect(),
    };

    let base = Path::new(".");
    let a = run_benchmark(&suite, base, None, 1).unwrap();
    let b = run_benchmark(&suite, base, None, 4).unwrap();
    let c = run_benchmark(&suite, base, None, 4).unwrap();
    let csv_ok = a.to_csv() == b.to_csv() && b.to_csv() == c.to_csv();
    let json_ok = serde_json::to_string(&a).unwrap() == serde_json::to_string(&b).unwrap();

    // Episode traces replay byte-identically as well.
    let scene = generate_scene(&GeneratorSpec {
        width: 24,
        height: 20,
        rooms: 2,
        objects: 2,
        decoys: 1,
        seed: 9,
        ..GeneratorSpec::default()
    })
    .unwrap();
    let run = RunSection {
        targets: vec!["cup".into()],
        seed: 77,
        policy: Policy::Openguide,
        start: None,
    };
    let mut params = Params::default();
    params.episode.max_steps = 120;
    let (o1, t1) = run_episode(&scene, "d", &params, &run, true).unwrap();
    let (o2, t2) = run_episode(&scene, "d", &params, &run, true).unwrap();
    let trace_ok = o1 == o2 && t1 == t2;

    report(
        "criterion 8 (determinism)",
        csv_ok && json_ok && trace_ok,
        &format!("csv={csv_ok} json={json_ok} trace={trace_ok}"),
    );
}

// ---------------------------------------------------------------------------
// Criterion 9: property suites, >= 1000 cases each.
// ---------------------------------------------------------------------------

#[test]
fn c9_property_suites() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x9994_2711);

    // Belief simplex preservation over random candidate values.
    for _ in 0..1000 {
        let n = rng.gen_range(1..10);
        let mut grid = Grid::filled(n, 1, 0.0);
        let mut cands = CandidateSet::default();
        for i in 0..n {
            grid.set(Cell::new(i, 0), rng.gen_range(0.0..1.0f64));
            cands.cells.push(Cell::new(i, 0));
            cands.points.push(cell_center(Cell::new(i, 0), 0.25));
        }
        let b = build_belief(&cands, &grid);
        let sum: f64 = b.probs.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9, "belief sum {sum}");
        assert!(b.probs.iter().all(|&p| p >= 0.0));
    }

    // Raster ranges stay in [0, 1] under fuzzed ingest sequences.
    let scene = generate_scene(&GeneratorSpec {
        width: 16,
        height: 12,
        rooms: 2,
        objects: 0,
        decoys: 0,
        seed: 3,
        ..GeneratorSpec::default()
    })
    .unwrap();
    let sensor = SensorSpec {
        fov: 1.4,
        max_range: 4.0,
        ray_count: 90,
    };
    let free = scene.free_cells();
    let mut layer = ValueLayer::new("cup", scene.width(), scene.height(), scene.resolution);
    for _ in 0..1000 {
        let cell = free[rng.gen_range(0..free.len())];
        let p = scene.cell_center(cell);
        let pose = RobotPose::new(p.x, p.y, rng.gen_range(-3.14..3.14));
        let vis = raycast_visibility(&scene, &pose, &sensor).unwrap();
        ingest_observation(&mut layer, &pose, &sensor, rng.gen_range(0.0..=1.0), &vis);
    }
    assert!(layer.value.values().all(|&v| (0.0..=1.0).contains(&v)));
    assert!(layer
        .confidence
        .values()
        .all(|&c| (0.0..=1.0).contains(&c)));

    // Monotone exploration: the unknown count never increases.
    let mut map = ObstacleMap::new(scene.width(), scene.height(), scene.resolution);
    let mut unknown = map.unknown_count();
    for _ in 0..1000 {
        let cell = free[rng.gen_range(0..free.len())];
        let p = scene.cell_center(cell);
        let pose = RobotPose::new(p.x, p.y, rng.gen_range(-3.14..3.14));
        let vis = raycast_visibility(&scene, &pose, &sensor).unwrap();
        update_obstacle_map(&mut map, &scene, &vis);
        let now = map.unknown_count();
        assert!(now <= unknown, "unknown count grew: {unknown} -> {now}");
        unknown = now;
    }

    // MSPL <= SR for random result sets.
    for _ in 0..1000 {
        let n = rng.gen_range(1..20);
        let results: Vec<EpisodeOutcome> = (0..n)
            .map(|_| EpisodeOutcome {
                per_target: Vec::new(),
                success: rng.gen_bool(0.5),
                path_length: rng.gen_range(0.0..30.0),
                optimal_length: rng.gen_range(0.05..30.0),
                steps: rng.gen_range(0..500),
                decisions: 0,
                failure_reason: None,
            })
            .collect();
        assert!(mspl(&results) <= success_rate(&results) + 1e-12);
    }

    // Successful episodes never beat the optimal path beyond the stop-radius
    // and grid-quantization slack.
    let mini = generate_scene(&GeneratorSpec {
        width: 18,
        height: 14,
        rooms: 2,
        objects: 2,
        decoys: 0,
        seed: 5,
        ..GeneratorSpec::default()
    })
    .unwrap();
    let mut params = Params::default();
    params.episode.max_steps = 80;
    let mut successes = 0;
    for case in 0..1000u64 {
        let run = RunSection {
            targets: vec!["cup".into()],
            seed: case,
            policy: Policy::RandomWalk,
            start: None,
        };
        let (out, _) = run_episode(&mini, "mini", &params, &run, false).unwrap();
        if out.success {
            successes += 1;
            let k = run.targets.len() as f64;
            let slack = 2.0 * k * params.episode.success_radius
                + 2.0 * mini.resolution * std::f64::consts::SQRT_2;
            assert!(
                out.path_length >= out.optimal_length - slack,
                "case {case}: path {} << optimal {}",
                out.path_length,
                out.optimal_length
            );
        }
    }

    report(
        "criterion 9 (property suites)",
        true,
        &format!("5 suites x 1000 cases ({successes} successful mini episodes)"),
    );
}
