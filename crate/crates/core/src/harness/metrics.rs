//! Episode metrics: optimal path length and the path-length-weighted
//! multi-object success score.

use thiserror::Error;

use crate::geomap::{dijkstra_field, CellState, ObstacleMap};
use crate::grid::Point;
use crate::world::GridScene;

use super::EpisodeOutcome;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("target category `{0}` has no objects in the scene")]
    MissingTarget(String),
    #[error("target category `{0}` is unreachable from the start")]
    UnreachableTarget(String),
}

/// Fully known obstacle map mirroring the scene occupancy.
fn scene_map(scene: &GridScene) -> ObstacleMap {
    let mut map = ObstacleMap::new(scene.width(), scene.height(), scene.resolution);
    for cell in scene.occupancy.iter_cells() {
        map.cells.set(
            cell,
            if scene.is_occupied(cell) {
                CellState::Occupied
            } else {
                CellState::Free
            },
        );
    }
    map
}

/// Minimum over target visit orders (and object choices per category) of
/// the summed grid shortest-path distances from `start` through every
/// target category.
pub fn optimal_length(
    scene: &GridScene,
    start: Point,
    targets: &[String],
) -> Result<f64, MetricsError> {
    let map = scene_map(scene);

    // Candidate object positions per category.
    let mut options: Vec<Vec<Point>> = Vec::with_capacity(targets.len());
    for t in targets {
        let positions: Vec<Point> = scene.objects_of_category(t).map(|o| o.position).collect();
        if positions.is_empty() {
            return Err(MetricsError::MissingTarget(t.clone()));
        }
        options.push(positions);
    }

    // Distance fields from the start and from every object position.
    let mut points: Vec<Point> = vec![start];
    for opts in &options {
        points.extend(opts.iter().copied());
    }
    let fields: Vec<_> = points
        .iter()
        .map(|&p| dijkstra_field(&map, p, None))
        .collect();
    let index_of = |p: Point| -> usize {
        points
            .iter()
            .position(|&q| (q.x - p.x).abs() < 1e-12 && (q.y - p.y).abs() < 1e-12)
            .expect("point registered")
    };
    let dist = |from: Point, to: Point| -> f64 { fields[index_of(from)].at(to) };

    for (t, opts) in targets.iter().zip(&options) {
        if opts.iter().all(|&p| !dist(start, p).is_finite()) {
            return Err(MetricsError::UnreachableTarget(t.clone()));
        }
    }

    // K <= 3 and object counts are small: enumerate visit orders and object
    // choices exhaustively.
    let k = targets.len();
    let mut order: Vec<usize> = (0..k).collect();
    let mut best = f64::INFINITY;
    permute(&mut order, 0, &mut |perm| {
        let mut totals = vec![(start, 0.0f64)];
        for &cat_idx in perm {
            let mut next = Vec::new();
            for &(at, acc) in &totals {
                for &p in &options[cat_idx] {
                    let d = dist(at, p);
                    if d.is_finite() {
                        next.push((p, acc + d));
                    }
                }
            }
            totals = next;
            if totals.is_empty() {
                return;
            }
        }
        for &(_, acc) in &totals {
            if acc < best {
                best = acc;
            }
        }
    });

    if best.is_finite() {
        Ok(best)
    } else {
        Err(MetricsError::UnreachableTarget(targets[0].clone()))
    }
}

fn permute(items: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, visit);
        items.swap(k, i);
    }
}

/// Success rate: fraction of episodes with every target found.
pub fn success_rate(results: &[EpisodeOutcome]) -> f64 {
    if results.is_empty() {
        return 0.0;
    }
    results.iter().filter(|r| r.success).count() as f64 / results.len() as f64
}

/// Multi-object success weighted by normalized inverse path length:
/// `(1/N) * sum S_i * l_i / max(p_i, l_i)`. Failed episodes contribute 0;
/// a zero-length optimum (spawned on the target) counts as a perfect path.
pub fn mspl(results: &[EpisodeOutcome]) -> f64 {
    if results.is_empty() {
        return 0.0;
    }
    let total: f64 = results
        .iter()
        .map(|r| {
            if !r.success {
                return 0.0;
            }
            if r.optimal_length <= 0.0 {
                return 1.0;
            }
            r.optimal_length / r.path_length.max(r.optimal_length)
        })
        .sum();
    total / results.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Cell;
    use crate::harness::TargetResult;
    use crate::world::test_fixtures::{open_scene_with_objects, scene_from_rows};

    fn outcome(success: bool, path: f64, optimal: f64) -> EpisodeOutcome {
        EpisodeOutcome {
            per_target: vec![TargetResult {
                category: "cup".into(),
                found: success,
                step_found: success.then_some(1),
            }],
            success,
            path_length: path,
            optimal_length: optimal,
            steps: 10,
            decisions: 2,
            failure_reason: None,
        }
    }

    #[test]
    fn mspl_perfect_paths() {
        let r = vec![outcome(true, 3.0, 3.0), outcome(true, 2.0, 2.0)];
        assert!((mspl(&r) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mspl_all_failures_zero() {
        let r = vec![outcome(false, 3.0, 1.0)];
        assert_eq!(mspl(&r), 0.0);
    }

    #[test]
    fn mspl_double_length_halves() {
        let r = vec![outcome(true, 4.0, 2.0)];
        assert!((mspl(&r) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn mspl_never_exceeds_sr() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let n = rng.gen_range(1..12);
            let results: Vec<_> = (0..n)
                .map(|_| {
                    outcome(
                        rng.gen_bool(0.5),
                        rng.gen_range(0.0..20.0),
                        rng.gen_range(0.1..20.0),
                    )
                })
                .collect();
            assert!(mspl(&results) <= success_rate(&results) + 1e-12);
        }
    }

    #[test]
    fn optimal_single_target_is_grid_distance() {
        let scene = open_scene_with_objects(21, &[("cup0", "cup", 4.125, 1.125)]);
        let start = scene.cell_center(Cell::new(4, 4));
        let l = optimal_length(&scene, start, &["cup".into()]).unwrap();
        // Straight line along x from (4,4) to (16,4): 12 cells = 3.0 m.
        assert!((l - 3.0).abs() < 1e-9, "{l}");
    }

    #[test]
    fn optimal_collinear_targets_visits_in_corridor_order() {
        // start --- A --- B along a corridor; optimal = d(start,A) + d(A,B).
        let scene = open_scene_with_objects(
            41,
            &[("a0", "a", 4.125, 1.125), ("b0", "b", 8.125, 1.125)],
        );
        let start = scene.cell_center(Cell::new(4, 4));
        let l = optimal_length(&scene, start, &["a".into(), "b".into()]).unwrap();
        let d_start_a = 12.0 * 0.25;
        let d_a_b = 16.0 * 0.25;
        assert!((l - (d_start_a + d_a_b)).abs() < 1e-9, "{l}");
        // Any other order is strictly worse and must not be returned.
        assert!(l < d_start_a + d_a_b + 2.0 * d_a_b - 1e-9);
    }

    #[test]
    fn optimal_three_targets_matches_brute_force() {
        let scene = open_scene_with_objects(
            31,
            &[
                ("a0", "a", 2.125, 2.125),
                ("b0", "b", 6.125, 1.125),
                ("c0", "c", 1.125, 6.125),
            ],
        );
        let start = scene.cell_center(Cell::new(15, 15));
        let targets = vec!["a".to_string(), "b".to_string(), "c".to_string()];
        let l = optimal_length(&scene, start, &targets).unwrap();

        // Independent brute force: expand all 6 orders with explicit
        // pairwise field lookups.
        let map = scene_map(&scene);
        let pts = [
            start,
            scene.objects[0].position,
            scene.objects[1].position,
            scene.objects[2].position,
        ];
        let fields: Vec<_> = pts.iter().map(|&p| dijkstra_field(&map, p, None)).collect();
        let d = |i: usize, j: usize| fields[i].at(pts[j]);
        let orders = [
            [1, 2, 3],
            [1, 3, 2],
            [2, 1, 3],
            [2, 3, 1],
            [3, 1, 2],
            [3, 2, 1],
        ];
        let brute = orders
            .iter()
            .map(|o| d(0, o[0]) + d(o[0], o[1]) + d(o[1], o[2]))
            .fold(f64::INFINITY, f64::min);
        assert!((l - brute).abs() < 1e-9, "{l} vs {brute}");
    }

    #[test]
    fn unreachable_target_is_an_error() {
        // Free space is connected but the target category does not exist.
        let scene = scene_from_rows(&["#####", "#...#", "#####"]);
        let start = scene.cell_center(Cell::new(1, 1));
        assert!(matches!(
            optimal_length(&scene, start, &["cup".into()]),
            Err(MetricsError::MissingTarget(_))
        ));
    }
}
