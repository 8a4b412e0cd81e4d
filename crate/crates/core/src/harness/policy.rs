//! Goal selection: the full planner and the baseline/ablation policies.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Params, Policy};
use crate::geomap::{best_frontier, CellState, Frontier, ObstacleMap};
use crate::grid::{cell_center, Point};
use crate::planner::{pouct_plan, ActionKind, PairwiseOracle, PlanTrace, RefreshOutcome};
use crate::valuemap::{AggregateValueMap, ValueLayer};
use crate::world::RobotPose;

/// Everything a policy may look at when choosing the next goal.
pub struct PolicyContext<'a> {
    pub policy: Policy,
    pub pose: &'a RobotPose,
    pub map: &'a ObstacleMap,
    pub layers: &'a [ValueLayer],
    pub found: &'a [Option<usize>],
    pub targets: &'a [String],
    pub frontiers: &'a [Frontier],
    pub refresh: &'a RefreshOutcome,
    pub params: &'a Params,
}

#[derive(Clone, Debug)]
pub enum PolicyDecision {
    Goal {
        goal: Point,
        kind: ActionKind,
        plan: Option<PlanTrace>,
        /// Target pursued by single-target policies.
        pursued: Option<String>,
    },
    Fail {
        reason: String,
    },
}

/// Select the next navigation goal under the configured policy.
pub fn select_goal(ctx: &PolicyContext<'_>, rng: &mut ChaCha8Rng) -> PolicyDecision {
    match ctx.policy {
        Policy::RandomWalk => random_goal(ctx, rng),
        Policy::VlfmLike => vlfm_goal(ctx),
        Policy::FinderLike => finder_goal(ctx),
        Policy::NoPomdp => greedy_goal(ctx),
        Policy::Openguide | Policy::NoDecay => pouct_goal(ctx, rng),
    }
}

/// Uniform random goal over known-free map cells.
fn random_goal(ctx: &PolicyContext<'_>, rng: &mut ChaCha8Rng) -> PolicyDecision {
    let cells: Vec<_> = ctx
        .map
        .cells
        .iter_cells()
        .filter(|&c| ctx.map.state(c) == CellState::Free)
        .collect();
    if cells.is_empty() {
        return PolicyDecision::Fail {
            reason: "no traversable cells".into(),
        };
    }
    let cell = cells[rng.gen_range(0..cells.len())];
    PolicyDecision::Goal {
        goal: cell_center(cell, ctx.map.resolution),
        kind: ActionKind::Frontier,
        plan: None,
        pursued: None,
    }
}

/// Frontier-only search driven by the currently pursued target's own layer;
/// targets are pursued in listed order.
fn vlfm_goal(ctx: &PolicyContext<'_>) -> PolicyDecision {
    let Some(pursued_idx) = ctx.found.iter().position(|f| f.is_none()) else {
        return PolicyDecision::Fail {
            reason: "no remaining targets".into(),
        };
    };
    let layer = &ctx.layers[pursued_idx];
    let agg = AggregateValueMap {
        resolution: layer.resolution,
        value: layer.value.clone(),
        contributing_targets: vec![layer.target.clone()],
    };
    match best_frontier(ctx.frontiers, &agg, ctx.params.frontier.value_radius) {
        Some(f) => PolicyDecision::Goal {
            goal: f.midpoint,
            kind: ActionKind::Frontier,
            plan: None,
            pursued: Some(ctx.targets[pursued_idx].clone()),
        },
        None => PolicyDecision::Fail {
            reason: "no frontier available".into(),
        },
    }
}

/// Frontier-only search scored on the shared aggregate map.
fn finder_goal(ctx: &PolicyContext<'_>) -> PolicyDecision {
    match &ctx.refresh.best_frontier {
        Some(f) => PolicyDecision::Goal {
            goal: f.midpoint,
            kind: ActionKind::Frontier,
            plan: None,
            pursued: None,
        },
        None => PolicyDecision::Fail {
            reason: "no frontier available".into(),
        },
    }
}

/// Greedy ablation: argmax decayed value over the candidate points and the
/// frontier midpoint, no tree search, no movement cost, no
/// explore/exploit balancing.
fn greedy_goal(ctx: &PolicyContext<'_>) -> PolicyDecision {
    let decayed = &ctx.refresh.decayed_aggregate;
    let mut best: Option<(f64, ActionKind, Point)> = None;
    for (i, &cell) in ctx.refresh.candidates.cells.iter().enumerate() {
        let v = *decayed.value.get(cell);
        if best.as_ref().map(|(bv, _, _)| v > *bv).unwrap_or(true) {
            best = Some((v, ActionKind::Candidate, ctx.refresh.candidates.points[i]));
        }
    }
    if let Some(f) = &ctx.refresh.best_frontier {
        let v = *decayed.value.get(f.midpoint_cell);
        if best.as_ref().map(|(bv, _, _)| v > *bv).unwrap_or(true) {
            best = Some((v, ActionKind::Frontier, f.midpoint));
        }
    }
    match best {
        Some((_, kind, goal)) => PolicyDecision::Goal {
            goal,
            kind,
            plan: None,
            pursued: None,
        },
        None => PolicyDecision::Fail {
            reason: "action space exhausted".into(),
        },
    }
}

/// Full planner: POUCT over candidates plus the selected frontier, with
/// obstacle-aware movement costs.
fn pouct_goal(ctx: &PolicyContext<'_>, rng: &mut ChaCha8Rng) -> PolicyDecision {
    let refresh = ctx.refresh;
    if refresh.exhausted() {
        return PolicyDecision::Fail {
            reason: "action space exhausted".into(),
        };
    }
    let mut points: Vec<Point> = vec![ctx.pose.position()];
    points.extend(refresh.candidates.points.iter().copied());
    if let Some(f) = &refresh.best_frontier {
        points.push(f.midpoint);
    }
    // Movement cost is the navigation-effort estimate, so unknown cells
    // count at plain metric cost; only the executing controller inflates
    // them for conservatism.
    let oracle = PairwiseOracle::build(ctx.map, &points, Some(1.0));
    let mut plan_rng = ChaCha8Rng::seed_from_u64(rng.gen());
    match pouct_plan(
        ctx.pose.position(),
        &refresh.belief,
        &refresh.candidates,
        refresh.best_frontier.as_ref(),
        &ctx.params.planner,
        &oracle,
        &mut plan_rng,
    ) {
        Ok((action, trace)) => PolicyDecision::Goal {
            goal: action.goal,
            kind: action.kind,
            plan: Some(trace),
            pursued: None,
        },
        Err(e) => PolicyDecision::Fail {
            reason: e.to_string(),
        },
    }
}
