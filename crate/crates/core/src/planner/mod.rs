//! The search POMDP over candidate and frontier goals, its generative
//! model, and the Monte-Carlo tree-search solver.

pub mod model;
pub mod pouct;
pub mod refresh;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::Point;

pub use model::{
    generative_step, observation_prob, reward, simulated_belief_update, transition,
    GenerativeOutcome,
};
pub use pouct::{pouct_plan, PlanTrace};
pub use refresh::{real_belief_refresh, RefreshInputs, RefreshOutcome};

/// Joint state: robot position and the (hypothesized) target position.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PomdpState {
    pub robot: Point,
    pub target: Point,
}

/// What kind of goal an action moves to.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Candidate,
    Frontier,
}

/// `MoveTo(goal)` over a candidate point or the selected frontier midpoint.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PomdpAction {
    pub kind: ActionKind,
    pub goal: Point,
}

/// Model and solver parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PomdpParams {
    /// Detection threshold of the observation model (meters).
    pub delta: f64,
    /// Detection falloff rate beyond `delta` (1/meters).
    pub beta: f64,
    /// Discount factor in `(0, 1)`.
    pub gamma: f64,
    pub lambda_move: f64,
    pub lambda_frontier: f64,
    pub lambda_target: f64,
    /// Monte-Carlo simulations per planning call.
    pub sims: usize,
    /// Search depth (tree plus rollout).
    pub depth: usize,
    /// UCB1 exploration constant.
    pub ucb_c: f64,
    /// Movement cost charged for goals the path oracle cannot reach (m).
    pub unreachable_cost: f64,
}

impl Default for PomdpParams {
    fn default() -> Self {
        PomdpParams {
            delta: 1.0,
            beta: 0.5,
            gamma: 0.95,
            lambda_move: 1.0,
            lambda_frontier: 5.0,
            lambda_target: 100.0,
            sims: 500,
            depth: 3,
            ucb_c: 150.0,
            unreachable_cost: 1000.0,
        }
    }
}

impl PomdpParams {
    pub fn validate(&self) -> Result<(), PlanError> {
        let ok = self.gamma > 0.0
            && self.gamma < 1.0
            && self.beta > 0.0
            && self.delta > 0.0
            && self.lambda_move >= 0.0
            && self.lambda_frontier >= 0.0
            && self.lambda_target >= 0.0
            && self.sims >= 1
            && self.depth >= 1;
        if ok {
            Ok(())
        } else {
            Err(PlanError::InvalidParams)
        }
    }
}

/// Generative-model output for one simulated action.
#[derive(Debug, Error)]
pub enum PlanError {
    #[error("planner parameters violate their constraints")]
    InvalidParams,
    #[error("action space is empty: no candidates and no frontier")]
    EmptyActionSpace,
}

/// Obstacle-aware movement-cost oracle between metric points.
///
/// Production planning uses grid shortest-path fields; tests may substitute
/// closed-form metrics.
pub trait PathOracle {
    /// Shortest-path distance, or `None` when the goal is unreachable.
    fn distance(&self, from: Point, to: Point) -> Option<f64>;
}

/// Euclidean distances; used on obstacle-free instances.
pub struct EuclideanOracle;

impl PathOracle for EuclideanOracle {
    fn distance(&self, from: Point, to: Point) -> Option<f64> {
        Some(from.distance(to))
    }
}

/// Pairwise shortest-path distances between a fixed point set, computed
/// once per planning call from per-source Dijkstra fields.
pub struct PairwiseOracle {
    points: Vec<Point>,
    dist: Vec<Vec<f64>>,
}

impl PairwiseOracle {
    pub fn build(
        map: &crate::geomap::ObstacleMap,
        points: &[Point],
        unknown_factor: Option<f64>,
    ) -> Self {
        let mut dist = Vec::with_capacity(points.len());
        for &p in points {
            let field = crate::geomap::dijkstra_field(map, p, unknown_factor);
            dist.push(points.iter().map(|&q| field.at(q)).collect());
        }
        PairwiseOracle {
            points: points.to_vec(),
            dist,
        }
    }

    fn index_of(&self, p: Point) -> Option<usize> {
        self.points
            .iter()
            .position(|&q| (q.x - p.x).abs() < 1e-9 && (q.y - p.y).abs() < 1e-9)
    }
}

impl PathOracle for PairwiseOracle {
    fn distance(&self, from: Point, to: Point) -> Option<f64> {
        let (i, j) = (self.index_of(from)?, self.index_of(to)?);
        let d = self.dist[i][j];
        if d.is_finite() {
            Some(d)
        } else {
            None
        }
    }
}
