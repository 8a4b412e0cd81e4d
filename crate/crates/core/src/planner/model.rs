//! Transition, observation, reward, and the generative function.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::candidates::BeliefState;

use super::{ActionKind, PathOracle, PomdpAction, PomdpParams, PomdpState};

/// `(s', o, r)` from one simulated action.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerativeOutcome {
    pub next_state: PomdpState,
    pub observation: bool,
    pub reward: f64,
}

/// Deterministic transition: the robot moves to the action goal, the target
/// is static.
pub fn transition(s: &PomdpState, a: &PomdpAction) -> PomdpState {
    PomdpState {
        robot: a.goal,
        target: s.target,
    }
}

/// Detection probability: 1 within `delta`, exponential falloff beyond.
pub fn observation_prob(s_next: &PomdpState, params: &PomdpParams) -> f64 {
    let d = s_next.robot.distance(s_next.target);
    if d <= params.delta {
        1.0
    } else {
        (-params.beta * (d - params.delta)).exp()
    }
}

/// Movement cost, exploration bonus, and target-proximity reward.
pub fn reward(
    s: &PomdpState,
    a: &PomdpAction,
    s_next: &PomdpState,
    params: &PomdpParams,
    path_oracle: &dyn PathOracle,
) -> f64 {
    let move_dist = path_oracle
        .distance(s.robot, s_next.robot)
        .unwrap_or(params.unreachable_cost);
    let frontier_bonus = if a.kind == ActionKind::Frontier {
        params.lambda_frontier
    } else {
        0.0
    };
    let target_bonus = if s_next.robot.distance(s_next.target) <= params.delta {
        params.lambda_target
    } else {
        0.0
    };
    -params.lambda_move * move_dist + frontier_bonus + target_bonus
}

/// The generative function: sample `(s', o, r)` for one action.
pub fn generative_step(
    s: &PomdpState,
    a: &PomdpAction,
    params: &PomdpParams,
    path_oracle: &dyn PathOracle,
    rng: &mut ChaCha8Rng,
) -> GenerativeOutcome {
    let next_state = transition(s, a);
    let p = observation_prob(&next_state, params);
    let observation = rng.gen::<f64>() < p;
    let r = reward(s, a, &next_state, params, path_oracle);
    GenerativeOutcome {
        next_state,
        observation,
        reward: r,
    }
}

/// In-tree Bayesian belief update over the candidate support.
///
/// Targets are static, so `p_i' = eta * Pr(o | robot at a.goal, target at
/// c_i) * p_i`. When the posterior mass vanishes entirely the belief falls
/// back to uniform.
pub fn simulated_belief_update(
    b: &BeliefState,
    a: &PomdpAction,
    observed: bool,
    params: &PomdpParams,
) -> BeliefState {
    let mut out = b.clone();
    let mut total = 0.0;
    for (i, p) in out.probs.iter_mut().enumerate() {
        let s_next = PomdpState {
            robot: a.goal,
            target: b.support.points[i],
        };
        let p_detect = observation_prob(&s_next, params);
        let likelihood = if observed { p_detect } else { 1.0 - p_detect };
        *p *= likelihood;
        total += *p;
    }
    if total > 0.0 {
        for p in out.probs.iter_mut() {
            *p /= total;
        }
    } else if !out.probs.is_empty() {
        let u = 1.0 / out.probs.len() as f64;
        for p in out.probs.iter_mut() {
            *p = u;
        }
    }
    out
}
