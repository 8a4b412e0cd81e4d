//! Monte-Carlo tree search over action-observation histories (POUCT).

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::candidates::{BeliefState, CandidateSet};
use crate::geomap::Frontier;
use crate::grid::Point;

use super::model::generative_step;
use super::{ActionKind, PathOracle, PlanError, PomdpAction, PomdpParams, PomdpState};

/// Per-decision diagnostics: the action space with visit counts and
/// Q-values, in action order.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct PlanTrace {
    pub actions: Vec<PomdpAction>,
    pub q: Vec<f64>,
    pub visits: Vec<u64>,
    pub chosen: usize,
}

struct Node {
    visits: u64,
    action_n: Vec<u64>,
    action_q: Vec<f64>,
    children: HashMap<(usize, bool), usize>,
}

impl Node {
    fn new(n_actions: usize) -> Self {
        Node {
            visits: 0,
            action_n: vec![0; n_actions],
            action_q: vec![0.0; n_actions],
            children: HashMap::new(),
        }
    }
}

struct Search<'a> {
    actions: &'a [PomdpAction],
    params: &'a PomdpParams,
    oracle: &'a dyn PathOracle,
    nodes: Vec<Node>,
}

impl<'a> Search<'a> {
    fn select_action(&self, node: usize) -> usize {
        let node = &self.nodes[node];
        // Try each action once before applying UCB1.
        if let Some(untried) = node.action_n.iter().position(|&n| n == 0) {
            return untried;
        }
        let ln_n = (node.visits.max(1) as f64).ln();
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (i, (&n, &q)) in node.action_n.iter().zip(&node.action_q).enumerate() {
            let score = q + self.params.ucb_c * (ln_n / n as f64).sqrt();
            if score > best_score {
                best_score = score;
                best = i;
            }
        }
        best
    }

    fn simulate(&mut self, node: usize, state: PomdpState, depth: usize, rng: &mut ChaCha8Rng) -> f64 {
        if depth == 0 {
            return 0.0;
        }
        let action_idx = self.select_action(node);
        let outcome = generative_step(
            &state,
            &self.actions[action_idx],
            self.params,
            self.oracle,
            rng,
        );
        // A positive detection hands control to the stop behavior, so the
        // simulated episode ends there.
        let ret = if outcome.observation {
            outcome.reward
        } else {
            let key = (action_idx, outcome.observation);
            if let Some(&child) = self.nodes[node].children.get(&key) {
                outcome.reward
                    + self.params.gamma * self.simulate(child, outcome.next_state, depth - 1, rng)
            } else {
                let child = self.nodes.len();
                self.nodes.push(Node::new(self.actions.len()));
                self.nodes[node].children.insert(key, child);
                outcome.reward
                    + self.params.gamma * self.rollout(outcome.next_state, depth - 1, rng)
            }
        };
        let node = &mut self.nodes[node];
        node.visits += 1;
        node.action_n[action_idx] += 1;
        let n = node.action_n[action_idx] as f64;
        node.action_q[action_idx] += (ret - node.action_q[action_idx]) / n;
        ret
    }

    fn rollout(&self, mut state: PomdpState, depth: usize, rng: &mut ChaCha8Rng) -> f64 {
        let mut total = 0.0;
        let mut discount = 1.0;
        for _ in 0..depth {
            let action = &self.actions[rng.gen_range(0..self.actions.len())];
            let outcome = generative_step(&state, action, self.params, self.oracle, rng);
            total += discount * outcome.reward;
            if outcome.observation {
                break;
            }
            discount *= self.params.gamma;
            state = outcome.next_state;
        }
        total
    }
}

/// Assemble the action space: one `MoveTo` per candidate plus the selected
/// frontier, in that order.
pub fn action_space(cands: &CandidateSet, frontier: Option<&Frontier>) -> Vec<PomdpAction> {
    let mut actions: Vec<PomdpAction> = cands
        .points
        .iter()
        .map(|&goal| PomdpAction {
            kind: ActionKind::Candidate,
            goal,
        })
        .collect();
    if let Some(f) = frontier {
        actions.push(PomdpAction {
            kind: ActionKind::Frontier,
            goal: f.midpoint,
        });
    }
    actions
}

/// Plan the next action with POUCT.
///
/// Each simulation samples a root state from the belief (robot at the
/// current position, target at a candidate point), descends the tree with
/// UCB1 (first visit of an action is forced), expands one node per
/// simulation keyed by action-observation history, and finishes with a
/// uniform-random rollout. Returns the root Q-argmax, deterministic given
/// the rng state; ties keep the earliest action.
pub fn pouct_plan(
    robot: Point,
    belief: &BeliefState,
    cands: &CandidateSet,
    frontier: Option<&Frontier>,
    params: &PomdpParams,
    path_oracle: &dyn PathOracle,
    rng: &mut ChaCha8Rng,
) -> Result<(PomdpAction, PlanTrace), PlanError> {
    params.validate()?;
    let actions = action_space(cands, frontier);
    if actions.is_empty() {
        return Err(PlanError::EmptyActionSpace);
    }
    if actions.len() == 1 {
        return Ok((
            actions[0],
            PlanTrace {
                actions,
                q: vec![0.0],
                visits: vec![0],
                chosen: 0,
            },
        ));
    }

    let mut search = Search {
        actions: &actions,
        params,
        oracle: path_oracle,
        nodes: vec![Node::new(actions.len())],
    };

    for _ in 0..params.sims {
        let target = sample_target(belief, rng);
        let state = PomdpState { robot, target };
        search.simulate(0, state, params.depth, rng);
    }

    let root = &search.nodes[0];
    let mut chosen = 0;
    let mut best_q = f64::NEG_INFINITY;
    for (i, (&n, &q)) in root.action_n.iter().zip(&root.action_q).enumerate() {
        if n > 0 && q > best_q {
            best_q = q;
            chosen = i;
        }
    }
    let trace = PlanTrace {
        actions: actions.clone(),
        q: root.action_q.clone(),
        visits: root.action_n.clone(),
        chosen,
    };
    Ok((actions[chosen], trace))
}

/// Categorical draw of a target position from the belief. With an empty
/// belief the hypothesized target sits unreachably far away, so detection
/// rewards vanish.
fn sample_target(belief: &BeliefState, rng: &mut ChaCha8Rng) -> Point {
    if belief.is_empty() {
        return Point::new(f64::INFINITY, f64::INFINITY);
    }
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in belief.probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return belief.support.points[i];
        }
    }
    *belief.support.points.last().expect("non-empty belief")
}
