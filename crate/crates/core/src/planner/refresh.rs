//! Real-execution belief refresh.
//!
//! After each executed action the belief is not Bayes-updated; instead the
//! whole action space and belief are rebuilt from the decayed value map:
//! decay per layer, aggregate, mask obstacles, threshold, cluster, and
//! re-score the frontier set.

use crate::candidates::{build_belief, extract_candidates, BeliefState, CandidateSet, DbscanParams};
use crate::geomap::{best_frontier, CellState, Frontier, ObstacleMap};
use crate::valuemap::{
    aggregate_rasters, decay_layer, AggregateValueMap, AggregationMode, DecayParams, ValueLayer,
    ValueMapError,
};

/// Inputs to one refresh: the layers of the targets still being searched
/// plus the current geometry.
pub struct RefreshInputs<'a> {
    pub layers: &'a [&'a ValueLayer],
    pub decay: DecayParams,
    /// Ablation hook: with decay disabled the raw values are used directly.
    pub decay_enabled: bool,
    /// Decayed values below this are dust, not candidate material.
    pub value_floor: f64,
    pub dbscan: DbscanParams,
    pub aggregation: AggregationMode,
    pub map: &'a ObstacleMap,
    pub frontiers: &'a [Frontier],
    /// Disc radius for frontier value scoring (meters).
    pub frontier_value_radius: f64,
    pub step: usize,
}

/// The rebuilt planning state.
#[derive(Clone, Debug)]
pub struct RefreshOutcome {
    /// Undecayed aggregate; scores frontiers.
    pub raw_aggregate: AggregateValueMap,
    /// Decayed, obstacle-masked aggregate; source of candidates and belief.
    pub decayed_aggregate: AggregateValueMap,
    pub candidates: CandidateSet,
    pub belief: BeliefState,
    pub best_frontier: Option<Frontier>,
}

impl RefreshOutcome {
    /// True when neither targeted nor exploratory actions remain.
    pub fn exhausted(&self) -> bool {
        self.candidates.is_empty() && self.best_frontier.is_none()
    }
}

/// Rebuild candidates, belief, and the selected frontier from the current
/// value layers and obstacle map.
///
/// The decayed surface keeps the raw aggregate's scale (it is the raw
/// surface attenuated cell-wise, not re-normalized), so regions that have
/// decayed away really read as worthless instead of being rescaled back up.
pub fn real_belief_refresh(inputs: &RefreshInputs<'_>) -> Result<RefreshOutcome, ValueMapError> {
    let raw_aggregate = crate::valuemap::aggregate_layers(inputs.layers, inputs.aggregation)?;

    let decayed: Vec<_> = inputs
        .layers
        .iter()
        .map(|layer| {
            if inputs.decay_enabled {
                decay_layer(layer, &inputs.decay)
            } else {
                layer.value.clone()
            }
        })
        .collect();
    let decayed_refs: Vec<_> = decayed.iter().collect();
    let mut decayed_value = match inputs.aggregation {
        AggregationMode::SumNorm => {
            let mut out = decayed_refs[0].clone();
            let mut raw_max = 0.0f64;
            let cells: Vec<_> = out.iter_cells().collect();
            for &cell in &cells {
                let sum: f64 = decayed_refs.iter().map(|r| *r.get(cell)).sum();
                out.set(cell, sum);
                let raw_sum: f64 = inputs.layers.iter().map(|l| *l.value.get(cell)).sum();
                if raw_sum > raw_max {
                    raw_max = raw_sum;
                }
            }
            if raw_max > 0.0 {
                for v in out.values_mut() {
                    *v /= raw_max;
                }
            }
            out
        }
        AggregationMode::Product => aggregate_rasters(&decayed_refs, inputs.aggregation)?,
    };

    // Candidates must sit on traversable ground, and decayed dust is not
    // candidate material.
    for cell in decayed_value.iter_cells().collect::<Vec<_>>() {
        if inputs.map.state(cell) == CellState::Occupied
            || *decayed_value.get(cell) < inputs.value_floor
        {
            decayed_value.set(cell, 0.0);
        }
    }

    let resolution = inputs.map.resolution;
    let candidates = extract_candidates(&decayed_value, &inputs.dbscan, resolution, inputs.step);
    let belief = build_belief(&candidates, &decayed_value);

    let decayed_aggregate = AggregateValueMap {
        resolution,
        value: decayed_value,
        contributing_targets: raw_aggregate.contributing_targets.clone(),
    };
    let best = best_frontier(
        inputs.frontiers,
        &raw_aggregate,
        inputs.frontier_value_radius,
    );

    Ok(RefreshOutcome {
        raw_aggregate,
        decayed_aggregate,
        candidates,
        belief,
        best_frontier: best,
    })
}
