//! Episode orchestration, baseline policies, metrics, and batch
//! benchmarking with seeded reproducibility.

pub mod bench;
pub mod episode;
pub mod metrics;
pub mod policy;

use serde::{Deserialize, Serialize};

pub use bench::{run_benchmark, BenchError, BenchmarkReport, EpisodeRow, PolicySummary};
pub use episode::{run_episode, run_episode_observed, EpisodeError, MapSnapshot};
pub use metrics::{mspl, optimal_length, success_rate, MetricsError};
pub use policy::{select_goal, PolicyContext, PolicyDecision};

/// Per-target search result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetResult {
    pub category: String,
    pub found: bool,
    pub step_found: Option<usize>,
}

/// Outcome of one episode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeOutcome {
    pub per_target: Vec<TargetResult>,
    /// True when every target was found.
    pub success: bool,
    /// Actual executed travel distance (meters).
    pub path_length: f64,
    /// Optimal shortest path from the start through all targets (meters).
    pub optimal_length: f64,
    /// Executed discrete commands.
    pub steps: usize,
    /// Planner invocations (not counted as steps).
    pub decisions: usize,
    pub failure_reason: Option<String>,
}
