//! Batch benchmarking: run a suite's episodes across policies in parallel
//! and aggregate per-policy success rate, MSPL, and mean steps.
//!
//! Episodes are independent seeded units; rows collect in input order, so
//! the report bytes are identical at any parallelism level.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{suite_digest, ConfigError, Policy, RunSection, SuiteConfig};
use crate::world::GridScene;

use super::episode::run_episode;
use super::metrics::{mspl, success_rate};
use super::EpisodeOutcome;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("thread pool: {0}")]
    Pool(String),
}

/// One benchmark row (one episode under one policy).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRow {
    pub index: usize,
    pub scene: String,
    pub policy: Policy,
    pub targets: Vec<String>,
    pub seed: u64,
    /// False when the episode could not be scored (unreachable target).
    pub valid: bool,
    pub success: bool,
    pub steps: usize,
    pub path_length: f64,
    pub optimal_length: f64,
    /// This episode's success-weighted inverse-path-length term.
    pub spl_term: f64,
    /// `category:step` for found targets, `category:-` otherwise.
    pub found: String,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicySummary {
    pub policy: Policy,
    pub episodes: usize,
    pub invalid: usize,
    pub sr: f64,
    pub mspl: f64,
    pub mean_steps: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub suite: String,
    pub config_digest: String,
    pub policies: Vec<PolicySummary>,
    pub rows: Vec<EpisodeRow>,
}

impl BenchmarkReport {
    pub fn summary_for(&self, policy: Policy) -> Option<&PolicySummary> {
        self.policies.iter().find(|p| p.policy == policy)
    }

    /// Deterministic CSV: one row per episode, floats at fixed precision.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# suite={} config_digest={}", self.suite, self.config_digest);
        let _ = writeln!(
            out,
            "index,scene,policy,targets,seed,valid,success,steps,path_length,optimal_length,spl,found,reason"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{:.6},{:.6},{:.6},{},{}",
                r.index,
                r.scene,
                r.policy,
                r.targets.join("|"),
                r.seed,
                r.valid,
                r.success,
                r.steps,
                r.path_length,
                r.optimal_length,
                r.spl_term,
                r.found,
                r.reason
            );
        }
        out
    }
}

/// Run every suite episode under every requested policy.
///
/// `policies` overrides the suite's policy list; `jobs` sizes the worker
/// pool (0 = rayon default).
pub fn run_benchmark(
    suite: &SuiteConfig,
    base_dir: &Path,
    policies: Option<&[Policy]>,
    jobs: usize,
) -> Result<BenchmarkReport, BenchError> {
    suite.validate()?;
    let policies: Vec<Policy> = policies
        .map(|p| p.to_vec())
        .unwrap_or_else(|| suite.policies.clone());

    // Materialize each scene once.
    let mut scenes: Vec<(String, Arc<GridScene>, String)> = Vec::new();
    for def in &suite.scenes {
        let section = crate::config::SceneSection {
            file: def.file.clone(),
            generator: def.generator.clone(),
        };
        let (scene, text) = section.materialize(base_dir)?;
        scenes.push((def.name.clone(), Arc::new(scene), text));
    }
    let digest = suite_digest(
        suite,
        &scenes
            .iter()
            .map(|(n, _, t)| (n.clone(), t.clone()))
            .collect::<Vec<_>>(),
    );

    struct Task {
        index: usize,
        scene_name: String,
        scene: Arc<GridScene>,
        policy: Policy,
        run: RunSection,
    }
    let mut tasks = Vec::new();
    for &policy in &policies {
        for ep in &suite.episodes {
            let (name, scene, _) = scenes
                .iter()
                .find(|(n, _, _)| n == &ep.scene)
                .expect("validated scene name");
            tasks.push(Task {
                index: tasks.len(),
                scene_name: name.clone(),
                scene: Arc::clone(scene),
                policy,
                run: RunSection {
                    targets: ep.targets.clone(),
                    seed: ep.seed,
                    policy,
                    start: ep.start,
                },
            });
        }
    }

    let params = &suite.params;
    let run_one = |task: &Task| -> EpisodeRow {
        match run_episode(&task.scene, &task.scene_name, params, &task.run, false) {
            Ok((outcome, _)) => episode_row(task.index, &task.scene_name, task.policy, &task.run, &outcome),
            Err(e) => EpisodeRow {
                index: task.index,
                scene: task.scene_name.clone(),
                policy: task.policy,
                targets: task.run.targets.clone(),
                seed: task.run.seed,
                valid: false,
                success: false,
                steps: 0,
                path_length: 0.0,
                optimal_length: 0.0,
                spl_term: 0.0,
                found: String::new(),
                reason: format!("invalid: {e}"),
            },
        }
    };

    let rows: Vec<EpisodeRow> = if jobs == 1 {
        tasks.iter().map(run_one).collect()
    } else {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if jobs > 0 {
            builder = builder.num_threads(jobs);
        }
        let pool = builder.build().map_err(|e| BenchError::Pool(e.to_string()))?;
        pool.install(|| tasks.par_iter().map(run_one).collect())
    };

    let mut summaries = Vec::new();
    for &policy in &policies {
        let policy_rows: Vec<&EpisodeRow> = rows.iter().filter(|r| r.policy == policy).collect();
        let valid: Vec<&EpisodeRow> = policy_rows.iter().copied().filter(|r| r.valid).collect();
        // Rebuild outcomes for metric computation.
        let outcomes: Vec<EpisodeOutcome> = valid
            .iter()
            .map(|r| EpisodeOutcome {
                per_target: Vec::new(),
                success: r.success,
                path_length: r.path_length,
                optimal_length: r.optimal_length,
                steps: r.steps,
                decisions: 0,
                failure_reason: None,
            })
            .collect();
        let mean_steps = if valid.is_empty() {
            0.0
        } else {
            valid.iter().map(|r| r.steps as f64).sum::<f64>() / valid.len() as f64
        };
        summaries.push(PolicySummary {
            policy,
            episodes: valid.len(),
            invalid: policy_rows.len() - valid.len(),
            sr: success_rate(&outcomes),
            mspl: mspl(&outcomes),
            mean_steps,
        });
    }

    Ok(BenchmarkReport {
        suite: suite.name.clone(),
        config_digest: digest,
        policies: summaries,
        rows,
    })
}

fn episode_row(
    index: usize,
    scene: &str,
    policy: Policy,
    run: &RunSection,
    outcome: &EpisodeOutcome,
) -> EpisodeRow {
    let spl_term = if !outcome.success {
        0.0
    } else if outcome.optimal_length <= 0.0 {
        1.0
    } else {
        outcome.optimal_length / outcome.path_length.max(outcome.optimal_length)
    };
    EpisodeRow {
        index,
        scene: scene.to_string(),
        policy,
        targets: run.targets.clone(),
        seed: run.seed,
        valid: true,
        success: outcome.success,
        steps: outcome.steps,
        path_length: outcome.path_length,
        optimal_length: outcome.optimal_length,
        spl_term,
        found: outcome
            .per_target
            .iter()
            .map(|t| match t.step_found {
                Some(s) => format!("{}:{}", t.category, s),
                None => format!("{}:-", t.category),
            })
            .collect::<Vec<_>>()
            .join(";"),
        reason: outcome
            .failure_reason
            .clone()
            .unwrap_or_else(|| "all_found".into()),
    }
}
