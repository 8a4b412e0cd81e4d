//! Run and suite configuration.
//!
//! One structured-text (TOML) file carries every parameter that affects a
//! run; unknown keys are rejected and omitted keys take the documented
//! defaults. A SHA-256 digest over the fully resolved configuration plus
//! the scene text is embedded in every results artifact so replays can
//! refuse mismatched inputs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::candidates::DbscanParams;
use crate::geomap::ControllerConfig;
use crate::planner::PomdpParams;
use crate::scenegen::GeneratorSpec;
use crate::valuemap::{AggregationMode, DecayParams};
use crate::world::{DetectionConfig, GridScene, MotionConfig, OracleConfig, SensorSpec};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("configuration error: {0}")]
    Invalid(String),
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error(transparent)]
    Scene(#[from] crate::world::SceneError),
}

/// Search policies runnable by the harness.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize, Hash)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    Openguide,
    NoPomdp,
    NoDecay,
    VlfmLike,
    FinderLike,
    RandomWalk,
}

impl Policy {
    pub const ALL: [Policy; 6] = [
        Policy::Openguide,
        Policy::NoPomdp,
        Policy::NoDecay,
        Policy::VlfmLike,
        Policy::FinderLike,
        Policy::RandomWalk,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Policy::Openguide => "openguide",
            Policy::NoPomdp => "no_pomdp",
            Policy::NoDecay => "no_decay",
            Policy::VlfmLike => "vlfm_like",
            Policy::FinderLike => "finder_like",
            Policy::RandomWalk => "random_walk",
        }
    }

    pub fn parse_name(s: &str) -> Result<Policy, ConfigError> {
        Policy::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| ConfigError::Invalid(format!("unknown policy `{s}`")))
    }
}

impl std::fmt::Display for Policy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Sensor section with a degree-valued field of view.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensorSection {
    pub fov_deg: f64,
    pub max_range: f64,
    pub ray_count: usize,
}

impl Default for SensorSection {
    fn default() -> Self {
        SensorSection {
            fov_deg: 79.0,
            max_range: 5.0,
            ray_count: 181,
        }
    }
}

impl SensorSection {
    pub fn spec(&self) -> SensorSpec {
        SensorSpec {
            fov: self.fov_deg.to_radians(),
            max_range: self.max_range,
            ray_count: self.ray_count,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MotionSection {
    pub step_length: f64,
    pub turn_angle_deg: f64,
}

impl Default for MotionSection {
    fn default() -> Self {
        MotionSection {
            step_length: 0.25,
            turn_angle_deg: 30.0,
        }
    }
}

impl MotionSection {
    pub fn config(&self) -> MotionConfig {
        MotionConfig {
            step_length: self.step_length,
            turn_angle: self.turn_angle_deg.to_radians(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValueMapSection {
    pub tau: f64,
    pub kappa: f64,
    pub aggregation: AggregationMode,
    /// Decayed aggregate values below this count as zero for candidates.
    pub value_floor: f64,
}

impl Default for ValueMapSection {
    fn default() -> Self {
        let decay = DecayParams::default();
        ValueMapSection {
            tau: decay.tau,
            kappa: decay.kappa,
            aggregation: AggregationMode::SumNorm,
            value_floor: 0.05,
        }
    }
}

impl ValueMapSection {
    pub fn decay(&self) -> DecayParams {
        DecayParams {
            tau: self.tau,
            kappa: self.kappa,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FrontierSection {
    /// Minimum boundary component size kept as a frontier (cells).
    pub min_cells: usize,
    /// Disc radius for frontier value scoring (meters).
    pub value_radius: f64,
}

impl Default for FrontierSection {
    fn default() -> Self {
        FrontierSection {
            min_cells: 3,
            value_radius: 0.75,
        }
    }
}

/// Every tunable that affects episode dynamics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub episode: EpisodeSection,
    pub sensor: SensorSection,
    pub motion: MotionSection,
    pub detection: DetectionConfig,
    pub oracle: OracleConfig,
    pub valuemap: ValueMapSection,
    pub candidates: DbscanParams,
    pub frontier: FrontierSection,
    pub controller: ControllerConfig,
    pub planner: PomdpParams,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EpisodeSection {
    /// Executed-command cap per episode.
    pub max_steps: usize,
    /// Stop-call success radius (meters).
    pub success_radius: f64,
}

impl Default for EpisodeSection {
    fn default() -> Self {
        EpisodeSection {
            max_steps: 500,
            success_radius: 1.0,
        }
    }
}

/// Optional fixed start pose; omitted means seeded-random over free cells.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartPose {
    pub x: f64,
    pub y: f64,
    pub phi_deg: f64,
}

/// Where the scene comes from: a text file or the procedural generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct SceneSection {
    pub file: Option<PathBuf>,
    pub generator: Option<GeneratorSpec>,
}

impl SceneSection {
    /// Load or generate the scene; returns it with its canonical text form.
    pub fn materialize(&self, base_dir: &Path) -> Result<(GridScene, String), ConfigError> {
        match (&self.file, &self.generator) {
            (Some(path), None) => {
                let full = if path.is_absolute() {
                    path.clone()
                } else {
                    base_dir.join(path)
                };
                let text = std::fs::read_to_string(&full).map_err(|source| ConfigError::Io {
                    path: full.clone(),
                    source,
                })?;
                let scene = GridScene::parse(&text)?;
                Ok((scene, text))
            }
            (None, Some(spec)) => {
                let scene = crate::scenegen::generate_scene(spec)?;
                let text = scene.to_text();
                Ok((scene, text))
            }
            _ => Err(ConfigError::Invalid(
                "scene must set exactly one of `file` or `generator`".into(),
            )),
        }
    }
}

/// One single-episode run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scene: SceneSection,
    pub run: RunSection,
    #[serde(default)]
    pub params: Params,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub targets: Vec<String>,
    pub seed: u64,
    pub policy: Policy,
    #[serde(default)]
    pub start: Option<StartPose>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let cfg: RunConfig = toml::from_str(&text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.run.targets.is_empty() {
            return Err(ConfigError::Invalid("run.targets must be non-empty".into()));
        }
        let mut sorted = self.run.targets.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != self.run.targets.len() {
            return Err(ConfigError::Invalid(
                "run.targets must not repeat categories".into(),
            ));
        }
        if self.params.episode.max_steps == 0 {
            return Err(ConfigError::Invalid("episode.max_steps must be >= 1".into()));
        }
        Ok(())
    }
}

/// A benchmark suite: shared parameters, scene definitions, and episodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub name: String,
    /// Policies benchmarked for every episode.
    pub policies: Vec<Policy>,
    #[serde(default)]
    pub params: Params,
    pub scenes: Vec<SceneDef>,
    pub episodes: Vec<SuiteEpisode>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneDef {
    pub name: String,
    #[serde(default)]
    pub file: Option<PathBuf>,
    #[serde(default)]
    pub generator: Option<GeneratorSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteEpisode {
    /// Name of a scene from `scenes`.
    pub scene: String,
    pub targets: Vec<String>,
    pub seed: u64,
    #[serde(default)]
    pub start: Option<StartPose>,
}

impl SuiteConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let cfg: SuiteConfig = toml::from_str(&text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.episodes.is_empty() {
            return Err(ConfigError::Invalid("suite has no episodes".into()));
        }
        if self.policies.is_empty() {
            return Err(ConfigError::Invalid("suite has no policies".into()));
        }
        for ep in &self.episodes {
            if !self.scenes.iter().any(|s| s.name == ep.scene) {
                return Err(ConfigError::Invalid(format!(
                    "episode references unknown scene `{}`",
                    ep.scene
                )));
            }
            if ep.targets.is_empty() {
                return Err(ConfigError::Invalid(format!(
                    "episode on scene `{}` has no targets",
                    ep.scene
                )));
            }
        }
        Ok(())
    }
}

/// SHA-256 hex digest over the resolved parameters and every input that
/// affects results.
pub fn episode_digest(
    params: &Params,
    policy: Policy,
    targets: &[String],
    seed: u64,
    start: &Option<StartPose>,
    scene_text: &str,
) -> String {
    let mut hasher = Sha256::new();
    let blob = serde_json::json!({
        "params": params,
        "policy": policy,
        "targets": targets,
        "seed": seed,
        "start": start,
    });
    hasher.update(serde_json::to_string(&blob).expect("config serializes").as_bytes());
    hasher.update(b"\x00scene\x00");
    hasher.update(scene_text.as_bytes());
    hex(&hasher.finalize())
}

/// Digest of a whole suite: parameters, policies, scenes, episode list.
pub fn suite_digest(suite: &SuiteConfig, scene_texts: &[(String, String)]) -> String {
    let mut hasher = Sha256::new();
    let blob = serde_json::json!({
        "name": suite.name,
        "policies": suite.policies,
        "params": suite.params,
        "episodes": suite.episodes,
    });
    hasher.update(serde_json::to_string(&blob).expect("suite serializes").as_bytes());
    for (name, text) in scene_texts {
        hasher.update(b"\x00scene\x00");
        hasher.update(name.as_bytes());
        hasher.update(b"\x00");
        hasher.update(text.as_bytes());
    }
    hex(&hasher.finalize())
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
