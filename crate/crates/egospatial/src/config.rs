//! Run configuration: defaults, flag overrides, config-file overrides, and a
//! stable hash of the resolved result.

use std::path::Path;

use egospatial_core::dataset::BalanceQuota;
use egospatial_core::synth::{GenConfig, SceneConfig};
use egospatial_core::trajectory::TrajectoryConfig;
use egospatial_core::TaskKind;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("config file {path} is not valid JSON")]
    Parse {
        path: String,
        source: serde_json::Error,
    },
    #[error("config does not match the schema")]
    Schema(#[source] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Settings that are not properties of the data itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceConfig {
    pub workers: usize,
    /// Bound on requests read but not yet answered.
    pub max_in_flight: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            workers: 4,
            max_in_flight: 1024,
        }
    }
}

/// Everything a run depends on. A run is reproducible from this value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub scenes_per_domain: usize,
    pub scene: SceneConfig,
    pub trajectory: TrajectoryConfig,
    /// Records to generate per task.
    pub per_task: std::collections::BTreeMap<TaskKind, usize>,
    pub attempts_per_record: usize,
    pub quota: BalanceQuota,
    pub service: ServiceConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let gen = GenConfig::default();
        RunConfig {
            seed: gen.seed,
            scenes_per_domain: gen.scenes_per_domain,
            scene: gen.scene,
            trajectory: gen.trajectory,
            per_task: gen.per_task,
            attempts_per_record: gen.attempts_per_record,
            quota: BalanceQuota::default(),
            service: ServiceConfig::default(),
        }
    }
}

/// Flag values; `None` keeps the default.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub scenes_per_domain: Option<usize>,
    pub per_task: Option<usize>,
    pub min_objects: Option<usize>,
    pub max_objects: Option<usize>,
    pub room_extent: Option<f64>,
    pub camera_height: Option<f64>,
    pub horizontal_fov: Option<f64>,
    pub min_frames: Option<usize>,
    pub attempts_per_record: Option<usize>,
    pub quota_per_task: Option<usize>,
    pub quota_per_bucket: Option<usize>,
    pub workers: Option<usize>,
    pub max_in_flight: Option<usize>,
}

impl RunConfig {
    /// Defaults, then flags, then the config file (which wins).
    pub fn resolve(flags: &Overrides, file: Option<&Path>) -> Result<RunConfig, ConfigError> {
        let mut cfg = RunConfig::default();
        cfg.apply(flags);
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
                path: path.display().to_string(),
                source,
            })?;
            let patch: Value = serde_json::from_str(&text).map_err(|source| ConfigError::Parse {
                path: path.display().to_string(),
                source,
            })?;
            let mut base = serde_json::to_value(&cfg).expect("config serializes");
            merge(&mut base, patch);
            cfg = serde_json::from_value(base).map_err(ConfigError::Schema)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, f: &Overrides) {
        if let Some(v) = f.seed {
            self.seed = v;
        }
        if let Some(v) = f.scenes_per_domain {
            self.scenes_per_domain = v;
        }
        if let Some(v) = f.per_task {
            self.per_task = TaskKind::ALL.iter().map(|t| (*t, v)).collect();
        }
        if let Some(v) = f.min_objects {
            self.scene.min_objects = v;
        }
        if let Some(v) = f.max_objects {
            self.scene.max_objects = v;
        }
        if let Some(v) = f.room_extent {
            self.scene.room_extent = v;
        }
        if let Some(v) = f.camera_height {
            self.scene.camera_height = v;
        }
        if let Some(v) = f.horizontal_fov {
            self.scene.horizontal_fov = v;
        }
        if let Some(v) = f.min_frames {
            self.trajectory.min_frames = v;
        }
        if let Some(v) = f.attempts_per_record {
            self.attempts_per_record = v;
        }
        if let Some(v) = f.quota_per_task {
            self.quota.per_task = TaskKind::ALL.iter().map(|t| (*t, v)).collect();
        }
        if let Some(v) = f.quota_per_bucket {
            self.quota.per_bucket = egospatial_core::SourceBucket::ALL
                .iter()
                .map(|b| (*b, v))
                .collect();
        }
        if let Some(v) = f.workers {
            self.service.workers = v;
        }
        if let Some(v) = f.max_in_flight {
            self.service.max_in_flight = v;
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.gen_config()
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.quota
            .cell_targets()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.service.workers == 0 || self.service.max_in_flight == 0 {
            return Err(ConfigError::Invalid(
                "service workers and max_in_flight must be positive".into(),
            ));
        }
        egospatial_core::scene::Scene::new(
            Vec::new(),
            self.scene.camera_height,
            egospatial_core::scene::CameraIntrinsics {
                horizontal_fov: self.scene.horizontal_fov,
            },
            0,
        )
        .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(())
    }

    pub fn gen_config(&self) -> GenConfig {
        GenConfig {
            seed: self.seed,
            scenes_per_domain: self.scenes_per_domain,
            scene: self.scene.clone(),
            trajectory: self.trajectory.clone(),
            per_task: self.per_task.clone(),
            attempts_per_record: self.attempts_per_record,
        }
    }

    /// SHA-256 over the compact JSON of the resolved config.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}

/// Recursive object merge; non-object values in `patch` replace `base`.
fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                merge(b.entry(k).or_insert(Value::Null), v);
            }
        }
        (b, p) => *b = p,
    }
}
