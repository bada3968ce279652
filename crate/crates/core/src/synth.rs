//! Seeded scene generation and end-to-end record generation.
//!
//! Everything here is a pure function of the configuration and seed. Work is
//! split into independent (task, domain) cells so callers can run cells in
//! parallel and still get identical output.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{validate_record, Rejection};
use crate::forge::{instantiate, TaskContext};
use crate::geometry::{Motion, Pose};
use crate::math::{self, Fnv};
use crate::scene::{CameraIntrinsics, Scene, SceneError, SceneObject};
use crate::tasks::{SourceBucket, TaskKind, TaskRecord};
use crate::trajectory::{
    max_displacement_pair, PairingMode, ProgramShape, Trajectory, TrajectoryConfig,
    TrajectoryError,
};

/// Object vocabulary with nominal sizes (x, y, z in meters) and the height of
/// the surface the object rests on.
pub const OBJECT_LIBRARY: [(&str, [f64; 3], f64); 12] = [
    ("chair", [0.5, 0.5, 0.9], 0.0),
    ("table", [1.4, 0.8, 0.75], 0.0),
    ("sofa", [2.0, 0.9, 0.85], 0.0),
    ("cabinet", [1.0, 0.5, 1.4], 0.0),
    ("bed", [1.6, 2.0, 0.6], 0.0),
    ("bookshelf", [1.0, 0.35, 1.9], 0.0),
    ("refrigerator", [0.8, 0.7, 1.8], 0.0),
    ("desk", [1.2, 0.6, 0.75], 0.0),
    ("microwave", [0.5, 0.4, 0.3], 0.9),
    ("monitor", [0.6, 0.2, 0.4], 0.75),
    ("lamp", [0.4, 0.4, 1.5], 0.0),
    ("plant", [0.5, 0.5, 1.0], 0.0),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub min_objects: usize,
    pub max_objects: usize,
    /// Objects are placed in `[-room_extent, room_extent]` on both floor axes.
    pub room_extent: f64,
    pub camera_height: f64,
    pub horizontal_fov: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            min_objects: 6,
            max_objects: 14,
            room_extent: 6.0,
            camera_height: 1.5,
            horizontal_fov: 90.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid scene config: {0}")]
    Config(&'static str),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    /// A generated record failed validation; this is a bug, not bad luck.
    #[error("generated record {id} failed validation: {rejection}")]
    Invalid { id: String, rejection: Rejection },
    #[error("no program shape in the config can produce {0} records")]
    NoShape(TaskKind),
    #[error("gave up on ({task}, {bucket}) after {attempts} attempts with {made} of {wanted} records")]
    Exhausted {
        task: TaskKind,
        bucket: SourceBucket,
        attempts: usize,
        made: usize,
        wanted: usize,
    },
}

impl SceneConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.min_objects == 0 || self.min_objects > self.max_objects {
            return Err(SynthError::Config("object count range is empty"));
        }
        if !(self.room_extent.is_finite() && self.room_extent > 0.0) {
            return Err(SynthError::Config("room extent must be positive"));
        }
        Ok(())
    }
}

/// Build one scene. Ids are `o00`, `o01`, ...; sizes are jittered by up to
/// 20% around the library values.
pub fn generate_scene(seed: u64, config: &SceneConfig) -> Result<Scene, SynthError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(config.min_objects..=config.max_objects);
    let ext = config.room_extent;
    let objects = (0..n)
        .map(|i| {
            let (label, base, lift) = *OBJECT_LIBRARY.choose(&mut rng).expect("non-empty");
            let size = base.map(|s| s * rng.random_range(0.8..1.2));
            let x = rng.random_range(-ext..ext);
            let y = rng.random_range(-ext..ext);
            SceneObject {
                id: format!("o{i:02}"),
                label: label.into(),
                center: [x, y, lift + size[2] / 2.0],
                size,
            }
        })
        .collect();
    let intrinsics = CameraIntrinsics {
        horizontal_fov: config.horizontal_fov,
    };
    Ok(Scene::new(objects, config.camera_height, intrinsics, seed)?)
}

pub fn scene_id(index: usize) -> String {
    format!("scene_{index:04}")
}

/// Seed of scene `index` under a run seed.
pub fn scene_seed(run_seed: u64, index: usize) -> u64 {
    Fnv::new().u64(run_seed).str("scene").u64(index as u64).finish()
}

pub fn generate_scenes(run_seed: u64, count: usize, config: &SceneConfig) -> Result<Vec<Scene>, SynthError> {
    (0..count)
        .map(|i| generate_scene(scene_seed(run_seed, i), config))
        .collect()
}

/// Camera pose 1.5-5 m from a random object, looking straight at it.
pub fn sample_anchor<R: Rng>(scene: &Scene, rng: &mut R) -> Pose {
    let Some(target) = scene.objects.choose(rng) else {
        return Pose::new(0.0, 0.0, rng.random_range(-17..=18_i32) as f64 * 10.0);
    };
    let bearing = rng.random_range(0.0..360.0_f64).to_radians();
    let dist = rng.random_range(1.5..5.0);
    let (cx, cy) = (target.center[0], target.center[1]);
    let (x, y) = (cx - dist * math::sin(bearing), cy - dist * math::cos(bearing));
    // heading (sin yaw, cos yaw) points from camera to object
    let yaw = math::atan2(cx - x, cy - y).to_degrees();
    Pose::new(x, y, yaw)
}

/// Program shapes from `shapes` that can satisfy `task`'s preconditions.
pub fn shapes_for(task: TaskKind, shapes: &[ProgramShape]) -> Vec<ProgramShape> {
    let len = task.sequence_len();
    shapes
        .iter()
        .copied()
        .filter(|s| len.contains(&s.kinds().len()))
        .filter(|s| match task {
            TaskKind::A1 => s.kinds()[0].motion() == Motion::Translation,
            TaskKind::A2 => s.kinds()[0].motion() == Motion::Rotation,
            _ => true,
        })
        .collect()
}

/// Generation settings for a record corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub seed: u64,
    /// Scenes per domain; scene `i` belongs to domain `i % 2`.
    pub scenes_per_domain: usize,
    pub scene: SceneConfig,
    pub trajectory: TrajectoryConfig,
    /// Records per task, split evenly over the two domains.
    pub per_task: BTreeMap<TaskKind, usize>,
    /// Attempts allowed per requested record before giving up.
    pub attempts_per_record: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            seed: 0,
            scenes_per_domain: 16,
            scene: SceneConfig::default(),
            trajectory: TrajectoryConfig::default(),
            per_task: TaskKind::ALL.iter().map(|t| (*t, 10)).collect(),
            attempts_per_record: 200,
        }
    }
}

impl GenConfig {
    pub fn uniform(seed: u64, per_task: usize) -> Self {
        GenConfig {
            seed,
            per_task: TaskKind::ALL.iter().map(|t| (*t, per_task)).collect(),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        self.scene.validate()?;
        self.trajectory.validate()?;
        if self.scenes_per_domain == 0 {
            return Err(SynthError::Config("need at least one scene per domain"));
        }
        Ok(())
    }

    /// Requested records for `task` in `domain`; domain 0 takes the odd one.
    pub fn cell_target(&self, task: TaskKind, domain: usize) -> usize {
        let n = self.per_task.get(&task).copied().unwrap_or(0);
        if domain == 0 {
            n.div_ceil(2)
        } else {
            n / 2
        }
    }
}

/// All (task, domain) cells in generation order.
pub fn cells() -> Vec<(TaskKind, usize)> {
    TaskKind::ALL
        .iter()
        .flat_map(|t| [(*t, 0), (*t, 1)])
        .collect()
}

/// Generate the records of one (task, domain) cell.
///
/// Each attempt draws a scene of the domain, an anchor and a program, pairs
/// the anchor with its max-displacement frame and instantiates the task;
/// attempts whose transition misses the task preconditions are skipped.
pub fn generate_cell(
    config: &GenConfig,
    scenes: &[Scene],
    task: TaskKind,
    domain: usize,
) -> Result<Vec<TaskRecord>, SynthError> {
    let wanted = config.cell_target(task, domain);
    let bucket = SourceBucket::for_task(domain, task);
    let shapes = shapes_for(task, &config.trajectory.shapes);
    if shapes.is_empty() && wanted > 0 {
        return Err(SynthError::NoShape(task));
    }
    let traj_cfg = TrajectoryConfig {
        shapes,
        ..config.trajectory.clone()
    };
    let domain_scenes: Vec<usize> = (0..scenes.len()).filter(|i| i % 2 == domain).collect();
    if domain_scenes.is_empty() && wanted > 0 {
        return Err(SynthError::Config("no scenes for domain"));
    }
    let mode = if task.is_object_grounded() {
        PairingMode::ObjectGrounded
    } else {
        PairingMode::MotionOnly
    };
    let budget = wanted.saturating_mul(config.attempts_per_record);
    let mut out = Vec::with_capacity(wanted);
    let mut attempt = 0;
    while out.len() < wanted {
        if attempt >= budget {
            return Err(SynthError::Exhausted {
                task,
                bucket,
                attempts: attempt,
                made: out.len(),
                wanted,
            });
        }
        let seed = Fnv::new()
            .u64(config.seed)
            .str(task.as_str())
            .u64(domain as u64)
            .u64(attempt as u64)
            .finish();
        attempt += 1;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let si = domain_scenes[rng.random_range(0..domain_scenes.len())];
        let scene = &scenes[si];
        let anchor = sample_anchor(scene, &mut rng);
        let (_, program) = traj_cfg.sample_program(&mut rng);
        let traj = Trajectory::expand(anchor, program, &traj_cfg);
        let sid = scene_id(si);
        let Ok(transition) = max_displacement_pair(&traj, scene, mode, &sid) else {
            continue;
        };
        let id = format!("{}-{}-{:05}", task, bucket, out.len());
        let view_prefix = format!("{sid}/t{seed:016x}");
        let ctx = TaskContext {
            scene,
            bucket,
            id: &id,
            view_prefix: &view_prefix,
            seed: rng.random(),
            config: &traj_cfg,
        };
        let Ok(record) = instantiate(task, &transition, &ctx) else {
            continue;
        };
        validate_record(&record).map_err(|rejection| SynthError::Invalid {
            id: record.id.clone(),
            rejection,
        })?;
        out.push(record);
    }
    Ok(out)
}

/// Generate scenes and every cell sequentially.
pub fn generate_records(config: &GenConfig) -> Result<Vec<TaskRecord>, SynthError> {
    config.validate()?;
    let scenes = generate_scenes(config.seed, 2 * config.scenes_per_domain, &config.scene)?;
    let mut out = Vec::new();
    for (task, domain) in cells() {
        out.extend(generate_cell(config, &scenes, task, domain)?);
    }
    Ok(out)
}
