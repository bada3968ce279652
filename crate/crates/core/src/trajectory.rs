//! Motion-program sampling, per-frame trajectory expansion and max-displacement
//! pairing.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    apply_action, coalesce, decompose_units, Action, ActionKind, ActionSequence, Motion, Pose,
    ROTATION_GRID_DEG, TRANSLATION_GRID_CM,
};
use crate::scene::{filter_detections, synth_detections, Scene};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrajectoryError {
    #[error("invalid trajectory config: {0}")]
    Config(&'static str),
    #[error("no valid target frame in trajectory")]
    NoValidFrame,
}

/// Short multi-step motion programs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    ForwardThenTurnLeft,
    TurnRightThenForward,
    ShiftLeftThenForwardThenTurnRight,
}

impl Preset {
    pub const ALL: [Preset; 3] = [
        Preset::ForwardThenTurnLeft,
        Preset::TurnRightThenForward,
        Preset::ShiftLeftThenForwardThenTurnRight,
    ];

    pub fn kinds(self) -> &'static [ActionKind] {
        use ActionKind::*;
        match self {
            Preset::ForwardThenTurnLeft => &[Forward, TurnLeft],
            Preset::TurnRightThenForward => &[TurnRight, Forward],
            Preset::ShiftLeftThenForwardThenTurnRight => &[ShiftLeft, Forward, TurnRight],
        }
    }
}

/// The shape of a motion program before magnitudes are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProgramShape {
    Single(ActionKind),
    Preset(Preset),
}

impl ProgramShape {
    pub fn kinds(&self) -> &[ActionKind] {
        match self {
            ProgramShape::Single(k) => core::slice::from_ref(k),
            ProgramShape::Preset(p) => p.kinds(),
        }
    }

    /// Six single-step actions followed by the three presets.
    pub fn all() -> Vec<ProgramShape> {
        ActionKind::ALL
            .iter()
            .map(|k| ProgramShape::Single(*k))
            .chain(Preset::ALL.iter().map(|p| ProgramShape::Preset(*p)))
            .collect()
    }
}

/// Balancing key: `"forward_turnleft:1.0m_30d"`.
pub fn group_key(program: &[Action]) -> String {
    let kinds: Vec<&str> = program.iter().map(|a| a.kind().token()).collect();
    let mags: Vec<String> = program
        .iter()
        .map(|a| match a.kind().motion() {
            Motion::Translation => format!("{:.1}m", a.value()),
            Motion::Rotation => format!("{}d", a.units()),
        })
        .collect();
    format!("{}:{}", kinds.join("_"), mags.join("_"))
}

/// Sampling caps are in grid steps (0.1 m, 10 degrees); per-frame increments
/// are in base units (cm, degrees).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryConfig {
    pub shapes: Vec<ProgramShape>,
    pub max_translation_steps: u32,
    pub max_rotation_steps: u32,
    pub min_frames: usize,
    pub per_frame_translation_cm: u32,
    pub per_frame_rotation_deg: u32,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        TrajectoryConfig {
            shapes: ProgramShape::all(),
            max_translation_steps: 60,
            max_rotation_steps: 10,
            min_frames: 8,
            per_frame_translation_cm: TRANSLATION_GRID_CM,
            per_frame_rotation_deg: ROTATION_GRID_DEG,
        }
    }
}

impl TrajectoryConfig {
    pub fn validate(&self) -> Result<(), TrajectoryError> {
        if self.shapes.is_empty() {
            return Err(TrajectoryError::Config("no program shapes"));
        }
        if self.max_translation_steps == 0 || self.max_rotation_steps == 0 {
            return Err(TrajectoryError::Config("magnitude caps must be positive"));
        }
        if self.per_frame_translation_cm == 0 || self.per_frame_rotation_deg == 0 {
            return Err(TrajectoryError::Config("per-frame increments must be positive"));
        }
        if self.min_frames < 8 {
            return Err(TrajectoryError::Config("min_frames must be at least 8"));
        }
        // one grid step split into base units is the shortest possible trajectory
        if self.min_frames > TRANSLATION_GRID_CM.min(ROTATION_GRID_DEG) as usize {
            return Err(TrajectoryError::Config(
                "min_frames exceeds what a single grid step can be split into",
            ));
        }
        Ok(())
    }

    pub fn max_steps(&self, motion: Motion) -> u32 {
        match motion {
            Motion::Translation => self.max_translation_steps,
            Motion::Rotation => self.max_rotation_steps,
        }
    }

    /// Draw a program: shape uniform over `shapes`, each magnitude uniform on
    /// its grid up to the cap.
    pub fn sample_program<R: Rng>(&self, rng: &mut R) -> (ProgramShape, ActionSequence) {
        let shape = self.shapes[rng.random_range(0..self.shapes.len())];
        let steps = shape
            .kinds()
            .iter()
            .map(|k| {
                let n = rng.random_range(1..=self.max_steps(k.motion()));
                Action::from_grid(*k, n).expect("positive grid count")
            })
            .collect();
        (shape, ActionSequence::new(steps).expect("shapes are non-empty"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub index: usize,
    pub pose: Pose,
    /// Number of per-frame increments executed to reach this frame.
    pub prefix_len: usize,
}

/// An anchor pose, its semantic program, and the per-frame expansion.
///
/// Frame 0 is the anchor; frame `k` follows `k` increments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub anchor: Pose,
    pub program: ActionSequence,
    pub increments: Vec<Action>,
    pub frames: Vec<Frame>,
}

impl Trajectory {
    /// Expand `program` into per-frame increments, refining the step size
    /// until there are at least `config.min_frames` synthesized frames.
    pub fn expand(anchor: Pose, program: ActionSequence, config: &TrajectoryConfig) -> Trajectory {
        let (pt, pr) = (config.per_frame_translation_cm, config.per_frame_rotation_deg);
        let mut increments = Vec::new();
        for k in 1..=pt.max(pr) {
            let st = (pt / k).max(1);
            let sr = (pr / k).max(1);
            increments = program
                .iter()
                .flat_map(|a| {
                    let step = if a.kind().is_rotation() { sr } else { st };
                    decompose_units(a, step).into_vec()
                })
                .collect();
            if increments.len() >= config.min_frames || (st == 1 && sr == 1) {
                break;
            }
        }
        let mut frames = Vec::with_capacity(increments.len() + 1);
        let mut pose = anchor;
        frames.push(Frame {
            index: 0,
            pose,
            prefix_len: 0,
        });
        for (i, inc) in increments.iter().enumerate() {
            pose = apply_action(pose, inc);
            frames.push(Frame {
                index: i + 1,
                pose,
                prefix_len: i + 1,
            });
        }
        Trajectory {
            anchor,
            program,
            increments,
            frames,
        }
    }

    /// Increments executed between the anchor and `frame`.
    pub fn cumulative(&self, frame: usize) -> &[Action] {
        &self.increments[..self.frames[frame].prefix_len]
    }

    pub fn group_key(&self) -> String {
        group_key(&self.program)
    }
}

/// Deterministic trajectory for a seed.
pub fn sample_trajectory(seed: u64, config: &TrajectoryConfig, anchor: Pose) -> Trajectory {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (_, program) = config.sample_program(&mut rng);
    Trajectory::expand(anchor, program, config)
}

/// What makes a trajectory frame an acceptable pairing target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairingMode {
    /// Every frame is valid.
    MotionOnly,
    /// At least one detection survives filtering in both the anchor and the frame.
    ObjectGrounded,
}

/// Anchor view, target view and the semantic program linking them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub scene_id: String,
    pub trajectory_group: String,
    pub source_frame: usize,
    pub target_frame: usize,
    pub source_pose: Pose,
    pub target_pose: Pose,
    pub ground_truth: ActionSequence,
}

/// Pair the anchor with the valid frame farthest from it; later frames win ties.
pub fn max_displacement_pair(
    traj: &Trajectory,
    scene: &Scene,
    mode: PairingMode,
    scene_id: &str,
) -> Result<Transition, TrajectoryError> {
    let anchor_ok = match mode {
        PairingMode::MotionOnly => true,
        PairingMode::ObjectGrounded => {
            !filter_detections(&synth_detections(scene, &traj.anchor)).is_empty()
        }
    };
    if !anchor_ok {
        return Err(TrajectoryError::NoValidFrame);
    }
    let mut best: Option<(usize, f64)> = None;
    for frame in traj.frames.iter().skip(1) {
        let d = traj.anchor.distance_to(&frame.pose);
        if best.is_some_and(|(_, bd)| d < bd) {
            continue;
        }
        let valid = match mode {
            PairingMode::MotionOnly => true,
            PairingMode::ObjectGrounded => {
                !filter_detections(&synth_detections(scene, &frame.pose)).is_empty()
            }
        };
        if valid {
            best = Some((frame.index, d));
        }
    }
    let (target, _) = best.ok_or(TrajectoryError::NoValidFrame)?;
    let ground_truth = ActionSequence::new(coalesce(traj.cumulative(target)))
        .map_err(|_| TrajectoryError::NoValidFrame)?;
    Ok(Transition {
        scene_id: scene_id.into(),
        trajectory_group: traj.group_key(),
        source_frame: 0,
        target_frame: target,
        source_pose: traj.anchor,
        target_pose: traj.frames[target].pose,
        ground_truth,
    })
}
