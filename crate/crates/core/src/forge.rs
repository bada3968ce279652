//! Turning transitions into task records.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::{apply_sequence, Action, ActionSequence, Motion, Pose};
use crate::scene::{filter_detections, synth_detections, visibility_after, Detection, Scene, SceneError};
use crate::tasks::{
    render_prompt, serialize_action_text, ActionStyle, RecordMeta, SourceBucket, TaskKind,
    TaskRecord,
};
use crate::trajectory::{TrajectoryConfig, Transition};

/// A false claim must land farther than this from the true endpoint in
/// position (meters) or heading (degrees).
pub const CLAIM_SEPARATION: (f64, f64) = (0.5, 5.0);

/// Smallest magnitude change used for a false claim, in grid steps
/// (1.0 m and 20 degrees).
pub const MIN_TRANSLATION_PERTURBATION_STEPS: u32 = 10;
pub const MIN_ROTATION_PERTURBATION_STEPS: u32 = 2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TaskError {
    #[error("{task} precondition failed: {reason}")]
    Precondition { task: TaskKind, reason: &'static str },
    #[error("{task} cannot use bucket {bucket}")]
    Bucket { task: TaskKind, bucket: SourceBucket },
    #[error(transparent)]
    Scene(#[from] SceneError),
}

/// Everything besides the transition that instantiation needs.
#[derive(Debug, Clone, Copy)]
pub struct TaskContext<'a> {
    pub scene: &'a Scene,
    pub bucket: SourceBucket,
    /// Record id.
    pub id: &'a str,
    /// Prefix for view identifiers; views are `{prefix}/frame_{index:03}`.
    pub view_prefix: &'a str,
    /// Drives A4/D4 polarity, D2 object choice and false-claim sampling.
    pub seed: u64,
    /// Magnitude caps for false claims.
    pub config: &'a TrajectoryConfig,
}

fn fail(task: TaskKind, reason: &'static str) -> TaskError {
    TaskError::Precondition { task, reason }
}

/// Two poses a claim cannot tell apart: within [`CLAIM_SEPARATION`] in both
/// position and heading.
pub fn indistinguishable(a: &Pose, b: &Pose) -> bool {
    a.distance_to(b) <= CLAIM_SEPARATION.0 && a.yaw_gap(b) <= CLAIM_SEPARATION.1
}

fn endpoints_separated(a: &[Action], b: &[Action]) -> bool {
    // margin keeps the verdict stable when replayed from a different source pose
    const MARGIN: f64 = 1e-6;
    let origin = Pose::default();
    let (pa, pb) = (apply_sequence(origin, a), apply_sequence(origin, b));
    pa.distance_to(&pb) > CLAIM_SEPARATION.0 + MARGIN
        || pa.yaw_gap(&pb) > CLAIM_SEPARATION.1 + MARGIN
}

fn separation_score(a: &[Action], b: &[Action]) -> f64 {
    let origin = Pose::default();
    let (pa, pb) = (apply_sequence(origin, a), apply_sequence(origin, b));
    (pa.distance_to(&pb) / CLAIM_SEPARATION.0).max(pa.yaw_gap(&pb) / CLAIM_SEPARATION.1)
}

/// Perturb `seq` into a claim that does not describe the same motion, with
/// the default magnitude caps.
pub fn make_false_claim(seq: &ActionSequence, seed: u64) -> ActionSequence {
    make_false_claim_within(seq, seed, &TrajectoryConfig::default())
}

/// Apply exactly one of: a direction flip of one action, an on-grid magnitude
/// change of at least 1.0 m or 20 degrees within the caps, or a swap of two
/// adjacent actions of different kinds.
///
/// The perturbation type is drawn uniformly among types that have a candidate
/// whose endpoint is well separated from the original; if no such candidate
/// exists (only possible with tiny caps) the most separated one is returned.
pub fn make_false_claim_within(
    seq: &ActionSequence,
    seed: u64,
    config: &TrajectoryConfig,
) -> ActionSequence {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let steps = seq.steps();
    let mut by_type: [Vec<Vec<Action>>; 3] = [Vec::new(), Vec::new(), Vec::new()];

    for i in 0..steps.len() {
        let mut v = steps.to_vec();
        v[i] = v[i].flipped();
        by_type[0].push(v);
    }
    for (i, a) in steps.iter().enumerate() {
        let motion = a.kind().motion();
        let grid = motion.grid_units();
        let cap = config.max_steps(motion);
        let floor = match motion {
            Motion::Translation => MIN_TRANSLATION_PERTURBATION_STEPS,
            Motion::Rotation => MIN_ROTATION_PERTURBATION_STEPS,
        };
        let Some(cur) = a.grid_steps() else { continue };
        for n in 1..=cap {
            if n.abs_diff(cur) >= floor {
                let mut v = steps.to_vec();
                v[i] = a.with_units(n * grid).expect("positive");
                by_type[1].push(v);
            }
        }
    }
    for i in 1..steps.len() {
        if steps[i - 1].kind() != steps[i].kind() {
            let mut v = steps.to_vec();
            v.swap(i - 1, i);
            by_type[2].push(v);
        }
    }

    let good: Vec<Vec<Vec<Action>>> = by_type
        .iter()
        .map(|cands| {
            cands
                .iter()
                .filter(|c| endpoints_separated(steps, c))
                .cloned()
                .collect()
        })
        .collect();
    let types: Vec<usize> = (0..3).filter(|t| !good[*t].is_empty()).collect();
    let chosen = match types.choose(&mut rng) {
        Some(t) => good[*t].choose(&mut rng).expect("non-empty").clone(),
        None => by_type
            .into_iter()
            .flatten()
            .max_by(|a, b| separation_score(steps, a).total_cmp(&separation_score(steps, b)))
            .expect("a flip always exists"),
    };
    ActionSequence::new(chosen).expect("same length as input")
}

fn views(prefix: &str, t: &Transition, count: usize) -> Vec<String> {
    [t.source_frame, t.target_frame]
        .iter()
        .take(count)
        .map(|f| format!("{prefix}/frame_{f:03}"))
        .collect()
}

fn seeded_rng(seed: u64, task: TaskKind) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (task as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

fn detections(scene: &Scene, pose: &Pose) -> Vec<Detection> {
    filter_detections(&synth_detections(scene, pose))
}

/// Build one record from a transition.
///
/// Fails with a typed error when the transition does not meet the task's
/// preconditions; callers skip such pairs.
pub fn instantiate(
    task: TaskKind,
    transition: &Transition,
    ctx: &TaskContext<'_>,
) -> Result<TaskRecord, TaskError> {
    if !ctx.bucket.accepts(task) {
        return Err(TaskError::Bucket {
            task,
            bucket: ctx.bucket,
        });
    }
    let gt = &transition.ground_truth;
    if !gt.is_on_grid() {
        return Err(fail(task, "ground truth is off the action grid"));
    }
    if !task.sequence_len().contains(&gt.len()) {
        return Err(fail(task, "ground-truth program has the wrong number of actions"));
    }
    let mut rng = seeded_rng(ctx.seed, task);
    let mut meta = RecordMeta {
        actions: gt.clone(),
        boxes: Vec::new(),
        labels: Vec::new(),
        trajectory_group: transition.trajectory_group.clone(),
        claim: None,
        scene_id: transition.scene_id.clone(),
        object_ids: Vec::new(),
        source_pose: transition.source_pose,
        target_pose: transition.target_pose,
    };
    let answer = match task {
        TaskKind::A1 | TaskKind::A2 => {
            let want = if task == TaskKind::A1 {
                Motion::Translation
            } else {
                Motion::Rotation
            };
            if gt[0].kind().motion() != want {
                return Err(fail(task, "ground truth is not a single action of the right type"));
            }
            gt[0].to_string()
        }
        TaskKind::A3 => serialize_action_text(gt, ActionStyle::Semicolon),
        TaskKind::A4 => {
            let truth = rng.random_bool(0.5);
            let claim = if truth {
                gt.clone()
            } else {
                make_false_claim_within(gt, rng.random(), ctx.config)
            };
            let label = claim == *gt;
            meta.claim = Some(claim);
            if label { "true" } else { "false" }.into()
        }
        TaskKind::D1 | TaskKind::D3 => {
            let src = detections(ctx.scene, &transition.source_pose);
            let tgt = detections(ctx.scene, &transition.target_pose);
            let (s, t) = src
                .iter()
                .find_map(|s| tgt.iter().find(|t| t.object_id == s.object_id).map(|t| (s, t)))
                .ok_or_else(|| fail(task, "no detection matched across both views"))?;
            meta.boxes = vec![s.bbox, t.bbox];
            meta.labels = vec![s.label.clone()];
            meta.object_ids = vec![s.object_id.clone()];
            if task == TaskKind::D1 {
                t.bbox.to_string()
            } else {
                serialize_action_text(gt, ActionStyle::Semicolon)
            }
        }
        TaskKind::D2 => {
            let src = detections(ctx.scene, &transition.source_pose);
            let s = src
                .choose(&mut rng)
                .ok_or_else(|| fail(task, "no filtered detection in the source view"))?;
            let visible = visibility_after(ctx.scene, &transition.source_pose, gt, &s.object_id)?;
            meta.boxes = vec![s.bbox];
            meta.labels = vec![s.label.clone()];
            meta.object_ids = vec![s.object_id.clone()];
            if visible { "no" } else { "yes" }.into()
        }
        TaskKind::D4 => {
            let src = detections(ctx.scene, &transition.source_pose);
            let tgt = detections(ctx.scene, &transition.target_pose);
            let positive = |s: &Detection| tgt.iter().find(|t| t.object_id == s.object_id);
            let negative = |s: &Detection| {
                let others = || tgt.iter().filter(|t| t.object_id != s.object_id);
                others()
                    .find(|t| t.label == s.label)
                    .or_else(|| others().next())
            };
            let want_same = rng.random_bool(0.5);
            let pick = |same: bool| {
                src.iter().find_map(|s| {
                    let t = if same { positive(s) } else { negative(s) };
                    t.map(|t| (s, t, same))
                })
            };
            let (s, t, same) = pick(want_same)
                .or_else(|| pick(!want_same))
                .ok_or_else(|| fail(task, "no detection pair in the two views"))?;
            meta.boxes = vec![s.bbox, t.bbox];
            meta.labels = vec![s.label.clone(), t.label.clone()];
            meta.object_ids = vec![s.object_id.clone(), t.object_id.clone()];
            if same { "yes" } else { "no" }.into()
        }
    };
    let prompt = render_prompt(task, &meta).expect("meta is shaped for the task");
    Ok(TaskRecord {
        id: ctx.id.into(),
        task,
        direction: task.direction(),
        source_bucket: ctx.bucket,
        images: views(ctx.view_prefix, transition, task.image_count()),
        prompt,
        answer,
        meta,
    })
}
