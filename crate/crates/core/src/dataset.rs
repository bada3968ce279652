//! Record validation, corpus statistics and quota-balanced subset selection.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bbox::NormBox;
use crate::geometry::{apply_sequence, Action, Motion};
use crate::parse::{parse_action_sequence, parse_bbox, parse_boolean, preprocess, BoxFormat};
use crate::tasks::{
    render_prompt, serialize_action_text, ActionStyle, Direction, SourceBucket, TaskFamily,
    TaskKind, TaskRecord, IMAGE_TOKEN,
};

/// Tolerance when replaying meta actions onto the target pose.
pub const REPLAY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    MalformedAnswer,
    InvalidBox,
    ActionMismatch,
    Schema,
}

impl RejectReason {
    pub fn code(self) -> &'static str {
        match self {
            RejectReason::MalformedAnswer => "malformed_answer",
            RejectReason::InvalidBox => "invalid_box",
            RejectReason::ActionMismatch => "action_mismatch",
            RejectReason::Schema => "schema",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{reason}: {detail}")]
pub struct Rejection {
    pub reason: RejectReason,
    pub detail: &'static str,
}

fn reject(reason: RejectReason, detail: &'static str) -> Result<(), Rejection> {
    Err(Rejection { reason, detail })
}

/// The answer after parsing under its task grammar.
enum ParsedAnswer {
    Actions(Vec<Action>),
    Binary(bool),
    Box(NormBox),
}

fn parse_answer(task: TaskKind, answer: &str) -> Result<ParsedAnswer, Rejection> {
    let malformed = |detail| Rejection {
        reason: RejectReason::MalformedAnswer,
        detail,
    };
    match task.family() {
        TaskFamily::Motion | TaskFamily::Sequence => {
            let parsed = parse_action_sequence(&preprocess(answer));
            if !task.sequence_len().contains(&parsed.len()) {
                return Err(malformed("wrong number of actions"));
            }
            let mut actions = Vec::with_capacity(parsed.len());
            for p in &parsed {
                // sub-centimeter or sub-degree values cannot be on the grid
                let a = Action::from_value(p.kind, p.value).map_err(|_| Rejection {
                    reason: RejectReason::ActionMismatch,
                    detail: "magnitude is off the action grid",
                })?;
                actions.push(a);
            }
            if serialize_action_text(&actions, ActionStyle::Semicolon) != answer {
                return Err(malformed("answer is not in canonical form"));
            }
            if task.family() == TaskFamily::Motion {
                let want = if task == TaskKind::A1 {
                    Motion::Translation
                } else {
                    Motion::Rotation
                };
                if actions[0].kind().motion() != want {
                    return Err(malformed("wrong motion type for the task"));
                }
            }
            Ok(ParsedAnswer::Actions(actions))
        }
        TaskFamily::Binary => {
            let allowed = if task == TaskKind::A4 {
                ["true", "false"]
            } else {
                ["yes", "no"]
            };
            if !allowed.contains(&answer) {
                return Err(malformed("binary answer outside the task vocabulary"));
            }
            Ok(ParsedAnswer::Binary(
                parse_boolean(answer).expect("vocabulary parses"),
            ))
        }
        TaskFamily::BoxLocalization => {
            let p = parse_bbox(answer)
                .filter(|p| p.format == BoxFormat::Exact)
                .ok_or(malformed("answer is not a bare bbox"))?;
            let fits = p.coords.iter().all(|c| c.abs() <= 1e6);
            let [x1, y1, x2, y2] = p.coords.map(|c| c as i32);
            let b = NormBox::new(x1, y1, x2, y2);
            if !fits || b.to_string() != answer {
                return Err(malformed("answer is not in canonical form"));
            }
            Ok(ParsedAnswer::Box(b))
        }
    }
}

/// Check one record; the error carries the reason code.
///
/// Checks run in the order schema shape, answer grammar, boxes, actions,
/// prompt text, so a record with several defects reports the earliest.
pub fn validate_record(rec: &TaskRecord) -> Result<(), Rejection> {
    use RejectReason::*;
    let task = rec.task;
    let meta = &rec.meta;

    if rec.id.is_empty() {
        return reject(Schema, "empty id");
    }
    if rec.direction != task.direction() {
        return reject(Schema, "direction does not match task");
    }
    if rec.images.len() != task.image_count()
        || rec.prompt.matches(IMAGE_TOKEN).count() != task.image_count()
    {
        return reject(Schema, "wrong number of views");
    }
    if !rec.source_bucket.accepts(task) {
        return reject(Schema, "task does not belong in this bucket");
    }
    let (nb, nl) = match task {
        TaskKind::D1 | TaskKind::D3 => (2, 1),
        TaskKind::D2 => (1, 1),
        TaskKind::D4 => (2, 2),
        _ => (0, 0),
    };
    if meta.boxes.len() != nb || meta.labels.len() != nl {
        return reject(Schema, "meta boxes or labels have the wrong shape");
    }
    if (task == TaskKind::A4) != meta.claim.is_some() {
        return reject(Schema, "claim present on the wrong task");
    }

    let answer = parse_answer(task, &rec.answer)?;

    if let ParsedAnswer::Box(b) = &answer {
        if !b.is_valid() {
            return reject(InvalidBox, "answer box out of range or unordered");
        }
    }
    if meta.boxes.iter().any(|b| !b.is_valid()) {
        return reject(InvalidBox, "meta box out of range or unordered");
    }

    let gt = meta.actions.steps();
    if !meta.actions.is_on_grid() {
        return reject(ActionMismatch, "meta actions are off the action grid");
    }
    if !task.sequence_len().contains(&gt.len()) {
        return reject(ActionMismatch, "meta program has the wrong number of actions");
    }
    let replay = apply_sequence(meta.source_pose, gt);
    if !replay.approx_eq(&meta.target_pose, REPLAY_TOLERANCE, REPLAY_TOLERANCE) {
        return reject(ActionMismatch, "meta actions do not reach the target pose");
    }
    match &answer {
        ParsedAnswer::Actions(a) => {
            if a.iter().any(|a| !a.is_on_grid()) {
                return reject(ActionMismatch, "answer magnitude is off the action grid");
            }
            if a.as_slice() != gt {
                return reject(ActionMismatch, "answer differs from meta actions");
            }
        }
        ParsedAnswer::Binary(label) if task == TaskKind::A4 => {
            let claim = meta.claim.as_ref().expect("checked above");
            if !claim.is_on_grid() {
                return reject(ActionMismatch, "claim is off the action grid");
            }
            let reaches = crate::forge::indistinguishable(
                &apply_sequence(meta.source_pose, claim),
                &meta.target_pose,
            );
            if *label != (claim == &meta.actions) || (!*label && reaches) {
                return reject(ActionMismatch, "claim label disagrees with the replay");
            }
        }
        ParsedAnswer::Box(b) => {
            if *b != meta.boxes[1] {
                return reject(Schema, "answer box differs from meta target box");
            }
        }
        ParsedAnswer::Binary(_) => {}
    }

    match render_prompt(task, meta) {
        Ok(p) if p == rec.prompt => Ok(()),
        _ => reject(Schema, "prompt does not match the task template"),
    }
}

/// Counts over the four record groupings.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub total: usize,
    pub by_task: BTreeMap<TaskKind, usize>,
    pub by_direction: BTreeMap<Direction, usize>,
    pub by_bucket: BTreeMap<SourceBucket, usize>,
    pub by_group: BTreeMap<String, usize>,
}

impl CorpusStats {
    pub fn task(&self, t: TaskKind) -> usize {
        self.by_task.get(&t).copied().unwrap_or(0)
    }

    pub fn direction(&self, d: Direction) -> usize {
        self.by_direction.get(&d).copied().unwrap_or(0)
    }

    pub fn bucket(&self, b: SourceBucket) -> usize {
        self.by_bucket.get(&b).copied().unwrap_or(0)
    }
}

/// Every task, direction and bucket appears as a key, with zero counts
/// when absent.
pub fn corpus_stats<'a, I>(records: I) -> CorpusStats
where
    I: IntoIterator<Item = &'a TaskRecord>,
{
    let mut s = CorpusStats::default();
    for t in TaskKind::ALL {
        s.by_task.insert(t, 0);
    }
    for d in Direction::ALL {
        s.by_direction.insert(d, 0);
    }
    for b in SourceBucket::ALL {
        s.by_bucket.insert(b, 0);
    }
    for r in records {
        s.total += 1;
        *s.by_task.entry(r.task).or_default() += 1;
        *s.by_direction.entry(r.direction).or_default() += 1;
        *s.by_bucket.entry(r.source_bucket).or_default() += 1;
        *s.by_group.entry(r.meta.trajectory_group.clone()).or_default() += 1;
    }
    s
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BalanceQuota {
    pub per_task: BTreeMap<TaskKind, usize>,
    pub per_bucket: BTreeMap<SourceBucket, usize>,
}

impl Default for BalanceQuota {
    /// 125 per task, 250 per bucket, 1000 in total.
    fn default() -> Self {
        BalanceQuota::uniform(125, 250)
    }
}

impl BalanceQuota {
    pub fn uniform(per_task: usize, per_bucket: usize) -> Self {
        BalanceQuota {
            per_task: TaskKind::ALL.iter().map(|t| (*t, per_task)).collect(),
            per_bucket: SourceBucket::ALL.iter().map(|b| (*b, per_bucket)).collect(),
        }
    }

    pub fn total(&self) -> usize {
        self.per_task.values().sum()
    }

    /// Split the marginals into per-(task, bucket) targets.
    ///
    /// Each task's quota is dealt one record at a time, round-robin over the
    /// buckets that can carry it, skipping buckets that are full. The
    /// rotation continues from task to task so odd quotas alternate.
    pub fn cell_targets(&self) -> Result<BTreeMap<(TaskKind, SourceBucket), usize>, BalanceError> {
        if self.per_bucket.values().sum::<usize>() != self.total() {
            return Err(BalanceError::Quota("task and bucket quotas have different totals"));
        }
        let mut room: BTreeMap<SourceBucket, usize> = self.per_bucket.clone();
        let mut cells = BTreeMap::new();
        // one rotating cursor per bucket family, carried across tasks
        let mut cursor = [0usize; 2];
        for task in TaskKind::ALL {
            let want = self.per_task.get(&task).copied().unwrap_or(0);
            let buckets: Vec<SourceBucket> = SourceBucket::ALL
                .into_iter()
                .filter(|b| b.accepts(task))
                .collect();
            for b in &buckets {
                cells.insert((task, *b), 0usize);
            }
            let k = &mut cursor[task.is_object_grounded() as usize];
            for _ in 0..want {
                let slot = (0..buckets.len())
                    .map(|j| buckets[(*k + j) % buckets.len()])
                    .find(|b| room.get(b).copied().unwrap_or(0) > 0)
                    .ok_or(BalanceError::Quota("bucket quotas cannot absorb the task quotas"))?;
                *room.get_mut(&slot).expect("known bucket") -= 1;
                *cells.get_mut(&(task, slot)).expect("inserted") += 1;
                *k = buckets.iter().position(|b| *b == slot).expect("member") + 1;
            }
        }
        if room.values().any(|r| *r > 0) {
            return Err(BalanceError::Quota("bucket quotas cannot be filled by the task quotas"));
        }
        Ok(cells)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BalanceError {
    #[error("inconsistent quota: {0}")]
    Quota(&'static str),
    #[error("shortage in cell ({task}, {bucket}): need {needed}, have {available}")]
    Shortage {
        task: TaskKind,
        bucket: SourceBucket,
        needed: usize,
        available: usize,
    },
}

/// How evenly trajectory groups are covered inside one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellCoverage {
    pub task: TaskKind,
    pub bucket: SourceBucket,
    pub selected: usize,
    pub groups: usize,
    /// Largest over smallest per-group count among selected groups.
    pub group_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub cells: Vec<CellCoverage>,
    pub skipped_invalid: usize,
}

impl BalanceReport {
    pub fn worst_group_ratio(&self) -> f64 {
        self.cells
            .iter()
            .map(|c| c.group_ratio)
            .fold(1.0, f64::max)
    }
}

/// Select a subset meeting both marginals exactly.
///
/// Cells are visited in fixed (task, bucket) order. Inside a cell the
/// records are grouped by trajectory group, each group is shuffled with a
/// seed derived from `seed` and the cell, and groups are drawn round-robin
/// in key order. Invalid records are skipped.
pub fn balance_subset(
    records: &[TaskRecord],
    quota: &BalanceQuota,
    seed: u64,
) -> Result<(Vec<TaskRecord>, BalanceReport), BalanceError> {
    let targets = quota.cell_targets()?;
    let mut pools: BTreeMap<(TaskKind, SourceBucket), BTreeMap<&str, Vec<&TaskRecord>>> =
        BTreeMap::new();
    let mut skipped = 0;
    for r in records {
        if validate_record(r).is_err() {
            skipped += 1;
            continue;
        }
        pools
            .entry((r.task, r.source_bucket))
            .or_default()
            .entry(r.meta.trajectory_group.as_str())
            .or_default()
            .push(r);
    }

    let mut out = Vec::with_capacity(quota.total());
    let mut cells = Vec::new();
    for (&(task, bucket), &needed) in &targets {
        let empty = BTreeMap::new();
        let groups = pools.get(&(task, bucket)).unwrap_or(&empty);
        let available: usize = groups.values().map(Vec::len).sum();
        if available < needed {
            return Err(BalanceError::Shortage {
                task,
                bucket,
                needed,
                available,
            });
        }
        let mut queues: Vec<Vec<&TaskRecord>> = groups
            .values()
            .enumerate()
            .map(|(gi, g)| {
                let mut g = g.clone();
                let cell_seed = crate::math::Fnv::new()
                    .u64(seed)
                    .str(task.as_str())
                    .str(bucket.as_str())
                    .u64(gi as u64)
                    .finish();
                g.shuffle(&mut ChaCha8Rng::seed_from_u64(cell_seed));
                g.reverse();
                g
            })
            .collect();
        let mut counts = alloc::vec![0usize; queues.len()];
        let mut taken = 0;
        'fill: while taken < needed {
            for (gi, q) in queues.iter_mut().enumerate() {
                if taken == needed {
                    break 'fill;
                }
                if let Some(r) = q.pop() {
                    out.push(r.clone());
                    counts[gi] += 1;
                    taken += 1;
                }
            }
        }
        let used: Vec<usize> = counts.into_iter().filter(|c| *c > 0).collect();
        let ratio = match (used.iter().max(), used.iter().min()) {
            (Some(hi), Some(lo)) => *hi as f64 / *lo as f64,
            _ => 1.0,
        };
        cells.push(CellCoverage {
            task,
            bucket,
            selected: taken,
            groups: used.len(),
            group_ratio: ratio,
        });
    }
    Ok((
        out,
        BalanceReport {
            cells,
            skipped_invalid: skipped,
        },
    ))
}
