//! Task-aware scalar reward for the eight spatial tasks.
//!
//! Every task family has its own form:
//!
//! | tasks      | fmt  | sem  | ord  | num  | valid | geo  | extra                |
//! |------------|------|------|------|------|-------|------|----------------------|
//! | A1, A2     | 0.10 | 0.35 |      | 0.55 |       |      |                      |
//! | A3, D3     | 0.10 | 0.25 | 0.35 | 0.30 |       |      | -0.03 per extra step |
//! | A4, D2, D4 | 0.20 | 0.80 |      |      |       |      |                      |
//! | D1         | 0.20 |      |      |      | 0.15  | 0.65 |                      |
//!
//! Responses longer than 200 characters score 0 with zero format credit before
//! any task logic runs. Terms that a task does not use are reported as `None`.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bbox::NormBox;
use crate::geometry::{ActionKind, Motion};
use crate::math;
use crate::parse::{
    is_overlength, parse_action_sequence, parse_bbox, parse_boolean, preprocess, BoxFormat,
    ParsedAction,
};
use crate::tasks::{TaskFamily, TaskKind};

/// Piecewise-linear tolerance band `(full credit at or below, zero at or above)`.
pub const TRANSLATION_TOLERANCE: (f64, f64) = (0.5, 5.0);
pub const ROTATION_TOLERANCE: (f64, f64) = (5.0, 90.0);

/// Per-extra-action deduction for sequence tasks.
pub const EXTRA_ACTION_PENALTY: f64 = 0.03;

/// Format credit for a box embedded in other text.
pub const EMBEDDED_BOX_FORMAT: f64 = 0.4;

/// Coefficients of one task's active terms (inactive terms are 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskWeights {
    pub fmt: f64,
    pub sem: f64,
    pub ord: f64,
    pub num: f64,
    pub geo: f64,
    pub valid: f64,
    pub extra_action_penalty: f64,
}

impl TaskWeights {
    pub const MOTION: TaskWeights = TaskWeights {
        fmt: 0.10,
        sem: 0.35,
        ord: 0.0,
        num: 0.55,
        geo: 0.0,
        valid: 0.0,
        extra_action_penalty: 0.0,
    };
    pub const SEQUENCE: TaskWeights = TaskWeights {
        fmt: 0.10,
        sem: 0.25,
        ord: 0.35,
        num: 0.30,
        geo: 0.0,
        valid: 0.0,
        extra_action_penalty: EXTRA_ACTION_PENALTY,
    };
    pub const BINARY: TaskWeights = TaskWeights {
        fmt: 0.20,
        sem: 0.80,
        ord: 0.0,
        num: 0.0,
        geo: 0.0,
        valid: 0.0,
        extra_action_penalty: 0.0,
    };
    pub const BBOX: TaskWeights = TaskWeights {
        fmt: 0.20,
        sem: 0.0,
        ord: 0.0,
        num: 0.0,
        geo: 0.65,
        valid: 0.15,
        extra_action_penalty: 0.0,
    };

    pub fn for_task(task: TaskKind) -> TaskWeights {
        match task.family() {
            TaskFamily::Motion => Self::MOTION,
            TaskFamily::Sequence => Self::SEQUENCE,
            TaskFamily::Binary => Self::BINARY,
            TaskFamily::BoxLocalization => Self::BBOX,
        }
    }

    /// Sum of the additive coefficients (the penalty is not a weight).
    pub fn total(&self) -> f64 {
        self.fmt + self.sem + self.ord + self.num + self.geo + self.valid
    }
}

/// Weights inside the D1 localization term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoWeights {
    pub iou: f64,
    pub center: f64,
    pub l1: f64,
    pub size: f64,
}

pub const GEO_WEIGHTS: GeoWeights = GeoWeights {
    iou: 0.45,
    center: 0.20,
    l1: 0.20,
    size: 0.15,
};

/// Scalar reward plus every sub-score. `None` marks a term the task does not use.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub reward: f64,
    pub fmt: Option<f64>,
    pub sem: Option<f64>,
    pub num: Option<f64>,
    pub ord: Option<f64>,
    pub geo: Option<f64>,
    pub valid: Option<f64>,
    pub overlength: bool,
    pub extra_action_penalty: f64,
}

impl RewardBreakdown {
    fn overlength() -> Self {
        RewardBreakdown {
            reward: 0.0,
            fmt: Some(0.0),
            overlength: true,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScoreError {
    #[error("unknown task `{0}`")]
    UnknownTask(alloc::string::String),
    #[error("reference does not follow the {task} answer grammar")]
    BadReference { task: TaskKind },
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Numeric precision credit: 1 within the low tolerance, 0 beyond the high
/// one, linear in between.
pub fn s_num(pred: f64, gt: f64, motion: Motion) -> f64 {
    let (lo, hi) = match motion {
        Motion::Translation => TRANSLATION_TOLERANCE,
        Motion::Rotation => ROTATION_TOLERANCE,
    };
    let err = (pred - gt).abs();
    if err <= lo {
        1.0
    } else if err >= hi || err.is_nan() {
        0.0
    } else {
        1.0 - (err - lo) / (hi - lo)
    }
}

/// Ground truth as the reward sees it: a kind and a real magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GtAction {
    pub kind: ActionKind,
    pub value: f64,
}

impl From<ParsedAction> for GtAction {
    fn from(p: ParsedAction) -> Self {
        GtAction {
            kind: p.kind,
            value: p.value,
        }
    }
}

impl From<crate::geometry::Action> for GtAction {
    fn from(a: crate::geometry::Action) -> Self {
        GtAction {
            kind: a.kind(),
            value: a.value(),
        }
    }
}

/// Single-step motion reward (A1, A2). Numeric credit needs a kind match.
pub fn reward_motion(response: &str, gt: GtAction) -> RewardBreakdown {
    let text = preprocess(response);
    let cands = parse_action_sequence(&text);
    let fmt = indicator(!cands.is_empty());
    let mut sem: f64 = 0.0;
    let mut num: f64 = 0.0;
    for c in cands.iter().filter(|c| c.kind == gt.kind) {
        sem = 1.0;
        num = num.max(s_num(c.value, gt.value, gt.kind.motion()));
    }
    let w = TaskWeights::MOTION;
    RewardBreakdown {
        reward: w.fmt * fmt + w.sem * sem + w.num * num,
        fmt: Some(fmt),
        sem: Some(sem),
        num: Some(num),
        ..Default::default()
    }
}

fn kind_index(k: ActionKind) -> usize {
    ActionKind::ALL.iter().position(|x| *x == k).unwrap_or(0)
}

/// Multi-step sequence reward (A3, D3).
///
/// Position `i` matches when the predicted and reference kinds agree;
/// magnitudes only enter through the numeric term.
pub fn reward_sequence(response: &str, gt: &[GtAction]) -> RewardBreakdown {
    let text = preprocess(response);
    let pred = parse_action_sequence(&text);
    let (n, m) = (pred.len(), gt.len());
    let fmt = indicator(n > 0);

    let mut counts_pred = [0usize; 6];
    let mut counts_gt = [0usize; 6];
    for p in &pred {
        counts_pred[kind_index(p.kind)] += 1;
    }
    for g in gt {
        counts_gt[kind_index(g.kind)] += 1;
    }
    let overlap: usize = counts_pred
        .iter()
        .zip(counts_gt.iter())
        .map(|(a, b)| *a.min(b))
        .sum();
    let sem = overlap as f64 / n.max(m).max(1) as f64;

    let (mut ord_hits, mut num_sum) = (0usize, 0.0);
    for (p, g) in pred.iter().zip(gt.iter()) {
        if p.kind == g.kind {
            ord_hits += 1;
            num_sum += s_num(p.value, g.value, g.kind.motion());
        }
    }
    let (ord, num) = if m == 0 {
        (0.0, 0.0)
    } else {
        (ord_hits as f64 / m as f64, num_sum / m as f64)
    };

    let w = TaskWeights::SEQUENCE;
    let pre = w.fmt * fmt + w.sem * sem + w.ord * ord + w.num * num;
    let penalty = w.extra_action_penalty * n.saturating_sub(m) as f64;
    RewardBreakdown {
        reward: (pre - penalty).max(0.0),
        fmt: Some(fmt),
        sem: Some(sem),
        num: Some(num),
        ord: Some(ord),
        extra_action_penalty: penalty,
        ..Default::default()
    }
}

/// Short-form yes/no reward (A4, D2, D4).
pub fn reward_binary(response: &str, gt: bool) -> RewardBreakdown {
    let parsed = parse_boolean(&preprocess(response));
    let fmt = indicator(parsed.is_some());
    let sem = indicator(parsed == Some(gt));
    let w = TaskWeights::BINARY;
    RewardBreakdown {
        reward: w.fmt * fmt + w.sem * sem,
        fmt: Some(fmt),
        sem: Some(sem),
        ..Default::default()
    }
}

/// A predicted box after endpoint swapping and clipping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalBox {
    pub coords: [f64; 4],
    /// Mean distance of the raw coordinates outside [0, 1000].
    pub overflow: f64,
    /// `x1 < x2 && y1 < y2` on the raw coordinates.
    pub ordered: bool,
}

pub fn canonicalize_box(raw: [f64; 4]) -> CanonicalBox {
    let [x1, y1, x2, y2] = raw;
    let ordered = x1 < x2 && y1 < y2;
    let outside = |v: f64| (-v).max(0.0) + (v - 1000.0).max(0.0);
    let overflow = (outside(x1) + outside(y1) + outside(x2) + outside(y2)) / 4.0;
    let (x1, x2) = if x1 > x2 { (x2, x1) } else { (x1, x2) };
    let (y1, y2) = if y1 > y2 { (y2, y1) } else { (y1, y2) };
    let clip = |v: f64| v.clamp(0.0, 1000.0);
    CanonicalBox {
        coords: [clip(x1), clip(y1), clip(x2), clip(y2)],
        overflow,
        ordered,
    }
}

/// Box validity sub-score, computed on raw coordinates.
pub fn box_validity(c: &CanonicalBox) -> f64 {
    0.7 * indicator(c.ordered) + 0.3 * (1.0 - c.overflow / 200.0).max(0.0)
}

fn iou_f(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    let area = |r: &[f64; 4]| (r[2] - r[0]).max(0.0) * (r[3] - r[1]).max(0.0);
    let ix = (a[2].min(b[2]) - a[0].max(b[0])).max(0.0);
    let iy = (a[3].min(b[3]) - a[1].max(b[1])).max(0.0);
    let inter = ix * iy;
    let union = area(a) + area(b) - inter;
    if union > 0.0 {
        inter / union
    } else {
        0.0
    }
}

/// The four localization measures for a canonical prediction against a target box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoTerms {
    pub iou: f64,
    pub center: f64,
    pub l1: f64,
    pub size: f64,
}

impl GeoTerms {
    pub fn compute(pred: &[f64; 4], gt: &NormBox) -> GeoTerms {
        let g = [gt.x1 as f64, gt.y1 as f64, gt.x2 as f64, gt.y2 as f64];
        let iou = iou_f(pred, &g);

        let (gw, gh) = (g[2] - g[0], g[3] - g[1]);
        let dist = math::hypot(
            (pred[0] + pred[2]) / 2.0 - (g[0] + g[2]) / 2.0,
            (pred[1] + pred[3]) / 2.0 - (g[1] + g[3]) / 2.0,
        );
        let radius = 80.0_f64.max(0.6 * math::hypot(gw, gh));
        let center = (1.0 - dist / radius).max(0.0);

        let mean_abs = ((pred[0] - g[0]).abs()
            + (pred[1] - g[1]).abs()
            + (pred[2] - g[2]).abs()
            + (pred[3] - g[3]).abs())
            / 4.0;
        let l1 = (1.0 - mean_abs / 180.0).max(0.0);

        let (pw, ph) = (pred[2] - pred[0], pred[3] - pred[1]);
        // a degenerate side sends |log ratio| to infinity, i.e. zero credit
        let size = if pw > 0.0 && ph > 0.0 {
            let spread = math::ln(pw / gw).abs() + math::ln(ph / gh).abs();
            (1.0 - spread / 1.6).max(0.0)
        } else {
            0.0
        };
        GeoTerms {
            iou,
            center,
            l1,
            size,
        }
    }

    pub fn base(&self) -> f64 {
        let w = GEO_WEIGHTS;
        w.iou * self.iou + w.center * self.center + w.l1 * self.l1 + w.size * self.size
    }
}

/// Geometric box reward (D1). Works on the raw response so that a box
/// embedded in other text still earns partial format credit.
pub fn reward_bbox(response: &str, gt: &NormBox) -> RewardBreakdown {
    let w = TaskWeights::BBOX;
    let Some(parsed) = parse_bbox(response) else {
        return RewardBreakdown {
            reward: 0.0,
            fmt: Some(0.0),
            valid: Some(0.0),
            geo: Some(0.0),
            ..Default::default()
        };
    };
    let fmt = match parsed.format {
        BoxFormat::Exact => 1.0,
        BoxFormat::Embedded => EMBEDDED_BOX_FORMAT,
    };
    let canon = canonicalize_box(parsed.coords);
    let valid = box_validity(&canon);
    let base = GeoTerms::compute(&canon.coords, gt).base();
    let geo = base * (0.3 + 0.7 * valid);
    RewardBreakdown {
        reward: w.fmt * fmt + w.valid * valid + w.geo * geo,
        fmt: Some(fmt),
        valid: Some(valid),
        geo: Some(geo),
        ..Default::default()
    }
}

/// Optional per-request metadata.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ScoreMeta {
    /// Target box for D1; takes precedence over the reference text.
    pub gt_box: Option<NormBox>,
}

/// A reference answer parsed under its task grammar.
#[derive(Debug, Clone, PartialEq)]
pub enum Reference {
    Motion(GtAction),
    Sequence(Vec<GtAction>),
    Binary(bool),
    Box(NormBox),
}

impl Reference {
    pub fn parse(
        task: TaskKind,
        reference: &str,
        meta: Option<&ScoreMeta>,
    ) -> Result<Reference, ScoreError> {
        let bad = ScoreError::BadReference { task };
        match task.family() {
            TaskFamily::Motion => {
                let acts = parse_action_sequence(&preprocess(reference));
                let want = if task == TaskKind::A1 {
                    Motion::Translation
                } else {
                    Motion::Rotation
                };
                match acts.as_slice() {
                    [a] if a.kind.motion() == want => Ok(Reference::Motion((*a).into())),
                    _ => Err(bad),
                }
            }
            TaskFamily::Sequence => {
                let acts = parse_action_sequence(&preprocess(reference));
                if task.sequence_len().contains(&acts.len()) {
                    Ok(Reference::Sequence(acts.into_iter().map(Into::into).collect()))
                } else {
                    Err(bad)
                }
            }
            TaskFamily::Binary => parse_boolean(&preprocess(reference))
                .map(Reference::Binary)
                .ok_or(bad),
            TaskFamily::BoxLocalization => {
                let b = match meta.and_then(|m| m.gt_box) {
                    Some(b) => b,
                    None => match parse_bbox(reference) {
                        Some(p) if p.format == BoxFormat::Exact => {
                            let [x1, y1, x2, y2] = p.coords;
                            let fits = |v: f64| (0.0..=1000.0).contains(&v);
                            if ![x1, y1, x2, y2].into_iter().all(fits) {
                                return Err(bad);
                            }
                            NormBox::new(x1 as i32, y1 as i32, x2 as i32, y2 as i32)
                        }
                        _ => return Err(bad),
                    },
                };
                if b.is_valid() {
                    Ok(Reference::Box(b))
                } else {
                    Err(bad)
                }
            }
        }
    }
}

/// Stateless scorer; one value can be shared by any number of threads.
#[derive(Debug, Clone, Copy, Default)]
pub struct Scorer;

impl Scorer {
    /// Score a response against an already parsed reference.
    pub fn score_parsed(&self, raw: &str, reference: &Reference) -> RewardBreakdown {
        if is_overlength(raw) {
            return RewardBreakdown::overlength();
        }
        match reference {
            Reference::Motion(gt) => reward_motion(raw, *gt),
            Reference::Sequence(gt) => reward_sequence(raw, gt),
            Reference::Binary(gt) => reward_binary(raw, *gt),
            Reference::Box(gt) => reward_bbox(raw, gt),
        }
    }

    pub fn score(
        &self,
        task: TaskKind,
        raw: &str,
        reference: &str,
        meta: Option<&ScoreMeta>,
    ) -> Result<RewardBreakdown, ScoreError> {
        let r = Reference::parse(task, reference, meta)?;
        Ok(self.score_parsed(raw, &r))
    }

    /// Like [`Scorer::score`] with the task given as its wire name ("A1" ... "D4").
    pub fn score_named(
        &self,
        task: &str,
        raw: &str,
        reference: &str,
        meta: Option<&ScoreMeta>,
    ) -> Result<RewardBreakdown, ScoreError> {
        let task: TaskKind = task
            .parse()
            .map_err(|_| ScoreError::UnknownTask(task.into()))?;
        self.score(task, raw, reference, meta)
    }
}

/// Convenience wrapper around [`Scorer::score`].
pub fn score(
    task: TaskKind,
    raw: &str,
    reference: &str,
    meta: Option<&ScoreMeta>,
) -> Result<RewardBreakdown, ScoreError> {
    Scorer.score(task, raw, reference, meta)
}
