//! The eight task kinds, the record schema and the canonical prompt templates.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::ops::RangeInclusive;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bbox::NormBox;
use crate::geometry::{Action, ActionKind, ActionSequence, Pose};

/// Placeholder for one input view inside a prompt.
pub const IMAGE_TOKEN: &str = "<image>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TaskKind {
    A1,
    A2,
    A3,
    A4,
    D1,
    D2,
    D3,
    D4,
}

/// Tasks that share an answer grammar and a reward form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskFamily {
    /// One action of a fixed motion type (A1 translation, A2 rotation).
    Motion,
    /// An ordered `;`-separated action list (A3, D3).
    Sequence,
    /// yes/no or true/false (A4, D2, D4).
    Binary,
    /// One `[x1, y1, x2, y2]` box (D1).
    BoxLocalization,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Infer the motion from the view change.
    Inverse,
    /// Predict or verify the consequence of a given motion.
    Forward,
}

impl Direction {
    pub const ALL: [Direction; 2] = [Direction::Inverse, Direction::Forward];

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Inverse => "inverse",
            Direction::Forward => "forward",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl TaskKind {
    pub const ALL: [TaskKind; 8] = [
        TaskKind::A1,
        TaskKind::A2,
        TaskKind::A3,
        TaskKind::A4,
        TaskKind::D1,
        TaskKind::D2,
        TaskKind::D3,
        TaskKind::D4,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::A1 => "A1",
            TaskKind::A2 => "A2",
            TaskKind::A3 => "A3",
            TaskKind::A4 => "A4",
            TaskKind::D1 => "D1",
            TaskKind::D2 => "D2",
            TaskKind::D3 => "D3",
            TaskKind::D4 => "D4",
        }
    }

    pub fn family(self) -> TaskFamily {
        match self {
            TaskKind::A1 | TaskKind::A2 => TaskFamily::Motion,
            TaskKind::A3 | TaskKind::D3 => TaskFamily::Sequence,
            TaskKind::A4 | TaskKind::D2 | TaskKind::D4 => TaskFamily::Binary,
            TaskKind::D1 => TaskFamily::BoxLocalization,
        }
    }

    pub fn direction(self) -> Direction {
        match self {
            TaskKind::A1 | TaskKind::A2 | TaskKind::A3 | TaskKind::D3 => Direction::Inverse,
            TaskKind::A4 | TaskKind::D1 | TaskKind::D2 | TaskKind::D4 => Direction::Forward,
        }
    }

    /// Number of `<image>` tokens in the prompt.
    pub fn image_count(self) -> usize {
        if self == TaskKind::D2 {
            1
        } else {
            2
        }
    }

    /// D tasks need a filtered detection; A tasks are motion-only.
    pub fn is_object_grounded(self) -> bool {
        matches!(
            self,
            TaskKind::D1 | TaskKind::D2 | TaskKind::D3 | TaskKind::D4
        )
    }

    /// Allowed ground-truth program lengths.
    pub fn sequence_len(self) -> RangeInclusive<usize> {
        match self {
            TaskKind::A1 | TaskKind::A2 => 1..=1,
            TaskKind::A3 => 2..=3,
            TaskKind::D3 => 1..=2,
            _ => 1..=3,
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownName(pub String);

impl fmt::Display for UnknownName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown name `{}`", self.0)
    }
}

impl FromStr for TaskKind {
    type Err = UnknownName;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TaskKind::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| UnknownName(s.into()))
    }
}

/// Corpus partition: scene domain crossed with detector grounding.
///
/// The two domains are synthetic stand-ins for a real-scan pool and a
/// simulated pool; the names are kept so quotas can be stated as usual.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceBucket {
    ScannetDetect,
    ScannetUndetect,
    MulsetDetect,
    MulsetUndetect,
}

impl SourceBucket {
    pub const ALL: [SourceBucket; 4] = [
        SourceBucket::ScannetDetect,
        SourceBucket::ScannetUndetect,
        SourceBucket::MulsetDetect,
        SourceBucket::MulsetUndetect,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SourceBucket::ScannetDetect => "scannet_detect",
            SourceBucket::ScannetUndetect => "scannet_undetect",
            SourceBucket::MulsetDetect => "mulset_detect",
            SourceBucket::MulsetUndetect => "mulset_undetect",
        }
    }

    pub fn is_detect(self) -> bool {
        matches!(self, SourceBucket::ScannetDetect | SourceBucket::MulsetDetect)
    }

    /// Detector-grounded tasks come from detect buckets, motion-only tasks
    /// from undetect buckets.
    pub fn accepts(self, task: TaskKind) -> bool {
        self.is_detect() == task.is_object_grounded()
    }

    /// The bucket of `domain` (0 = scannet, 1 = mulset) that carries `task`.
    pub fn for_task(domain: usize, task: TaskKind) -> SourceBucket {
        match (domain % 2, task.is_object_grounded()) {
            (0, true) => SourceBucket::ScannetDetect,
            (0, false) => SourceBucket::ScannetUndetect,
            (_, true) => SourceBucket::MulsetDetect,
            (_, false) => SourceBucket::MulsetUndetect,
        }
    }
}

impl fmt::Display for SourceBucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SourceBucket {
    type Err = UnknownName;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SourceBucket::ALL
            .into_iter()
            .find(|b| b.as_str() == s)
            .ok_or_else(|| UnknownName(s.into()))
    }
}

/// Ground truth and oracle facts carried alongside a record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordMeta {
    /// The program that takes the source view to the target view.
    pub actions: ActionSequence,
    /// Boxes in prompt order; for D1 the target box is appended last.
    pub boxes: Vec<NormBox>,
    /// Object labels in prompt order.
    pub labels: Vec<String>,
    pub trajectory_group: String,
    /// The motion asserted in an A4 prompt.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub claim: Option<ActionSequence>,
    #[serde(default)]
    pub scene_id: String,
    #[serde(default)]
    pub object_ids: Vec<String>,
    pub source_pose: Pose,
    pub target_pose: Pose,
}

/// One supervised example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub id: String,
    pub task: TaskKind,
    pub direction: Direction,
    pub source_bucket: SourceBucket,
    pub images: Vec<String>,
    pub prompt: String,
    pub answer: String,
    pub meta: RecordMeta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionStyle {
    /// `a; b; c`
    Semicolon,
    /// `a, b and c`
    Prose,
}

pub fn serialize_action_text(seq: &[Action], style: ActionStyle) -> String {
    let parts: Vec<String> = seq.iter().map(ToString::to_string).collect();
    match style {
        ActionStyle::Semicolon => parts.join("; "),
        ActionStyle::Prose => match parts.split_last() {
            None => String::new(),
            Some((last, [])) => last.clone(),
            Some((last, head)) => format!("{} and {}", head.join(", "), last),
        },
    }
}

/// Prompt builders. Every builder returns the exact text fed to the model.
pub mod template {
    use super::*;

    pub fn a1(direction: ActionKind) -> String {
        format!(
            "<image><image>How many meters did the camera move to get the second image? \
             Answer as: move {} X meters.",
            direction.direction_word()
        )
    }

    pub fn a2(direction: ActionKind) -> String {
        format!(
            "<image><image>How many degrees did the camera turn to get the second image? \
             Answer as: turn {} X degrees.",
            direction.direction_word()
        )
    }

    pub fn a3() -> String {
        "<image><image>To move from the first image to the second image, the camera used \
         2 or 3 actions in order. Write the full action sequence using ';' as a separator."
            .into()
    }

    pub fn a4(claim: &str) -> String {
        format!("<image><image>True or false: the camera did \"{claim}\" to get the second image.")
    }

    pub fn d1(object: &str, bbox: &NormBox, action: &str) -> String {
        format!(
            "<image><image>In the first image, the {object} is at bbox {bbox}. Bboxes use \
             normalized integer coordinates in [0,1000]. After the camera does \"{action}\", \
             give the bbox of the same {object} in the second image. Answer with bbox \
             [x1, y1, x2, y2] only."
        )
    }

    pub fn d2(object: &str, bbox: &NormBox, action: &str) -> String {
        format!(
            "<image>In the image, the {object} is at bbox {bbox}. After the camera does \
             \"{action}\", does this {object} disappear from view? Answer: yes or no."
        )
    }

    pub fn d3(object: &str, first: &NormBox, second: &NormBox) -> String {
        format!(
            "<image><image>The {object} in the first image (bbox {first}) and the {object} in \
             the second image (bbox {second}) are the same physical object. The camera used 1 \
             or 2 actions in order. Write the full action sequence using ';' as a separator."
        )
    }

    pub fn d4(
        object: &str,
        first: &NormBox,
        action: &str,
        other: &str,
        second: &NormBox,
    ) -> String {
        format!(
            "<image><image>In the first image, the {object} is at bbox {first}. After the camera \
             does \"{action}\", the second image shows a {other} at bbox {second}. Are these the \
             same physical object instance? Answer: yes or no."
        )
    }
}

/// Missing or mis-shaped meta fields for re-rendering a prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MetaShapeError;

/// Rebuild a record's prompt from its task and meta.
pub fn render_prompt(task: TaskKind, meta: &RecordMeta) -> Result<String, MetaShapeError> {
    let prose = || serialize_action_text(&meta.actions, ActionStyle::Prose);
    let (boxes, labels) = (&meta.boxes, &meta.labels);
    let need = |nb: usize, nl: usize| {
        if boxes.len() == nb && labels.len() == nl {
            Ok(())
        } else {
            Err(MetaShapeError)
        }
    };
    Ok(match task {
        TaskKind::A1 => template::a1(meta.actions[0].kind()),
        TaskKind::A2 => template::a2(meta.actions[0].kind()),
        TaskKind::A3 => template::a3(),
        TaskKind::A4 => {
            let claim = meta.claim.as_ref().ok_or(MetaShapeError)?;
            template::a4(&serialize_action_text(claim, ActionStyle::Prose))
        }
        TaskKind::D1 => {
            need(2, 1)?;
            template::d1(&labels[0], &boxes[0], &prose())
        }
        TaskKind::D2 => {
            need(1, 1)?;
            template::d2(&labels[0], &boxes[0], &prose())
        }
        TaskKind::D3 => {
            need(2, 1)?;
            template::d3(&labels[0], &boxes[0], &boxes[1])
        }
        TaskKind::D4 => {
            need(2, 2)?;
            template::d4(&labels[0], &boxes[0], &prose(), &labels[1], &boxes[1])
        }
    })
}
