//! Seeded defect injection for validator tests.

use egospatial_core::dataset::RejectReason;
use egospatial_core::tasks::{serialize_action_text, ActionStyle, TaskFamily};
use egospatial_core::{Action, ActionSequence, NormBox, TaskKind, TaskRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Defect {
    TruncatedAnswer,
    SwappedBox,
    OffGridMagnitude,
}

impl Defect {
    pub const ALL: [Defect; 3] = [
        Defect::TruncatedAnswer,
        Defect::SwappedBox,
        Defect::OffGridMagnitude,
    ];

    pub fn expected(self) -> RejectReason {
        match self {
            Defect::TruncatedAnswer => RejectReason::MalformedAnswer,
            Defect::SwappedBox => RejectReason::InvalidBox,
            Defect::OffGridMagnitude => RejectReason::ActionMismatch,
        }
    }
}

fn swap_x(b: NormBox) -> NormBox {
    NormBox::new(b.x2, b.y1, b.x1, b.y2)
}

fn nudge(a: Action) -> Action {
    a.with_units(a.units() + 1).unwrap()
}

/// Apply `defect` to a copy of `rec`, or `None` when the task has nothing
/// the defect can touch (boxes on motion-only tasks).
pub fn inject(rec: &TaskRecord, defect: Defect) -> Option<TaskRecord> {
    let mut r = rec.clone();
    match defect {
        Defect::TruncatedAnswer => {
            r.answer.pop();
        }
        Defect::SwappedBox => match r.task {
            TaskKind::D1 => {
                let b: NormBox = swap_x(r.meta.boxes[1]);
                r.answer = b.to_string();
            }
            TaskKind::D2 | TaskKind::D3 | TaskKind::D4 => {
                r.meta.boxes[0] = swap_x(r.meta.boxes[0]);
            }
            _ => return None,
        },
        Defect::OffGridMagnitude => match r.task.family() {
            TaskFamily::Motion | TaskFamily::Sequence => {
                let mut acts: Vec<Action> = r.meta.actions.to_vec();
                acts[0] = nudge(acts[0]);
                r.answer = serialize_action_text(&acts, ActionStyle::Semicolon);
            }
            _ => {
                let mut acts: Vec<Action> = r.meta.actions.to_vec();
                acts[0] = nudge(acts[0]);
                r.meta.actions = ActionSequence::new(acts).unwrap();
            }
        },
    }
    Some(r)
}
