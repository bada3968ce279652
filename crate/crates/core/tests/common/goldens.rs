//! Builds each task's worked example through the library and pairs it with
//! the frozen fixture under `tests/fixtures/templates`.

use std::path::{Path, PathBuf};

use egospatial_core::geometry::ActionKind::*;
use egospatial_core::tasks::{serialize_action_text, template, ActionStyle};
use egospatial_core::{Action, NormBox, TaskKind};

pub struct Golden {
    pub task: TaskKind,
    pub generated: (String, String),
    pub frozen: (String, String),
}

pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures/templates")
}

fn prose(actions: &[Action]) -> String {
    serialize_action_text(actions, ActionStyle::Prose)
}

fn semicolon(actions: &[Action]) -> String {
    serialize_action_text(actions, ActionStyle::Semicolon)
}

fn generate(task: TaskKind) -> (String, String) {
    let b = NormBox::new;
    match task {
        TaskKind::A1 => (template::a1(Forward), Action::of(Forward, 4.3).to_string()),
        TaskKind::A2 => (template::a2(TurnLeft), Action::of(TurnLeft, 100.0).to_string()),
        TaskKind::A3 => (
            template::a3(),
            semicolon(&[Action::of(Forward, 1.8), Action::of(TurnLeft, 50.0)]),
        ),
        TaskKind::A4 => {
            let claim = [
                Action::of(ShiftLeft, 0.8),
                Action::of(Forward, 2.8),
                Action::of(TurnRight, 50.0),
            ];
            (template::a4(&prose(&claim)), "true".into())
        }
        TaskKind::D1 => (
            template::d1(
                "microwave",
                &b(94, 423, 322, 552),
                &prose(&[Action::of(Backward, 4.5)]),
            ),
            b(48, 558, 226, 681).to_string(),
        ),
        TaskKind::D2 => (
            template::d2(
                "chair",
                &b(626, 209, 915, 675),
                &prose(&[Action::of(Forward, 5.5)]),
            ),
            "yes".into(),
        ),
        TaskKind::D3 => (
            template::d3("cup", &b(412, 557, 523, 700), &b(603, 368, 814, 877)),
            semicolon(&[Action::of(Forward, 3.0), Action::of(TurnLeft, 50.0)]),
        ),
        TaskKind::D4 => (
            template::d4(
                "chair",
                &b(70, 519, 404, 986),
                &prose(&[Action::of(ShiftLeft, 5.0)]),
                "chair",
                &b(384, 525, 684, 978),
            ),
            "no".into(),
        ),
    }
}

pub fn load() -> Vec<Golden> {
    TaskKind::ALL
        .iter()
        .map(|&task| {
            let path = fixtures_dir().join(format!("{task}.txt"));
            let text = std::fs::read_to_string(&path)
                .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            let mut lines = text.lines();
            let prompt = lines.next().unwrap_or_default().to_string();
            let answer = lines.next().unwrap_or_default().to_string();
            Golden {
                task,
                generated: generate(task),
                frozen: (prompt, answer),
            }
        })
        .collect()
}
