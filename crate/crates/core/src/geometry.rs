//! Planar egocentric camera kinematics.
//!
//! Frame convention: yaw 0 faces +y, yaw grows clockwise (turning right adds
//! degrees), and the heading vector is `(sin yaw, cos yaw)`. The camera's right
//! vector is `(cos yaw, -sin yaw)`. Shifts are pure strafes and keep yaw.
//!
//! Magnitudes are stored as integer counts of a base unit: centimeters for
//! moves and degrees for turns. The sampling grid (0.1 m, 10 degrees) is a
//! subset of that, so grid arithmetic stays exact while per-frame increments
//! can still go below the grid when a short program has to be split finely.

use alloc::vec::Vec;
use core::fmt;
use core::ops::Deref;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math;

/// Centimeters per translation grid step (0.1 m).
pub const TRANSLATION_GRID_CM: u32 = 10;
/// Degrees per rotation grid step.
pub const ROTATION_GRID_DEG: u32 = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("action magnitude must be positive")]
    ZeroMagnitude,
    #[error("magnitude {value} is not a whole number of {unit}")]
    OffUnit { value: f64, unit: &'static str },
    #[error("step size must be a positive whole number of {unit}, got {value}")]
    BadStep { value: f64, unit: &'static str },
    #[error("action sequence must not be empty")]
    EmptySequence,
}

/// Whether an action translates or rotates the camera.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Motion {
    Translation,
    Rotation,
}

impl Motion {
    pub fn unit_name(self) -> &'static str {
        match self {
            Motion::Translation => "centimeters",
            Motion::Rotation => "degrees",
        }
    }

    /// Base units per real unit (cm per meter, degrees per degree).
    fn units_per_value(self) -> f64 {
        match self {
            Motion::Translation => 100.0,
            Motion::Rotation => 1.0,
        }
    }

    pub fn grid_units(self) -> u32 {
        match self {
            Motion::Translation => TRANSLATION_GRID_CM,
            Motion::Rotation => ROTATION_GRID_DEG,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Forward,
    Backward,
    ShiftLeft,
    ShiftRight,
    TurnLeft,
    TurnRight,
}

impl ActionKind {
    pub const ALL: [ActionKind; 6] = [
        ActionKind::Forward,
        ActionKind::Backward,
        ActionKind::ShiftLeft,
        ActionKind::ShiftRight,
        ActionKind::TurnLeft,
        ActionKind::TurnRight,
    ];

    pub fn motion(self) -> Motion {
        match self {
            ActionKind::TurnLeft | ActionKind::TurnRight => Motion::Rotation,
            _ => Motion::Translation,
        }
    }

    pub fn is_rotation(self) -> bool {
        self.motion() == Motion::Rotation
    }

    pub fn opposite(self) -> ActionKind {
        match self {
            ActionKind::Forward => ActionKind::Backward,
            ActionKind::Backward => ActionKind::Forward,
            ActionKind::ShiftLeft => ActionKind::ShiftRight,
            ActionKind::ShiftRight => ActionKind::ShiftLeft,
            ActionKind::TurnLeft => ActionKind::TurnRight,
            ActionKind::TurnRight => ActionKind::TurnLeft,
        }
    }

    /// The direction word used in answer text ("move left", "turn left").
    pub fn direction_word(self) -> &'static str {
        match self {
            ActionKind::Forward => "forward",
            ActionKind::Backward => "backward",
            ActionKind::ShiftLeft | ActionKind::TurnLeft => "left",
            ActionKind::ShiftRight | ActionKind::TurnRight => "right",
        }
    }

    /// Compact token used in trajectory group keys.
    pub fn token(self) -> &'static str {
        match self {
            ActionKind::Forward => "forward",
            ActionKind::Backward => "backward",
            ActionKind::ShiftLeft => "shiftleft",
            ActionKind::ShiftRight => "shiftright",
            ActionKind::TurnLeft => "turnleft",
            ActionKind::TurnRight => "turnright",
        }
    }
}

/// One discrete camera motion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "ActionRepr", into = "ActionRepr")]
pub struct Action {
    kind: ActionKind,
    units: u32,
}

/// Wire form: `{"kind": "forward", "value": 4.3}` with meters or degrees.
#[derive(Serialize, Deserialize)]
struct ActionRepr {
    kind: ActionKind,
    value: f64,
}

impl TryFrom<ActionRepr> for Action {
    type Error = GeometryError;

    fn try_from(r: ActionRepr) -> Result<Self, Self::Error> {
        Action::from_value(r.kind, r.value)
    }
}

impl From<Action> for ActionRepr {
    fn from(a: Action) -> Self {
        ActionRepr {
            kind: a.kind,
            value: a.value(),
        }
    }
}

impl Action {
    /// `units` are centimeters for moves and degrees for turns.
    pub fn new(kind: ActionKind, units: u32) -> Result<Self, GeometryError> {
        if units == 0 {
            return Err(GeometryError::ZeroMagnitude);
        }
        Ok(Action { kind, units })
    }

    /// Build from a count of grid steps (0.1 m or 10 degrees).
    pub fn from_grid(kind: ActionKind, steps: u32) -> Result<Self, GeometryError> {
        Action::new(kind, steps * kind.motion().grid_units())
    }

    /// Build from a real magnitude in meters or degrees.
    pub fn from_value(kind: ActionKind, value: f64) -> Result<Self, GeometryError> {
        let motion = kind.motion();
        let units = value_to_units(value, motion).ok_or(GeometryError::OffUnit {
            value,
            unit: motion.unit_name(),
        })?;
        Action::new(kind, units)
    }

    /// Shorthand for tests and fixtures: meters for moves, degrees for turns.
    ///
    /// Panics on values that are not whole centimeters or degrees.
    pub fn of(kind: ActionKind, value: f64) -> Self {
        Action::from_value(kind, value).expect("valid action magnitude")
    }

    pub fn kind(&self) -> ActionKind {
        self.kind
    }

    pub fn units(&self) -> u32 {
        self.units
    }

    /// Magnitude in meters (moves) or degrees (turns).
    pub fn value(&self) -> f64 {
        self.units as f64 / self.kind.motion().units_per_value()
    }

    pub fn is_on_grid(&self) -> bool {
        self.units.is_multiple_of(self.kind.motion().grid_units())
    }

    pub fn grid_steps(&self) -> Option<u32> {
        self.is_on_grid()
            .then(|| self.units / self.kind.motion().grid_units())
    }

    pub fn flipped(&self) -> Action {
        Action {
            kind: self.kind.opposite(),
            units: self.units,
        }
    }

    pub fn with_units(&self, units: u32) -> Result<Action, GeometryError> {
        Action::new(self.kind, units)
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind.motion() {
            Motion::Translation => write!(
                f,
                "move {} {} meters",
                self.kind.direction_word(),
                MetersText(self.units)
            ),
            Motion::Rotation => write!(
                f,
                "turn {} {} degrees",
                self.kind.direction_word(),
                self.units
            ),
        }
    }
}

/// Renders centimeters as meters: `300 -> "3"`, `430 -> "4.3"`, `125 -> "1.25"`.
pub(crate) struct MetersText(pub(crate) u32);

impl fmt::Display for MetersText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (whole, cm) = (self.0 / 100, self.0 % 100);
        if cm == 0 {
            write!(f, "{whole}")
        } else if cm % 10 == 0 {
            write!(f, "{whole}.{}", cm / 10)
        } else {
            write!(f, "{whole}.{cm:02}")
        }
    }
}

fn value_to_units(value: f64, motion: Motion) -> Option<u32> {
    if !value.is_finite() || value < 0.0 {
        return None;
    }
    let scaled = value * motion.units_per_value();
    let rounded = math::round(scaled);
    if (scaled - rounded).abs() > 1e-6 || rounded > u32::MAX as f64 {
        return None;
    }
    Some(rounded as u32)
}

/// Normalize an angle in degrees to (-180, 180].
pub fn normalize_yaw(yaw: f64) -> f64 {
    let mut y = yaw % 360.0;
    if y <= -180.0 {
        y += 360.0;
    } else if y > 180.0 {
        y -= 360.0;
    }
    y
}

/// Planar camera state: position in meters, yaw in degrees (clockwise-positive).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
}

impl Default for Pose {
    fn default() -> Self {
        Pose::new(0.0, 0.0, 0.0)
    }
}

impl Pose {
    pub fn new(x: f64, y: f64, yaw: f64) -> Self {
        Pose {
            x,
            y,
            yaw: normalize_yaw(yaw),
        }
    }

    pub fn heading(&self) -> (f64, f64) {
        math::sin_cos_deg(self.yaw)
    }

    pub fn right(&self) -> (f64, f64) {
        let (s, c) = math::sin_cos_deg(self.yaw);
        (c, -s)
    }

    pub fn apply(&self, action: &Action) -> Pose {
        apply_action(*self, action)
    }

    pub fn distance_to(&self, other: &Pose) -> f64 {
        math::hypot(self.x - other.x, self.y - other.y)
    }

    /// Absolute yaw difference in degrees, in [0, 180].
    pub fn yaw_gap(&self, other: &Pose) -> f64 {
        normalize_yaw(self.yaw - other.yaw).abs()
    }

    /// Position within `pos_tol` meters and yaw within `yaw_tol` degrees.
    pub fn approx_eq(&self, other: &Pose, pos_tol: f64, yaw_tol: f64) -> bool {
        (self.x - other.x).abs() <= pos_tol
            && (self.y - other.y).abs() <= pos_tol
            && self.yaw_gap(other) <= yaw_tol
    }
}

/// Execute one action in the pose's local frame.
pub fn apply_action(pose: Pose, action: &Action) -> Pose {
    let v = action.value();
    match action.kind {
        ActionKind::TurnRight => Pose::new(pose.x, pose.y, pose.yaw + v),
        ActionKind::TurnLeft => Pose::new(pose.x, pose.y, pose.yaw - v),
        kind => {
            let (dx, dy) = match kind {
                ActionKind::Forward | ActionKind::Backward => pose.heading(),
                _ => pose.right(),
            };
            let sign = match kind {
                ActionKind::Forward | ActionKind::ShiftRight => 1.0,
                _ => -1.0,
            };
            Pose {
                x: pose.x + sign * v * dx,
                y: pose.y + sign * v * dy,
                yaw: pose.yaw,
            }
        }
    }
}

/// Left fold of [`apply_action`].
pub fn apply_sequence(pose: Pose, steps: &[Action]) -> Pose {
    steps.iter().fold(pose, apply_action)
}

/// A non-empty, ordered list of actions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Action>", into = "Vec<Action>")]
pub struct ActionSequence(Vec<Action>);

impl ActionSequence {
    pub fn new(steps: Vec<Action>) -> Result<Self, GeometryError> {
        if steps.is_empty() {
            return Err(GeometryError::EmptySequence);
        }
        Ok(ActionSequence(steps))
    }

    pub fn single(action: Action) -> Self {
        ActionSequence(alloc::vec![action])
    }

    pub fn steps(&self) -> &[Action] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<Action> {
        self.0
    }

    /// Reverse order and flip every action; undoes `self` from any pose.
    pub fn inverse(&self) -> ActionSequence {
        ActionSequence(self.0.iter().rev().map(Action::flipped).collect())
    }

    /// `[steps[..1], steps[..2], ..., steps[..n]]`.
    pub fn cumulative_prefixes(&self) -> Vec<ActionSequence> {
        (1..=self.0.len())
            .map(|k| ActionSequence(self.0[..k].to_vec()))
            .collect()
    }

    pub fn is_on_grid(&self) -> bool {
        self.0.iter().all(Action::is_on_grid)
    }
}

impl Deref for ActionSequence {
    type Target = [Action];

    fn deref(&self) -> &[Action] {
        &self.0
    }
}

impl TryFrom<Vec<Action>> for ActionSequence {
    type Error = GeometryError;

    fn try_from(v: Vec<Action>) -> Result<Self, Self::Error> {
        ActionSequence::new(v)
    }
}

impl From<ActionSequence> for Vec<Action> {
    fn from(s: ActionSequence) -> Self {
        s.0
    }
}

/// Split an action into same-kind increments of at most `max_step` (meters or
/// degrees). All increments but the last equal `max_step`.
pub fn decompose(action: &Action, max_step: f64) -> Result<ActionSequence, GeometryError> {
    let motion = action.kind.motion();
    let step = value_to_units(max_step, motion)
        .filter(|u| *u > 0)
        .ok_or(GeometryError::BadStep {
            value: max_step,
            unit: motion.unit_name(),
        })?;
    Ok(decompose_units(action, step))
}

pub(crate) fn decompose_units(action: &Action, step: u32) -> ActionSequence {
    debug_assert!(step > 0);
    let full = action.units / step;
    let rest = action.units % step;
    let mut out = Vec::with_capacity(full as usize + 1);
    for _ in 0..full {
        out.push(Action {
            kind: action.kind,
            units: step,
        });
    }
    if rest > 0 {
        out.push(Action {
            kind: action.kind,
            units: rest,
        });
    }
    ActionSequence(out)
}

/// Merge contiguous same-kind actions (the inverse of per-frame decomposition).
pub fn coalesce(steps: &[Action]) -> Vec<Action> {
    let mut out: Vec<Action> = Vec::new();
    for a in steps {
        match out.last_mut() {
            Some(last) if last.kind == a.kind => last.units += a.units,
            _ => out.push(*a),
        }
    }
    out
}
