//! Deterministic kernel for world-model-style spatial supervision.
//!
//! The crate is `no_std` (it needs `alloc`) and contains everything that is a
//! pure function of its inputs:
//!
//! * [`geometry`]: planar egocentric camera poses and the discrete action vocabulary.
//! * [`scene`]: a synthetic 3D scene with an analytic pinhole camera that stands
//!   in for a generative view-synthesis model, plus detection filtering.
//! * [`trajectory`]: motion-program sampling, per-frame expansion and
//!   max-displacement pairing.
//! * [`tasks`]: the eight task kinds, the record schema and prompt templates.
//! * [`forge`]: record instantiation from transitions, including false claims.
//! * [`parse`]: response normalization and answer grammars.
//! * [`reward`]: the task-aware scalar reward with its sub-scores.
//! * [`dataset`]: record validation, corpus statistics and quota balancing.
//! * [`synth`]: scene generation and end-to-end record generation.
//!
//! File formats, the scoring service and the CLI live in the `egospatial` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bbox;
pub mod dataset;
pub mod forge;
pub mod geometry;
pub(crate) mod math;
pub mod parse;
pub mod reward;
pub mod scene;
pub mod synth;
pub mod tasks;
pub mod trajectory;

pub use bbox::NormBox;
pub use geometry::{Action, ActionKind, ActionSequence, Pose};
pub use reward::{RewardBreakdown, Scorer};
pub use tasks::{Direction, SourceBucket, TaskKind, TaskRecord};
