//! Robustifying next-token prediction models into low-regret decision
//! policies.
//!
//! A [`PredictionModel`] predicts the next state of a sequence. A decision
//! maker who plays a softmax best response to those predictions can be
//! exploited when the sequence leaves the model's training distribution.
//! The wrappers here ([`RobustModel`], [`BoundedRobustModel`],
//! [`VSwitchModel`]) monitor regret along the prefix and fall back to the
//! Polya urn when it grows too large, which changes the induced sequence
//! distribution only slightly.

pub mod adversary;
pub mod bounded;
pub mod dataset;
pub mod decision;
pub mod domain;
pub mod error;
pub mod metrics;
pub mod model;
pub mod models;
pub mod regret;
pub mod robustify;
pub mod sampling;
pub mod vswitch;

pub use adversary::{AdversaryKind, Response};
pub use bounded::{BoundedRobustModel, ContextMode};
pub use decision::Temperature;
pub use domain::{MixedAction, State, StateDist, StateSeq, UtilityMatrix};
pub use error::{Error, Result};
pub use model::{Context, Cursor, PredictionModel, SharedModel};
pub use robustify::RobustModel;
pub use sampling::RngSeed;
pub use vswitch::{VScoreParams, VSwitchModel};
