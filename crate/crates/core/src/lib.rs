//! Deterministic simulator of vehicles sharing hazard announcements over
//! short-range radio, with receiver-side or sender-side trust checks.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod comms;
pub mod engine;
pub mod error;
pub mod harness;
pub mod mobility;
pub mod road;
pub mod trust;

pub use error::SimError;
pub use harness::{run_condition, run_matrix, Condition, MetricsReport, ScenarioConfig};
pub use trust::Scheme;
