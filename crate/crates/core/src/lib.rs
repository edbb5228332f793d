//! Modeling and verification of distributed sequential controllers under
//! network attacks.
//!
//! The pipeline: controller models (interpreted nets with sensing,
//! actuation, and messaging) are transformed into time Petri nets, composed
//! with plant models and a security-aware channel/transceiver model, and
//! verified with a state-class-graph engine against safety, liveness, and
//! boundedness properties. Violations come with replayable timed witness
//! traces.

pub mod cipn;
pub mod comm;
pub mod compile;
pub mod compose;
pub mod expr;
pub mod net;
pub mod scg;
pub mod time;
pub mod trace;
pub mod transform;
pub mod validate;
pub mod verify;
pub mod zone;

#[cfg(feature = "testkit")]
pub mod testkit;
