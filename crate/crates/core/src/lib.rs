//! Learning-path planning for at-risk learners.
//!
//! The crate ingests a course workspace (knowledge graph, resources, learner
//! event logs), derives risk alerts, knowledge states and recommendation
//! lists, plans learning paths with a three-agent language-model loop or one
//! of three baselines, and scores paths with four metrics: average path
//! length, average learning duration, cognitive load misalignment and
//! knowledge sequence consistency.
//!
//! Numeric code in [`metrics`] and the path objective is generic over
//! [`Scalar`] (`f32` or `f64`); the aliases below fix it at `f64`.

pub mod agents;
pub mod gateway;
pub mod ingest;
pub mod metrics;
pub mod model;
pub mod orchestrator;
pub mod scalar;
pub mod signals;

pub use scalar::Scalar;

pub type Effectiveness = model::EffectivenessModel<f64>;
pub type LoadProfile = metrics::CognitiveLoadProfile<f64>;
pub type PathLoad = metrics::PathLoad<f64>;
pub type Clmr = metrics::ClmrSummary<f64>;
