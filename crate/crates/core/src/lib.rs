//! Simulation library for combinatorial causal bandits on binary generalized
//! linear causal models whose graph is unknown to the learner.
//!
//! The crate is organised around the life cycle of one experiment:
//!
//! * [`scm`] holds the ground-truth environment: models, interventions,
//!   sampling and exact expected rewards.
//! * [`discovery`] turns an interventional initialization log into an
//!   estimated ancestor relation.
//! * [`estimation`] fits per-node parameters (maximum likelihood or ridge
//!   regression) and provides the confidence radii.
//! * [`oracle`] picks the optimistic action over per-node confidence ellipsoids.
//! * [`bandit`] runs the regret-minimisation algorithms and baselines.
//! * [`explore`] runs best-arm identification with observational and
//!   interventional confidence bounds.
//! * [`harness`] replicates runs, aggregates regret and writes CSV and SVG files.

pub mod bandit;
pub mod discovery;
pub mod error;
pub mod estimation;
pub mod explore;
pub mod harness;
pub mod oracle;
pub mod rng;
pub mod scm;

pub use error::{Error, Result};
pub use rng::RandomStream;
pub use scm::{
    ActionSet, CausalModel, Intervention, LinkFunction, ModelConstants, NodeId, NoiseSpec,
    RewardMode, Sample, ValueKind,
};
