//! Ground-truth structural causal models.
//!
//! Models are Markovian DAGs over binary nodes `X₁ … X_n, Y` where `X₁ = 1`
//! always and `Y` is the reward. A node fires with probability
//! `f(θ·pa) + ε` (GLM nodes) or according to a conditional table.

pub mod exact;
pub mod format;
pub mod generate;
pub mod link;
pub mod model;

pub use exact::{do_difference, expected_reward, expected_value, linear_means, RewardMode};
pub use format::{parse_model, read_model, write_model};
pub use generate::{appendix_e, easy_observation, generate_instance, Family};
pub use link::{extend_link_range, LinkFunction, LinkKind, TailExtension};
pub use model::{
    combinations, ActionSet, CausalModel, Intervention, ModelConstants, Node, NodeId, NoiseSpec, Sample,
    ValueKind,
};
