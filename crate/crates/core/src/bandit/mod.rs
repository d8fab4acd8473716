//! Regret minimisation against a ground-truth environment.
//!
//! Every run is strictly sequential: an initialization phase of atomic
//! interventions (causal algorithms only), then one action from the
//! configured [`ActionSet`] per round. Regret is always measured with the true
//! expected reward of the chosen intervention, never the realized reward.

mod baselines;
mod causal;
mod lr;
mod ofu;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::discovery::{AncestorRelation, CycleCount, DiscoveryScope};
use crate::oracle::DEFAULT_MC_PATHS;
use crate::scm::{expected_reward, ActionSet, CausalModel, Intervention, ModelConstants, RewardMode, ValueKind};
use crate::{Error, Result};

pub use baselines::{run_eps_greedy, run_ucb_baseline};
pub use lr::{run_blm_lr_unknown, run_blm_lr_unknown_sg};
pub use ofu::run_bglm_ofu_unknown;

/// Regret-minimisation algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    BglmOfuUnknown,
    BlmLrUnknown,
    BlmLrUnknownSg,
    Ucb,
    EpsGreedy,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] =
        [Self::BglmOfuUnknown, Self::BlmLrUnknown, Self::BlmLrUnknownSg, Self::Ucb, Self::EpsGreedy];

    pub fn name(self) -> &'static str {
        match self {
            Self::BglmOfuUnknown => "BGLM-OFU-Unknown",
            Self::BlmLrUnknown => "BLM-LR-Unknown",
            Self::BlmLrUnknownSg => "BLM-LR-Unknown-SG",
            Self::Ucb => "UCB",
            Self::EpsGreedy => "epsilon-greedy",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace('_', "-");
        let alg = match key.as_str() {
            "bglm-ofu-unknown" | "bglm-ofu" | "ofu" => Self::BglmOfuUnknown,
            "blm-lr-unknown" | "blm-lr" | "lr" => Self::BlmLrUnknown,
            "blm-lr-unknown-sg" | "blm-lr-sg" | "lr-sg" => Self::BlmLrUnknownSg,
            "ucb" => Self::Ucb,
            "epsilon-greedy" | "eps-greedy" | "egreedy" => Self::EpsGreedy,
            _ => return Err(Error::Parse(format!("unknown algorithm `{s}`"))),
        };
        Ok(alg)
    }
}

/// Where the learner's graph and parameters come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Knowledge {
    /// Discovered and estimated from data.
    #[default]
    Learned,
    /// True ancestor relation and true weights with radius 0; the
    /// initialization phases still run so traces keep their shape.
    Oracle,
}

/// Parameters of one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub horizon: usize,
    pub c0: f64,
    pub c1: f64,
    pub constants: ModelConstants,
    pub seed: u64,
    pub actions: ActionSet,
    /// Multiplier on every confidence radius.
    pub rho_scale: f64,
    pub scope: DiscoveryScope,
    /// Cycles of the two-thirds initialization.
    pub cycles: CycleCount,
    /// Omits the null-intervention phase of BGLM-OFU-Unknown.
    pub skip_second_init: bool,
    /// Rounds between maximum-likelihood refits; 1 refits every round.
    pub refit_every: usize,
    /// Exploration probability of the ε-greedy baseline.
    pub epsilon: f64,
    /// Monte-Carlo paths of the oracle for non-linear links.
    pub mc_paths: usize,
    pub knowledge: Knowledge,
}

/// Default `ζ` when it is not supplied.
pub const DEFAULT_ZETA: f64 = 0.1;
/// Default `c` of the Gram-matrix concentration bound.
pub const DEFAULT_C_LM: f64 = 1.0;

impl RunConfig {
    /// Literal defaults: `c0 = c1 = 0.1`, unscaled radii, all-pair discovery,
    /// `⌈ln T⌉` cycles, the standard action set and constants from `env`.
    pub fn new(env: &CausalModel, algorithm: Algorithm, horizon: usize, seed: u64) -> Self {
        let constants = env.constants(DEFAULT_ZETA, DEFAULT_C_LM).unwrap_or(ModelConstants {
            kappa: 1.0,
            l1_max: 1.0,
            l2_max: 0.0,
            zeta: DEFAULT_ZETA,
            c_lm: DEFAULT_C_LM,
        });
        Self {
            algorithm,
            horizon,
            c0: 0.1,
            c1: 0.1,
            constants,
            seed,
            actions: ActionSet::standard(env),
            rho_scale: 1.0,
            scope: DiscoveryScope::All,
            cycles: CycleCount::LogHorizon,
            skip_second_init: false,
            refit_every: 1,
            epsilon: 0.02,
            mc_paths: DEFAULT_MC_PATHS,
            knowledge: Knowledge::Learned,
        }
    }

    pub fn validate(&self, env: &CausalModel) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::InvalidConfig("horizon must be positive".into()));
        }
        if !(self.c0 > 0.0 && self.c1 > 0.0) {
            return Err(Error::InvalidConfig("c0 and c1 must be positive".into()));
        }
        if !(self.rho_scale >= 0.0 && self.rho_scale.is_finite()) {
            return Err(Error::InvalidConfig("rho_scale must be finite and non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::InvalidConfig("epsilon must lie in [0, 1]".into()));
        }
        if self.refit_every == 0 || self.mc_paths == 0 {
            return Err(Error::InvalidConfig("refit_every and mc_paths must be positive".into()));
        }
        if env.n() < 2 {
            return Err(Error::InvalidConfig("the model needs at least one intervenable node".into()));
        }
        for a in self.actions.actions() {
            a.check(env)?;
        }
        self.constants.validate()
    }
}

/// One round of a trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretRow {
    /// 1-based round index.
    pub t: usize,
    /// Index into the action set; `None` for initialization rounds.
    pub action_id: Option<usize>,
    pub y: f64,
    pub expected_reward: f64,
    pub inst_regret: f64,
    pub cum_regret: f64,
}

/// Per-round regret of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretTrace {
    pub rows: Vec<RegretRow>,
    pub optimal_value: f64,
    /// Rounds spent before the first action-set round.
    pub init_rounds: usize,
    /// Relation used by the learner, for causal algorithms.
    pub relation: Option<AncestorRelation>,
}

impl RegretTrace {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn cumulative_regret(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.cum_regret)
    }

    /// Regret accumulated after the initialization phases.
    pub fn post_init_regret(&self) -> f64 {
        self.rows[self.init_rounds..].iter().map(|r| r.inst_regret).sum()
    }
}

/// One played round before regret accounting.
#[derive(Debug, Clone, PartialEq)]
pub struct PlayedRound {
    pub action_id: Option<usize>,
    pub action: Intervention,
    pub y: f64,
}

/// Mode for true expected rewards: closed form for linear models,
/// enumeration for small binary models, Monte-Carlo otherwise.
pub fn reward_mode_for(env: &CausalModel) -> RewardMode {
    if env.is_linear() {
        RewardMode::ExactLinear
    } else if env.kind() == ValueKind::Binary && env.n() <= crate::scm::exact::MAX_ENUMERATED {
        RewardMode::Enumerate
    } else {
        RewardMode::MonteCarlo { samples: 200_000, seed: 0 }
    }
}

/// `max_a E[Y | a]` over `actions`, with the maximising index.
pub fn optimal_value(env: &CausalModel, actions: &ActionSet) -> Result<(usize, f64)> {
    let mode = reward_mode_for(env);
    let mut best = (0, f64::NEG_INFINITY);
    for (id, a) in actions.actions().iter().enumerate() {
        let v = expected_reward(env, a, mode)?;
        if v > best.1 {
            best = (id, v);
        }
    }
    Ok(best)
}

/// Fills expected and instantaneous regrets for a sequence of played rounds.
pub fn compute_regret(rounds: &[PlayedRound], env: &CausalModel, actions: &ActionSet) -> Result<RegretTrace> {
    let mode = reward_mode_for(env);
    let (_, opt) = optimal_value(env, actions)?;
    let mut cache: HashMap<Intervention, f64> = HashMap::new();
    let mut cum = 0.0;
    let mut rows = Vec::with_capacity(rounds.len());
    for (k, r) in rounds.iter().enumerate() {
        let expected = match cache.get(&r.action) {
            Some(&v) => v,
            None => {
                let v = expected_reward(env, &r.action, mode)?;
                cache.insert(r.action.clone(), v);
                v
            }
        };
        let inst = opt - expected;
        cum += inst;
        rows.push(RegretRow {
            t: k + 1,
            action_id: r.action_id,
            y: r.y,
            expected_reward: expected,
            inst_regret: inst,
            cum_regret: cum,
        });
    }
    let init_rounds = rounds.iter().take_while(|r| r.action_id.is_none()).count();
    Ok(RegretTrace { rows, optimal_value: opt, init_rounds, relation: None })
}

/// Runs `cfg.algorithm` on `env`.
pub fn run(env: &CausalModel, cfg: &RunConfig) -> Result<RegretTrace> {
    match cfg.algorithm {
        Algorithm::BglmOfuUnknown => run_bglm_ofu_unknown(env, cfg),
        Algorithm::BlmLrUnknown => run_blm_lr_unknown(env, cfg),
        Algorithm::BlmLrUnknownSg => run_blm_lr_unknown_sg(env, cfg),
        Algorithm::Ucb => run_ucb_baseline(env, cfg),
        Algorithm::EpsGreedy => run_eps_greedy(env, cfg),
    }
}

/// Environment side of a run: one random stream and a sample buffer.
pub(crate) struct Environment<'a> {
    pub env: &'a CausalModel,
    rng: crate::RandomStream,
    buf: Vec<f64>,
    pub rounds: Vec<PlayedRound>,
}

impl<'a> Environment<'a> {
    pub fn new(env: &'a CausalModel, seed: u64, horizon: usize) -> Self {
        Self { env, rng: crate::rng::stream(seed), buf: Vec::new(), rounds: Vec::with_capacity(horizon) }
    }

    /// Plays `a` and returns the node values of the round.
    pub fn play(&mut self, action_id: Option<usize>, a: &Intervention) -> &[f64] {
        self.env.sample_into(a, &mut self.rng, &mut self.buf);
        self.rounds.push(PlayedRound { action_id, action: a.clone(), y: *self.buf.last().expect("non-empty model") });
        &self.buf
    }
}

/// Learner-side stream, independent of the environment stream.
pub(crate) fn learner_stream(seed: u64) -> crate::RandomStream {
    crate::rng::stream(crate::rng::splitmix64(seed ^ 0x5EED_1EA4_0000_0001))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scm::appendix_e;

    fn pair_arms(m: &CausalModel) -> ActionSet {
        ActionSet::all_ones(m, &[1, 2, 3, 4, 5], 2).unwrap()
    }

    #[test]
    fn appendix_e_optimal_value() {
        let m = appendix_e();
        let actions = pair_arms(&m);
        let (id, v) = optimal_value(&m, &actions).unwrap();
        assert_eq!(actions.get(id).label(&m), "do(X2=1,X3=1)");
        assert!((v - 0.678).abs() < 1e-12);
    }

    #[test]
    fn regret_accounting_examples() {
        let m = appendix_e();
        let actions = pair_arms(&m);
        let (best, _) = optimal_value(&m, &actions).unwrap();
        let always_best: Vec<PlayedRound> =
            (0..50).map(|_| PlayedRound { action_id: Some(best), action: actions.get(best).clone(), y: 0.0 }).collect();
        assert_eq!(compute_regret(&always_best, &m, &actions).unwrap().cumulative_regret(), 0.0);
        let null: Vec<PlayedRound> =
            (0..100).map(|_| PlayedRound { action_id: None, action: Intervention::null(), y: 0.0 }).collect();
        let trace = compute_regret(&null, &m, &actions).unwrap();
        assert!((trace.cumulative_regret() - 42.0).abs() < 1e-9);
        assert_eq!(trace.init_rounds, 100);
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert!("thompson".parse::<Algorithm>().is_err());
    }

    #[test]
    fn config_validation() {
        let m = appendix_e();
        let mut cfg = RunConfig::new(&m, Algorithm::Ucb, 100, 0);
        assert!(cfg.validate(&m).is_ok());
        cfg.epsilon = 2.0;
        assert!(cfg.validate(&m).is_err());
    }
}
