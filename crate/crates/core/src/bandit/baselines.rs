//! Structure-agnostic baselines that treat each intervention as an arm.

use rand::Rng;

use super::{compute_regret, learner_stream, Environment, RegretTrace, RunConfig};
use crate::scm::CausalModel;
use crate::Result;

/// Per-arm pull counts and reward sums.
struct ArmStats {
    pulls: Vec<f64>,
    sums: Vec<f64>,
}

impl ArmStats {
    fn new(k: usize) -> Self {
        Self { pulls: vec![0.0; k], sums: vec![0.0; k] }
    }

    fn first_unplayed(&self) -> Option<usize> {
        self.pulls.iter().position(|&p| p == 0.0)
    }

    fn mean(&self, i: usize) -> f64 {
        self.sums[i] / self.pulls[i]
    }

    fn argmax(&self, score: impl Fn(usize) -> f64) -> usize {
        let mut best = (0, f64::NEG_INFINITY);
        for i in 0..self.pulls.len() {
            let s = score(i);
            if s > best.1 {
                best = (i, s);
            }
        }
        best.0
    }

    fn record(&mut self, i: usize, y: f64) {
        self.pulls[i] += 1.0;
        self.sums[i] += y;
    }
}

/// UCB1 with index `μ̂ᵢ + √(ln t / nᵢ)` after one pull of every arm.
pub fn run_ucb_baseline(env: &CausalModel, cfg: &RunConfig) -> Result<RegretTrace> {
    cfg.validate(env)?;
    let mut world = Environment::new(env, cfg.seed, cfg.horizon);
    let mut stats = ArmStats::new(cfg.actions.len());
    for t in 1..=cfg.horizon {
        let id = stats.first_unplayed().unwrap_or_else(|| {
            let log_t = (t as f64).ln();
            stats.argmax(|i| stats.mean(i) + (log_t / stats.pulls[i]).sqrt())
        });
        let y = *world.play(Some(id), cfg.actions.get(id)).last().expect("non-empty model");
        stats.record(id, y);
    }
    compute_regret(&world.rounds, env, &cfg.actions)
}

/// Uniform exploration with probability ε, otherwise the best empirical mean
/// (unplayed arms first).
pub fn run_eps_greedy(env: &CausalModel, cfg: &RunConfig) -> Result<RegretTrace> {
    cfg.validate(env)?;
    let mut world = Environment::new(env, cfg.seed, cfg.horizon);
    let mut rng = learner_stream(cfg.seed);
    let k = cfg.actions.len();
    let mut stats = ArmStats::new(k);
    for _ in 0..cfg.horizon {
        let explore = rng.gen::<f64>() < cfg.epsilon;
        let id = if explore {
            rng.gen_range(0..k)
        } else {
            stats.first_unplayed().unwrap_or_else(|| stats.argmax(|i| stats.mean(i)))
        };
        let y = *world.play(Some(id), cfg.actions.get(id)).last().expect("non-empty model");
        stats.record(id, y);
    }
    compute_regret(&world.rounds, env, &cfg.actions)
}
