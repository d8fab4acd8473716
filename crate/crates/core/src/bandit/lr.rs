//! BLM-LR-Unknown and its sqrt-scale variant: ancestor discovery followed by
//! per-node ridge regression with optimistic action selection.

use nalgebra::DVector;

use super::causal::{for_each_observed, oracle_model, play_init};
use super::{compute_regret, Environment, Knowledge, RegretTrace, RunConfig};
use crate::discovery::{bglm_ancestors, nogap_blm_ancestors, AncestorRelation, InitMode, InitPlan};
use crate::estimation::{confidence_radius_lr, RegressionState};
use crate::oracle::{EstimatedModel, NodeEstimate, RegressionStructure};
use crate::scm::{CausalModel, LinkFunction, ValueKind};
use crate::{Error, Result};

/// `δ = 1/(n√T)`.
pub fn lr_delta(n: usize, horizon: usize) -> f64 {
    1.0 / (n as f64 * (horizon as f64).sqrt())
}

/// Two-thirds initialization with the no-gap ancestor test.
pub fn run_blm_lr_unknown(env: &CausalModel, cfg: &RunConfig) -> Result<RegretTrace> {
    if env.kind() != ValueKind::Binary {
        return Err(Error::ModeMismatch("BLM-LR-Unknown needs a binary model".into()));
    }
    run_lr(env, cfg, InitMode::TwoThirds)
}

/// Sqrt initialization with the weight-gap ancestor test; also accepts
/// continuous linear models.
pub fn run_blm_lr_unknown_sg(env: &CausalModel, cfg: &RunConfig) -> Result<RegretTrace> {
    run_lr(env, cfg, InitMode::Sqrt)
}

fn run_lr(env: &CausalModel, cfg: &RunConfig, mode: InitMode) -> Result<RegretTrace> {
    cfg.validate(env)?;
    if !env.is_linear() {
        return Err(Error::ModeMismatch("linear-regression algorithms need identity links on every node".into()));
    }
    let n = env.n();
    let horizon = cfg.horizon;
    let plan = InitPlan { cycles: cfg.cycles, ..InitPlan::new(mode, cfg.c0, horizon) };
    let schedule = plan.schedule(n);
    if horizon < schedule.len() {
        return Err(Error::InvalidConfig(format!(
            "horizon {horizon} is shorter than the initialization phase ({} rounds)",
            schedule.len()
        )));
    }
    let delta = lr_delta(n, horizon);
    let mut world = Environment::new(env, cfg.seed, horizon);
    let log = play_init(&mut world, &schedule);
    let relation = match (cfg.knowledge, mode) {
        (Knowledge::Oracle, _) => AncestorRelation::from_model(env),
        (Knowledge::Learned, InitMode::TwoThirds) => nogap_blm_ancestors(&log, n, cfg.c0, cfg.c1, horizon, cfg.scope)?,
        (Knowledge::Learned, InitMode::Sqrt) => bglm_ancestors(&log, n, cfg.c0, cfg.c1, horizon, cfg.scope)?,
    };
    let structure = RegressionStructure::new(&relation);
    let mut states: Vec<RegressionState> = structure.regressors.iter().map(|r| RegressionState::new(r.len())).collect();
    let oracle = match cfg.knowledge {
        Knowledge::Oracle => Some(oracle_model(env, &structure)?),
        Knowledge::Learned => None,
    };
    let mut buf = Vec::new();
    while world.rounds.len() < horizon {
        let t = world.rounds.len() + 1;
        let learned;
        let est = match &oracle {
            Some(m) => m,
            None => {
                let rho = confidence_radius_lr(n, t - 1, delta)? * cfg.rho_scale;
                let mut nodes = vec![None];
                for state in &states[1..] {
                    nodes.push(Some(NodeEstimate::new(state.ellipsoid(rho)?, LinkFunction::identity())));
                }
                learned = EstimatedModel::new(structure.clone(), nodes)?;
                &learned
            }
        };
        let (id, _, _) = est.optimistic_action(&cfg.actions)?;
        let a = cfg.actions.get(id);
        let values = world.play(Some(id), a);
        if oracle.is_none() {
            for_each_observed(&structure, a, values, &mut buf, |j, v, x| {
                states[j].update(&DVector::from_column_slice(v), x)
            })?;
        }
    }
    let mut trace = compute_regret(&world.rounds, env, &cfg.actions)?;
    trace.relation = Some(relation);
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bandit::Algorithm;
    use crate::discovery::{CycleCount, DiscoveryScope};
    use crate::scm::{appendix_e, ActionSet};

    fn appendix_cfg(m: &CausalModel, alg: Algorithm, horizon: usize, seed: u64) -> RunConfig {
        let mut cfg = RunConfig::new(m, alg, horizon, seed);
        cfg.actions = ActionSet::all_ones(m, &[1, 2, 3, 4, 5], 2).unwrap();
        cfg.rho_scale = 0.1;
        cfg.scope = DiscoveryScope::TargetOnly;
        cfg.cycles = CycleCount::Fixed(1);
        cfg
    }

    #[test]
    fn init_rows_follow_the_schedule() {
        let m = appendix_e();
        let cfg = appendix_cfg(&m, Algorithm::BlmLrUnknown, 3_000, 2);
        let trace = run_blm_lr_unknown(&m, &cfg).unwrap();
        assert_eq!(trace.len(), 3_000);
        let plan = InitPlan { cycles: CycleCount::Fixed(1), ..InitPlan::new(InitMode::TwoThirds, 0.1, 3_000) };
        assert_eq!(trace.init_rounds, plan.len(m.n()));
        let schedule = plan.schedule(m.n());
        for (row, a) in trace.rows.iter().zip(&schedule) {
            let expected = crate::scm::expected_reward(&m, a, crate::scm::RewardMode::ExactLinear).unwrap();
            assert_eq!(row.expected_reward, expected);
        }
    }

    #[test]
    fn oracle_knowledge_has_no_post_init_regret() {
        let m = appendix_e();
        for alg in [Algorithm::BlmLrUnknown, Algorithm::BlmLrUnknownSg] {
            let mut cfg = appendix_cfg(&m, alg, 2_000, 4);
            cfg.knowledge = Knowledge::Oracle;
            let trace = super::super::run(&m, &cfg).unwrap();
            assert!(trace.post_init_regret().abs() < 1e-12, "{alg}");
        }
    }

    #[test]
    fn sg_variant_accepts_continuous_models() {
        use crate::scm::{LinkFunction as L, Node, NoiseSpec};
        let m = CausalModel::new(
            vec![
                Node::root("X1"),
                Node::new("X2", vec![0], vec![0.5], L::identity()).with_noise(NoiseSpec::Uniform { half_width: 0.2 }),
                Node::new("X3", vec![0, 1], vec![0.2, 0.4], L::identity()).with_noise(NoiseSpec::Uniform { half_width: 0.1 }),
                Node::new("Y", vec![0, 1, 2], vec![0.1, 0.3, 0.5], L::identity()).with_noise(NoiseSpec::Uniform { half_width: 0.1 }),
            ],
            ValueKind::Continuous,
        )
        .unwrap();
        let cfg = RunConfig::new(&m, Algorithm::BlmLrUnknownSg, 2_000, 5);
        let trace = run_blm_lr_unknown_sg(&m, &cfg).unwrap();
        assert_eq!(trace.len(), 2_000);
        assert!(run_blm_lr_unknown(&m, &cfg).is_err());
        assert!(trace.rows.iter().all(|r| r.inst_regret >= -1e-12));
    }

    #[test]
    fn delta_formula() {
        assert!((lr_delta(4, 10_000) - 1.0 / 400.0).abs() < 1e-15);
    }
}
