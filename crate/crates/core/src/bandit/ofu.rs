//! BGLM-OFU-Unknown: sqrt-scale discovery, an optional null-intervention
//! phase, then maximum likelihood with optimistic action selection.

use nalgebra::DVector;

use super::causal::{for_each_observed, oracle_model, play_init};
use super::{compute_regret, Environment, Knowledge, RegretTrace, RunConfig};
use crate::discovery::{bglm_ancestors, init_schedule, AncestorRelation, InitMode};
use crate::estimation::{confidence_radius_ofu, mle_solve, second_init_length, EllipsoidEstimate, NodeDataset};
use crate::oracle::{EstimatedModel, NodeEstimate, RegressionStructure};
use crate::rng::splitmix64;
use crate::scm::{extend_link_range, CausalModel, Intervention, LinkFunction};
use crate::{Error, Result};

/// `δ = 1/(3n√T)`.
pub fn ofu_delta(n: usize, horizon: usize) -> f64 {
    1.0 / (3.0 * n as f64 * (horizon as f64).sqrt())
}

pub fn run_bglm_ofu_unknown(env: &CausalModel, cfg: &RunConfig) -> Result<RegretTrace> {
    cfg.validate(env)?;
    if !env.is_glm() {
        return Err(Error::ModeMismatch("BGLM-OFU-Unknown needs GLM links on every node".into()));
    }
    let n = env.n();
    let horizon = cfg.horizon;
    let schedule = init_schedule(n, cfg.c0, horizon, InitMode::Sqrt)?;
    if horizon < schedule.len() {
        return Err(Error::InvalidConfig(format!(
            "horizon {horizon} is shorter than the initialization phase ({} rounds)",
            schedule.len()
        )));
    }
    let delta = ofu_delta(n, horizon);
    let mut world = Environment::new(env, cfg.seed, horizon);
    let log = play_init(&mut world, &schedule);
    let relation = match cfg.knowledge {
        Knowledge::Learned => bglm_ancestors(&log, n, cfg.c0, cfg.c1, horizon, cfg.scope)?,
        Knowledge::Oracle => AncestorRelation::from_model(env),
    };
    let structure = RegressionStructure::new(&relation);
    let links: Vec<LinkFunction> = (0..env.len())
        .map(|j| if j == 0 { LinkFunction::identity() } else { extend_link_range(&env.node(j).link, structure.regressors[j].len()) })
        .collect();
    let mut data: Vec<NodeDataset> = structure.regressors.iter().map(|r| NodeDataset::new(r.len())).collect();
    let mut buf = Vec::new();
    for (a, values) in &log.records {
        for_each_observed(&structure, a, values, &mut buf, |j, v, x| data[j].push(v, x))?;
    }

    let second = if cfg.skip_second_init { 0 } else { second_init_length(n, &cfg.constants, delta)? };
    let null = Intervention::null();
    for _ in 0..second.min(horizon - world.rounds.len()) {
        let values = world.play(None, &null);
        for_each_observed(&structure, &null, values, &mut buf, |j, v, x| data[j].push(v, x))?;
    }

    let rho = confidence_radius_ofu(cfg.constants.kappa, delta)? * cfg.rho_scale;
    let mut warm: Vec<Option<DVector<f64>>> = vec![None; env.len()];
    let mut model: Option<EstimatedModel> = match cfg.knowledge {
        Knowledge::Oracle => Some(oracle_model(env, &structure)?),
        Knowledge::Learned => None,
    };
    let mut k = 0;
    while world.rounds.len() < horizon {
        if cfg.knowledge == Knowledge::Learned && k % cfg.refit_every == 0 {
            let mut nodes = vec![None];
            for j in 1..env.len() {
                let fit = mle_solve(&data[j], &links[j], warm[j].as_ref());
                warm[j] = Some(fit.theta.clone());
                let e = EllipsoidEstimate::new(fit.theta, data[j].gram(), rho)?;
                nodes.push(Some(NodeEstimate::new(e, links[j].clone())));
            }
            let mut est = EstimatedModel::new(structure.clone(), nodes)?;
            est.mc_paths = cfg.mc_paths;
            est.mc_seed = splitmix64(cfg.seed ^ k as u64);
            model = Some(est);
        }
        let est = model.as_ref().expect("built above");
        let (id, _, _) = est.optimistic_action(&cfg.actions)?;
        let a = cfg.actions.get(id);
        let values = world.play(Some(id), a);
        for_each_observed(&structure, a, values, &mut buf, |j, v, x| data[j].push(v, x))?;
        k += 1;
    }
    let mut trace = compute_regret(&world.rounds, env, &cfg.actions)?;
    trace.relation = Some(relation);
    Ok(trace)
}
