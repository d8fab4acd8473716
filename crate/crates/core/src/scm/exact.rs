//! Exact and Monte-Carlo expected values under interventions.

use super::model::{CausalModel, Intervention, NodeId, ValueKind};
use crate::rng::stream;
use crate::{Error, Result};

/// Maximum number of free binary nodes summed over by enumeration.
pub const MAX_ENUMERATED: usize = 20;

/// How an expectation is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewardMode {
    /// Mean propagation in topological order; linear models only.
    ExactLinear,
    /// Sum over every assignment of the free ancestors of the queried node.
    Enumerate,
    /// Average of `samples` draws from a stream seeded with `seed`.
    MonteCarlo { samples: usize, seed: u64 },
}

/// `E[Y | a]`.
pub fn expected_reward(model: &CausalModel, a: &Intervention, mode: RewardMode) -> Result<f64> {
    expected_value(model, a, model.target(), mode)
}

/// `E[X_node | a]`.
pub fn expected_value(model: &CausalModel, a: &Intervention, node: NodeId, mode: RewardMode) -> Result<f64> {
    a.check(model)?;
    if node >= model.len() {
        return Err(Error::UnknownNode(format!("#{node}")));
    }
    match mode {
        RewardMode::ExactLinear => {
            if !model.is_linear() {
                return Err(Error::ModeMismatch("exact-linear needs identity links on every node".into()));
            }
            Ok(linear_means(model, a)[node])
        }
        RewardMode::Enumerate => enumerate(model, a, node),
        RewardMode::MonteCarlo { samples, seed } => {
            if samples == 0 {
                return Err(Error::InvalidConfig("monte-carlo needs at least one sample".into()));
            }
            let mut rng = stream(seed);
            let mut buf = Vec::with_capacity(model.len());
            let mut acc = 0.0;
            for _ in 0..samples {
                model.sample_into(a, &mut rng, &mut buf);
                acc += buf[node];
            }
            Ok(acc / samples as f64)
        }
    }
}

/// Means of every node of a linear model under `a`.
pub fn linear_means(model: &CausalModel, a: &Intervention) -> Vec<f64> {
    let mut mean = Vec::with_capacity(model.len());
    mean.push(1.0);
    for i in 1..model.len() {
        let v = match a.value_of(i) {
            Some(v) => f64::from(v),
            None => {
                let node = model.node(i);
                node.parents.iter().zip(&node.weights).map(|(&p, &w)| w * mean[p]).sum()
            }
        };
        mean.push(v);
    }
    mean
}

fn enumerate(model: &CausalModel, a: &Intervention, node: NodeId) -> Result<f64> {
    if model.kind() != ValueKind::Binary {
        return Err(Error::ModeMismatch("enumeration needs binary nodes".into()));
    }
    if node == 0 {
        return Ok(1.0);
    }
    if let Some(v) = a.value_of(node) {
        return Ok(f64::from(v));
    }
    // Only proper ancestors of the queried node influence its marginal.
    let anc = model.ancestor_matrix();
    let free: Vec<NodeId> = (1..node).filter(|&j| anc[node][j] && !a.contains(j)).collect();
    if free.len() > MAX_ENUMERATED {
        return Err(Error::ModeMismatch(format!(
            "enumeration over {} free nodes exceeds the limit of {MAX_ENUMERATED}",
            free.len()
        )));
    }
    let mut values = vec![0.0; model.len()];
    values[0] = 1.0;
    for (k, v) in a.iter() {
        values[k] = f64::from(v);
    }
    Ok(enumerate_rec(model, node, &free, 0, 1.0, &mut values))
}

fn enumerate_rec(model: &CausalModel, node: NodeId, free: &[NodeId], depth: usize, weight: f64, values: &mut [f64]) -> f64 {
    if depth == free.len() {
        return weight * model.conditional(node, values);
    }
    let i = free[depth];
    let p = model.conditional(i, values);
    let mut acc = 0.0;
    if p > 0.0 {
        values[i] = 1.0;
        acc += enumerate_rec(model, node, free, depth + 1, weight * p, values);
    }
    if p < 1.0 {
        values[i] = 0.0;
        acc += enumerate_rec(model, node, free, depth + 1, weight * (1.0 - p), values);
    }
    acc
}

/// `(E[X_j | do(X_i=1)], E[X_j | do(X_i=0)])` by enumeration.
pub fn do_difference(model: &CausalModel, i: NodeId, j: NodeId) -> Result<(f64, f64)> {
    if i == j {
        return Err(Error::InvalidIntervention("do-difference needs distinct nodes".into()));
    }
    let one = Intervention::new(model, [(i, 1)])?;
    let zero = Intervention::new(model, [(i, 0)])?;
    Ok((enumerate(model, &one, j)?, enumerate(model, &zero, j)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scm::generate::appendix_e;
    use crate::scm::link::LinkFunction;
    use crate::scm::model::Node;
    use approx::assert_abs_diff_eq;

    /// Brute-force oracle: sums the full joint over all `2^(n)` assignments
    /// without ancestor pruning.
    fn full_joint(model: &CausalModel, a: &Intervention, node: NodeId) -> f64 {
        let len = model.len();
        let mut total = 0.0;
        for bits in 0u64..(1 << (len - 1)) {
            let mut values = vec![1.0; len];
            for i in 1..len {
                values[i] = ((bits >> (i - 1)) & 1) as f64;
            }
            let mut w = 1.0;
            for i in 1..len {
                let p = match a.value_of(i) {
                    Some(v) => f64::from(v),
                    None => model.conditional(i, &values),
                };
                w *= if values[i] == 1.0 { p } else { 1.0 - p };
            }
            total += w * values[node];
        }
        total
    }

    #[test]
    fn appendix_e_rewards() {
        let m = appendix_e();
        let null = Intervention::null();
        let best = Intervention::parse(&m, "X2=1,X3=1").unwrap();
        for mode in [RewardMode::ExactLinear, RewardMode::Enumerate] {
            assert_abs_diff_eq!(expected_reward(&m, &null, mode).unwrap(), 0.258, epsilon = 1e-12);
            assert_abs_diff_eq!(expected_reward(&m, &best, mode).unwrap(), 0.678, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(full_joint(&m, &best, m.target()), 0.678, epsilon = 1e-12);
    }

    #[test]
    fn setting_all_parents_of_y_yields_weight_sum() {
        let m = appendix_e();
        let a = Intervention::from_pairs((1..6).map(|i| (i, 1)));
        let w: f64 = m.node(m.target()).weights.iter().sum();
        assert_abs_diff_eq!(expected_reward(&m, &a, RewardMode::Enumerate).unwrap(), w, epsilon = 1e-12);
    }

    #[test]
    fn do_difference_examples() {
        let m = appendix_e();
        let (hi, lo) = do_difference(&m, 1, m.target()).unwrap();
        assert_abs_diff_eq!(hi - lo, 0.3, epsilon = 1e-12);
        let (hi, lo) = do_difference(&m, 3, 1).unwrap();
        assert_eq!(hi - lo, 0.0);
        let chain = CausalModel::new(
            vec![
                Node::root("X1"),
                Node::new("X2", vec![0], vec![0.5], LinkFunction::identity()),
                Node::new("X3", vec![0, 1], vec![0.2, 0.5], LinkFunction::identity()),
                Node::new("Y", vec![0, 2], vec![0.1, 0.5], LinkFunction::identity()),
            ],
            ValueKind::Binary,
        )
        .unwrap();
        let (hi, lo) = do_difference(&chain, 1, 2).unwrap();
        assert_abs_diff_eq!(hi - lo, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn pruned_enumeration_matches_full_joint_on_logistic_model() {
        let m = CausalModel::new(
            vec![
                Node::root("X1"),
                Node::new("X2", vec![0], vec![0.3], LinkFunction::logistic()),
                Node::new("X3", vec![0, 1], vec![0.2, 0.9], LinkFunction::logistic()),
                Node::new("X4", vec![0, 2], vec![0.1, 0.4], LinkFunction::logistic()),
                Node::new("Y", vec![0, 1, 3], vec![0.1, 0.5, 0.7], LinkFunction::logistic()),
            ],
            ValueKind::Binary,
        )
        .unwrap();
        for a in [Intervention::null(), Intervention::atomic(2, 0), Intervention::from_pairs([(1, 1), (3, 0)])] {
            for node in 1..m.len() {
                let e = expected_value(&m, &a, node, RewardMode::Enumerate).unwrap();
                assert_abs_diff_eq!(e, full_joint(&m, &a, node), epsilon = 1e-12);
            }
        }
        assert!(expected_reward(&m, &Intervention::null(), RewardMode::ExactLinear).is_err());
    }

    #[test]
    fn monte_carlo_is_close_and_deterministic() {
        let m = appendix_e();
        let mode = RewardMode::MonteCarlo { samples: 200_000, seed: 5 };
        let a = expected_reward(&m, &Intervention::null(), mode).unwrap();
        let b = expected_reward(&m, &Intervention::null(), mode).unwrap();
        assert_eq!(a, b);
        assert!((a - 0.258).abs() < 0.005);
    }
}
