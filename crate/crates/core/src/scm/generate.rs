//! Instance families: the reference BLM, the lower-bound constructions and
//! random linear models for property tests.

use rand::Rng;

use super::exact::linear_means;
use super::link::LinkFunction;
use super::model::{CausalModel, Intervention, Node, NodeId, ValueKind};
use crate::{Error, Result};

/// Instance family selector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    AppendixE,
    /// `n` parallel parents of `Y`; `variant` 1 is the base instance.
    ParallelLowerBound { n: usize, delta: f64, variant: usize },
    /// Best-arm identification instance on `n` variables; `variant` ≥ 2 selects
    /// which node's orientation is flipped (2 keeps the base graph).
    PeLowerBound { n: usize, eps: f64, variant: usize },
    /// One parent of `Y` plus `roots` isolated fair nodes.
    EasyObservation { roots: usize },
}

pub fn generate_instance(family: Family) -> Result<CausalModel> {
    match family {
        Family::AppendixE => Ok(appendix_e()),
        Family::ParallelLowerBound { n, delta, variant } => parallel_lower_bound(n, delta, variant),
        Family::PeLowerBound { n, eps, variant } => pe_lower_bound(n, eps, variant),
        Family::EasyObservation { roots } => easy_observation(roots),
    }
}

/// Parallel BLM with five parents of `Y`.
///
/// `X2, X3` fire with probability 0.3 and carry weight 0.3 into `Y`;
/// `X4, X5, X6` fire with probability 0.2 and carry weight 0.13.
pub fn appendix_e() -> CausalModel {
    let id = LinkFunction::identity;
    let mut nodes = vec![Node::root("X1")];
    for (k, w) in [0.3, 0.3, 0.2, 0.2, 0.2].into_iter().enumerate() {
        nodes.push(Node::new(format!("X{}", k + 2), vec![0], vec![w], id()));
    }
    nodes.push(Node::new("Y", vec![1, 2, 3, 4, 5], vec![0.3, 0.3, 0.13, 0.13, 0.13], id()));
    CausalModel::new(nodes, ValueKind::Binary).expect("reference instance is valid")
}

/// Parallel graph `V_1 … V_n → Y` with independent fair parents.
///
/// `P(Y=1)` is `0.5 + Δ` when every parent is 0 and 0.5 otherwise; variant
/// `i ≥ 2` also pays `0.5 + 2Δ` at the pattern given by the binary expansion
/// of `i - 1` (most significant bit on `V_1`).
pub fn parallel_lower_bound(n: usize, delta: f64, variant: usize) -> Result<CausalModel> {
    if n < 1 || n > 16 {
        return Err(Error::InvalidConfig("parallel lower bound needs 1 ≤ n ≤ 16".into()));
    }
    if !(0.0..=0.25).contains(&delta) {
        return Err(Error::InvalidConfig("parallel lower bound needs 0 ≤ Δ ≤ 0.25".into()));
    }
    if variant < 1 || variant > 1usize << n {
        return Err(Error::InvalidConfig(format!("variant must lie in 1..={}", 1usize << n)));
    }
    let mut nodes = vec![Node::root("X1")];
    for k in 1..=n {
        nodes.push(Node::new(format!("V{k}"), vec![], vec![], LinkFunction::tabulated(vec![0.5])));
    }
    let mut table = vec![0.5; 1 << n];
    table[0] = 0.5 + delta;
    if variant >= 2 {
        let code = variant - 1;
        let mut row = 0usize;
        for j in 1..=n {
            let bit = (code >> (n - j)) & 1;
            // Row bit j-1 holds parent V_j.
            row |= bit << (j - 1);
        }
        table[row] = 0.5 + 2.0 * delta;
    }
    nodes.push(Node::new("Y", (1..=n).collect(), vec![0.0; n], LinkFunction::tabulated(table)));
    CausalModel::new(nodes, ValueKind::Binary)
}

/// Joint law shared by every best-arm lower-bound variant, over `V_1 … V_n`
/// with `v[k]` holding `V_{k+1}`.
fn pe_joint(v: &[u8], eps: f64) -> f64 {
    let agree = |a: u8, b: u8, d: f64| if a == b { 0.5 + d } else { 0.5 - d };
    let mut p = 0.5 * agree(v[1], v[0], eps);
    for &vi in &v[2..] {
        p *= agree(vi, v[0], 4.0 * eps);
    }
    p
}

/// Best-arm identification lower-bound instance.
///
/// Variables `V_1 … V_n` share one joint law in every variant and `Y = V_1`.
/// Variant 2 has edges `V_2 → V_1`, `V_1 → V_i` and `V_2 → V_i` for `i ≥ 3`;
/// variant `i ≥ 3` reverses `V_1 → V_i`. The bias node `X1` is unused.
pub fn pe_lower_bound(n: usize, eps: f64, variant: usize) -> Result<CausalModel> {
    if !(2..=14).contains(&n) {
        return Err(Error::InvalidConfig("best-arm lower bound needs 2 ≤ n ≤ 14".into()));
    }
    if !(0.0..=0.125).contains(&eps) {
        return Err(Error::InvalidConfig("best-arm lower bound needs 0 ≤ ε ≤ 0.125".into()));
    }
    if variant < 2 || variant > n {
        return Err(Error::InvalidConfig(format!("variant must lie in 2..={n}")));
    }
    // Parents of each instance variable (0-based: k holds V_{k+1}).
    let mut parents: Vec<Vec<usize>> = vec![Vec::new(); n];
    parents[0] = vec![1];
    for (k, p) in parents.iter_mut().enumerate().skip(2) {
        *p = vec![0, 1];
        if k + 1 == variant {
            *p = vec![1];
        }
    }
    if variant >= 3 {
        parents[0] = vec![1, variant - 1];
    }
    // Topological order: V_2, then the flipped node, then V_1, then the rest.
    let mut order = vec![1usize];
    if variant >= 3 {
        order.push(variant - 1);
    }
    order.push(0);
    order.extend((2..n).filter(|&k| k + 1 != variant));
    let position = |k: usize| order.iter().position(|&o| o == k).unwrap() + 1;

    let mut nodes = vec![Node::root("X1")];
    for &k in &order {
        let mut ps: Vec<usize> = parents[k].clone();
        ps.sort_by_key(|&p| position(p));
        let table = conditional_table(n, k, &ps, eps);
        let ids: Vec<NodeId> = ps.iter().map(|&p| position(p)).collect();
        let len = ids.len();
        nodes.push(Node::new(format!("V{}", k + 1), ids, vec![0.0; len], LinkFunction::tabulated(table)));
    }
    nodes.push(Node::new("Y", vec![position(0)], vec![0.0], LinkFunction::tabulated(vec![0.0, 1.0])));
    CausalModel::new(nodes, ValueKind::Binary)
}

/// `P(V_child = 1 | V_parents)` from the joint law; row bit `j` holds `parents[j]`.
fn conditional_table(n: usize, child: usize, parents: &[usize], eps: f64) -> Vec<f64> {
    let mut num = vec![0.0; 1 << parents.len()];
    let mut den = vec![0.0; 1 << parents.len()];
    let mut v = vec![0u8; n];
    for bits in 0u32..(1 << n) {
        for (k, x) in v.iter_mut().enumerate() {
            *x = ((bits >> k) & 1) as u8;
        }
        let p = pe_joint(&v, eps);
        let row = parents.iter().enumerate().fold(0usize, |r, (j, &q)| r | (usize::from(v[q]) << j));
        den[row] += p;
        if v[child] == 1 {
            num[row] += p;
        }
    }
    num.iter().zip(&den).map(|(a, b)| a / b).collect()
}

/// Instance where observation alone prices every arm.
///
/// `X2` and `roots` further nodes are fair coins with no incoming edges
/// besides the bias; `Y` fires with probability `0.2 + 0.5·X2`. Every edge
/// ends in `Y`, so the essential graph is fully oriented, every `q_a` is 1/2,
/// and the only non-vacuous `c_a` is 0.5.
pub fn easy_observation(roots: usize) -> Result<CausalModel> {
    let id = LinkFunction::identity;
    let mut nodes = vec![Node::root("X1")];
    for k in 0..=roots {
        nodes.push(Node::new(format!("X{}", k + 2), vec![0], vec![0.5], id()));
    }
    nodes.push(Node::new("Y", vec![0, 1], vec![0.2, 0.5], id()));
    CausalModel::new(nodes, ValueKind::Binary)
}

/// Random binary linear model with `n_x` non-reward nodes (including `X1`).
///
/// Every node has the bias node as a parent; other edges appear with
/// probability `edge_prob`. Each node's weights sum to a value in `[0.5, 1]`.
pub fn random_blm<R: Rng + ?Sized>(n_x: usize, edge_prob: f64, rng: &mut R) -> CausalModel {
    let mut nodes = vec![Node::root("X1")];
    let len = n_x + 1;
    for i in 1..len {
        let mut parents = vec![0];
        for j in 1..i {
            if rng.gen::<f64>() < edge_prob {
                parents.push(j);
            }
        }
        let raw: Vec<f64> = parents.iter().map(|_| rng.gen_range(0.05..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let scale = rng.gen_range(0.5..1.0) / total;
        let weights = raw.iter().map(|w| w * scale).collect();
        let name = if i + 1 == len { "Y".to_string() } else { format!("X{}", i + 1) };
        nodes.push(Node::new(name, parents, weights, LinkFunction::identity()));
    }
    CausalModel::new(nodes, ValueKind::Binary).expect("random linear model is valid by construction")
}

/// Linear model with the listed `(parent, child)` edges removed and their
/// mean contribution folded into the child's bias weight:
/// `θ'(X1, X) = θ(X1, X) + Σ_dropped θ(Xi, X)·E[Xi]`, with `E` under `do()`.
pub fn drop_edges(model: &CausalModel, dropped: &[(NodeId, NodeId)]) -> Result<CausalModel> {
    if !model.is_linear() {
        return Err(Error::ModeMismatch("edge dropping keeps means only for linear models".into()));
    }
    let means = linear_means(model, &Intervention::null());
    let mut nodes = model.nodes().to_vec();
    for &(p, c) in dropped {
        if p == 0 {
            return Err(Error::InvalidConfig("bias edges cannot be dropped".into()));
        }
        let w = model
            .weight(p, c)
            .ok_or_else(|| Error::InvalidConfig(format!("no edge {p} -> {c}")))?;
        let node = &mut nodes[c];
        let k = node.parents.iter().position(|&q| q == p).expect("edge exists");
        node.parents.remove(k);
        node.weights.remove(k);
        if node.parents.first() != Some(&0) {
            node.parents.insert(0, 0);
            node.weights.insert(0, 0.0);
        }
        node.weights[0] += w * means[p];
    }
    CausalModel::new(nodes, model.kind())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::scm::exact::{expected_reward, expected_value, RewardMode};
    use approx::assert_abs_diff_eq;

    #[test]
    fn easy_observation_rewards() {
        let m = easy_observation(3).unwrap();
        assert_eq!(m.n(), 5);
        let mode = RewardMode::Enumerate;
        assert_abs_diff_eq!(expected_reward(&m, &Intervention::atomic(1, 1), mode).unwrap(), 0.7, epsilon = 1e-12);
        assert_abs_diff_eq!(expected_reward(&m, &Intervention::atomic(1, 0), mode).unwrap(), 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(expected_reward(&m, &Intervention::atomic(3, 1), mode).unwrap(), 0.45, epsilon = 1e-12);
    }

    #[test]
    fn appendix_e_shape() {
        let m = appendix_e();
        assert_eq!(m.len(), 7);
        assert_eq!(m.edges().len(), 10);
        assert_eq!(m.theta_min(), Some(0.13));
        assert!(m.is_blm());
    }

    #[test]
    fn parallel_lower_bound_degenerate_and_variant() {
        let m = parallel_lower_bound(3, 0.0, 1).unwrap();
        let mut arms = vec![Intervention::null()];
        for i in 1..=3 {
            arms.push(Intervention::atomic(i, 0));
            arms.push(Intervention::atomic(i, 1));
        }
        for a in &arms {
            assert_abs_diff_eq!(expected_reward(&m, a, RewardMode::Enumerate).unwrap(), 0.5, epsilon = 1e-12);
        }
        // Variant 6 encodes 101: V1 = 1, V2 = 0, V3 = 1.
        let m = parallel_lower_bound(3, 0.1, 6).unwrap();
        let best = Intervention::from_pairs([(1, 1), (2, 0), (3, 1)]);
        assert_abs_diff_eq!(expected_reward(&m, &best, RewardMode::Enumerate).unwrap(), 0.7, epsilon = 1e-12);
        let zeros = Intervention::from_pairs([(1, 0), (2, 0), (3, 0)]);
        assert_abs_diff_eq!(expected_reward(&m, &zeros, RewardMode::Enumerate).unwrap(), 0.6, epsilon = 1e-12);
        assert!(parallel_lower_bound(3, 0.3, 1).is_err());
    }

    #[test]
    fn pe_lower_bound_marginals_are_fair() {
        for variant in 2..=4 {
            let m = pe_lower_bound(4, 0.01, variant).unwrap();
            for i in 1..m.len() {
                let p = expected_value(&m, &Intervention::null(), i, RewardMode::Enumerate).unwrap();
                assert_abs_diff_eq!(p, 0.5, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn pe_lower_bound_rewards() {
        let eps = 0.05;
        let m = pe_lower_bound(4, eps, 2).unwrap();
        let v2 = m.index_of("V2").unwrap();
        let v3 = m.index_of("V3").unwrap();
        let r = |a: Intervention| expected_reward(&m, &a, RewardMode::Enumerate).unwrap();
        assert_abs_diff_eq!(r(Intervention::atomic(v2, 1)), 0.5 + eps, epsilon = 1e-12);
        assert_abs_diff_eq!(r(Intervention::atomic(v2, 0)), 0.5 - eps, epsilon = 1e-12);
        assert_abs_diff_eq!(r(Intervention::atomic(v3, 1)), 0.5, epsilon = 1e-12);
        let m3 = pe_lower_bound(4, eps, 3).unwrap();
        let v3 = m3.index_of("V3").unwrap();
        let best = expected_reward(&m3, &Intervention::atomic(v3, 1), RewardMode::Enumerate).unwrap();
        assert!(best >= 0.5 + 2.0 * eps - 1e-12 && best <= 0.5 + 4.0 * eps + 1e-12);
        // Observational joints agree across variants.
        for i in 1..m.len() - 1 {
            let name = m.name(i).to_string();
            let j = m3.index_of(&name).unwrap();
            let a = expected_value(&m, &Intervention::null(), i, RewardMode::Enumerate).unwrap();
            let b = expected_value(&m3, &Intervention::null(), j, RewardMode::Enumerate).unwrap();
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn random_blms_are_valid() {
        let mut rng = stream(9);
        for n in 2..=10 {
            let m = random_blm(n, 0.5, &mut rng);
            assert_eq!(m.n(), n);
            assert!(m.is_blm());
        }
    }

    #[test]
    fn dropped_edge_keeps_observational_mean() {
        let m = appendix_e();
        let d = drop_edges(&m, &[(3, 6)]).unwrap();
        let y = m.target();
        assert_eq!(d.weight(3, y), None);
        assert_abs_diff_eq!(d.weight(0, y).unwrap(), 0.13 * 0.2, epsilon = 1e-15);
        let a = expected_reward(&m, &Intervention::null(), RewardMode::ExactLinear).unwrap();
        let b = expected_reward(&d, &Intervention::null(), RewardMode::ExactLinear).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-12);
    }
}
