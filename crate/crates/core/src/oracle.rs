//! Optimistic action selection over per-node confidence ellipsoids.
//!
//! Each estimated ancestor set is treated as a parent set (absent edges carry
//! weight 0). For linear nodes the optimistic mean of node `X` given the mean
//! vector `V` of its regressors is `min{θ̂·V + ρ‖V‖_{M⁻¹}, 1}`, propagated in
//! topological order. Other GLM nodes apply the same upper confidence value
//! inside the link and propagate by Monte-Carlo with common random numbers.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::discovery::AncestorRelation;
use crate::estimation::{invert_spd, EllipsoidEstimate};
use crate::rng::stream;
use crate::scm::{ActionSet, Intervention, LinkFunction, NodeId};
use crate::{Error, Result};

/// Default number of Monte-Carlo paths for non-linear links.
pub const DEFAULT_MC_PATHS: usize = 10_000;

/// Regressor sets and a propagation order derived from an ancestor relation.
///
/// Every regressor list starts with `X₁`. When two nodes are each other's
/// estimated ancestor, only the lower-index node is kept as a regressor of the
/// higher one, which makes the structure acyclic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegressionStructure {
    pub regressors: Vec<Vec<NodeId>>,
    pub order: Vec<NodeId>,
}

impl RegressionStructure {
    pub fn new(relation: &AncestorRelation) -> Self {
        let len = relation.len();
        let mut regressors = vec![Vec::new(); len];
        for (j, regs) in regressors.iter_mut().enumerate().skip(1) {
            regs.push(0);
            for i in 1..len {
                if i == j || !relation.contains(j, i) {
                    continue;
                }
                if relation.contains(i, j) && i > j {
                    continue;
                }
                regs.push(i);
            }
        }
        // Kahn's algorithm with smallest-index tie-break.
        let mut indegree: Vec<usize> = regressors.iter().map(|r| r.iter().filter(|&&p| p != 0).count()).collect();
        let mut done = vec![false; len];
        let mut order = vec![0];
        done[0] = true;
        while order.len() < len {
            let next = (1..len).find(|&j| !done[j] && indegree[j] == 0).expect("regressor graph is acyclic");
            done[next] = true;
            order.push(next);
            for (j, regs) in regressors.iter().enumerate() {
                if regs.contains(&next) {
                    indegree[j] -= 1;
                }
            }
        }
        Self { regressors, order }
    }

    pub fn len(&self) -> usize {
        self.regressors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regressors.is_empty()
    }
}

/// Per-node confidence ellipsoid in the flat layout used by the oracle.
#[derive(Debug, Clone)]
pub struct NodeEstimate {
    pub ellipsoid: EllipsoidEstimate,
    pub link: LinkFunction,
    theta: Vec<f64>,
    m_inv: Vec<f64>,
}

impl NodeEstimate {
    pub fn new(ellipsoid: EllipsoidEstimate, link: LinkFunction) -> Self {
        let theta = ellipsoid.theta_hat.iter().copied().collect();
        let m_inv = invert_spd(&ellipsoid.m).iter().copied().collect();
        Self { ellipsoid, link, theta, m_inv }
    }

    fn dim(&self) -> usize {
        self.theta.len()
    }

    /// `θ̂·v + ρ‖v‖_{M⁻¹}`.
    pub fn upper(&self, v: &[f64]) -> f64 {
        let d = self.dim();
        let mut dot = 0.0;
        let mut quad = 0.0;
        for a in 0..d {
            dot += self.theta[a] * v[a];
            let mut row = 0.0;
            // Column-major storage; M⁻¹ is symmetric.
            for b in 0..d {
                row += self.m_inv[a * d + b] * v[b];
            }
            quad += v[a] * row;
        }
        dot + self.ellipsoid.rho * quad.max(0.0).sqrt()
    }

    /// Maximiser of `θ·v` over the ellipsoid, clamped to the unit box.
    pub fn witness(&self, v: &[f64]) -> DVector<f64> {
        let vv = DVector::from_column_slice(v);
        let m_inv = DMatrix::from_column_slice(self.dim(), self.dim(), &self.m_inv);
        let mv = &m_inv * &vv;
        let norm = vv.dot(&mv).max(0.0).sqrt();
        let mut t = self.ellipsoid.theta_hat.clone();
        if norm > 0.0 {
            t += self.ellipsoid.rho / norm * mv;
        }
        t.map(|x| x.clamp(0.0, 1.0))
    }
}

/// Learner's view of the environment.
#[derive(Debug, Clone)]
pub struct EstimatedModel {
    pub structure: RegressionStructure,
    /// `None` for the bias node.
    pub nodes: Vec<Option<NodeEstimate>>,
    pub mc_paths: usize,
    pub mc_seed: u64,
}

impl EstimatedModel {
    pub fn new(structure: RegressionStructure, nodes: Vec<Option<NodeEstimate>>) -> Result<Self> {
        if nodes.len() != structure.len() {
            return Err(Error::Dimension { expected: structure.len(), got: nodes.len() });
        }
        for (j, node) in nodes.iter().enumerate().skip(1) {
            let est = node.as_ref().ok_or_else(|| Error::InvalidConfig(format!("node #{j} has no estimate")))?;
            if est.dim() != structure.regressors[j].len() {
                return Err(Error::Dimension { expected: structure.regressors[j].len(), got: est.dim() });
            }
        }
        Ok(Self { structure, nodes, mc_paths: DEFAULT_MC_PATHS, mc_seed: 0 })
    }

    fn target(&self) -> NodeId {
        self.structure.len() - 1
    }

    fn is_linear(&self) -> bool {
        self.nodes.iter().flatten().all(|n| n.link.is_identity())
    }

    fn gather(&self, j: NodeId, values: &[f64], v: &mut Vec<f64>) {
        v.clear();
        v.extend(self.structure.regressors[j].iter().map(|&p| values[p]));
    }

    /// Optimistic node means under `a` for linear links.
    fn optimistic_means(&self, a: &Intervention) -> Vec<f64> {
        let mut mean = vec![0.0; self.structure.len()];
        mean[0] = 1.0;
        let mut v = Vec::new();
        for &j in &self.structure.order[1..] {
            mean[j] = match a.value_of(j) {
                Some(x) => f64::from(x),
                None => {
                    self.gather(j, &mean, &mut v);
                    let est = self.nodes[j].as_ref().expect("validated");
                    est.upper(&v).clamp(0.0, 1.0)
                }
            };
        }
        mean
    }

    /// Optimistic expected reward of `a`.
    pub fn optimistic_value(&self, a: &Intervention) -> f64 {
        if self.is_linear() {
            return self.optimistic_means(a)[self.target()];
        }
        self.monte_carlo(a, |_, est, v| est.link.eval(est.upper(v)).clamp(0.0, 1.0))
    }

    fn monte_carlo(&self, a: &Intervention, prob: impl Fn(NodeId, &NodeEstimate, &[f64]) -> f64) -> f64 {
        let mut rng = stream(self.mc_seed);
        let len = self.structure.len();
        let mut values = vec![0.0; len];
        let mut v = Vec::new();
        let mut acc = 0.0;
        for _ in 0..self.mc_paths {
            values[0] = 1.0;
            for &j in &self.structure.order[1..] {
                let gamma: f64 = rng.gen();
                values[j] = match a.value_of(j) {
                    Some(x) => f64::from(x),
                    None => {
                        self.gather(j, &values, &mut v);
                        let est = self.nodes[j].as_ref().expect("validated");
                        f64::from(gamma < prob(j, est, &v))
                    }
                };
            }
            acc += values[self.target()];
        }
        acc / self.mc_paths as f64
    }

    /// `E[Y | a]` on the estimated graph with per-node parameters `theta`.
    pub fn reward_under(&self, theta: &[DVector<f64>], a: &Intervention) -> Result<f64> {
        if theta.len() != self.structure.len() {
            return Err(Error::Dimension { expected: self.structure.len(), got: theta.len() });
        }
        for j in 1..theta.len() {
            if theta[j].len() != self.structure.regressors[j].len() {
                return Err(Error::Dimension { expected: self.structure.regressors[j].len(), got: theta[j].len() });
            }
        }
        let dot = |j: NodeId, v: &[f64]| theta[j].iter().zip(v).map(|(t, x)| t * x).sum::<f64>();
        if self.is_linear() {
            let mut mean = vec![0.0; self.structure.len()];
            mean[0] = 1.0;
            let mut v = Vec::new();
            for &j in &self.structure.order[1..] {
                mean[j] = match a.value_of(j) {
                    Some(x) => f64::from(x),
                    None => {
                        self.gather(j, &mean, &mut v);
                        dot(j, &v).clamp(0.0, 1.0)
                    }
                };
            }
            return Ok(mean[self.target()]);
        }
        Ok(self.monte_carlo(a, |j, est, v| est.link.eval(dot(j, v)).clamp(0.0, 1.0)))
    }

    /// Action with the largest optimistic value (lowest id on ties), its
    /// per-node witness parameters and the value.
    pub fn optimistic_action(&self, actions: &ActionSet) -> Result<(usize, Vec<DVector<f64>>, f64)> {
        if actions.is_empty() {
            return Err(Error::InvalidConfig("empty action set".into()));
        }
        let mut best = (0, f64::NEG_INFINITY);
        for (id, a) in actions.actions().iter().enumerate() {
            let v = self.optimistic_value(a);
            if v > best.1 {
                best = (id, v);
            }
        }
        let witness = self.witness(actions.get(best.0));
        Ok((best.0, witness, best.1))
    }

    /// Per-node witness parameters along the optimistic mean path of `a`.
    pub fn witness(&self, a: &Intervention) -> Vec<DVector<f64>> {
        let mean = if self.is_linear() {
            self.optimistic_means(a)
        } else {
            // Mean regressors under θ̂ give a representative direction.
            let mut m = vec![0.0; self.structure.len()];
            m[0] = 1.0;
            let mut v = Vec::new();
            for &j in &self.structure.order[1..] {
                m[j] = match a.value_of(j) {
                    Some(x) => f64::from(x),
                    None => {
                        self.gather(j, &m, &mut v);
                        let est = self.nodes[j].as_ref().expect("validated");
                        est.link.eval(est.upper(&v)).clamp(0.0, 1.0)
                    }
                };
            }
            m
        };
        let mut out = vec![DVector::zeros(0)];
        let mut v = Vec::new();
        for j in 1..self.structure.len() {
            self.gather(j, &mean, &mut v);
            out.push(self.nodes[j].as_ref().expect("validated").witness(&v));
        }
        out
    }
}
