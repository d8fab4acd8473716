//! Essential graphs: a skeleton over `X₂ … X_n, Y` with some orientations known.

use std::collections::BTreeSet;

use crate::scm::{CausalModel, NodeId};
use crate::{Error, Result};

/// Partially oriented graph. The bias node `X₁` is constant and carries no
/// learnable edges, so it never appears here. Edges into `Y` are always
/// directed since `Y` is the reward.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EssentialGraph {
    len: usize,
    directed: BTreeSet<(NodeId, NodeId)>,
    /// Stored as `(min, max)`.
    undirected: BTreeSet<(NodeId, NodeId)>,
}

fn key(a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    (a.min(b), a.max(b))
}

fn learnable_edges(model: &CausalModel) -> Vec<(NodeId, NodeId)> {
    model.edges().into_iter().filter(|&(p, _)| p != 0).collect()
}

impl EssentialGraph {
    /// Every edge oriented as in `model`.
    pub fn fully_oriented(model: &CausalModel) -> Self {
        Self { len: model.len(), directed: learnable_edges(model).into_iter().collect(), undirected: BTreeSet::new() }
    }

    /// Skeleton of `model` with only the edges into `Y` oriented.
    pub fn skeleton(model: &CausalModel) -> Self {
        let y = model.target();
        let mut g = Self { len: model.len(), directed: BTreeSet::new(), undirected: BTreeSet::new() };
        for (p, c) in learnable_edges(model) {
            if c == y {
                g.directed.insert((p, c));
            } else {
                g.undirected.insert(key(p, c));
            }
        }
        g
    }

    /// Markov equivalence class of `model`: v-structures and edges into `Y`
    /// oriented, then closed under Meek's rules.
    pub fn from_model(model: &CausalModel) -> Self {
        let mut g = Self::skeleton(model);
        for c in 1..model.len() {
            let pa: Vec<NodeId> = model.parents(c).iter().copied().filter(|&p| p != 0).collect();
            for (k, &a) in pa.iter().enumerate() {
                for &b in &pa[k + 1..] {
                    if !g.adjacent(a, b) {
                        g.force(a, c);
                        g.force(b, c);
                    }
                }
            }
        }
        g.meek_closure();
        g
    }

    fn force(&mut self, from: NodeId, to: NodeId) {
        if self.undirected.remove(&key(from, to)) {
            self.directed.insert((from, to));
        }
    }

    /// Applies Meek's rules 1-3 until nothing changes.
    pub fn meek_closure(&mut self) {
        loop {
            let mut changed = false;
            let und: Vec<(NodeId, NodeId)> = self.undirected.iter().copied().collect();
            for (u, v) in und {
                for (b, c) in [(u, v), (v, u)] {
                    if !self.undirected.contains(&key(b, c)) {
                        continue;
                    }
                    // R1: a→b, b–c, a and c non-adjacent.
                    let r1 = self.directed.iter().any(|&(a, bb)| bb == b && a != c && !self.adjacent(a, c));
                    // R2: b→a→c with b–c.
                    let r2 = self.directed.iter().any(|&(bb, a)| bb == b && self.directed.contains(&(a, c)));
                    // R3: b–a, b–d, a→c, d→c, a and d non-adjacent.
                    let nbrs = self.undirected_neighbors(b);
                    let into_c: Vec<NodeId> = nbrs.iter().copied().filter(|&a| self.directed.contains(&(a, c))).collect();
                    let r3 = into_c.iter().enumerate().any(|(k, &a)| into_c[k + 1..].iter().any(|&d| !self.adjacent(a, d)));
                    if r1 || r2 || r3 {
                        self.force(b, c);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn adjacent(&self, a: NodeId, b: NodeId) -> bool {
        self.undirected.contains(&key(a, b)) || self.directed.contains(&(a, b)) || self.directed.contains(&(b, a))
    }

    pub fn directed_edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.directed.iter().copied()
    }

    pub fn undirected_edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.undirected.iter().copied()
    }

    pub fn undirected_count(&self) -> usize {
        self.undirected.len()
    }

    /// Neighbours joined to `x` by an unoriented edge, ascending.
    pub fn undirected_neighbors(&self, x: NodeId) -> Vec<NodeId> {
        self.undirected
            .iter()
            .filter_map(|&(a, b)| if a == x { Some(b) } else if b == x { Some(a) } else { None })
            .collect()
    }

    /// Orients the unoriented edge between `from` and `to`.
    pub fn orient(&mut self, from: NodeId, to: NodeId) -> Result<()> {
        if !self.undirected.remove(&key(from, to)) {
            return Err(Error::InvalidIntervention(format!("no unoriented edge between #{from} and #{to}")));
        }
        self.directed.insert((from, to));
        Ok(())
    }

    /// `Pa(x) \ {X₁}` once every edge at `x` is oriented.
    pub fn parents(&self, x: NodeId) -> Option<Vec<NodeId>> {
        if self.undirected.iter().any(|&(a, b)| a == x || b == x) {
            return None;
        }
        Some(self.directed.iter().filter(|&&(_, c)| c == x).map(|&(p, _)| p).collect())
    }

    /// True when some orientation of the unoriented edges yields `model`.
    pub fn is_consistent_with(&self, model: &CausalModel) -> bool {
        let truth: BTreeSet<(NodeId, NodeId)> = learnable_edges(model).into_iter().collect();
        let directed_ok = self.directed.iter().all(|e| truth.contains(e));
        let undirected_ok = self.undirected.iter().all(|&(a, b)| truth.contains(&(a, b)) || truth.contains(&(b, a)));
        directed_ok && undirected_ok && self.directed.len() + self.undirected.len() == truth.len()
    }
}
