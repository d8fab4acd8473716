//! Causal model, interventions and sampling.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::link::{LinkFunction, LinkKind};
use crate::{Error, Result};

/// Index of a node in the model's topological order.
pub type NodeId = usize;

/// Tolerance used when checking that probabilities stay inside `[0, 1]`.
const PROB_TOL: f64 = 1e-12;

/// Value domain of the non-bias nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ValueKind {
    /// Bernoulli nodes.
    Binary,
    /// Linear nodes taking values in `[0, 1]` (identity links only).
    Continuous,
}

/// Zero-mean additive noise on a node's firing probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub enum NoiseSpec {
    #[default]
    Zero,
    /// `ε ~ Uniform[-half_width, half_width]`.
    Uniform { half_width: f64 },
}

impl NoiseSpec {
    pub fn half_width(&self) -> f64 {
        match self {
            NoiseSpec::Zero => 0.0,
            NoiseSpec::Uniform { half_width } => *half_width,
        }
    }
}

/// One node together with its conditional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub name: String,
    /// Parents in increasing index order.
    pub parents: Vec<NodeId>,
    /// Edge weights aligned with `parents`; zeros for tabulated nodes.
    pub weights: Vec<f64>,
    pub link: LinkFunction,
    pub noise: NoiseSpec,
}

impl Node {
    pub fn new(name: impl Into<String>, parents: Vec<NodeId>, weights: Vec<f64>, link: LinkFunction) -> Self {
        Self { name: name.into(), parents, weights, link, noise: NoiseSpec::Zero }
    }

    /// Node without parents (the bias node or a tabulated root).
    pub fn root(name: impl Into<String>) -> Self {
        Self::new(name, vec![], vec![], LinkFunction::identity())
    }

    pub fn with_noise(mut self, noise: NoiseSpec) -> Self {
        self.noise = noise;
        self
    }
}

/// Problem constants of the regret analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConstants {
    pub kappa: f64,
    pub l1_max: f64,
    pub l2_max: f64,
    pub zeta: f64,
    pub c_lm: f64,
}

impl ModelConstants {
    pub fn validate(&self) -> Result<()> {
        let ok = self.kappa > 0.0
            && self.l1_max > 0.0
            && self.l2_max >= 0.0
            && self.zeta > 0.0
            && self.zeta <= 1.0
            && self.c_lm > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("model constants out of range: {self:?}")))
        }
    }
}

/// Ground-truth causal model over `X₁ … X_n, Y`.
///
/// Node 0 is the bias node `X₁`, which is 1 in every sample; the last node is
/// the reward `Y`. Nodes are stored in topological order: every parent index
/// is smaller than its child's.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalModel {
    nodes: Vec<Node>,
    kind: ValueKind,
}

impl CausalModel {
    pub fn new(nodes: Vec<Node>, kind: ValueKind) -> Result<Self> {
        let m = Self { nodes, kind };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        let bad = |s: String| Err(Error::InvalidModel(s));
        let len = self.nodes.len();
        if len < 2 {
            return bad("a model needs the bias node and the reward node".into());
        }
        if !self.nodes[0].parents.is_empty() {
            return bad("the bias node X1 cannot have parents".into());
        }
        let target = len - 1;
        let mut names = std::collections::HashSet::new();
        for (i, node) in self.nodes.iter().enumerate() {
            if !names.insert(node.name.as_str()) {
                return bad(format!("duplicate node name `{}`", node.name));
            }
            if node.parents.len() != node.weights.len() {
                return bad(format!("node `{}`: {} parents but {} weights", node.name, node.parents.len(), node.weights.len()));
            }
            for w in node.parents.windows(2) {
                if w[0] >= w[1] {
                    return bad(format!("node `{}`: parents must be sorted and distinct", node.name));
                }
            }
            for &p in &node.parents {
                if p >= i {
                    return bad(format!("node `{}`: parent index {p} breaks topological order", node.name));
                }
                if p == target {
                    return bad("Y cannot have children".into());
                }
            }
            for &w in &node.weights {
                if !(0.0..=1.0).contains(&w) {
                    return bad(format!("node `{}`: weight {w} outside [0, 1]", node.name));
                }
            }
            let h = node.noise.half_width();
            if !(0.0..0.5).contains(&h) {
                return bad(format!("node `{}`: noise half-width {h} outside [0, 0.5)", node.name));
            }
            if i == 0 {
                continue;
            }
            let uses_bias = node.parents.first() == Some(&0);
            match &node.link.kind {
                LinkKind::Tabulated(table) => {
                    if self.kind == ValueKind::Continuous {
                        return bad("continuous models need identity links".into());
                    }
                    if table.len() != 1usize << node.parents.len() {
                        return bad(format!("node `{}`: table needs {} rows", node.name, 1usize << node.parents.len()));
                    }
                    for &p in table {
                        if p - h < -PROB_TOL || p + h > 1.0 + PROB_TOL {
                            return bad(format!("node `{}`: table entry {p} leaves [0, 1] under noise", node.name));
                        }
                    }
                }
                LinkKind::Identity => {
                    let sum: f64 = node.weights.iter().sum();
                    let lo = if uses_bias { node.weights[0] } else { 0.0 };
                    if sum + h > 1.0 + PROB_TOL || lo - h < -PROB_TOL {
                        return bad(format!("node `{}`: probabilities leave [0, 1] (weight sum {sum}, noise {h})", node.name));
                    }
                }
                LinkKind::Logistic => {
                    if self.kind == ValueKind::Continuous {
                        return bad("continuous models need identity links".into());
                    }
                    let sum: f64 = node.weights.iter().sum();
                    let lo = if uses_bias { node.weights[0] } else { 0.0 };
                    if node.link.eval(sum) + h > 1.0 + PROB_TOL || node.link.eval(lo) - h < -PROB_TOL {
                        return bad(format!("node `{}`: probabilities leave [0, 1] under noise", node.name));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> ValueKind {
        self.kind
    }

    /// Total number of nodes including `Y`.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `n = |X|`, the number of non-reward nodes including `X₁`.
    pub fn n(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn target(&self) -> NodeId {
        self.nodes.len() - 1
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, i: NodeId) -> &Node {
        &self.nodes[i]
    }

    pub fn name(&self, i: NodeId) -> &str {
        &self.nodes[i].name
    }

    pub fn index_of(&self, name: &str) -> Result<NodeId> {
        self.nodes
            .iter()
            .position(|n| n.name == name)
            .ok_or_else(|| Error::UnknownNode(name.to_string()))
    }

    pub fn parents(&self, i: NodeId) -> &[NodeId] {
        &self.nodes[i].parents
    }

    pub fn children(&self, i: NodeId) -> Vec<NodeId> {
        (i + 1..self.len()).filter(|&c| self.nodes[c].parents.contains(&i)).collect()
    }

    /// All `(parent, child)` pairs.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        self.nodes
            .iter()
            .enumerate()
            .flat_map(|(c, n)| n.parents.iter().map(move |&p| (p, c)))
            .collect()
    }

    /// `θ*_{parent,child}` if the edge exists.
    pub fn weight(&self, parent: NodeId, child: NodeId) -> Option<f64> {
        let n = &self.nodes[child];
        n.parents.iter().position(|&p| p == parent).map(|k| n.weights[k])
    }

    /// Smallest edge weight of a GLM model.
    pub fn theta_min(&self) -> Option<f64> {
        self.nodes.iter().flat_map(|n| n.weights.iter().copied()).reduce(f64::min)
    }

    /// True when every non-bias node is a GLM node (no tables).
    pub fn is_glm(&self) -> bool {
        self.nodes.iter().skip(1).all(|n| !n.link.is_tabulated())
    }

    /// True when every non-bias node uses the identity link.
    pub fn is_linear(&self) -> bool {
        self.nodes.iter().skip(1).all(|n| n.link.is_identity())
    }

    /// Binary linear model.
    pub fn is_blm(&self) -> bool {
        self.kind == ValueKind::Binary && self.is_linear()
    }

    /// `ancestors[i][j]` is true iff `j` is a proper ancestor of `i`.
    pub fn ancestor_matrix(&self) -> Vec<Vec<bool>> {
        let len = self.len();
        let mut anc = vec![vec![false; len]; len];
        for i in 0..len {
            for &p in &self.nodes[i].parents {
                anc[i][p] = true;
                let row = anc[p].clone();
                for (j, is) in row.into_iter().enumerate() {
                    if is {
                        anc[i][j] = true;
                    }
                }
            }
        }
        anc
    }

    /// Proper ancestors of `i`, in index order.
    pub fn ancestors(&self, i: NodeId) -> Vec<NodeId> {
        let m = self.ancestor_matrix();
        (0..self.len()).filter(|&j| m[i][j]).collect()
    }

    /// Success probability (binary) or mean (continuous) of node `i` given the
    /// current values of its parents, noise excluded.
    pub fn conditional(&self, i: NodeId, values: &[f64]) -> f64 {
        let node = &self.nodes[i];
        match &node.link.kind {
            LinkKind::Tabulated(table) => {
                let mut row = 0usize;
                for (k, &p) in node.parents.iter().enumerate() {
                    if values[p] > 0.5 {
                        row |= 1 << k;
                    }
                }
                table[row]
            }
            _ => {
                let s: f64 = node.parents.iter().zip(&node.weights).map(|(&p, &w)| w * values[p]).sum();
                node.link.eval(s)
            }
        }
    }

    /// Fills `out` with one joint realization under `a`.
    ///
    /// Each non-bias node consumes one uniform threshold and, when its noise
    /// is non-trivial, one noise draw, whether or not it is intervened. The
    /// stream therefore advances identically for every intervention.
    pub fn sample_into<R: Rng + ?Sized>(&self, a: &Intervention, rng: &mut R, out: &mut Vec<f64>) {
        out.clear();
        out.push(1.0);
        for i in 1..self.len() {
            let gamma: f64 = rng.gen();
            let h = self.nodes[i].noise.half_width();
            let eps = if h > 0.0 { rng.gen_range(-h..=h) } else { 0.0 };
            let v = match a.value_of(i) {
                Some(v) => f64::from(v),
                None => {
                    let p = self.conditional(i, out) + eps;
                    match self.kind {
                        ValueKind::Binary => {
                            if gamma < p {
                                1.0
                            } else {
                                0.0
                            }
                        }
                        ValueKind::Continuous => p,
                    }
                }
            };
            out.push(v);
        }
    }

    /// One joint realization under `a`.
    pub fn sample<R: Rng + ?Sized>(&self, a: &Intervention, rng: &mut R) -> Result<Sample> {
        a.check(self)?;
        let mut values = Vec::with_capacity(self.len());
        self.sample_into(a, rng, &mut values);
        Ok(Sample { values })
    }

    /// True values of the problem constants for a GLM model; `ζ` and `c` are
    /// supplied by the caller since they are not functions of the links alone.
    pub fn constants(&self, zeta: f64, c_lm: f64) -> Result<ModelConstants> {
        if !self.is_glm() {
            return Err(Error::ModeMismatch("constants need GLM links".into()));
        }
        let mut kappa = f64::INFINITY;
        let mut l1: f64 = 0.0;
        let mut l2: f64 = 0.0;
        for node in self.nodes.iter().skip(1) {
            let (k, a, b) = node.link.constants(node.parents.len().max(1));
            kappa = kappa.min(k);
            l1 = l1.max(a);
            l2 = l2.max(b);
        }
        Ok(ModelConstants { kappa, l1_max: l1, l2_max: l2, zeta, c_lm })
    }
}

/// One joint realization; `values[0] = 1` and the last entry is `Y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub values: Vec<f64>,
}

impl Sample {
    pub fn y(&self) -> f64 {
        *self.values.last().expect("samples are non-empty")
    }

    pub fn x(&self, i: NodeId) -> f64 {
        self.values[i]
    }
}

/// A do-operation `do(S = s)`; the empty assignment is the null intervention.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Intervention {
    assignments: BTreeMap<NodeId, u8>,
}

impl Intervention {
    pub fn null() -> Self {
        Self::default()
    }

    /// Unchecked constructor; node validity is checked against a model by [`Intervention::check`].
    pub fn from_pairs(pairs: impl IntoIterator<Item = (NodeId, u8)>) -> Self {
        Self { assignments: pairs.into_iter().collect() }
    }

    pub fn atomic(node: NodeId, value: u8) -> Self {
        Self::from_pairs([(node, value)])
    }

    /// Checked constructor.
    pub fn new(model: &CausalModel, pairs: impl IntoIterator<Item = (NodeId, u8)>) -> Result<Self> {
        let a = Self::from_pairs(pairs);
        a.check(model)?;
        Ok(a)
    }

    /// Parses `X2=1,X3=0`; an empty string or `do()` is the null intervention.
    pub fn parse(model: &CausalModel, text: &str) -> Result<Self> {
        let t = text.trim();
        let t = t.strip_prefix("do(").and_then(|s| s.strip_suffix(')')).unwrap_or(t);
        let mut pairs = Vec::new();
        for part in t.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (name, value) = part
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected NAME=VALUE, got `{part}`")))?;
            let node = model.index_of(name.trim())?;
            let value = match value.trim() {
                "0" => 0,
                "1" => 1,
                v => return Err(Error::Parse(format!("intervention values are 0 or 1, got `{v}`"))),
            };
            pairs.push((node, value));
        }
        Self::new(model, pairs)
    }

    pub fn check(&self, model: &CausalModel) -> Result<()> {
        for (&node, &v) in &self.assignments {
            if node >= model.len() {
                return Err(Error::UnknownNode(format!("#{node}")));
            }
            if node == 0 || node == model.target() {
                return Err(Error::InvalidIntervention(format!("`{}` cannot be intervened", model.name(node))));
            }
            if v > 1 {
                return Err(Error::InvalidIntervention(format!("value {v} is not binary")));
            }
        }
        Ok(())
    }

    pub fn value_of(&self, node: NodeId) -> Option<u8> {
        self.assignments.get(&node).copied()
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.assignments.contains_key(&node)
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn is_atomic(&self) -> bool {
        self.assignments.len() == 1
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, u8)> + '_ {
        self.assignments.iter().map(|(&k, &v)| (k, v))
    }

    /// Human-readable id such as `do(X2=1,X3=1)`.
    pub fn label(&self, model: &CausalModel) -> String {
        let parts: Vec<String> = self.iter().map(|(k, v)| format!("{}={v}", model.name(k))).collect();
        format!("do({})", parts.join(","))
    }
}

impl fmt::Display for Intervention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.iter().map(|(k, v)| format!("#{k}={v}")).collect();
        write!(f, "do({})", parts.join(","))
    }
}

/// Explicit list of arms; the position in the list is the arm id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionSet {
    actions: Vec<Intervention>,
}

impl ActionSet {
    pub fn new(model: &CausalModel, actions: Vec<Intervention>) -> Result<Self> {
        if actions.is_empty() {
            return Err(Error::InvalidConfig("empty action set".into()));
        }
        for a in &actions {
            a.check(model)?;
        }
        Ok(Self { actions })
    }

    /// `do()` followed by `do(X=1), do(X=0)` for every intervenable node.
    pub fn standard(model: &CausalModel) -> Self {
        let mut actions = vec![Intervention::null()];
        for i in 1..model.target() {
            actions.push(Intervention::atomic(i, 1));
            actions.push(Intervention::atomic(i, 0));
        }
        Self { actions }
    }

    /// The standard set plus every intervention on `2..=budget` nodes with all value vectors.
    pub fn budgeted(model: &CausalModel, budget: usize) -> Self {
        let mut set = Self::standard(model);
        let nodes: Vec<NodeId> = (1..model.target()).collect();
        for size in 2..=budget.min(nodes.len()) {
            for subset in combinations(&nodes, size) {
                for bits in 0..(1u32 << size) {
                    let pairs = subset.iter().enumerate().map(|(k, &n)| (n, ((bits >> k) & 1) as u8));
                    set.actions.push(Intervention::from_pairs(pairs));
                }
            }
        }
        set
    }

    /// All `do(S=1)` with `|S| = size` over `nodes`, in lexicographic order.
    pub fn all_ones(model: &CausalModel, nodes: &[NodeId], size: usize) -> Result<Self> {
        let actions = combinations(nodes, size)
            .into_iter()
            .map(|s| Intervention::from_pairs(s.into_iter().map(|n| (n, 1))))
            .collect();
        Self::new(model, actions)
    }

    /// True when `do()` and every atomic intervention are present.
    pub fn contains_required(&self, model: &CausalModel) -> bool {
        Self::standard(model).actions.iter().all(|a| self.actions.contains(a))
    }

    pub fn actions(&self) -> &[Intervention] {
        &self.actions
    }

    pub fn get(&self, id: usize) -> &Intervention {
        &self.actions[id]
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn position(&self, a: &Intervention) -> Option<usize> {
        self.actions.iter().position(|b| b == a)
    }
}

/// All `k`-subsets of `items` in lexicographic order.
pub fn combinations<T: Copy>(items: &[T], k: usize) -> Vec<Vec<T>> {
    fn rec<T: Copy>(items: &[T], k: usize, start: usize, cur: &mut Vec<T>, out: &mut Vec<Vec<T>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            cur.push(items[i]);
            rec(items, k, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(items, k, 0, &mut Vec::with_capacity(k), &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::scm::generate::appendix_e;

    fn chain() -> CausalModel {
        CausalModel::new(
            vec![
                Node::root("X1"),
                Node::new("X2", vec![0], vec![0.4], LinkFunction::identity()),
                Node::new("Y", vec![0, 1], vec![0.2, 0.5], LinkFunction::identity()),
            ],
            ValueKind::Binary,
        )
        .unwrap()
    }

    #[test]
    fn rejects_bias_with_parents_and_out_of_order_parents() {
        let err = CausalModel::new(
            vec![Node::new("X1", vec![1], vec![0.1], LinkFunction::identity()), Node::root("Y")],
            ValueKind::Binary,
        );
        assert!(err.is_err());
        let err = CausalModel::new(
            vec![
                Node::root("X1"),
                Node::new("X2", vec![2], vec![0.1], LinkFunction::identity()),
                Node::root("Y"),
            ],
            ValueKind::Binary,
        );
        assert!(err.is_err());
    }

    #[test]
    fn rejects_overweight_identity_node() {
        let err = CausalModel::new(
            vec![Node::root("X1"), Node::new("Y", vec![0], vec![0.9], LinkFunction::identity()).with_noise(NoiseSpec::Uniform { half_width: 0.2 })],
            ValueKind::Binary,
        );
        assert!(matches!(err, Err(Error::InvalidModel(_))));
    }

    #[test]
    fn intervention_rejects_bias_target_and_unknown_nodes() {
        let m = chain();
        assert!(Intervention::new(&m, [(0, 1)]).is_err());
        assert!(Intervention::new(&m, [(2, 1)]).is_err());
        assert!(Intervention::new(&m, [(7, 1)]).is_err());
        assert!(Intervention::parse(&m, "X9=1").is_err());
        assert_eq!(Intervention::parse(&m, "X2=1").unwrap(), Intervention::atomic(1, 1));
        assert_eq!(Intervention::parse(&m, "do()").unwrap(), Intervention::null());
    }

    #[test]
    fn clamped_node_always_takes_its_value() {
        let m = appendix_e();
        let a = Intervention::parse(&m, "X2=1").unwrap();
        let mut rng = stream(3);
        for _ in 0..1000 {
            let s = m.sample(&a, &mut rng).unwrap();
            assert_eq!(s.x(0), 1.0);
            assert_eq!(s.x(1), 1.0);
        }
    }

    #[test]
    fn saturated_model_always_samples_ones() {
        let m = CausalModel::new(
            vec![
                Node::root("X1"),
                Node::new("X2", vec![0], vec![1.0], LinkFunction::identity()),
                Node::new("Y", vec![0], vec![1.0], LinkFunction::identity()),
            ],
            ValueKind::Binary,
        )
        .unwrap();
        let mut rng = stream(1);
        for _ in 0..100 {
            assert!(m.sample(&Intervention::null(), &mut rng).unwrap().values.iter().all(|&v| v == 1.0));
        }
    }

    #[test]
    fn appendix_e_null_mean_of_y() {
        let m = appendix_e();
        let mut rng = stream(11);
        let mut buf = Vec::new();
        let reps = 1_000_000;
        let mut acc = 0.0;
        for _ in 0..reps {
            m.sample_into(&Intervention::null(), &mut rng, &mut buf);
            acc += buf[m.target()];
        }
        assert!((acc / reps as f64 - 0.258).abs() < 0.002);
    }

    #[test]
    fn action_set_constructors() {
        let m = appendix_e();
        let pairs = ActionSet::all_ones(&m, &[1, 2, 3, 4, 5], 2).unwrap();
        assert_eq!(pairs.len(), 10);
        assert_eq!(pairs.get(0).label(&m), "do(X2=1,X3=1)");
        assert!(!pairs.contains_required(&m));
        let b = ActionSet::budgeted(&m, 2);
        assert!(b.contains_required(&m));
        assert_eq!(b.len(), 1 + 10 + 10 * 4);
    }

    #[test]
    fn ancestor_matrix_follows_paths() {
        let m = chain();
        assert_eq!(m.ancestors(2), vec![0, 1]);
        assert_eq!(m.ancestors(1), vec![0]);
        assert_eq!(m.children(1), vec![2]);
    }
}
