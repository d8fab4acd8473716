//! Causal-PE-unknown and the interventional-only LUCB baseline.

use super::graph::EssentialGraph;
use super::{identification_radius, int_confidence, lucb_select, obs_confidence};
use crate::rng::stream;
use crate::scm::{ActionSet, CausalModel, Intervention, NodeId, ValueKind};
use crate::{Error, Result};

/// Default bound on the total number of samples of one run.
pub const DEFAULT_SAMPLE_CAP: u64 = 10_000_000;

/// Parameters of one pure-exploration run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeConfig {
    pub eps: f64,
    pub delta: f64,
    pub cap: u64,
    pub seed: u64,
    pub record_trace: bool,
}

impl PeConfig {
    pub fn new(eps: f64, delta: f64, seed: u64) -> Self {
        Self { eps, delta, cap: DEFAULT_SAMPLE_CAP, seed, record_trace: false }
    }

    fn validate(&self, env: &CausalModel) -> Result<()> {
        if !(self.eps > 0.0) || !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidConfig(format!("need ε > 0 and δ in (0, 1), got ε={}, δ={}", self.eps, self.delta)));
        }
        if env.kind() != ValueKind::Binary {
            return Err(Error::ModeMismatch("pure exploration needs a binary model".into()));
        }
        if env.n() < 2 {
            return Err(Error::InvalidConfig("pure exploration needs an intervenable node".into()));
        }
        Ok(())
    }
}

/// Statistics and bounds of one arm.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmState {
    pub action: Intervention,
    /// `(X, x)` for `do(X=x)`; `None` for `do()`.
    pub target: Option<(NodeId, u8)>,
    /// Observational estimate available (`a ∈ A_known`).
    pub known: bool,
    /// `Pa(X) \ {X₁}` once known.
    pub parents: Vec<NodeId>,
    /// `T_{a,z}`, observational rounds with `X = x` and `Pa(X) = z`.
    pub t_az: Vec<u64>,
    /// Sum of `Y` over those rounds.
    pub y_az: Vec<u64>,
    /// Observational rounds with `Pa(X) = z`.
    pub p_z: Vec<u64>,
    pub observations: u64,
    /// `D_a`, interventional samples.
    pub d: u64,
    pub int_sum: u64,
    pub lower: f64,
    pub upper: f64,
}

impl ArmState {
    fn new(action: Intervention) -> Self {
        let target = action.iter().next();
        Self {
            action,
            target,
            known: false,
            parents: Vec::new(),
            t_az: Vec::new(),
            y_az: Vec::new(),
            p_z: Vec::new(),
            observations: 0,
            d: 0,
            int_sum: 0,
            lower: 0.0,
            upper: 1.0,
        }
    }

    /// `(L + U)/2`.
    pub fn mu_hat(&self) -> f64 {
        (self.lower + self.upper) / 2.0
    }

    /// `T_a = min_z T_{a,z}`.
    pub fn t_a(&self) -> u64 {
        self.t_az.iter().copied().min().unwrap_or(0)
    }

    pub fn z_count(&self) -> usize {
        1 << self.parents.len()
    }

    /// `Σ_z r_{a,z}·p_{a,z}`, or `None` while some `T_{a,z} = 0`.
    pub fn mu_obs(&self) -> Option<f64> {
        if !self.known || self.t_a() == 0 {
            return None;
        }
        let r: Vec<f64> = self.t_az.iter().zip(&self.y_az).map(|(&t, &y)| y as f64 / t as f64).collect();
        let p: Vec<f64> = self.p_z.iter().map(|&c| c as f64 / self.observations as f64).collect();
        Some(super::do_calculus_estimate(&r, &p))
    }

    pub fn mu_int(&self) -> Option<f64> {
        (self.d > 0).then(|| self.int_sum as f64 / self.d as f64)
    }

    fn make_known(&mut self, parents: Vec<NodeId>) {
        self.known = true;
        let z = 1 << parents.len();
        self.parents = parents;
        self.t_az = vec![0; z];
        self.y_az = vec![0; z];
        self.p_z = vec![0; z];
        self.observations = 0;
    }

    fn observe(&mut self, bits: &Bits<'_>, y: u64) {
        let z = self.parents.iter().enumerate().fold(0, |acc, (k, &p)| acc | (usize::from(bits.get(p)) << k));
        self.observations += 1;
        self.p_z[z] += 1;
        let matches = match self.target {
            None => true,
            Some((x, v)) => u8::from(bits.get(x)) == v,
        };
        if matches {
            self.t_az[z] += 1;
            self.y_az[z] += y;
        }
    }

    fn update_bounds(&mut self, n: usize, t: u64, delta: f64) -> Result<()> {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        if let Some(mu) = self.mu_obs() {
            let beta = obs_confidence(self.t_a(), n, self.z_count(), t, delta);
            lo = lo.max(mu - beta);
            hi = hi.min(mu + beta);
        }
        if let Some(mu) = self.mu_int() {
            let beta = int_confidence(self.d, t, n, delta)?;
            lo = lo.max(mu - beta);
            hi = hi.min(mu + beta);
        }
        if lo > hi {
            let mid = (lo + hi) / 2.0;
            lo = mid;
            hi = mid;
        }
        self.lower = lo;
        self.upper = hi;
        Ok(())
    }
}

/// Packed node values of one sample.
struct Bits<'a>(&'a [u64]);

impl Bits<'_> {
    fn get(&self, i: NodeId) -> bool {
        (self.0[i / 64] >> (i % 64)) & 1 == 1
    }
}

/// Every observational sample, packed one bit per node.
struct ObservationStore {
    words: usize,
    data: Vec<u64>,
}

impl ObservationStore {
    fn new(len: usize) -> Self {
        Self { words: len.div_ceil(64), data: Vec::new() }
    }

    fn push(&mut self, values: &[f64]) {
        let start = self.data.len();
        self.data.resize(start + self.words, 0);
        for (i, &v) in values.iter().enumerate() {
            if v > 0.5 {
                self.data[start + i / 64] |= 1 << (i % 64);
            }
        }
    }

    fn iter(&self) -> impl Iterator<Item = Bits<'_>> {
        self.data.chunks(self.words).map(Bits)
    }

    fn last(&self) -> Bits<'_> {
        Bits(&self.data[self.data.len() - self.words..])
    }
}

/// One LUCB round.
#[derive(Debug, Clone, PartialEq)]
pub struct PeTraceRow {
    pub t: u64,
    pub a_h: usize,
    pub a_l: usize,
    pub lower_h: f64,
    pub upper_l: f64,
    pub samples: u64,
}

/// Result of a pure-exploration run.
#[derive(Debug, Clone)]
pub struct PeOutcome {
    pub arm: usize,
    pub action: Intervention,
    pub samples: u64,
    pub rounds: u64,
    /// False when the sample cap stopped the run.
    pub certified: bool,
    pub arms: Vec<ArmState>,
    pub graph: EssentialGraph,
    pub trace: Vec<PeTraceRow>,
}

impl PeOutcome {
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.arms.iter().map(|a| (a.lower, a.upper)).collect()
    }
}

/// Shared sampling state of both algorithms.
struct Sampler<'a> {
    env: &'a CausalModel,
    rng: crate::RandomStream,
    buf: Vec<f64>,
    samples: u64,
    /// `ones[i][v][j]`: samples under `do(X_i=v)` with `X_j = 1`.
    ones: Vec<[Vec<u64>; 2]>,
    arm_of: Vec<[usize; 2]>,
}

impl<'a> Sampler<'a> {
    fn new(env: &'a CausalModel, seed: u64, arms: &[ArmState]) -> Self {
        let len = env.len();
        let mut arm_of = vec![[usize::MAX; 2]; len];
        for (k, a) in arms.iter().enumerate() {
            if let Some((x, v)) = a.target {
                arm_of[x][usize::from(v)] = k;
            }
        }
        Self {
            env,
            rng: stream(seed),
            buf: Vec::with_capacity(len),
            samples: 0,
            ones: vec![[vec![0; len], vec![0; len]]; len],
            arm_of,
        }
    }

    fn draw(&mut self, a: &Intervention) -> &[f64] {
        self.samples += 1;
        self.env.sample_into(a, &mut self.rng, &mut self.buf);
        &self.buf
    }

    /// Samples `do(X=v)` and credits the arm and the identification counts.
    fn intervene(&mut self, arms: &mut [ArmState], x: NodeId, v: u8) {
        let k = self.arm_of[x][usize::from(v)];
        let a = arms[k].action.clone();
        self.draw(&a);
        let y = self.buf.last().copied().unwrap_or(0.0);
        arms[k].d += 1;
        arms[k].int_sum += u64::from(y > 0.5);
        for (j, &val) in self.buf.iter().enumerate() {
            if val > 0.5 {
                self.ones[x][usize::from(v)][j] += 1;
            }
        }
    }

    /// Whether the identification intervals of `P(target=1 | do(x=0))` and
    /// `P(target=1 | do(x=1))` are disjoint.
    fn separated(&self, arms: &[ArmState], x: NodeId, target: NodeId, n: usize, t: u64, delta: f64) -> bool {
        let interval = |v: usize| {
            let d = arms[self.arm_of[x][v]].d;
            if d == 0 {
                return (f64::NEG_INFINITY, f64::INFINITY);
            }
            let p = self.ones[x][v][target] as f64 / d as f64;
            let r = identification_radius(d, n, t, delta);
            (p - r, p + r)
        };
        let (a, b) = (interval(0), interval(1));
        a.1 < b.0 || b.1 < a.0
    }
}

fn initial_arms(env: &CausalModel) -> Vec<ArmState> {
    ActionSet::standard(env).actions().iter().cloned().map(ArmState::new).collect()
}

/// Marks arms whose node has every edge oriented and replays the stored
/// observations into them.
fn refresh_known(arms: &mut [ArmState], graph: &EssentialGraph, store: &ObservationStore, y_index: NodeId) {
    for arm in arms.iter_mut() {
        if arm.known {
            continue;
        }
        let parents = match arm.target {
            None => Some(Vec::new()),
            Some((x, _)) => graph.parents(x),
        };
        if let Some(parents) = parents {
            arm.make_known(parents);
            for bits in store.iter() {
                let y = u64::from(bits.get(y_index));
                arm.observe(&bits, y);
            }
        }
    }
}

/// Orients the undirected edges at the arm `k` by interventional tests.
#[allow(clippy::too_many_arguments)]
fn recover_edge(
    k: usize,
    arms: &mut [ArmState],
    graph: &mut EssentialGraph,
    sampler: &mut Sampler<'_>,
    n: usize,
    t: u64,
    delta: f64,
) -> Result<()> {
    let Some((x, _)) = arms[k].target else { return Ok(()) };
    sampler.intervene(arms, x, 1);
    sampler.intervene(arms, x, 0);
    for nb in graph.undirected_neighbors(x) {
        if sampler.separated(arms, x, nb, n, t, delta) {
            graph.orient(x, nb)?;
        }
    }
    let candidates = graph.undirected_neighbors(x);
    if let Some(&nb) = candidates.iter().min_by_key(|&&nb| (arms[sampler.arm_of[nb][1]].d, nb)) {
        sampler.intervene(arms, nb, 1);
        sampler.intervene(arms, nb, 0);
        if sampler.separated(arms, nb, x, n, t, delta) {
            graph.orient(nb, x)?;
        }
    }
    Ok(())
}

/// Causal-PE-unknown: LUCB over atomic arms with observational bounds for
/// arms whose parent set has been identified.
pub fn causal_pe_unknown(env: &CausalModel, graph: &EssentialGraph, cfg: &PeConfig) -> Result<PeOutcome> {
    cfg.validate(env)?;
    if graph.len() != env.len() {
        return Err(Error::Dimension { expected: env.len(), got: graph.len() });
    }
    let n = env.n();
    let y = env.target();
    let mut graph = graph.clone();
    let mut arms = initial_arms(env);
    let mut sampler = Sampler::new(env, cfg.seed, &arms);
    let mut store = ObservationStore::new(env.len());
    let null = Intervention::null();
    refresh_known(&mut arms, &graph, &store, y);
    let mut trace = Vec::new();
    let mut t = 0u64;
    loop {
        t += 1;
        let bounds: Vec<(f64, f64)> = arms.iter().map(|a| (a.lower, a.upper)).collect();
        let (h, l) = lucb_select(&bounds)?;
        if cfg.record_trace {
            trace.push(PeTraceRow { t, a_h: h, a_l: l, lower_h: bounds[h].0, upper_l: bounds[l].1, samples: sampler.samples });
        }
        let certified = bounds[l].1 <= bounds[h].0 + cfg.eps;
        if certified || sampler.samples >= cfg.cap {
            return Ok(PeOutcome {
                arm: h,
                action: arms[h].action.clone(),
                samples: sampler.samples,
                rounds: t - 1,
                certified,
                arms,
                graph,
                trace,
            });
        }
        store.push(sampler.draw(&null));
        let bits = store.last();
        let yv = u64::from(bits.get(y));
        for arm in arms.iter_mut().filter(|a| a.known) {
            arm.observe(&bits, yv);
        }
        recover_edge(h, &mut arms, &mut graph, &mut sampler, n, t, cfg.delta)?;
        recover_edge(l, &mut arms, &mut graph, &mut sampler, n, t, cfg.delta)?;
        refresh_known(&mut arms, &graph, &store, y);
        for arm in arms.iter_mut() {
            arm.update_bounds(n, t, cfg.delta)?;
        }
    }
}

/// LUCB with interventional bounds only: each round samples `a_h` and `a_l`.
pub fn pure_lucb(env: &CausalModel, cfg: &PeConfig) -> Result<PeOutcome> {
    cfg.validate(env)?;
    let n = env.n();
    let mut arms = initial_arms(env);
    let mut sampler = Sampler::new(env, cfg.seed, &arms);
    let mut trace = Vec::new();
    let mut t = 0u64;
    loop {
        t += 1;
        let bounds: Vec<(f64, f64)> = arms.iter().map(|a| (a.lower, a.upper)).collect();
        let (h, l) = lucb_select(&bounds)?;
        if cfg.record_trace {
            trace.push(PeTraceRow { t, a_h: h, a_l: l, lower_h: bounds[h].0, upper_l: bounds[l].1, samples: sampler.samples });
        }
        let certified = bounds[l].1 <= bounds[h].0 + cfg.eps;
        if certified || sampler.samples >= cfg.cap {
            return Ok(PeOutcome {
                arm: h,
                action: arms[h].action.clone(),
                samples: sampler.samples,
                rounds: t - 1,
                certified,
                arms,
                graph: EssentialGraph::skeleton(env),
                trace,
            });
        }
        for k in [h, l] {
            let a = arms[k].action.clone();
            let yv = *sampler.draw(&a).last().expect("non-empty model");
            arms[k].d += 1;
            arms[k].int_sum += u64::from(yv > 0.5);
        }
        for arm in arms.iter_mut() {
            arm.update_bounds(n, t, cfg.delta)?;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scm::{appendix_e, expected_reward, LinkFunction, Node, RewardMode};

    #[test]
    fn eps_at_least_one_stops_immediately() {
        let m = appendix_e();
        let g = EssentialGraph::from_model(&m);
        let out = causal_pe_unknown(&m, &g, &PeConfig::new(1.0, 0.05, 0)).unwrap();
        assert!(out.certified);
        assert_eq!(out.samples, 0);
    }

    #[test]
    fn cap_stops_uncertified() {
        let m = appendix_e();
        let g = EssentialGraph::from_model(&m);
        let mut cfg = PeConfig::new(0.001, 0.05, 0);
        cfg.cap = 100;
        let out = causal_pe_unknown(&m, &g, &cfg).unwrap();
        assert!(!out.certified);
        assert!(out.samples >= 100 && out.samples < 110);
    }

    #[test]
    fn bounds_stay_ordered_and_boxed() {
        let m = appendix_e();
        let g = EssentialGraph::from_model(&m);
        let mut cfg = PeConfig::new(0.05, 0.05, 3);
        cfg.cap = 20_000;
        let out = causal_pe_unknown(&m, &g, &cfg).unwrap();
        for a in &out.arms {
            assert!(0.0 <= a.lower && a.lower <= a.upper && a.upper <= 1.0);
        }
        // Every node of the appendix model is fully oriented from the start.
        assert!(out.arms.iter().all(|a| a.known));
    }

    #[test]
    fn returns_an_eps_optimal_arm() {
        let m = appendix_e();
        let g = EssentialGraph::from_model(&m);
        let arms = ActionSet::standard(&m);
        let rewards: Vec<f64> =
            arms.actions().iter().map(|a| expected_reward(&m, a, RewardMode::Enumerate).unwrap()).collect();
        let best = rewards.iter().copied().fold(0.0, f64::max);
        for seed in 0..5 {
            let out = causal_pe_unknown(&m, &g, &PeConfig::new(0.1, 0.05, seed)).unwrap();
            assert!(out.certified);
            assert!(rewards[out.arm] >= best - 0.1);
            let base = pure_lucb(&m, &PeConfig::new(0.1, 0.05, seed)).unwrap();
            assert!(rewards[base.arm] >= best - 0.1);
        }
    }

    #[test]
    fn orients_a_chain_from_its_skeleton() {
        let id = LinkFunction::identity;
        let m = CausalModel::new(
            vec![
                Node::root("X1"),
                Node::new("X2", vec![0], vec![0.5], id()),
                Node::new("X3", vec![0, 1], vec![0.1, 0.8], id()),
                Node::new("Y", vec![0, 2], vec![0.1, 0.8], id()),
            ],
            ValueKind::Binary,
        )
        .unwrap();
        let g = EssentialGraph::skeleton(&m);
        assert_eq!(g.undirected_count(), 1);
        let out = causal_pe_unknown(&m, &g, &PeConfig::new(0.05, 0.05, 11)).unwrap();
        assert!(out.graph.is_consistent_with(&m));
        assert!(out.certified);
    }
}
