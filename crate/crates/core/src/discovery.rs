//! Ancestor discovery from the interventional initialization phase.
//!
//! The schedule intervenes every node `X_i` (`i ≥ 2`) to 1 and then to 0 in
//! blocks of `B` rounds. Node `X_i` is declared an ancestor of `X_j` when the
//! paired differences of `X_j` across the two blocks sum to more than a
//! horizon-dependent threshold; the relation is then transitively closed.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::scm::{CausalModel, Intervention, NodeId};
use crate::{Error, Result};

/// Block-length regime of the initialization phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitMode {
    /// `B = ⌈c0·√T⌉`, one cycle.
    Sqrt,
    /// `B = ⌈c0·T^{2/3}⌉`, repeated for several cycles.
    TwoThirds,
}

/// Number of passes over the node blocks in two-thirds mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum CycleCount {
    /// `⌈ln T⌉` cycles, so the phase spans `2(n-1)·c0·T^{2/3}·ln T` rounds.
    #[default]
    LogHorizon,
    /// A fixed number of cycles.
    Fixed(usize),
}

/// Which ancestor pairs the test examines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum DiscoveryScope {
    /// Every ordered pair of intervenable nodes; `Y` keeps every `X` as ancestor.
    #[default]
    All,
    /// Only edges into `Y`; other nodes get no discovered ancestors.
    TargetOnly,
}

/// Initialization phase parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitPlan {
    pub mode: InitMode,
    pub c0: f64,
    pub horizon: usize,
    pub cycles: CycleCount,
}

impl InitPlan {
    pub fn new(mode: InitMode, c0: f64, horizon: usize) -> Self {
        Self { mode, c0, horizon, cycles: CycleCount::LogHorizon }
    }

    pub fn block(&self) -> usize {
        block_size(self.c0, self.horizon, self.mode)
    }

    pub fn cycle_count(&self) -> usize {
        match (self.mode, self.cycles) {
            (InitMode::Sqrt, _) => 1,
            (InitMode::TwoThirds, CycleCount::Fixed(k)) => k.max(1),
            (InitMode::TwoThirds, CycleCount::LogHorizon) => (self.horizon as f64).ln().ceil().max(1.0) as usize,
        }
    }

    /// Total number of initialization rounds for a model with `n` non-reward nodes.
    pub fn len(&self, n: usize) -> usize {
        2 * (n - 1) * self.block() * self.cycle_count()
    }

    pub fn is_empty(&self, n: usize) -> bool {
        self.len(n) == 0
    }

    /// The intervention performed in each initialization round.
    pub fn schedule(&self, n: usize) -> Vec<Intervention> {
        let one = init_schedule_cycle(n, self.block());
        let mut out = Vec::with_capacity(one.len() * self.cycle_count());
        for _ in 0..self.cycle_count() {
            out.extend(one.iter().cloned());
        }
        out
    }
}

/// `B`, the ceilinged block length.
pub fn block_size(c0: f64, horizon: usize, mode: InitMode) -> usize {
    let t = horizon as f64;
    let raw = match mode {
        InitMode::Sqrt => c0 * t.sqrt(),
        InitMode::TwoThirds => c0 * t.powf(2.0 / 3.0),
    };
    // Guard against ceil(10.000000000000002) = 11 from floating noise.
    let r = raw.round();
    if (raw - r).abs() < 1e-9 {
        r as usize
    } else {
        raw.ceil() as usize
    }
}

fn init_schedule_cycle(n: usize, block: usize) -> Vec<Intervention> {
    let mut out = Vec::with_capacity(2 * n.saturating_sub(1) * block);
    for i in 1..n {
        for v in [1u8, 0] {
            for _ in 0..block {
                out.push(Intervention::atomic(i, v));
            }
        }
    }
    out
}

/// Initialization schedule for a model with `n` non-reward nodes.
pub fn init_schedule(n: usize, c0: f64, horizon: usize, mode: InitMode) -> Result<Vec<Intervention>> {
    if n < 2 || horizon < 1 || c0 <= 0.0 {
        return Err(Error::InvalidConfig("init schedule needs n ≥ 2, T ≥ 1 and c0 > 0".into()));
    }
    Ok(InitPlan::new(mode, c0, horizon).schedule(n))
}

/// Observations of the initialization phase, in round order.
#[derive(Debug, Clone, Default)]
pub struct InitObservationLog {
    /// `(intervention, node values)` per round.
    pub records: Vec<(Intervention, Vec<f64>)>,
}

impl InitObservationLog {
    /// Plays `schedule` on `model`.
    pub fn collect<R: Rng + ?Sized>(model: &CausalModel, schedule: &[Intervention], rng: &mut R) -> Self {
        let mut records = Vec::with_capacity(schedule.len());
        let mut buf = Vec::with_capacity(model.len());
        for a in schedule {
            model.sample_into(a, rng, &mut buf);
            records.push((a.clone(), buf.clone()));
        }
        Self { records }
    }

    /// CSV with columns `t,intervention,<node names…>`.
    pub fn write_csv(&self, model: &CausalModel, path: &std::path::Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["t".to_string(), "intervention".to_string()];
        header.extend((0..model.len()).map(|i| model.name(i).to_string()));
        w.write_record(&header)?;
        for (k, (a, values)) in self.records.iter().enumerate() {
            let mut rec = vec![(k + 1).to_string(), a.label(model)];
            rec.extend(values.iter().map(f64::to_string));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a log written by [`InitObservationLog::write_csv`].
    pub fn read_csv(model: &CausalModel, path: &std::path::Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let headers = r.headers()?.clone();
        let names: Vec<&str> = headers.iter().skip(2).collect();
        let expected: Vec<&str> = (0..model.len()).map(|i| model.name(i)).collect();
        if headers.len() < 2 || names != expected {
            return Err(Error::Parse(format!("log columns must be t,intervention,{}", expected.join(","))));
        }
        let mut records = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let a = Intervention::parse(model, &rec[1])?;
            let values = rec
                .iter()
                .skip(2)
                .map(|v| v.parse::<f64>().map_err(|_| Error::Parse(format!("bad node value `{v}`"))))
                .collect::<Result<Vec<f64>>>()?;
            records.push((a, values));
        }
        Ok(Self { records })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Estimated ancestor sets; `anc[j][i]` is true iff `i ∈ Âñc(j)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AncestorRelation {
    anc: Vec<Vec<bool>>,
}

impl AncestorRelation {
    /// Empty sets for every `X`; `Y` gets every `X`.
    pub fn initial(len: usize) -> Self {
        let mut anc = vec![vec![false; len]; len];
        for i in 0..len - 1 {
            anc[len - 1][i] = true;
        }
        Self { anc }
    }

    /// No ancestors anywhere.
    pub fn empty(len: usize) -> Self {
        Self { anc: vec![vec![false; len]; len] }
    }

    /// True ancestor relation of a model.
    pub fn from_model(model: &CausalModel) -> Self {
        Self { anc: model.ancestor_matrix() }
    }

    pub fn len(&self) -> usize {
        self.anc.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anc.is_empty()
    }

    pub fn contains(&self, node: NodeId, ancestor: NodeId) -> bool {
        self.anc[node][ancestor]
    }

    pub fn insert(&mut self, node: NodeId, ancestor: NodeId) {
        self.anc[node][ancestor] = true;
    }

    pub fn remove(&mut self, node: NodeId, ancestor: NodeId) {
        self.anc[node][ancestor] = false;
    }

    /// `Âñc(node)` in index order.
    pub fn ancestors(&self, node: NodeId) -> Vec<NodeId> {
        (0..self.len()).filter(|&i| self.anc[node][i]).collect()
    }

    /// Number of `(node, ancestor)` pairs.
    pub fn pair_count(&self) -> usize {
        self.anc.iter().map(|r| r.iter().filter(|&&b| b).count()).sum()
    }

    /// Smallest transitively closed superset (Floyd–Warshall on booleans).
    pub fn transitive_closure(&self) -> Self {
        let mut anc = self.anc.clone();
        let len = anc.len();
        for k in 0..len {
            for i in 0..len {
                if anc[i][k] {
                    for j in 0..len {
                        if anc[k][j] {
                            anc[i][j] = true;
                        }
                    }
                }
            }
        }
        Self { anc }
    }

    pub fn is_transitively_closed(&self) -> bool {
        self.transitive_closure() == *self
    }

    /// Agreement with `truth` on every pair of non-reward nodes.
    pub fn matches_on_x(&self, truth: &AncestorRelation) -> bool {
        let y = self.len() - 1;
        (1..y).all(|j| (1..y).all(|i| self.anc[j][i] == truth.anc[j][i]))
    }

    /// Agreement with `truth` on which non-reward nodes are ancestors of `Y`.
    pub fn matches_on_target(&self, truth: &AncestorRelation) -> bool {
        let y = self.len() - 1;
        (1..y).all(|i| self.anc[y][i] == truth.anc[y][i])
    }

    /// Adjacency list text: one `child: ancestor ancestor …` line per node.
    pub fn to_adjacency_list(&self, model: &CausalModel) -> String {
        let mut out = String::new();
        for j in 0..self.len() {
            let names: Vec<&str> = self.ancestors(j).into_iter().map(|i| model.name(i)).collect();
            out.push_str(&format!("{}: {}\n", model.name(j), names.join(" ")));
        }
        out
    }
}

/// `c0·c1·T^{3/10}`.
pub fn bglm_threshold(c0: f64, c1: f64, horizon: usize) -> f64 {
    c0 * c1 * (horizon as f64).powf(0.3)
}

/// `c0·c1·T^{1/3}·ln(T²)`.
pub fn nogap_threshold(c0: f64, c1: f64, horizon: usize) -> f64 {
    let t = horizon as f64;
    c0 * c1 * t.cbrt() * (t * t).ln()
}

fn check_log(log: &InitObservationLog, n: usize, block: usize) -> Result<()> {
    let cycle = init_schedule_cycle(n, block);
    if log.len() < cycle.len() {
        return Err(Error::InvalidConfig(format!(
            "initialization log has {} rounds, the schedule needs at least {}",
            log.len(),
            cycle.len()
        )));
    }
    for (k, ((a, values), expected)) in log.records.iter().zip(cycle.iter().cycle()).enumerate() {
        if a != expected || values.len() != n + 1 {
            return Err(Error::InvalidConfig(format!("initialization log deviates from the schedule at round {k}")));
        }
    }
    Ok(())
}

/// Threshold test over the first cycle of the log.
pub fn threshold_ancestors(
    log: &InitObservationLog,
    n: usize,
    block: usize,
    threshold: f64,
    scope: DiscoveryScope,
) -> Result<AncestorRelation> {
    check_log(log, n, block)?;
    let len = n + 1;
    let y = n;
    let mut rel = match scope {
        DiscoveryScope::All => AncestorRelation::initial(len),
        DiscoveryScope::TargetOnly => AncestorRelation::empty(len),
    };
    let targets: Vec<NodeId> = match scope {
        DiscoveryScope::All => (1..n).collect(),
        DiscoveryScope::TargetOnly => vec![y],
    };
    for i in 1..n {
        let on = 2 * (i - 1) * block;
        let off = on + block;
        for &j in &targets {
            if j == i {
                continue;
            }
            let sum: f64 = (0..block).map(|k| log.records[on + k].1[j] - log.records[off + k].1[j]).sum();
            if sum > threshold {
                rel.insert(j, i);
            }
        }
    }
    let mut rel = rel.transitive_closure();
    if scope == DiscoveryScope::TargetOnly {
        rel.insert(y, 0);
    }
    Ok(rel)
}

/// Ancestor test of the weight-gap regime (sqrt-mode log).
pub fn bglm_ancestors(
    log: &InitObservationLog,
    n: usize,
    c0: f64,
    c1: f64,
    horizon: usize,
    scope: DiscoveryScope,
) -> Result<AncestorRelation> {
    let block = block_size(c0, horizon, InitMode::Sqrt);
    threshold_ancestors(log, n, block, bglm_threshold(c0, c1, horizon), scope)
}

/// Ancestor test without a weight gap (two-thirds-mode log).
pub fn nogap_blm_ancestors(
    log: &InitObservationLog,
    n: usize,
    c0: f64,
    c1: f64,
    horizon: usize,
    scope: DiscoveryScope,
) -> Result<AncestorRelation> {
    let block = block_size(c0, horizon, InitMode::TwoThirds);
    threshold_ancestors(log, n, block, nogap_threshold(c0, c1, horizon), scope)
}
