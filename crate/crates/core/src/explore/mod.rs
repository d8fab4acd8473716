//! Best-arm identification over atomic interventions when only the
//! essential graph is known.
//!
//! Each arm `do(X=x)` keeps an interventional confidence interval and, once
//! every edge at `X` is oriented, an observational one obtained from the
//! adjustment formula over `Pa(X)`. The working interval is their
//! intersection clipped to `[0, 1]`; LUCB picks the arms to refine.

mod causal_pe;
mod graph;

pub use causal_pe::{causal_pe_unknown, pure_lucb, ArmState, PeConfig, PeOutcome, PeTraceRow, DEFAULT_SAMPLE_CAP};
pub use graph::EssentialGraph;

use crate::scm::{do_difference, expected_reward, ActionSet, CausalModel, Intervention, NodeId, RewardMode, ValueKind};
use crate::{Error, Result};

/// `√((12/T_a)·ln(16n²Z_a t³/δ))`; infinite when `T_a = 0`.
pub fn obs_confidence(t_a: u64, n: usize, z_a: usize, t: u64, delta: f64) -> f64 {
    if t_a == 0 {
        return f64::INFINITY;
    }
    let n = n as f64;
    let t = t as f64;
    (12.0 / t_a as f64 * (16.0 * n * n * z_a as f64 * t.powi(3) / delta).ln()).sqrt()
}

/// `2·√((1/D_a)·ln(2n·ln(2t)/δ))`; infinite when `D_a = 0`.
pub fn int_confidence(d_a: u64, t: u64, n: usize, delta: f64) -> Result<f64> {
    if t == 0 || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidConfig(format!("interventional radius needs t ≥ 1 and δ in (0, 1), got t={t}, δ={delta}")));
    }
    if d_a == 0 {
        return Ok(f64::INFINITY);
    }
    let inner = 2.0 * n as f64 * (2.0 * t as f64).ln() / delta;
    Ok(2.0 * (inner.ln() / d_a as f64).sqrt())
}

/// `√((2/D)·ln(4n²t²/δ))`, the half-width used to orient edges.
pub fn identification_radius(d: u64, n: usize, t: u64, delta: f64) -> f64 {
    if d == 0 {
        return f64::INFINITY;
    }
    let n = n as f64;
    let t = t as f64;
    (2.0 / d as f64 * (4.0 * n * n * t * t / delta).ln()).sqrt()
}

/// `Σ_z r_z·p_z`.
pub fn do_calculus_estimate(r: &[f64], p: &[f64]) -> f64 {
    r.iter().zip(p).map(|(r, p)| r * p).sum()
}

/// LUCB pair: `a_h` maximises the midpoint, `a_l` the upper bound among the
/// rest; ties go to the lower index.
pub fn lucb_select(bounds: &[(f64, f64)]) -> Result<(usize, usize)> {
    if bounds.len() < 2 {
        return Err(Error::InvalidConfig("LUCB needs at least two arms".into()));
    }
    let argmax = |score: &dyn Fn(usize) -> f64, skip: Option<usize>| {
        let mut best = (usize::MAX, f64::NEG_INFINITY);
        for i in 0..bounds.len() {
            if Some(i) == skip {
                continue;
            }
            let s = score(i);
            if best.0 == usize::MAX || s > best.1 {
                best = (i, s);
            }
        }
        best.0
    };
    let h = argmax(&|i| (bounds[i].0 + bounds[i].1) / 2.0, None);
    let l = argmax(&|i| bounds[i].1, Some(h));
    Ok((h, l))
}

/// Quantities of the gap-dependent observation threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct GapDiagnostics {
    pub gaps: Vec<f64>,
    pub q: Vec<f64>,
    /// Arm indices sorted by `q_a·max{Δ_a, ε/2}²`.
    pub order: Vec<usize>,
    /// `H_r` for `r = 0 … |A|` along `order`.
    pub h: Vec<f64>,
    pub m: usize,
    /// Hard-to-observe arms, ascending.
    pub hard: Vec<usize>,
    /// `c_e` per oriented learnable edge `(from, to)`.
    pub c_edge: Vec<((NodeId, NodeId), f64)>,
    /// `c_a` per arm; infinite for arms whose node has no children.
    pub c_arm: Vec<f64>,
}

/// Smallest `τ` with `|{a : q_a·max{Δ_a, ε/2}² < 1/H_τ}| ≤ τ`.
pub fn gap_threshold(q: &[f64], gaps: &[f64], eps: f64) -> GapDiagnostics {
    let k = q.len();
    let width = |i: usize| gaps[i].max(eps / 2.0);
    let key = |i: usize| q[i] * width(i).powi(2);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| key(a).total_cmp(&key(b)).then(a.cmp(&b)));
    let mut h = vec![0.0];
    for &i in &order {
        h.push(h.last().unwrap() + 1.0 / width(i).powi(2));
    }
    let below = |tau: usize| {
        let cut = if h[tau] > 0.0 { 1.0 / h[tau] } else { f64::INFINITY };
        (0..k).filter(|&i| key(i) < cut).collect::<Vec<_>>()
    };
    let m = (0..=k).find(|&tau| below(tau).len() <= tau).unwrap_or(k);
    GapDiagnostics {
        gaps: gaps.to_vec(),
        q: q.to_vec(),
        order,
        hard: below(m),
        m,
        h,
        c_edge: Vec::new(),
        c_arm: vec![f64::INFINITY; k],
    }
}

/// `P(X_i = v_i for every (i, v_i))` under the observational distribution,
/// by enumeration over the ancestral closure of the assigned nodes.
pub fn joint_probability(model: &CausalModel, assignment: &[(NodeId, u8)]) -> Result<f64> {
    if model.kind() != ValueKind::Binary {
        return Err(Error::ModeMismatch("joint probabilities need a binary model".into()));
    }
    let anc = model.ancestor_matrix();
    let mut keep = vec![false; model.len()];
    for &(i, _) in assignment {
        if i >= model.len() {
            return Err(Error::UnknownNode(format!("#{i}")));
        }
        keep[i] = true;
        for j in 1..model.len() {
            keep[j] |= anc[i][j];
        }
    }
    let nodes: Vec<NodeId> = (1..model.len()).filter(|&j| keep[j]).collect();
    if nodes.len() > crate::scm::exact::MAX_ENUMERATED {
        return Err(Error::ModeMismatch("too many nodes to enumerate".into()));
    }
    let mut fixed = vec![None; model.len()];
    for &(i, v) in assignment {
        if i == 0 {
            if v != 1 {
                return Ok(0.0);
            }
            continue;
        }
        fixed[i] = Some(f64::from(v));
    }
    let mut values = vec![0.0; model.len()];
    values[0] = 1.0;
    fn rec(model: &CausalModel, nodes: &[NodeId], fixed: &[Option<f64>], k: usize, w: f64, values: &mut [f64]) -> f64 {
        if k == nodes.len() || w == 0.0 {
            return w;
        }
        let i = nodes[k];
        let p = model.conditional(i, values);
        let mut acc = 0.0;
        for (v, pv) in [(1.0, p), (0.0, 1.0 - p)] {
            if fixed[i].is_some_and(|f| f != v) || pv == 0.0 {
                continue;
            }
            values[i] = v;
            acc += rec(model, nodes, fixed, k + 1, w * pv, values);
        }
        acc
    }
    Ok(rec(model, &nodes, &fixed, 0, 1.0, &mut values))
}

/// Ground-truth diagnostics over the atomic arm set of `model`.
pub fn gap_diagnostics(model: &CausalModel, eps: f64) -> Result<GapDiagnostics> {
    let arms = ActionSet::standard(model);
    let rewards: Vec<f64> =
        arms.actions().iter().map(|a| expected_reward(model, a, RewardMode::Enumerate)).collect::<Result<_>>()?;
    let best = rewards.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let gaps: Vec<f64> = rewards.iter().map(|r| best - r).collect();
    let mut q = Vec::with_capacity(arms.len());
    for a in arms.actions() {
        q.push(arm_q(model, a)?);
    }
    let mut diag = gap_threshold(&q, &gaps, eps);
    for (p, c) in model.edges() {
        if p != 0 {
            let (hi, lo) = do_difference(model, p, c)?;
            diag.c_edge.push(((p, c), hi - lo));
        }
    }
    for (k, a) in arms.actions().iter().enumerate() {
        if let Some((x, _)) = a.iter().next() {
            diag.c_arm[k] = diag.c_edge.iter().filter(|((p, _), _)| *p == x).map(|(_, c)| *c).fold(f64::INFINITY, f64::min);
        }
    }
    Ok(diag)
}

/// `q_a = min_z P(X = x, Pa(X) = z)`; 1 for the null intervention.
fn arm_q(model: &CausalModel, a: &Intervention) -> Result<f64> {
    let Some((x, v)) = a.iter().next() else { return Ok(1.0) };
    let pa: Vec<NodeId> = model.parents(x).iter().copied().filter(|&p| p != 0).collect();
    let mut q = f64::INFINITY;
    for z in 0..1usize << pa.len() {
        let mut assignment = vec![(x, v)];
        assignment.extend(pa.iter().enumerate().map(|(k, &p)| (p, ((z >> k) & 1) as u8)));
        q = q.min(joint_probability(model, &assignment)?);
    }
    Ok(q)
}
