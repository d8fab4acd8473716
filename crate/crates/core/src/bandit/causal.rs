//! Pieces shared by the causal algorithms.

use nalgebra::{DMatrix, DVector};

use super::Environment;
use crate::discovery::InitObservationLog;
use crate::estimation::EllipsoidEstimate;
use crate::oracle::{EstimatedModel, NodeEstimate, RegressionStructure};
use crate::scm::{CausalModel, Intervention, LinkFunction};
use crate::Result;

/// Plays the initialization schedule and returns its log.
pub(crate) fn play_init(world: &mut Environment<'_>, schedule: &[Intervention]) -> InitObservationLog {
    let records = schedule.iter().map(|a| (a.clone(), world.play(None, a).to_vec())).collect();
    InitObservationLog { records }
}

/// Writes the regressor vector of node `j` into `out`.
pub(crate) fn gather(structure: &RegressionStructure, j: usize, values: &[f64], out: &mut Vec<f64>) {
    out.clear();
    out.extend(structure.regressors[j].iter().map(|&p| values[p]));
}

/// Calls `sink(j, V, x)` for every node not intervened by `a`; intervened
/// nodes do not follow their structural equation in that round.
pub(crate) fn for_each_observed(
    structure: &RegressionStructure,
    a: &Intervention,
    values: &[f64],
    buf: &mut Vec<f64>,
    mut sink: impl FnMut(usize, &[f64], f64) -> Result<()>,
) -> Result<()> {
    for j in 1..structure.len() {
        if a.contains(j) {
            continue;
        }
        gather(structure, j, values, buf);
        sink(j, buf, values[j])?;
    }
    Ok(())
}

/// Ellipsoids collapsed onto the true weights, absent regressors at 0.
pub(crate) fn oracle_model(env: &CausalModel, structure: &RegressionStructure) -> Result<EstimatedModel> {
    let mut nodes = vec![None];
    for j in 1..structure.len() {
        let regs = &structure.regressors[j];
        let theta = DVector::from_fn(regs.len(), |k, _| env.weight(regs[k], j).unwrap_or(0.0));
        let e = EllipsoidEstimate::new(theta, DMatrix::identity(regs.len(), regs.len()), 0.0)?;
        let link = if env.node(j).link.is_tabulated() { LinkFunction::identity() } else { env.node(j).link.clone() };
        nodes.push(Some(NodeEstimate::new(e, link)));
    }
    EstimatedModel::new(structure.clone(), nodes)
}
