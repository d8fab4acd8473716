//! Per-node parameter estimation and confidence radii.
//!
//! A node `X` is regressed on `V`, the values of `X₁` followed by its
//! estimated ancestors. GLM nodes use maximum likelihood on the concave
//! pseudo-likelihood `H(θ) = Σ x·Vᵀθ − m(Vᵀθ)` with `m' = f`; linear nodes
//! use ridge regression with `M = I + ΣVVᵀ`.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::scm::{LinkFunction, ModelConstants};
use crate::{Error, Result};

/// Newton iteration cap.
pub const MLE_MAX_ITER: usize = 200;
/// Sup-norm tolerance on the estimating equation.
pub const MLE_TOL: f64 = 1e-8;
/// Diagonal shift applied before inverting a singular Gram matrix.
const SINGULAR_SHIFT: f64 = 1e-8;

/// Regression data of one node, compressed by regressor pattern.
///
/// Regressors are binary, so rows sharing a pattern are merged into a count
/// and a sum of responses; every estimating equation only needs these.
#[derive(Debug, Clone, Default)]
pub struct NodeDataset {
    dim: usize,
    patterns: Vec<u64>,
    counts: Vec<f64>,
    sums: Vec<f64>,
    index: HashMap<u64, usize>,
    rows: usize,
}

impl NodeDataset {
    pub fn new(dim: usize) -> Self {
        assert!(dim <= 64, "regressor patterns are packed into 64 bits");
        Self { dim, ..Self::default() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of rows pushed so far.
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    /// Adds the row `(V, x)`; `v[k]` is read as a bit.
    pub fn push(&mut self, v: &[f64], x: f64) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::Dimension { expected: self.dim, got: v.len() });
        }
        let key = v.iter().enumerate().fold(0u64, |acc, (k, &b)| if b > 0.5 { acc | (1 << k) } else { acc });
        let slot = match self.index.get(&key) {
            Some(&s) => s,
            None => {
                self.patterns.push(key);
                self.counts.push(0.0);
                self.sums.push(0.0);
                self.index.insert(key, self.patterns.len() - 1);
                self.patterns.len() - 1
            }
        };
        self.counts[slot] += 1.0;
        self.sums[slot] += x;
        self.rows += 1;
        Ok(())
    }

    fn pattern(&self, slot: usize) -> DVector<f64> {
        let key = self.patterns[slot];
        DVector::from_fn(self.dim, |k, _| ((key >> k) & 1) as f64)
    }

    /// `Σ V Vᵀ`.
    pub fn gram(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for s in 0..self.patterns.len() {
            let v = self.pattern(s);
            m += self.counts[s] * &v * v.transpose();
        }
        m
    }

    /// `Σ (x − f(Vᵀθ)) V`.
    pub fn score(&self, link: &LinkFunction, theta: &DVector<f64>) -> DVector<f64> {
        let mut g = DVector::zeros(self.dim);
        for s in 0..self.patterns.len() {
            let v = self.pattern(s);
            let u = v.dot(theta);
            g += (self.sums[s] - self.counts[s] * link.eval(u)) * v;
        }
        g
    }

    /// `H(θ)`.
    pub fn pseudo_likelihood(&self, link: &LinkFunction, theta: &DVector<f64>) -> f64 {
        (0..self.patterns.len())
            .map(|s| {
                let u = self.pattern(s).dot(theta);
                self.sums[s] * u - self.counts[s] * link.antiderivative(u)
            })
            .sum()
    }

    /// `Σ f'(Vᵀθ) V Vᵀ`, the negated Hessian of `H`.
    fn information(&self, link: &LinkFunction, theta: &DVector<f64>) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for s in 0..self.patterns.len() {
            let v = self.pattern(s);
            let w = self.counts[s] * link.derivative(v.dot(theta));
            m += w * &v * v.transpose();
        }
        m
    }
}

/// Confidence ellipsoid `{θ : ‖θ − θ̂‖_M ≤ ρ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipsoidEstimate {
    pub theta_hat: DVector<f64>,
    pub m: DMatrix<f64>,
    pub rho: f64,
}

impl EllipsoidEstimate {
    pub fn new(theta_hat: DVector<f64>, m: DMatrix<f64>, rho: f64) -> Result<Self> {
        if m.nrows() != theta_hat.len() || m.ncols() != theta_hat.len() {
            return Err(Error::Dimension { expected: theta_hat.len(), got: m.nrows() });
        }
        if !rho.is_finite() || rho < 0.0 {
            return Err(Error::InvalidConfig(format!("radius {rho} must be finite and non-negative")));
        }
        Ok(Self { theta_hat, m, rho })
    }

    pub fn dim(&self) -> usize {
        self.theta_hat.len()
    }

    /// `M⁻¹`, with a small diagonal shift when `M` is singular.
    pub fn m_inverse(&self) -> DMatrix<f64> {
        invert_spd(&self.m)
    }

    /// `‖θ − θ̂‖_M`.
    pub fn distance(&self, theta: &DVector<f64>) -> f64 {
        let d = theta - &self.theta_hat;
        (d.transpose() * &self.m * &d)[(0, 0)].max(0.0).sqrt()
    }

    pub fn contains(&self, theta: &DVector<f64>) -> bool {
        self.distance(theta) <= self.rho
    }
}

/// Inverse of a symmetric positive semi-definite matrix.
pub fn invert_spd(m: &DMatrix<f64>) -> DMatrix<f64> {
    if let Some(ch) = m.clone().cholesky() {
        return ch.inverse();
    }
    let shift = SINGULAR_SHIFT * m.diagonal().amax().max(1.0);
    let shifted = m + DMatrix::identity(m.nrows(), m.ncols()) * shift;
    match shifted.clone().cholesky() {
        Some(ch) => ch.inverse(),
        None => shifted.pseudo_inverse(1e-12).expect("pseudo-inverse of a symmetric matrix"),
    }
}

/// Outcome of the Newton solver.
#[derive(Debug, Clone)]
pub struct MleFit {
    pub theta: DVector<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Damped Newton ascent of `H` from `start`.
///
/// Directions are least-norm solutions of the Newton system, so a cold start
/// from 0 reaches the least-norm stationary point when `H` is flat along some
/// direction. Each step is halved until `H` does not decrease.
pub fn mle_solve(data: &NodeDataset, link: &LinkFunction, start: Option<&DVector<f64>>) -> MleFit {
    let mut theta = start.cloned().unwrap_or_else(|| DVector::zeros(data.dim()));
    let mut g = data.score(link, &theta);
    let mut residual = g.amax();
    let mut iterations = 0;
    while residual > MLE_TOL && iterations < MLE_MAX_ITER {
        iterations += 1;
        let info = data.information(link, &theta);
        let dir = info.svd(true, true).solve(&g, 1e-12).expect("SVD solve with both factors");
        let h0 = data.pseudo_likelihood(link, &theta);
        let mut step = 1.0;
        let mut next = None;
        while step > 1e-10 {
            let cand = &theta + step * &dir;
            let h = data.pseudo_likelihood(link, &cand);
            if h >= h0 - 1e-12 * h0.abs().max(1.0) {
                next = Some(cand);
                break;
            }
            step *= 0.5;
        }
        let Some(cand) = next else { break };
        theta = cand;
        g = data.score(link, &theta);
        residual = g.amax();
    }
    MleFit { converged: residual <= MLE_TOL, theta, residual, iterations }
}

/// Maximum-likelihood estimate with `M = ΣVVᵀ` and `ρ = 0`.
pub fn mle_estimate(data: &NodeDataset, link: &LinkFunction) -> Result<EllipsoidEstimate> {
    if data.is_empty() {
        let d = data.dim();
        return EllipsoidEstimate::new(DVector::zeros(d), DMatrix::zeros(d, d), 0.0);
    }
    let fit = mle_solve(data, link, None);
    if !fit.converged {
        return Err(Error::NoConvergence { iterations: fit.iterations, residual: fit.residual });
    }
    EllipsoidEstimate::new(fit.theta, data.gram(), 0.0)
}

/// Ridge regression state with `M = I + ΣVVᵀ`, `b = ΣxV`, `θ̂ = M⁻¹b`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionState {
    pub m: DMatrix<f64>,
    pub b: DVector<f64>,
    pub theta_hat: DVector<f64>,
}

impl RegressionState {
    pub fn new(dim: usize) -> Self {
        Self { m: DMatrix::identity(dim, dim), b: DVector::zeros(dim), theta_hat: DVector::zeros(dim) }
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    /// Adds the row `(V, x)` and re-solves for `θ̂`.
    pub fn update(&mut self, v: &DVector<f64>, x: f64) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: v.len() });
        }
        self.m += v * v.transpose();
        self.b += x * v;
        self.theta_hat = self
            .m
            .clone()
            .cholesky()
            .expect("I + ΣVVᵀ is positive definite")
            .solve(&self.b);
        Ok(())
    }

    pub fn ellipsoid(&self, rho: f64) -> Result<EllipsoidEstimate> {
        EllipsoidEstimate::new(self.theta_hat.clone(), self.m.clone(), rho)
    }
}

/// Functional form of [`RegressionState::update`].
pub fn ridge_update(state: &RegressionState, v: &DVector<f64>, x: f64) -> Result<RegressionState> {
    let mut next = state.clone();
    next.update(v, x)?;
    Ok(next)
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("confidence level δ = {delta} outside (0, 1]")))
    }
}

/// `(3/κ)·√ln(1/δ)`.
pub fn confidence_radius_ofu(kappa: f64, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    if kappa <= 0.0 {
        return Err(Error::InvalidConfig("κ must be positive".into()));
    }
    Ok(3.0 / kappa * (1.0 / delta).ln().sqrt())
}

/// `√(n·ln(1 + t·n) + 2·ln(1/δ)) + √n`.
pub fn confidence_radius_lr(n: usize, t: usize, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    let n = n as f64;
    Ok((n * (1.0 + t as f64 * n).ln() + 2.0 * (1.0 / delta).ln()).sqrt() + n.sqrt())
}

/// Length of the null-intervention phase that makes every Gram matrix well
/// conditioned: `⌈max{(c/ζ²)·ln(1/δ), (8n² − 6)·R/ζ}⌉` with
/// `R = ⌈512·n·L₂²/κ⁴·(n² + ln(1/δ))⌉`.
pub fn second_init_length(n: usize, constants: &ModelConstants, delta: f64) -> Result<usize> {
    constants.validate()?;
    check_delta(delta)?;
    let nf = n as f64;
    let log_inv = (1.0 / delta).ln();
    let r = (512.0 * nf * constants.l2_max.powi(2) / constants.kappa.powi(4) * (nf * nf + log_inv)).ceil();
    let a = constants.c_lm / constants.zeta.powi(2) * log_inv;
    let b = (8.0 * nf * nf - 6.0) * r / constants.zeta;
    Ok(a.max(b).ceil() as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scm::extend_link_range;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn dataset(rows: &[(&[f64], f64)]) -> NodeDataset {
        let mut d = NodeDataset::new(rows[0].0.len());
        for (v, x) in rows {
            d.push(v, *x).unwrap();
        }
        d
    }

    #[test]
    fn identity_intercept_only() {
        let d = dataset(&[(&[1.0], 1.0), (&[1.0], 0.0), (&[1.0], 1.0), (&[1.0], 1.0)]);
        let e = mle_estimate(&d, &LinkFunction::identity()).unwrap();
        assert_abs_diff_eq!(e.theta_hat[0], 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(e.m[(0, 0)], 4.0);
    }

    #[test]
    fn empty_dataset() {
        let e = mle_estimate(&NodeDataset::new(3), &LinkFunction::logistic()).unwrap();
        assert_eq!(e.theta_hat, DVector::zeros(3));
        assert_eq!(e.m, DMatrix::zeros(3, 3));
    }

    #[test]
    fn identity_two_dimensional_normal_equations() {
        let d = dataset(&[(&[1.0, 0.0], 0.0), (&[1.0, 0.0], 1.0), (&[1.0, 1.0], 1.0), (&[1.0, 1.0], 1.0)]);
        let e = mle_estimate(&d, &LinkFunction::identity()).unwrap();
        // Normal equations: [[4,2],[2,2]] θ = [3,2].
        let a = DMatrix::from_row_slice(2, 2, &[4.0, 2.0, 2.0, 2.0]);
        let b = DVector::from_vec(vec![3.0, 2.0]);
        let direct = a.lu().solve(&b).unwrap();
        assert_abs_diff_eq!(e.theta_hat[0], direct[0], epsilon = 1e-12);
        assert_abs_diff_eq!(e.theta_hat[1], direct[1], epsilon = 1e-12);
        assert_abs_diff_eq!(direct[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(direct[1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_data_yields_least_norm_point() {
        // V always (1, 1): only θ₁ + θ₂ is identified; least norm splits it evenly.
        let d = dataset(&[(&[1.0, 1.0], 1.0), (&[1.0, 1.0], 0.0)]);
        let e = mle_estimate(&d, &LinkFunction::identity()).unwrap();
        assert_abs_diff_eq!(e.theta_hat[0], 0.25, epsilon = 1e-10);
        assert_abs_diff_eq!(e.theta_hat[1], 0.25, epsilon = 1e-10);
    }

    #[test]
    fn logistic_separable_data_has_a_finite_root_after_extension() {
        // Every response is 1, so the plain logistic likelihood has no maximiser.
        let d = dataset(&[(&[1.0, 0.0], 1.0), (&[1.0, 1.0], 1.0), (&[1.0, 1.0], 1.0)]);
        let link = extend_link_range(&LinkFunction::logistic(), 2);
        let fit = mle_solve(&d, &link, None);
        assert!(fit.converged, "residual {}", fit.residual);
        assert!(fit.theta.iter().all(|t| t.is_finite()));
    }

    #[test]
    fn logistic_residual_below_tolerance() {
        let mut rng = crate::rng::stream(3);
        let truth = DVector::from_vec(vec![0.2, 0.7, 0.4]);
        let link = extend_link_range(&LinkFunction::logistic(), 3);
        let mut d = NodeDataset::new(3);
        for _ in 0..5000 {
            let v = [1.0, f64::from(rng.gen::<bool>()), f64::from(rng.gen::<bool>())];
            let p = link.eval(v.iter().zip(truth.iter()).map(|(a, b)| a * b).sum());
            d.push(&v, f64::from(rng.gen::<f64>() < p)).unwrap();
        }
        let e = mle_estimate(&d, &link).unwrap();
        assert!(d.score(&link, &e.theta_hat).amax() <= MLE_TOL);
        assert!((e.theta_hat.clone() - truth).norm() < 0.3);
    }

    #[test]
    fn ridge_hand_computed_step() {
        let s = RegressionState::new(2);
        let s = ridge_update(&s, &DVector::from_vec(vec![1.0, 1.0]), 1.0).unwrap();
        assert_eq!(s.m, DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]));
        assert_eq!(s.b, DVector::from_vec(vec![1.0, 1.0]));
        assert_abs_diff_eq!(s.theta_hat[0], 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.theta_hat[1], 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn ridge_zero_vector_is_a_no_op() {
        let s = RegressionState::new(3);
        let t = ridge_update(&s, &DVector::zeros(3), 1.0).unwrap();
        assert_eq!(s, t);
    }

    #[test]
    fn radii_examples() {
        assert_abs_diff_eq!(confidence_radius_ofu(1.0, (-1f64).exp()).unwrap(), 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(confidence_radius_ofu(3.0, (-4f64).exp()).unwrap(), 2.0, epsilon = 1e-12);
        let delta = 1.0 / (3.0 * 7.0 * 100.0);
        assert_abs_diff_eq!(confidence_radius_ofu(1.0, delta).unwrap(), 3.0 * 2100f64.ln().sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(confidence_radius_ofu(1.0, delta).unwrap(), 8.297_423_311_691_627, epsilon = 1e-9);
        assert!(confidence_radius_ofu(1.0, 0.0).is_err());
        assert!(confidence_radius_ofu(0.0, 0.5).is_err());

        assert_abs_diff_eq!(confidence_radius_lr(1, 0, 1.0).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(confidence_radius_lr(4, 0, (-2f64).exp()).unwrap(), 4.0, epsilon = 1e-12);
        let r = confidence_radius_lr(7, 1000, 1.0 / 700.0).unwrap();
        let oracle = (7.0 * 7001f64.ln() + 2.0 * 700f64.ln()).sqrt() + 7f64.sqrt();
        assert_abs_diff_eq!(r, oracle, epsilon = 1e-12);
        assert_abs_diff_eq!(r, 11.310_554_747_665_282, epsilon = 1e-9);
    }

    #[test]
    fn second_phase_lengths() {
        let blm = ModelConstants { kappa: 1.0, l1_max: 1.0, l2_max: 0.0, zeta: 0.5, c_lm: 1.0 };
        let delta: f64 = 0.01;
        assert_eq!(second_init_length(6, &blm, delta).unwrap(), (4.0 * (1.0 / delta).ln()).ceil() as usize);
        assert_eq!(second_init_length(6, &blm, 1.0).unwrap(), 0);
        let glm = ModelConstants { kappa: 1.0, l1_max: 1.0, l2_max: 1.0, zeta: 1.0, c_lm: 1.0 };
        assert_eq!(second_init_length(2, &glm, (-1f64).exp()).unwrap(), 133_120);
    }
}
