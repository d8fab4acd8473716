//! Link functions and their extension to an unbounded range.
//!
//! A GLM node fires with probability `f(θ·pa)`. Maximum-likelihood fitting
//! needs `f` to have range ℝ, so bounded links are spliced onto logarithmic
//! tails that match value, slope and curvature at the splice point.

use serde::{Deserialize, Serialize};

/// Conditional family of a node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LinkKind {
    /// `f(x) = x`.
    Identity,
    /// `f(x) = 1 / (1 + e^{-x})`.
    Logistic,
    /// Full conditional probability table keyed by the parent bit pattern;
    /// bit `k` of the row index is the value of the `k`-th parent.
    Tabulated(Vec<f64>),
}

/// Logarithmic tail spliced onto a link at `splice`.
///
/// The tail matches `value`, `slope` and `curvature` of the base link at the
/// splice point and grows like `ln |x|` away from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailExtension {
    pub splice: f64,
    pub value: f64,
    pub slope: f64,
    pub curvature: f64,
}

impl TailExtension {
    fn coeffs(&self) -> (f64, f64) {
        let a = self.slope * self.slope / self.curvature;
        let b = (self.slope / self.curvature).abs();
        (a, b)
    }

    /// Distance-like argument of the logarithm; `u = b` at the splice point.
    fn arg(&self, x: f64, upper: bool) -> f64 {
        let (_, b) = self.coeffs();
        if upper {
            x - self.splice + b
        } else {
            self.splice - x + b
        }
    }

    fn eval(&self, x: f64, upper: bool) -> f64 {
        let (a, b) = self.coeffs();
        self.value + a * b.ln() - a * self.arg(x, upper).ln()
    }

    fn derivative(&self, x: f64, upper: bool) -> f64 {
        let (a, _) = self.coeffs();
        let u = self.arg(x, upper);
        if upper {
            -a / u
        } else {
            a / u
        }
    }

    fn second_derivative(&self, x: f64, upper: bool) -> f64 {
        let (a, _) = self.coeffs();
        let u = self.arg(x, upper);
        a / (u * u)
    }

    /// Integral of the tail between the splice point and `x`, signed so that
    /// it is positive when `x` lies on the tail side with positive values.
    fn integral_from_splice(&self, x: f64, upper: bool) -> f64 {
        let (a, b) = self.coeffs();
        let u = self.arg(x, upper);
        let c = self.value + a * b.ln();
        let w_ln_w = |w: f64| w * w.ln() - w;
        let len = (u - b).abs();
        let inner = c * len - a * (w_ln_w(u) - w_ln_w(b));
        if upper {
            inner
        } else {
            -inner
        }
    }
}

/// Link function of a GLM node, optionally extended to range ℝ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkFunction {
    pub kind: LinkKind,
    pub upper: Option<TailExtension>,
    pub lower: Option<TailExtension>,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

impl LinkFunction {
    pub fn identity() -> Self {
        Self { kind: LinkKind::Identity, upper: None, lower: None }
    }

    pub fn logistic() -> Self {
        Self { kind: LinkKind::Logistic, upper: None, lower: None }
    }

    pub fn tabulated(table: Vec<f64>) -> Self {
        Self { kind: LinkKind::Tabulated(table), upper: None, lower: None }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.kind, LinkKind::Identity)
    }

    pub fn is_tabulated(&self) -> bool {
        matches!(self.kind, LinkKind::Tabulated(_))
    }

    fn base(&self, x: f64) -> f64 {
        match &self.kind {
            LinkKind::Identity => x,
            LinkKind::Logistic => sigmoid(x),
            LinkKind::Tabulated(_) => panic!("tabulated links have no scalar form"),
        }
    }

    fn base_d1(&self, x: f64) -> f64 {
        match &self.kind {
            LinkKind::Identity => 1.0,
            LinkKind::Logistic => {
                let s = sigmoid(x);
                s * (1.0 - s)
            }
            LinkKind::Tabulated(_) => panic!("tabulated links have no scalar form"),
        }
    }

    fn base_d2(&self, x: f64) -> f64 {
        match &self.kind {
            LinkKind::Identity => 0.0,
            LinkKind::Logistic => {
                let s = sigmoid(x);
                s * (1.0 - s) * (1.0 - 2.0 * s)
            }
            LinkKind::Tabulated(_) => panic!("tabulated links have no scalar form"),
        }
    }

    fn base_integral(&self, x: f64) -> f64 {
        match &self.kind {
            LinkKind::Identity => 0.5 * x * x,
            LinkKind::Logistic => softplus(x) - std::f64::consts::LN_2,
            LinkKind::Tabulated(_) => panic!("tabulated links have no scalar form"),
        }
    }

    fn on_upper(&self, x: f64) -> Option<&TailExtension> {
        self.upper.as_ref().filter(|t| x > t.splice)
    }

    fn on_lower(&self, x: f64) -> Option<&TailExtension> {
        self.lower.as_ref().filter(|t| x < t.splice)
    }

    /// `f(x)`.
    pub fn eval(&self, x: f64) -> f64 {
        if let Some(t) = self.on_upper(x) {
            t.eval(x, true)
        } else if let Some(t) = self.on_lower(x) {
            t.eval(x, false)
        } else {
            self.base(x)
        }
    }

    /// `f'(x)`.
    pub fn derivative(&self, x: f64) -> f64 {
        if let Some(t) = self.on_upper(x) {
            t.derivative(x, true)
        } else if let Some(t) = self.on_lower(x) {
            t.derivative(x, false)
        } else {
            self.base_d1(x)
        }
    }

    /// `f''(x)`.
    pub fn second_derivative(&self, x: f64) -> f64 {
        if let Some(t) = self.on_upper(x) {
            t.second_derivative(x, true)
        } else if let Some(t) = self.on_lower(x) {
            t.second_derivative(x, false)
        } else {
            self.base_d2(x)
        }
    }

    /// `∫_0^x f`, the log-partition term of the pseudo-likelihood.
    pub fn antiderivative(&self, x: f64) -> f64 {
        if let Some(t) = self.on_upper(x) {
            self.base_integral(t.splice) + t.integral_from_splice(x, true)
        } else if let Some(t) = self.on_lower(x) {
            self.base_integral(t.splice) + t.integral_from_splice(x, false)
        } else {
            self.base_integral(x)
        }
    }

    /// `(κ, L⁽¹⁾, L⁽²⁾)` of the base link over the reachable domain `[0, pa_count]`.
    pub fn constants(&self, pa_count: usize) -> (f64, f64, f64) {
        match &self.kind {
            LinkKind::Identity => (1.0, 1.0, 0.0),
            LinkKind::Logistic => {
                let kappa = self.base_d1(pa_count as f64);
                // σ'' peaks at σ = 1/2 - 1/(2√3), where it equals 1/(6√3).
                (kappa, 0.25, 1.0 / (6.0 * 3f64.sqrt()))
            }
            LinkKind::Tabulated(_) => (f64::NAN, f64::NAN, f64::NAN),
        }
    }
}

const SPLICE_GRID_STEP: f64 = 0.5;
const SPLICE_GRID_LEN: usize = 400;

/// Extends `f` to range ℝ for a node with `pa_count` regressors.
///
/// The upper tail starts at `x* = 2·pa_count` and the lower tail at
/// `x* = -pa_count`; when the curvature sign fails there, the first grid point
/// further out where it holds is used. Links whose curvature never has the
/// required sign (identity) are returned unchanged.
pub fn extend_link_range(f: &LinkFunction, pa_count: usize) -> LinkFunction {
    if !matches!(f.kind, LinkKind::Logistic) {
        return f.clone();
    }
    let base = LinkFunction { kind: f.kind.clone(), upper: None, lower: None };
    let find = |start: f64, dir: f64, want_negative: bool| {
        (0..SPLICE_GRID_LEN)
            .map(|k| start + dir * SPLICE_GRID_STEP * k as f64)
            .find(|&x| {
                let c = base.base_d2(x);
                if want_negative {
                    c < 0.0
                } else {
                    c > 0.0
                }
            })
    };
    let tail = |x: f64| TailExtension {
        splice: x,
        value: base.base(x),
        slope: base.base_d1(x),
        curvature: base.base_d2(x),
    };
    let upper = find(2.0 * pa_count as f64, 1.0, true).map(tail);
    let lower = find(-(pa_count as f64), -1.0, false).map(tail);
    LinkFunction { kind: f.kind.clone(), upper, lower }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identity_is_unchanged() {
        let f = LinkFunction::identity();
        assert_eq!(extend_link_range(&f, 3), f);
    }

    #[test]
    fn logistic_splice_matches_value_and_slope() {
        let g = extend_link_range(&LinkFunction::logistic(), 2);
        let up = g.upper.unwrap();
        assert_eq!(up.splice, 4.0);
        assert_abs_diff_eq!(g.eval(4.0), sigmoid(4.0), epsilon = 1e-15);
        let h = 1e-6;
        let right = (g.eval(4.0 + h) - g.eval(4.0)) / h;
        let left = (g.eval(4.0) - g.eval(4.0 - h)) / h;
        assert_abs_diff_eq!(right, left, epsilon = 1e-6);
        assert_eq!(g.lower.unwrap().splice, -2.0);
    }

    #[test]
    fn upper_tail_matches_closed_form_one_past_splice() {
        let g = extend_link_range(&LinkFunction::logistic(), 2);
        let xs = 4.0;
        let s = sigmoid(xs);
        let d1 = s * (1.0 - s);
        let d2 = d1 * (1.0 - 2.0 * s);
        let expected = s + (d1 * d1 / d2) * ((-d1 / d2).ln() - (1.0 - d1 / d2).ln());
        assert_abs_diff_eq!(g.eval(xs + 1.0), expected, epsilon = 1e-14);
    }

    #[test]
    fn lower_tail_matches_value_slope_and_curvature() {
        let g = extend_link_range(&LinkFunction::logistic(), 3);
        let xs = -3.0;
        let t = g.lower.unwrap();
        assert_eq!(t.splice, xs);
        // Evaluate the tail expression just below the splice point.
        let x = xs - 1e-7;
        assert_abs_diff_eq!(g.eval(x), sigmoid(xs), epsilon = 1e-7);
        assert_abs_diff_eq!(g.derivative(x), LinkFunction::logistic().derivative(xs), epsilon = 1e-7);
        assert_abs_diff_eq!(
            g.second_derivative(x),
            LinkFunction::logistic().second_derivative(xs),
            epsilon = 1e-7
        );
    }

    #[test]
    fn zero_parents_moves_upper_splice_off_the_inflection_point() {
        let g = extend_link_range(&LinkFunction::logistic(), 0);
        assert_eq!(g.upper.unwrap().splice, 0.5);
        assert_eq!(g.lower.unwrap().splice, -0.5);
    }

    #[test]
    fn extended_range_is_unbounded() {
        let g = extend_link_range(&LinkFunction::logistic(), 1);
        assert!(g.eval(1e6) > 1.0);
        assert!(g.eval(-1e6) < 0.0);
    }

    #[test]
    fn antiderivative_matches_numeric_integral() {
        let g = extend_link_range(&LinkFunction::logistic(), 1);
        for &x in &[-9.0, -2.5, -0.3, 0.0, 1.7, 2.0, 3.2, 12.0] {
            let steps = 20_000;
            let h = x / steps as f64;
            let mut acc = 0.0;
            for k in 0..steps {
                let a = k as f64 * h;
                acc += (g.eval(a) + 4.0 * g.eval(a + h / 2.0) + g.eval(a + h)) * h / 6.0;
            }
            assert_abs_diff_eq!(g.antiderivative(x), acc, epsilon = 1e-9);
        }
    }

    #[test]
    fn logistic_constants() {
        let (kappa, l1, l2) = LinkFunction::logistic().constants(2);
        assert_abs_diff_eq!(kappa, sigmoid(2.0) * (1.0 - sigmoid(2.0)), epsilon = 1e-15);
        assert_eq!(l1, 0.25);
        assert_abs_diff_eq!(l2, 0.096_225_044_864_937_6, epsilon = 1e-12);
    }
}
