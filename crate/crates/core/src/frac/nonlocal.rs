//! Principal-value quadrature for `(-Δ)^{β/2} v(x) = c∫ (2v(x) - v(x+s) - v(x-s)) s^{-1-β} ds`
//! and `Ψ_Υ(v)(x) = c∫ [Υ(v(x+s) - v(x)) + Υ(v(x-s) - v(x))] s^{-1-β} ds`.
//!
//! Both are `∫_0^∞ E(s) s^{-1-β} ds` with `E = O(s²)`. On the node lattice
//! `s = kh` the rule interpolates `q = E/s²` piecewise linearly (with
//! `q(0) := q(h)`) and integrates it exactly against `s^{1-β}`, which gives
//! positive weights; beyond the grid the tail model is integrated in `log s`
//! by Gauss-Legendre, or summed with Hurwitz-zeta weights for periodic data.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::check_beta;
use crate::error::{invalid, Error, Result};
use crate::numeric::quad::{composite_gauss_legendre, gauss_legendre};
use crate::numeric::special::{frac_laplacian_constant, hurwitz_zeta};
use crate::numeric::upsilon;

pub type TailFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Values of a grid function beyond its grid.
#[derive(Clone)]
pub enum TailModel {
    Constant {
        left: f64,
        right: f64,
    },
    /// `slope·ln|x| + c`, with separate constants on each side.
    Log {
        slope: f64,
        left: f64,
        right: f64,
    },
    /// `a|x|^{-p}` with separate amplitudes.
    Power {
        left: f64,
        right: f64,
        exponent: f64,
    },
    /// The grid holds one period.
    Periodic,
    Function(TailFn),
}

impl fmt::Debug for TailModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TailModel::Constant { left, right } => write!(f, "Constant({left}, {right})"),
            TailModel::Log { slope, left, right } => write!(f, "Log({slope}, {left}, {right})"),
            TailModel::Power {
                left,
                right,
                exponent,
            } => write!(f, "Power({left}, {right}, {exponent})"),
            TailModel::Periodic => write!(f, "Periodic"),
            TailModel::Function(_) => write!(f, "Function"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GridFunction {
    pub x0: f64,
    pub h: f64,
    pub values: Vec<f64>,
    pub tail: Option<TailModel>,
}

impl GridFunction {
    pub fn new(x0: f64, h: f64, values: Vec<f64>, tail: Option<TailModel>) -> Self {
        GridFunction {
            x0,
            h,
            values,
            tail,
        }
    }

    pub fn from_fn(
        x0: f64,
        h: f64,
        n: usize,
        f: impl Fn(f64) -> f64,
        tail: Option<TailModel>,
    ) -> Self {
        let values = (0..n).map(|k| f(x0 + k as f64 * h)).collect();
        GridFunction {
            x0,
            h,
            values,
            tail,
        }
    }

    pub fn x(&self, k: i64) -> f64 {
        self.x0 + k as f64 * self.h
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Node index of `x`, if `x` is a grid node.
    pub fn node_of(&self, x: f64) -> Option<i64> {
        let r = (x - self.x0) / self.h;
        let k = r.round();
        ((r - k).abs() < 1e-7 && k >= 0.0 && (k as usize) < self.len()).then_some(k as i64)
    }

    /// Value at a continuous point beyond the grid.
    fn tail_at(&self, y: f64) -> f64 {
        let right = y > self.x0;
        match self.tail.as_ref().expect("tail checked") {
            TailModel::Constant { left, right: r } => {
                if right {
                    *r
                } else {
                    *left
                }
            }
            TailModel::Log {
                slope,
                left,
                right: r,
            } => slope * y.abs().ln() + if right { *r } else { *left },
            TailModel::Power {
                left,
                right: r,
                exponent,
            } => (if right { *r } else { *left }) * y.abs().powf(-exponent),
            TailModel::Periodic => unreachable!("periodic data has no continuous tail"),
            TailModel::Function(f) => f(y),
        }
    }

    /// Value at node `k`, which may lie outside the grid.
    pub fn at_node(&self, k: i64) -> f64 {
        let n = self.len() as i64;
        if (0..n).contains(&k) {
            return self.values[k as usize];
        }
        match self.tail {
            Some(TailModel::Periodic) => self.values[k.rem_euclid(n) as usize],
            _ => self.tail_at(self.x(k)),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> GridFunction
    where
        Self: Sized,
    {
        let values = self.values.iter().map(|v| f(*v)).collect();
        let tail = self.tail.clone().map(|t| match t {
            TailModel::Periodic => TailModel::Periodic,
            other => {
                let inner = GridFunction {
                    x0: self.x0,
                    h: self.h,
                    values: Vec::new(),
                    tail: Some(other),
                };
                TailModel::Function(Arc::new(move |y| f(inner.tail_at(y))))
            }
        });
        GridFunction {
            x0: self.x0,
            h: self.h,
            values,
            tail,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonlocalKind {
    FracLaplacian,
    PsiUpsilon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonlocalEvaluation {
    pub x: f64,
    pub kind: NonlocalKind,
    pub value: f64,
    /// `|I_h - I_{2h}| / 3` for the second-order rule.
    pub error: f64,
}

/// Dimensionless product weights: node `k` receives `left[k] + right[k]`
/// (the last node only `left`), scaled by `h^{2-β}`.
#[derive(Debug, Clone)]
pub struct ProductWeights {
    beta: f64,
    left: Vec<f64>,
    right: Vec<f64>,
    gl: (Vec<f64>, Vec<f64>),
}

impl ProductWeights {
    pub fn new(beta: f64) -> Self {
        let mut w = ProductWeights {
            beta,
            left: vec![0.0],
            right: vec![0.0],
            gl: gauss_legendre(10),
        };
        w.extend(64);
        w
    }

    fn unit_moment(&self, a: f64, weight: impl Fn(f64) -> f64) -> f64 {
        let (x, wts) = &self.gl;
        x.iter()
            .zip(wts)
            .map(|(xi, wi)| {
                let s = a + 0.5 * (xi + 1.0);
                0.5 * wi * weight(s) * s.powf(1.0 - self.beta)
            })
            .sum()
    }

    fn extend(&mut self, kmax: usize) {
        for k in self.left.len()..=kmax {
            let kf = k as f64;
            // q(0) := q(h), so node 1 carries all of [0, 1]
            let left = if k == 1 {
                1.0 / (2.0 - self.beta)
            } else {
                self.unit_moment(kf - 1.0, |s| s - (kf - 1.0))
            };
            let right = self.unit_moment(kf, |s| kf + 1.0 - s);
            self.left.push(left);
            self.right.push(right);
        }
    }

    /// `∫_0^{Kh} q s^{1-β} ds` in units of `h^{2-β}` for `q_k = e(k)/k²`.
    fn sum(&mut self, kmax: usize, e: impl Fn(usize) -> f64) -> f64 {
        self.extend(kmax);
        let mut acc = 0.0;
        for k in 1..=kmax {
            let w = if k == kmax {
                self.left[k]
            } else {
                self.left[k] + self.right[k]
            };
            acc += w * e(k) / (k * k) as f64;
        }
        acc
    }
}

/// Tail of the radial integral beyond `S = K h`.
enum Far<'a> {
    /// `E(s) = value` for all `s > S`.
    Constant(f64),
    /// `E(s)` for continuous `s > S`.
    Closure(&'a (dyn Fn(f64) -> f64 + Sync)),
    /// `E` on nodes, periodic in the node index with the given period.
    Periodic(&'a (dyn Fn(i64) -> f64 + Sync), usize),
}

fn far_integral(beta: f64, h: f64, kmax: usize, far: &Far) -> f64 {
    let s = kmax as f64 * h;
    match far {
        Far::Constant(v) => v * s.powf(-beta) / beta,
        Far::Closure(e) => {
            // s = S e^u, ∫_0^∞ E(S e^u) e^{-βu} du · S^{-β}
            let umax = 50.0 / beta;
            let panels = (umax / 0.5).ceil() as usize;
            let nodes = composite_gauss_legendre(0.0, umax, panels, 8);
            s.powf(-beta)
                * nodes
                    .iter()
                    .map(|&(u, w)| w * e(s * u.exp()) * (-beta * u).exp())
                    .sum::<f64>()
        }
        Far::Periodic(e, period) => {
            // trapezoid from node K on: ½E_K K^{-1-β} + Σ_{k>K} E_k k^{-1-β}
            let n = *period as f64;
            let k0 = kmax as i64;
            let mut acc = 0.5 * e(k0) * (kmax as f64).powf(-1.0 - beta);
            for r in 1..=*period as i64 {
                let k = k0 + r;
                acc += e(k) * n.powf(-1.0 - beta) * hurwitz_zeta(1.0 + beta, k as f64 / n);
            }
            acc * h.powf(-beta)
        }
    }
}

/// Radial integral `∫_0^∞ E(s) s^{-1-β} ds` with `E` given on nodes `1..=K`.
fn radial(
    weights: &mut ProductWeights,
    h: f64,
    kmax: usize,
    e: impl Fn(usize) -> f64,
    far: &Far,
) -> f64 {
    let beta = weights.beta;
    let near = if kmax == 0 {
        0.0
    } else {
        h.powf(-beta) * weights.sum(kmax, e)
    };
    near + far_integral(beta, h, kmax, far)
}

/// Reusable evaluator for one exponent.
pub struct NonlocalRule {
    pub beta: f64,
    pub c: f64,
    weights: ProductWeights,
}

impl NonlocalRule {
    pub fn new(beta: f64) -> Result<Self> {
        check_beta(beta)?;
        Ok(NonlocalRule {
            beta,
            c: frac_laplacian_constant(beta),
            weights: ProductWeights::new(beta),
        })
    }

    fn integral(&mut self, v: &GridFunction, kx: i64, kind: NonlocalKind, step: usize) -> f64 {
        let h = v.h * step as f64;
        let n = v.len() as i64;
        let vx = v.values[kx as usize];
        let node = |k: i64| v.at_node(kx + k * step as i64);
        let e_node = |k: i64| -> f64 {
            match kind {
                NonlocalKind::FracLaplacian => node(k) + node(-k) - 2.0 * vx,
                NonlocalKind::PsiUpsilon => upsilon(node(k) - vx) + upsilon(node(-k) - vx),
            }
        };
        if let Some(TailModel::Periodic) = v.tail {
            let period = (n as usize) / gcd(n as usize, step);
            let kmax = 4 * period.max(64);
            let far = Far::Periodic(&e_node, period);
            return radial(&mut self.weights, h, kmax, |k| e_node(k as i64), &far);
        }
        // beyond both grid edges every sample comes from the tail model
        let reach = kx.max(n - 1 - kx) as usize;
        let kmax = reach / step;
        let xc = v.x(kx);
        let e_cont = |s: f64| -> f64 {
            let (a, b) = (v.tail_at(xc + s), v.tail_at(xc - s));
            match kind {
                NonlocalKind::FracLaplacian => a + b - 2.0 * vx,
                NonlocalKind::PsiUpsilon => upsilon(a - vx) + upsilon(b - vx),
            }
        };
        let far = match &v.tail {
            Some(TailModel::Constant { left, right }) => Far::Constant(match kind {
                NonlocalKind::FracLaplacian => left + right - 2.0 * vx,
                NonlocalKind::PsiUpsilon => upsilon(left - vx) + upsilon(right - vx),
            }),
            _ => Far::Closure(&e_cont),
        };
        radial(&mut self.weights, h, kmax, |k| e_node(k as i64), &far)
    }

    pub fn eval(
        &mut self,
        v: &GridFunction,
        x: f64,
        kind: NonlocalKind,
    ) -> Result<NonlocalEvaluation> {
        if v.tail.is_none() {
            return invalid("grid function has no tail model");
        }
        let kx = v
            .node_of(x)
            .ok_or_else(|| Error::InvalidArgument(format!("x = {x} is not a grid node")))?;
        let periodic = matches!(v.tail, Some(TailModel::Periodic));
        let margin = 4;
        if !periodic && (kx < margin || kx > v.len() as i64 - 1 - margin) {
            return invalid(format!("x = {x} lies outside the grid interior margin"));
        }
        let fine = self.integral(v, kx, kind, 1);
        let coarse = self.integral(v, kx, kind, 2);
        let sign = match kind {
            NonlocalKind::FracLaplacian => -1.0,
            NonlocalKind::PsiUpsilon => 1.0,
        };
        let value = sign * self.c * fine;
        let error = self.c * (fine - coarse).abs() / 3.0;
        if !value.is_finite() || !error.is_finite() {
            return Err(Error::NonFinite(format!("nonlocal evaluation at x = {x}")));
        }
        Ok(NonlocalEvaluation {
            x,
            kind,
            value,
            error,
        })
    }

    /// Radial integral of node data, exposed for the nested forms.
    pub(crate) fn radial_nodes(
        &mut self,
        h: f64,
        kmax: usize,
        e: impl Fn(usize) -> f64,
        far_constant: f64,
    ) -> f64 {
        radial(&mut self.weights, h, kmax, e, &Far::Constant(far_constant))
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn nonlocal_eval(
    v: &GridFunction,
    beta: f64,
    x: f64,
    kind: NonlocalKind,
) -> Result<NonlocalEvaluation> {
    NonlocalRule::new(beta)?.eval(v, x, kind)
}

/// Evaluates at several grid nodes in parallel.
pub fn nonlocal_eval_many(
    v: &GridFunction,
    beta: f64,
    xs: &[f64],
    kind: NonlocalKind,
) -> Result<Vec<NonlocalEvaluation>> {
    check_beta(beta)?;
    xs.par_chunks(64)
        .map(|chunk| {
            let mut rule = NonlocalRule::new(beta)?;
            chunk
                .iter()
                .map(|&x| rule.eval(v, x, kind))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()
        .map(|v| v.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frac::kernel::stable_density;
    use std::f64::consts::PI;

    fn cosine(xi: f64, n: usize) -> GridFunction {
        let period = 2.0 * PI / xi;
        GridFunction::from_fn(
            0.0,
            period / n as f64,
            n,
            move |x| (xi * x).cos(),
            Some(TailModel::Periodic),
        )
    }

    #[test]
    fn constants_give_zero() {
        let v = GridFunction::from_fn(
            -5.0,
            0.1,
            101,
            |_| 3.0,
            Some(TailModel::Constant {
                left: 3.0,
                right: 3.0,
            }),
        );
        for kind in [NonlocalKind::FracLaplacian, NonlocalKind::PsiUpsilon] {
            let e = nonlocal_eval(&v, 1.3, 0.0, kind).unwrap();
            assert_eq!((e.value, e.error), (0.0, 0.0));
        }
    }

    #[test]
    fn symbol_on_single_modes() {
        for &beta in &[0.5, 1.0, 1.5] {
            for &xi in &[0.5, 1.0, 2.0] {
                let v = cosine(xi, 512);
                let e = nonlocal_eval(&v, beta, 0.0, NonlocalKind::FracLaplacian).unwrap();
                let exact = xi.powf(beta);
                assert!(
                    (e.value - exact).abs() <= 1e-4 * exact,
                    "beta={beta} xi={xi}: {}",
                    e.value
                );
                assert!(e.error <= 1e-4 * exact);
            }
        }
    }

    #[test]
    fn error_estimate_follows_second_order() {
        let beta = 1.2;
        let a = nonlocal_eval(&cosine(1.0, 64), beta, 0.0, NonlocalKind::FracLaplacian).unwrap();
        let b = nonlocal_eval(&cosine(1.0, 128), beta, 0.0, NonlocalKind::FracLaplacian).unwrap();
        let ratio = a.error / b.error;
        assert!(ratio > 3.0 && ratio < 8.0, "{ratio}");
        // the estimate tracks the actual error
        assert!((a.value - 1.0).abs() < 2.0 * a.error);
    }

    #[test]
    fn cauchy_log_identity() {
        // for β = 1: Ψ_Υ(log G)(t,·) = 1/t and (-Δ)^{1/2} log G = 2t/(t² + x²)
        let t = 1.0;
        let h = 0.02;
        let n = 4001;
        let x0 = -40.0;
        let logg = GridFunction::from_fn(
            x0,
            h,
            n,
            |x| (t / (PI * (t * t + x * x))).ln(),
            Some(TailModel::Function(Arc::new(move |x| {
                (t / (PI * (t * t + x * x))).ln()
            }))),
        );
        for &x in &[0.0, 0.5, 2.0, 7.0] {
            let l = nonlocal_eval(&logg, 1.0, x, NonlocalKind::FracLaplacian).unwrap();
            let exact = 2.0 * t / (t * t + x * x);
            assert!(
                (l.value - exact).abs() < 1e-4 * exact.max(0.1),
                "x={x}: {} vs {exact}",
                l.value
            );
            let p = nonlocal_eval(&logg, 1.0, x, NonlocalKind::PsiUpsilon).unwrap();
            assert!((p.value - 1.0 / t).abs() < 1e-4, "x={x}: {}", p.value);
        }
    }

    #[test]
    fn stable_kernel_log_refinement() {
        let beta = 1.5;
        let run = |h: f64| {
            let n = (60.0 / h).round() as usize + 1;
            let values: Vec<f64> = (0..n)
                .map(|k| stable_density(beta, 1.0, -30.0 + k as f64 * h).ln())
                .collect();
            let tail =
                TailModel::Function(Arc::new(move |x: f64| stable_density(beta, 1.0, x).ln()));
            let v = GridFunction::new(-30.0, h, values, Some(tail));
            nonlocal_eval(&v, beta, 0.0, NonlocalKind::FracLaplacian)
                .unwrap()
                .value
        };
        let a = run(0.1);
        let b = run(0.05);
        assert!(a.is_finite() && (a - b).abs() <= 1e-3 * b.abs(), "{a} {b}");
    }

    #[test]
    fn psi_is_nonnegative_and_errors_are_reported() {
        let v = GridFunction::from_fn(-10.0, 0.05, 401, |x| (3.0 * x).sin() * (-x * x).exp(), None);
        assert!(nonlocal_eval(&v, 1.0, 0.0, NonlocalKind::FracLaplacian).is_err());
        let v = GridFunction {
            tail: Some(TailModel::Constant {
                left: 0.0,
                right: 0.0,
            }),
            ..v
        };
        for k in (10..390).step_by(20) {
            let x = v.x(k);
            assert!(
                nonlocal_eval(&v, 0.7, x, NonlocalKind::PsiUpsilon)
                    .unwrap()
                    .value
                    >= 0.0
            );
        }
        assert!(nonlocal_eval(&v, 1.0, 0.0123, NonlocalKind::PsiUpsilon).is_err());
        assert!(nonlocal_eval(&v, 1.0, -10.0, NonlocalKind::PsiUpsilon).is_err());
        assert!(nonlocal_eval(&v, 2.5, 0.0, NonlocalKind::PsiUpsilon).is_err());
    }
}
