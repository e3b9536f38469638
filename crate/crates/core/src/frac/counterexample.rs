//! Pointwise certificates for `0 < Γ₂(u) < κΓ(u) + (Lu)²/N` with the
//! fractional generator `L = -(-Δ)^{β/2}` on ℝ.
//!
//! `Γ(u)(x) = ½c∫ (u(x+s) - u(x))² |s|^{-1-β} ds` and
//! `Γ₂(u)(x) = ½c∫ Γ(δ_h u)(x) |h|^{-1-β} dh`, `δ_h u = u(·+h) - u`, both by
//! the product rule on the node lattice of `u`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::nonlocal::{GridFunction, NonlocalKind, NonlocalRule, TailModel};
use crate::error::{invalid, Error, Result};
use crate::sampling::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleOptions {
    /// Outer cutoff `S` of the `h` integral; beyond it `Γ(δ_h u)(x)` is
    /// replaced by its limit `Γ(u)(x)` and the remainder is bounded.
    pub outer_cutoff: f64,
}

impl Default for CounterexampleOptions {
    fn default() -> Self {
        CounterexampleOptions { outer_cutoff: 20.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CdClassification {
    Certificate,
    NotCertificate,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexamplePoint {
    pub x: f64,
    pub gamma: f64,
    pub gamma_error: f64,
    pub gamma2: f64,
    pub gamma2_error: f64,
    pub lu: f64,
    pub lu_error: f64,
    /// `κΓ + (Lu)²/N`.
    pub upper: f64,
    pub upper_error: f64,
    pub classification: CdClassification,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub beta: f64,
    pub kappa: f64,
    pub n_dim: f64,
    pub points: Vec<CounterexamplePoint>,
    pub classification: CdClassification,
}

/// First and last nonzero node.
fn support(u: &GridFunction) -> Option<(i64, i64)> {
    let a = u.values.iter().position(|v| *v != 0.0)?;
    let b = u.values.iter().rposition(|v| *v != 0.0)?;
    Some((a as i64, b as i64))
}

struct Evaluator<'a> {
    rule: NonlocalRule,
    u: &'a GridFunction,
    supp: (i64, i64),
}

impl Evaluator<'_> {
    fn node(&self, k: i64) -> f64 {
        if k < 0 || k >= self.u.len() as i64 {
            0.0
        } else {
            self.u.values[k as usize]
        }
    }

    /// `∫_0^∞ [(g(x+s)-g(x))² + (g(x-s)-g(x))²] s^{-1-β} ds` for `g = δ_{m} u`
    /// (`m` in nodes, `g = u` for `m = 0`) at node `kx`, sampling every
    /// `step`-th node.
    fn gamma_integral(&mut self, kx: i64, m: i64, step: usize) -> f64 {
        let g = |k: i64| {
            if m == 0 {
                self.node(k)
            } else {
                self.node(k + m) - self.node(k)
            }
        };
        let (a, b) = self.supp;
        let lo = a.min(a - m);
        let hi = b.max(b - m);
        let reach = (hi - kx).max(kx - lo).max(1) as usize;
        let kmax = reach.div_ceil(step);
        let gx = g(kx);
        let p = step as i64;
        let vals: Vec<f64> = (1..=kmax as i64)
            .map(|k| {
                let (l, r) = (g(kx + k * p) - gx, g(kx - k * p) - gx);
                l * l + r * r
            })
            .collect();
        let h = self.u.h * step as f64;
        self.rule
            .radial_nodes(h, kmax, |k| vals[k - 1], 2.0 * gx * gx)
    }

    fn gamma2_integral(&mut self, kx: i64, outer: usize, step: usize, gamma_u: f64) -> f64 {
        let mmax = outer.div_ceil(step);
        let p = step as i64;
        let mut vals = Vec::with_capacity(mmax);
        for m in 1..=mmax as i64 {
            let e = self.gamma_integral(kx, m * p, step) + self.gamma_integral(kx, -m * p, step);
            vals.push(0.5 * self.rule.c * e);
        }
        let h = self.u.h * step as f64;
        self.rule
            .radial_nodes(h, mmax, |k| vals[k - 1], 2.0 * gamma_u)
    }
}

fn classify(gamma2: f64, e2: f64, upper: f64, eu: f64) -> CdClassification {
    if gamma2 - e2 > 0.0 && upper - eu > gamma2 + e2 {
        CdClassification::Certificate
    } else if gamma2 + e2 <= 0.0 || upper + eu <= gamma2 - e2 {
        CdClassification::NotCertificate
    } else {
        CdClassification::Inconclusive
    }
}

/// `u` must vanish beyond its grid (a zero constant tail).
pub fn verify_cd_counterexample(
    beta: f64,
    u: &GridFunction,
    kappa: f64,
    n_dim: f64,
    xs: &[f64],
    opts: CounterexampleOptions,
) -> Result<CounterexampleReport> {
    let rule = NonlocalRule::new(beta)?;
    if !matches!(u.tail, Some(TailModel::Constant { left, right }) if left == 0.0 && right == 0.0) {
        return invalid("u must have a zero constant tail");
    }
    if !(n_dim > 0.0) || !kappa.is_finite() || !(opts.outer_cutoff > 0.0) {
        return invalid("need N > 0, finite kappa and a positive outer cutoff");
    }
    if xs.is_empty() {
        return invalid("no evaluation points");
    }
    let c = rule.c;
    let supp = support(u);
    let mut ev = Evaluator {
        rule,
        u,
        supp: supp.unwrap_or((0, 0)),
    };
    let outer = (opts.outer_cutoff / u.h).round().max(2.0) as usize;
    let s_outer = outer as f64 * u.h;
    let l2: f64 = u.values.iter().map(|v| v * v).sum::<f64>() * u.h;
    let mut points = Vec::with_capacity(xs.len());
    for &x in xs {
        let kx = u
            .node_of(x)
            .ok_or_else(|| Error::InvalidArgument(format!("x = {x} is not a grid node")))?;
        let p = if supp.is_none() {
            CounterexamplePoint {
                x,
                gamma: 0.0,
                gamma_error: 0.0,
                gamma2: 0.0,
                gamma2_error: 0.0,
                lu: 0.0,
                lu_error: 0.0,
                upper: 0.0,
                upper_error: 0.0,
                classification: CdClassification::NotCertificate,
            }
        } else {
            let gf = ev.gamma_integral(kx, 0, 1);
            let gc = ev.gamma_integral(kx, 0, 2);
            let gamma = 0.5 * c * gf;
            let gamma_error = 0.5 * c * (gf - gc).abs() / 3.0;
            let lap = ev.rule.eval(u, x, NonlocalKind::FracLaplacian)?;
            let (lu, lu_error) = (-lap.value, lap.error);
            let f2 = ev.gamma2_integral(kx, outer, 1, gamma);
            let c2 = ev.gamma2_integral(kx, outer, 2, gamma);
            let gamma2 = 0.5 * c * f2;
            // remainder of Γ(δ_h u) - Γ(u) beyond the outer cutoff
            let tail_bound = c * c * l2 * s_outer.powf(-1.0 - 2.0 * beta) / (1.0 + 2.0 * beta);
            let gamma2_error = 0.5 * c * (f2 - c2).abs() / 3.0 + tail_bound;
            if gamma2.abs() > 0.0 && gamma2_error > 0.1 * gamma2.abs() {
                return Err(Error::Quadrature(format!(
                    "Γ₂ at x = {x}: error {gamma2_error:.3e} exceeds 10% of {gamma2:.6e}"
                )));
            }
            let upper = kappa * gamma + lu * lu / n_dim;
            let upper_error = kappa.abs() * gamma_error
                + (2.0 * lu.abs() * lu_error + lu_error * lu_error) / n_dim;
            CounterexamplePoint {
                x,
                gamma,
                gamma_error,
                gamma2,
                gamma2_error,
                lu,
                lu_error,
                upper,
                upper_error,
                classification: classify(gamma2, gamma2_error, upper, upper_error),
            }
        };
        points.push(p);
    }
    let classification = if points
        .iter()
        .any(|p| p.classification == CdClassification::NotCertificate)
    {
        CdClassification::NotCertificate
    } else if points
        .iter()
        .all(|p| p.classification == CdClassification::Certificate)
    {
        CdClassification::Certificate
    } else {
        CdClassification::Inconclusive
    };
    Ok(CounterexampleReport {
        beta,
        kappa,
        n_dim,
        points,
        classification,
    })
}

/// `height · exp(1 - 1/(1 - ((x - center)/width)²))` on a grid over `[lo, hi]`.
pub fn bump_grid(center: f64, width: f64, height: f64, lo: f64, hi: f64, h: f64) -> GridFunction {
    let lo = (lo / h).floor() * h;
    let n = ((hi - lo) / h).round() as usize + 1;
    GridFunction::from_fn(
        lo,
        h,
        n,
        |x| {
            let y = (x - center) / width;
            if y.abs() < 1.0 {
                height * (1.0 - 1.0 / (1.0 - y * y)).exp()
            } else {
                0.0
            }
        },
        Some(TailModel::Constant {
            left: 0.0,
            right: 0.0,
        }),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpSearchReport {
    pub center: f64,
    pub width: f64,
    /// `min_x min(Γ₂, κΓ + (Lu)²/N - Γ₂) / (κΓ + (Lu)²/N)`; positive means
    /// both inequalities hold at every sampled point.
    pub margin: f64,
    pub evaluated: usize,
}

/// Random search over single bumps `u = φ((x - c)/w)` for a positive margin
/// at the points `x ∈ {-R, -R/2, 0, R/2, R}`. Diagnostic only.
pub fn search_bump_counterexample(
    beta: f64,
    kappa: f64,
    n_dim: f64,
    radius: f64,
    budget: usize,
    seed: u64,
) -> Result<BumpSearchReport> {
    let mut rng = stream_rng(seed, 0);
    let xs = [-radius, -0.5 * radius, 0.0, 0.5 * radius, radius];
    let mut best = BumpSearchReport {
        center: 0.0,
        width: 1.0,
        margin: f64::NEG_INFINITY,
        evaluated: 0,
    };
    for _ in 0..budget {
        let center = rng.random_range(0.0..radius + 6.0);
        let width = rng.random_range(0.3..3.0);
        let h = width / 25.0;
        let lo = (-radius).min(center - width) - 8.0 * h;
        let hi = radius.max(center + width) + 8.0 * h;
        let u = bump_grid(center, width, 1.0, lo, hi, h);
        let pts: Vec<f64> = xs.iter().map(|x| (x / h).round() * h).collect();
        let opts = CounterexampleOptions {
            outer_cutoff: 8.0 * (radius + center + width),
        };
        let Ok(rep) = verify_cd_counterexample(beta, &u, kappa, n_dim, &pts, opts) else {
            continue;
        };
        best.evaluated += 1;
        let margin = rep
            .points
            .iter()
            .map(|p| p.gamma2.min(p.upper - p.gamma2) / p.upper.abs().max(1e-300))
            .fold(f64::INFINITY, f64::min);
        if margin > best.margin {
            best = BumpSearchReport {
                center,
                width,
                margin,
                evaluated: best.evaluated,
            };
        }
    }
    Ok(best)
}
