//! CD-functions and the relaxation equation `φ' + F(φ) = 0`, `φ(0+) = ∞`.
//!
//! The maximal solution is built from the separable form
//! `t = ∫_φ^∞ ds / F(s)`, split as `∫_φ^M ds/F + tail(M)` with the tail taken
//! from the family's asymptotic form, and inverted pointwise by Newton's
//! method in `log φ`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::json;
use crate::numeric::diff::{first_derivative, Order};
use crate::numeric::quad::integrate;
use crate::numeric::{linear_fit, ln_upsilon, logspace, upsilon};

/// Piecewise description of a fitted CD-function.
///
/// Between knots `F(x) = x r(x)` with `r` linear in `log x`; below the first
/// knot `F(x) = low_c x^low_gamma`; above the last knot
/// `F(x) = F(x_n) exp(high_a (x - x_n))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedCd {
    pub x: Vec<f64>,
    pub ratio: Vec<f64>,
    pub low_c: f64,
    pub low_gamma: f64,
    pub high_a: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum CDFunctionSpec {
    /// `ν x^γ`
    Power {
        nu: f64,
        gamma: f64,
    },
    /// `c x^γ` up to `x0`, then `c x0^γ exp(a (x - x0))`
    TwoRegime {
        c: f64,
        gamma: f64,
        x0: f64,
        a: f64,
    },
    /// `scale · (e^x - 1 - x)`
    Upsilon {
        scale: f64,
    },
    Tabulated(TabulatedCd),
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::InvalidCdFunction(format!(
            "{name} must be positive and finite, got {v}"
        )));
    }
    Ok(())
}

impl TabulatedCd {
    fn ln_eval(&self, x: f64) -> f64 {
        let n = self.x.len();
        if x <= self.x[0] {
            return self.low_c.ln() + self.low_gamma * x.ln();
        }
        if x >= self.x[n - 1] {
            return self.x[n - 1].ln() + self.ratio[n - 1].ln() + self.high_a * (x - self.x[n - 1]);
        }
        let i = self.x.partition_point(|&k| k <= x) - 1;
        let (l0, l1) = (self.x[i].ln(), self.x[i + 1].ln());
        let w = (x.ln() - l0) / (l1 - l0);
        let r = self.ratio[i] + w * (self.ratio[i + 1] - self.ratio[i]);
        x.ln() + r.ln()
    }
}

impl CDFunctionSpec {
    /// `F(x)` for `x > 0` and `0` for `x <= 0` (the `F χ_[0,∞)` convention).
    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match self {
            CDFunctionSpec::Power { nu, gamma } => nu * x.powf(*gamma),
            CDFunctionSpec::Upsilon { scale } => scale * upsilon(x),
            _ => self.ln_eval(x).exp(),
        }
    }

    /// `log F(x)` for `x > 0`, free of overflow for exponential tails.
    pub fn ln_eval(&self, x: f64) -> f64 {
        match self {
            CDFunctionSpec::Power { nu, gamma } => nu.ln() + gamma * x.ln(),
            CDFunctionSpec::TwoRegime { c, gamma, x0, a } => {
                if x <= *x0 {
                    c.ln() + gamma * x.ln()
                } else {
                    c.ln() + gamma * x0.ln() + a * (x - x0)
                }
            }
            CDFunctionSpec::Upsilon { scale } => scale.ln() + ln_upsilon(x),
            CDFunctionSpec::Tabulated(t) => t.ln_eval(x),
        }
    }

    /// Structural checks: parameter ranges, integrability of `1/F` at
    /// infinity, and strict growth of `F(x)/x` on 200 log-spaced points in
    /// `[1e-8, 1e8]`.
    pub fn validate(&self) -> Result<()> {
        match self {
            CDFunctionSpec::Power { nu, gamma } => {
                positive("nu", *nu)?;
                if !(*gamma > 1.0) || !gamma.is_finite() {
                    return Err(Error::InvalidCdFunction(format!(
                        "power family needs gamma > 1 for 1/F to be integrable at infinity, got {gamma}"
                    )));
                }
            }
            CDFunctionSpec::TwoRegime { c, gamma, x0, a } => {
                positive("c", *c)?;
                positive("x0", *x0)?;
                positive("a", *a)?;
                if !(*gamma > 1.0) {
                    return Err(Error::InvalidCdFunction(format!(
                        "two_regime needs gamma > 1, got {gamma}"
                    )));
                }
                if a * x0 < 1.0 {
                    return Err(Error::InvalidCdFunction(format!(
                        "two_regime needs a >= 1/x0 so that F(x)/x keeps increasing (a = {a}, x0 = {x0})"
                    )));
                }
            }
            CDFunctionSpec::Upsilon { scale } => positive("scale", *scale)?,
            CDFunctionSpec::Tabulated(t) => {
                let n = t.x.len();
                if n < 2 || t.ratio.len() != n {
                    return Err(Error::InvalidCdFunction(
                        "tabulated family needs >= 2 matching knots".into(),
                    ));
                }
                for i in 0..n {
                    positive("knot", t.x[i])?;
                    positive("ratio", t.ratio[i])?;
                    if i > 0 && !(t.x[i] > t.x[i - 1] && t.ratio[i] > t.ratio[i - 1]) {
                        return Err(Error::InvalidCdFunction(format!(
                            "knots and F(x)/x must increase strictly (index {i})"
                        )));
                    }
                }
                positive("low_c", t.low_c)?;
                positive("high_a", t.high_a)?;
                if !(t.low_gamma > 1.0) {
                    return Err(Error::InvalidCdFunction(format!(
                        "low_gamma must exceed 1, got {}",
                        t.low_gamma
                    )));
                }
                if t.high_a * t.x[n - 1] < 1.0 {
                    return Err(Error::InvalidCdFunction(
                        "high_a must be at least 1/x_n".into(),
                    ));
                }
                let joint = t.low_c * t.x[0].powf(t.low_gamma);
                if (joint - t.x[0] * t.ratio[0]).abs() > 1e-9 * joint {
                    return Err(Error::InvalidCdFunction(
                        "power extension is discontinuous at the first knot".into(),
                    ));
                }
            }
        }
        let grid = logspace(1e-8, 1e8, 200);
        let mut prev = f64::NEG_INFINITY;
        for &x in &grid {
            let v = self.ln_eval(x) - x.ln();
            if !(v > prev) {
                return Err(Error::InvalidCdFunction(format!(
                    "F(x)/x is not strictly increasing near x = {x:e}"
                )));
            }
            prev = v;
        }
        Ok(())
    }

    /// `∫_M^∞ ds / F(s)` from the tail form of the family; `M` must lie in
    /// the tail regime (beyond `x0` or the last knot).
    fn tail_time(&self, m: f64) -> Option<f64> {
        match self {
            CDFunctionSpec::Power { nu, gamma } => Some(m.powf(1.0 - gamma) / (nu * (gamma - 1.0))),
            CDFunctionSpec::TwoRegime { c, gamma, x0, a } => {
                (m >= *x0).then(|| (-a * (m - x0)).exp() / (a * c * x0.powf(*gamma)))
            }
            CDFunctionSpec::Tabulated(t) => {
                let n = t.x.len();
                let fx = t.x[n - 1] * t.ratio[n - 1];
                (m >= t.x[n - 1]).then(|| (-t.high_a * (m - t.x[n - 1])).exp() / (t.high_a * fx))
            }
            CDFunctionSpec::Upsilon { scale } => {
                // 1/Υ(s) = e^{-s} / (1 - (1+s)e^{-s}); expand the denominator
                (m >= 40.0).then(|| {
                    let e = (-m).exp();
                    (e + e * e * (0.5 * m + 0.75)) / scale
                })
            }
        }
    }

    fn tail_start(&self) -> f64 {
        match self {
            CDFunctionSpec::Power { .. } => 1.0,
            CDFunctionSpec::TwoRegime { x0, .. } => *x0,
            CDFunctionSpec::Tabulated(t) => *t.x.last().unwrap_or(&1.0),
            CDFunctionSpec::Upsilon { .. } => 40.0,
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            CDFunctionSpec::Power { .. } => "power",
            CDFunctionSpec::TwoRegime { .. } => "two_regime",
            CDFunctionSpec::Upsilon { .. } => "upsilon",
            CDFunctionSpec::Tabulated(_) => "tabulated",
        }
    }
}

/// `∫_a^b g(s) ds` for positive `a < b`, computed in `u = log s`.
fn log_integral<G: Fn(f64) -> f64>(g: G, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let r = integrate(
        |u: f64| {
            let s = u.exp();
            s * g(s)
        },
        a.ln(),
        b.ln(),
        1e-300,
        1e-13,
        4000,
    );
    r.value
}

/// Time to relax from `φ` to 0: `T(φ) = ∫_φ^M ds/F + tail(M)`.
fn time_from(f: &CDFunctionSpec, phi: f64, m: f64) -> f64 {
    let tail = f.tail_time(m).expect("M lies in the tail regime");
    if phi >= m {
        return tail + log_integral(|s| -(-f.ln_eval(s)).exp(), m, phi);
    }
    log_integral(|s| (-f.ln_eval(s)).exp(), phi, m) + tail
}

/// Solves `T(φ) = t` for `φ` by safeguarded Newton iteration in `log φ`.
fn invert_time(f: &CDFunctionSpec, t: f64, m: f64, guess: f64) -> f64 {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    let mut u = guess.ln();
    for _ in 0..200 {
        let phi = u.exp();
        let g = time_from(f, phi, m) - t;
        if g > 0.0 {
            lo = u;
        } else {
            hi = u;
        }
        if g.abs() <= 1e-14 * t {
            return phi;
        }
        // dT/du = -φ/F(φ)
        let slope = -(phi.ln() - f.ln_eval(phi)).exp();
        let mut next = u - g / slope;
        let step_cap = 2.0;
        next = next.clamp(u - step_cap, u + step_cap);
        if next <= lo || next >= hi {
            next = if lo.is_finite() && hi.is_finite() {
                0.5 * (lo + hi)
            } else if lo.is_finite() {
                lo + step_cap
            } else {
                hi - step_cap
            };
        }
        if (next - u).abs() <= 1e-15 * (1.0 + u.abs()) {
            return next.exp();
        }
        u = next;
    }
    u.exp()
}

/// Fitted leading behaviour of `φ` near one end of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AsymptoticTag {
    /// `φ ≈ coef · t^(-exponent)`
    Power { coef: f64, exponent: f64, rms: f64 },
    /// `φ ≈ -c log t + b`
    Log { c: f64, b: f64, rms: f64 },
}

impl AsymptoticTag {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            AsymptoticTag::Power { coef, exponent, .. } => coef * t.powf(-exponent),
            AsymptoticTag::Log { c, b, .. } => -c * t.ln() + b,
        }
    }

    /// `∫_{t1}^{t2} tag(t) dt`, `+∞` when divergent at `t1 = 0`.
    pub fn integral(&self, t1: f64, t2: f64) -> f64 {
        match *self {
            AsymptoticTag::Power { coef, exponent, .. } => {
                if t1 <= 0.0 && exponent >= 1.0 {
                    f64::INFINITY
                } else if (exponent - 1.0).abs() < 1e-14 {
                    coef * (t2 / t1).ln()
                } else {
                    let q = 1.0 - exponent;
                    coef * (t2.powf(q) - if t1 > 0.0 { t1.powf(q) } else { 0.0 }) / q
                }
            }
            AsymptoticTag::Log { c, b, .. } => {
                let prim = |t: f64| {
                    if t <= 0.0 {
                        0.0
                    } else {
                        -c * (t * t.ln() - t) + b * t
                    }
                };
                prim(t2) - prim(t1)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxationProfile {
    pub t: Vec<f64>,
    pub phi: Vec<f64>,
    pub cd_function: CDFunctionSpec,
    pub small_t_tag: AsymptoticTag,
    pub large_t_tag: AsymptoticTag,
    pub tol: f64,
    pub m_final: f64,
}

/// Number of grid points used by [`solve_relaxation`].
pub const DEFAULT_GRID: usize = 400;

pub fn solve_relaxation(
    f: &CDFunctionSpec,
    t_min: f64,
    t_max: f64,
    tol: f64,
) -> Result<RelaxationProfile> {
    solve_relaxation_on(f, t_min, t_max, tol, DEFAULT_GRID)
}

pub fn solve_relaxation_on(
    f: &CDFunctionSpec,
    t_min: f64,
    t_max: f64,
    tol: f64,
    points: usize,
) -> Result<RelaxationProfile> {
    f.validate()?;
    if !(t_min > 0.0 && t_max > t_min) {
        return invalid(format!("need 0 < t_min < t_max, got [{t_min}, {t_max}]"));
    }
    if !(tol > 0.0) || points < 8 {
        return invalid("tol must be positive and the grid needs at least 8 points");
    }
    // M-doubling: φ(t_min) must stabilise as the cut-off moves out
    let mut m = f.tail_start().max(1.0);
    let mut prev: Option<f64> = None;
    let mut phi_min = f64::NAN;
    let mut converged = false;
    for _ in 0..400 {
        let guess = prev.unwrap_or(m);
        phi_min = invert_time(f, t_min, m, guess);
        if let Some(p) = prev {
            if (phi_min - p).abs() <= 0.1 * tol * p && phi_min < m {
                converged = true;
                break;
            }
        }
        prev = Some(phi_min);
        m *= 2.0;
        if !m.is_finite() {
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence(format!(
            "phi(t_min) did not stabilise under cut-off doubling (last M = {m:e}, phi = {phi_min:e})"
        )));
    }
    let t = logspace(t_min, t_max, points);
    let mut phi = Vec::with_capacity(points);
    let mut guess = phi_min;
    for &ti in &t {
        let p = invert_time(f, ti, m, guess);
        phi.push(p);
        guess = p;
    }
    let w = (points / 10).max(4);
    let small = fit_small_tag(&t[..w], &phi[..w]);
    let large = fit_power_tag(&t[points - w..], &phi[points - w..]);
    Ok(RelaxationProfile {
        t,
        phi,
        cd_function: f.clone(),
        small_t_tag: small,
        large_t_tag: large,
        tol,
        m_final: m,
    })
}

fn fit_power_tag(t: &[f64], phi: &[f64]) -> AsymptoticTag {
    let lt: Vec<f64> = t.iter().map(|v| v.ln()).collect();
    let lp: Vec<f64> = phi.iter().map(|v| v.ln()).collect();
    let (s, i, rms) = linear_fit(&lt, &lp);
    AsymptoticTag::Power {
        coef: i.exp(),
        exponent: -s,
        rms,
    }
}

fn fit_small_tag(t: &[f64], phi: &[f64]) -> AsymptoticTag {
    let power = fit_power_tag(t, phi);
    let lt: Vec<f64> = t.iter().map(|v| v.ln()).collect();
    let (s, b, rms) = linear_fit(&lt, phi);
    // compare relative residuals of both models
    let mean = phi.iter().sum::<f64>() / phi.len() as f64;
    let log_rel = rms / mean;
    let power_rel = match power {
        AsymptoticTag::Power { rms, .. } => rms,
        _ => f64::INFINITY,
    };
    if log_rel < power_rel {
        AsymptoticTag::Log { c: -s, b, rms }
    } else {
        power
    }
}

impl RelaxationProfile {
    pub fn t_min(&self) -> f64 {
        self.t[0]
    }

    pub fn t_max(&self) -> f64 {
        *self.t.last().unwrap()
    }

    /// `φ(t)` at any `t > 0` by inverting the time integral directly.
    pub fn phi_at(&self, t: f64) -> f64 {
        let guess = self.interpolate(t.clamp(self.t_min(), self.t_max()));
        invert_time(&self.cd_function, t, self.m_final, guess)
    }

    /// Log-log linear interpolation on the stored grid.
    pub fn interpolate(&self, t: f64) -> f64 {
        let i = self
            .t
            .partition_point(|&v| v <= t)
            .clamp(1, self.t.len() - 1);
        let (t0, t1) = (self.t[i - 1].ln(), self.t[i].ln());
        let (p0, p1) = (self.phi[i - 1].ln(), self.phi[i].ln());
        (p0 + (t.ln() - t0) / (t1 - t0) * (p1 - p0)).exp()
    }

    pub fn is_strictly_decreasing(&self) -> bool {
        self.phi.windows(2).all(|w| w[1] < w[0])
    }

    /// Smallest discrete second difference of `log φ` as a function of `t`,
    /// scaled to the local spacing; the profile is log-convex when it is
    /// `>= -1e-8`.
    pub fn min_log_second_difference(&self) -> f64 {
        let lp: Vec<f64> = self.phi.iter().map(|v| v.ln()).collect();
        let mut worst = f64::INFINITY;
        for i in 1..lp.len() - 1 {
            let d1 = (lp[i] - lp[i - 1]) / (self.t[i] - self.t[i - 1]);
            let d2 = (lp[i + 1] - lp[i]) / (self.t[i + 1] - self.t[i]);
            worst = worst.min(0.5 * (d2 - d1) * (self.t[i + 1] - self.t[i - 1]));
        }
        worst
    }

    /// Largest `|φ' + F(φ)| / F(φ)` over interior points, `φ'` from a
    /// sixth-order central stencil in `log t`.
    pub fn ode_residual(&self) -> f64 {
        let lt: Vec<f64> = self.t.iter().map(|v| v.ln()).collect();
        let h = (lt[lt.len() - 1] - lt[0]) / (lt.len() - 1) as f64;
        let d = first_derivative(&self.phi, h, Order::Sixth);
        let mut worst: f64 = 0.0;
        for (i, di) in d.iter().enumerate() {
            if let Some(dp) = di {
                let f = self.cd_function.eval(self.phi[i]);
                worst = worst.max((dp / self.t[i] + f).abs() / f);
            }
        }
        worst
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,phi\n");
        for (t, p) in self.t.iter().zip(&self.phi) {
            s.push_str(&format!("{t:.17e},{p:.17e}\n"));
        }
        s
    }

    pub fn metadata(&self) -> ProfileMetadata {
        ProfileMetadata {
            family: self.cd_function.family_name().to_string(),
            cd_function: self.cd_function.clone(),
            small_t_tag: self.small_t_tag,
            large_t_tag: self.large_t_tag,
            tol: self.tol,
            m_final: self.m_final,
            t_min: self.t_min(),
            t_max: self.t_max(),
            points: self.t.len(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileMetadata {
    pub family: String,
    pub cd_function: CDFunctionSpec,
    pub small_t_tag: AsymptoticTag,
    pub large_t_tag: AsymptoticTag,
    pub tol: f64,
    #[serde(with = "json::ext")]
    pub m_final: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
}

/// `∫_{t1}^{t2} φ(t) dt`. On `[t_min, t2]` this is `∫_{φ(t2)}^{φ(t1)} s/F(s) ds`
/// (substituting `s = φ(t)`); below `t_min` the small-time tag is integrated
/// in closed form, giving `+∞` for a power tag with exponent `>= 1` at `t1 = 0`.
pub fn integrate_relaxation(p: &RelaxationProfile, t1: f64, t2: f64) -> Result<f64> {
    if !(t1 >= 0.0) || !(t2 > t1) {
        return invalid(format!("need 0 <= t1 < t2, got t1 = {t1}, t2 = {t2}"));
    }
    if t2 > p.t_max() * (1.0 + 1e-12) {
        return invalid(format!(
            "t2 = {t2} exceeds the profile range (t_max = {})",
            p.t_max()
        ));
    }
    let f = &p.cd_function;
    let mut total = 0.0;
    let lower = t1.max(p.t_min());
    if t1 < p.t_min() {
        let head = p.small_t_tag.integral(t1, p.t_min().min(t2));
        if head.is_infinite() {
            return Ok(f64::INFINITY);
        }
        total += head;
    }
    if t2 > lower {
        let phi_hi = p.phi_at(lower);
        let phi_lo = p.phi_at(t2);
        total += log_integral(|s| (s.ln() - f.ln_eval(s)).exp(), phi_lo, phi_hi);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn quadratic(nu: f64) -> CDFunctionSpec {
        CDFunctionSpec::Power { nu, gamma: 2.0 }
    }

    #[test]
    fn dimension_two_thirds_quadratic_gives_three_over_two_t() {
        let p = solve_relaxation(&quadratic(2.0 / 3.0), 1e-3, 10.0, 1e-8).unwrap();
        for (t, phi) in p.t.iter().zip(&p.phi) {
            let exact = 1.5 / t;
            assert!((phi - exact).abs() <= 1e-6 * exact, "t={t}");
        }
        assert!(p.is_strictly_decreasing());
        assert!(p.min_log_second_difference() >= -1e-8);
        match p.small_t_tag {
            AsymptoticTag::Power { exponent, coef, .. } => {
                assert!((exponent - 1.0).abs() < 1e-8 && (coef - 1.5).abs() < 1e-7)
            }
            other => panic!("unexpected tag {other:?}"),
        }
    }

    #[test]
    fn unit_quadratic_gives_reciprocal_time() {
        let p = solve_relaxation(&quadratic(1.0), 1e-2, 100.0, 1e-9).unwrap();
        for (t, phi) in p.t.iter().zip(&p.phi) {
            assert!((phi * t - 1.0).abs() < 1e-8);
        }
        assert!(p.ode_residual() < 1e-7, "{}", p.ode_residual());
    }

    #[test]
    fn general_power_matches_closed_form() {
        // φ' = -ν φ^γ  =>  φ = ((γ-1) ν t)^{-1/(γ-1)}
        let (nu, gamma) = (0.7, 3.5);
        let p = solve_relaxation(&CDFunctionSpec::Power { nu, gamma }, 1e-4, 1e3, 1e-9).unwrap();
        for (t, phi) in p.t.iter().zip(&p.phi) {
            let exact = ((gamma - 1.0) * nu * t).powf(-1.0 / (gamma - 1.0));
            assert!((phi - exact).abs() <= 1e-8 * exact);
        }
    }

    /// Backward RK4 integration of `φ' = -F(φ)` with Richardson extrapolation.
    fn rk4_oracle(
        f: &CDFunctionSpec,
        t_start: f64,
        phi_start: f64,
        t_end: f64,
        steps: usize,
    ) -> f64 {
        let run = |n: usize| {
            let (mut t, mut y) = (t_start.ln(), phi_start);
            let h = (t_end.ln() - t) / n as f64;
            // in u = log t: dφ/du = -t F(φ)
            let rhs = |u: f64, y: f64| -u.exp() * f.eval(y);
            for _ in 0..n {
                let k1 = rhs(t, y);
                let k2 = rhs(t + h / 2.0, y + h / 2.0 * k1);
                let k3 = rhs(t + h / 2.0, y + h / 2.0 * k2);
                let k4 = rhs(t + h, y + h * k3);
                y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                t += h;
            }
            y
        };
        let a = run(steps);
        let b = run(2 * steps);
        b + (b - a) / 15.0
    }

    #[test]
    fn upsilon_profile_against_ode_oracle() {
        let f = CDFunctionSpec::Upsilon { scale: 1.0 };
        let p = solve_relaxation(&f, 1e-4, 10.0, 1e-9).unwrap();
        assert!(p.is_strictly_decreasing());
        assert!(p.min_log_second_difference() >= -1e-8);
        // integrate backward from t_max to several earlier times
        let t_end = p.t_max();
        let phi_end = *p.phi.last().unwrap();
        for &t in &[5.0, 1.0, 0.1, 1e-2] {
            let oracle = rk4_oracle(&f, t_end, phi_end, t, 20_000);
            let got = p.phi_at(t);
            assert!(
                (got - oracle).abs() <= 1e-7 * oracle,
                "t={t}: {got} vs {oracle}"
            );
        }
        // logarithmic blow-up at 0
        match p.small_t_tag {
            AsymptoticTag::Log { c, .. } => assert!(c > 0.5 && c < 1.5, "c = {c}"),
            other => panic!("expected a log tag, got {other:?}"),
        }
        // Υ(x) ~ x²/2 near 0, so φ ~ 2/t for large t
        let long = solve_relaxation(&f, 1e-2, 1e5, 1e-9).unwrap();
        match long.large_t_tag {
            AsymptoticTag::Power { exponent, coef, .. } => {
                assert!((exponent - 1.0).abs() < 0.01, "{exponent}");
                assert!((coef - 2.0).abs() < 0.1, "{coef}");
            }
            other => panic!("expected a power tail, got {other:?}"),
        }
    }

    #[test]
    fn integral_of_reciprocal_time() {
        let p = solve_relaxation(&quadratic(1.0), 0.01, 10.0, 1e-9).unwrap();
        let v = integrate_relaxation(&p, 1.0, std::f64::consts::E).unwrap();
        assert!((v - 1.0).abs() < 1e-10, "{v}");
        assert_eq!(integrate_relaxation(&p, 0.0, 1.0).unwrap(), f64::INFINITY);
        assert!(integrate_relaxation(&p, 1.0, 11.0).is_err());
    }

    #[test]
    fn upsilon_integral_from_zero_is_finite() {
        let f = CDFunctionSpec::Upsilon { scale: 1.0 };
        let p = solve_relaxation(&f, 1e-4, 10.0, 1e-9).unwrap();
        let v = integrate_relaxation(&p, 0.0, 1.0).unwrap();
        assert!(v.is_finite() && v > 0.0);
        // head from the fitted tag in closed form
        let head = match p.small_t_tag {
            AsymptoticTag::Log { c, b, .. } => {
                let tm = p.t_min();
                tm * (-c * tm.ln() + c + b)
            }
            _ => unreachable!(),
        };
        // refined oracle: ∫_0^1 φ = ∫_{φ(1)}^∞ s/Υ(s) ds
        let phi1 = p.phi_at(1.0);
        let body = integrate(|s: f64| s / upsilon(s), phi1, 80.0, 1e-15, 1e-13, 2000).value;
        assert!((v - body).abs() < 1e-5, "{v} vs {body}");
        assert!(head < 1e-2);
    }

    #[test]
    fn monotone_comparison() {
        // F1 >= F2 pointwise implies φ1 <= φ2
        let f1 = CDFunctionSpec::Power {
            nu: 2.0,
            gamma: 2.0,
        };
        let f2 = CDFunctionSpec::Power {
            nu: 1.0,
            gamma: 2.0,
        };
        let f3 = CDFunctionSpec::Upsilon { scale: 2.0 };
        let f4 = CDFunctionSpec::Upsilon { scale: 1.0 };
        let p1 = solve_relaxation(&f1, 1e-3, 10.0, 1e-8).unwrap();
        let p2 = solve_relaxation(&f2, 1e-3, 10.0, 1e-8).unwrap();
        let p3 = solve_relaxation(&f3, 1e-3, 10.0, 1e-8).unwrap();
        let p4 = solve_relaxation(&f4, 1e-3, 10.0, 1e-8).unwrap();
        for i in 0..p1.t.len() {
            assert!(p1.phi[i] <= p2.phi[i]);
            assert!(p3.phi[i] <= p4.phi[i]);
        }
    }

    #[test]
    fn two_regime_profile_is_consistent() {
        let f = CDFunctionSpec::TwoRegime {
            c: 0.5,
            gamma: 2.5,
            x0: 3.0,
            a: 1.0,
        };
        f.validate().unwrap();
        let p = solve_relaxation(&f, 1e-3, 100.0, 1e-8).unwrap();
        assert!(p.is_strictly_decreasing());
        assert!(p.min_log_second_difference() >= -1e-8);
        // F' jumps at x0, so the stencil loses accuracy next to that time
        assert!(p.ode_residual() < 1e-3, "{}", p.ode_residual());
    }

    #[test]
    fn refinement_changes_little() {
        let f = CDFunctionSpec::Upsilon { scale: 1.0 };
        let tol = 1e-8;
        let a = solve_relaxation_on(&f, 1e-3, 10.0, tol, 201).unwrap();
        let b = solve_relaxation_on(&f, 1e-3, 10.0, tol, 401).unwrap();
        for i in 0..a.t.len() {
            assert!((a.phi[i] - b.phi[2 * i]).abs() <= 2.0 * tol * a.phi[i]);
        }
    }

    #[test]
    fn invalid_functions_rejected() {
        assert!(CDFunctionSpec::Power {
            nu: 1.0,
            gamma: 1.0
        }
        .validate()
        .is_err());
        assert!(CDFunctionSpec::Power {
            nu: -1.0,
            gamma: 2.0
        }
        .validate()
        .is_err());
        assert!(CDFunctionSpec::TwoRegime {
            c: 1.0,
            gamma: 2.0,
            x0: 1.0,
            a: 0.5
        }
        .validate()
        .is_err());
        let bad = CDFunctionSpec::Tabulated(TabulatedCd {
            x: vec![1.0, 2.0],
            ratio: vec![1.0, 0.5],
            low_c: 1.0,
            low_gamma: 2.0,
            high_a: 1.0,
        });
        assert!(bad.validate().is_err());
        assert!(solve_relaxation(&quadratic(1.0), 1.0, 0.5, 1e-6).is_err());
        assert_eq!(quadratic(1.0).eval(-2.0), 0.0);
    }

    #[test]
    fn tabulated_function_round_trip() {
        let t = TabulatedCd {
            x: vec![0.1, 1.0, 10.0],
            ratio: vec![0.05, 0.5, 5.0],
            low_c: 0.5,
            low_gamma: 2.0,
            high_a: 0.5,
        };
        let f = CDFunctionSpec::Tabulated(t);
        f.validate().unwrap();
        assert!((f.eval(1.0) - 0.5).abs() < 1e-14);
        assert!((f.eval(0.01) - 0.5e-4).abs() < 1e-16);
        let json = serde_json::to_string(&f).unwrap();
        assert_eq!(serde_json::from_str::<CDFunctionSpec>(&json).unwrap(), f);
        let p = solve_relaxation(&f, 1e-3, 1e3, 1e-8).unwrap();
        assert!(p.is_strictly_decreasing());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn power_profiles_log_convex_and_exact(nu in 0.1f64..5.0, gamma in 1.2f64..4.0) {
            let f = CDFunctionSpec::Power { nu, gamma };
            let p = solve_relaxation_on(&f, 1e-3, 10.0, 1e-8, 60).unwrap();
            prop_assert!(p.is_strictly_decreasing());
            prop_assert!(p.min_log_second_difference() >= -1e-8);
            for (t, phi) in p.t.iter().zip(&p.phi) {
                let exact = ((gamma - 1.0) * nu * t).powf(-1.0 / (gamma - 1.0));
                prop_assert!((phi - exact).abs() <= 1e-7 * exact);
            }
        }
    }
}
