//! Long-range jump operators `Lf(x) = Σ_j k(j)(f(x+j) - f(x))` on `ℤ`,
//! truncated to `|j| <= J` and made periodic on `ℤ_M` with `M > 4J`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::curvature::{local_forms, EnvelopeModel};
use crate::error::{invalid, Result};
use crate::markov::{Chain, PiSpec};
use crate::numeric::{upsilon, upsilon_prime};
use crate::relaxation::{
    integrate_relaxation, solve_relaxation, CDFunctionSpec, RelaxationProfile,
};
use crate::sampling::{stream_id, stream_rng};
use crate::semigroup::{Propagator, DENSITY_FLOOR};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeKernel {
    pub beta: f64,
    pub c: f64,
    pub j_max: usize,
    pub m: usize,
    /// `k[j - 1] = c / j^{1+β}` for `1 <= j <= J`.
    pub k: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelDiagnostics {
    /// `Σ_{0<|j|<=J} k(j) j²`
    pub second_moment: f64,
    /// Partial sums of the second moment for `J' = 1..=J`.
    pub second_moment_partials: Vec<f64>,
    pub delta: Option<f64>,
    /// `Σ_{0<|j|<=J} k(j)^{1-δ}` and its partial sums.
    pub power_sum: Option<f64>,
    pub power_sum_partials: Option<Vec<f64>>,
}

fn symmetric_partials(k: &[f64], term: impl Fn(usize, f64) -> f64) -> Vec<f64> {
    let mut acc = 0.0;
    k.iter()
        .enumerate()
        .map(|(i, &v)| {
            acc += 2.0 * term(i + 1, v);
            acc
        })
        .collect()
}

/// Kernel `k_β(j) = c/|j|^{1+β}` with diagnostics; `delta` adds the
/// `Σ k^{1-δ}` partial sums.
pub fn build_lattice_kernel(
    beta: f64,
    c: f64,
    j_max: usize,
    m: usize,
    delta: Option<f64>,
) -> Result<(LatticeKernel, KernelDiagnostics)> {
    if !(beta > 0.0) || !beta.is_finite() {
        return invalid(format!("beta must be positive, got {beta}"));
    }
    if !(c > 0.0) || !c.is_finite() {
        return invalid(format!("kernel amplitude must be positive, got {c}"));
    }
    if j_max < 1 {
        return invalid("truncation radius J must be at least 1");
    }
    if m <= 4 * j_max {
        return invalid(format!("torus size M = {m} must exceed 4J = {}", 4 * j_max));
    }
    if let Some(d) = delta {
        if !(0.0..1.0).contains(&d) {
            return invalid(format!("delta must lie in [0, 1), got {d}"));
        }
    }
    let k: Vec<f64> = (1..=j_max)
        .map(|j| c / (j as f64).powf(1.0 + beta))
        .collect();
    let second_moment_partials = symmetric_partials(&k, |j, v| v * (j * j) as f64);
    let power_sum_partials = delta.map(|d| symmetric_partials(&k, |_, v| v.powf(1.0 - d)));
    let diag = KernelDiagnostics {
        second_moment: *second_moment_partials.last().unwrap(),
        second_moment_partials,
        delta,
        power_sum: power_sum_partials.as_ref().map(|p| *p.last().unwrap()),
        power_sum_partials,
    };
    Ok((
        LatticeKernel {
            beta,
            c,
            j_max,
            m,
            k,
        },
        diag,
    ))
}

impl LatticeKernel {
    pub fn new(beta: f64, c: f64, j_max: usize, m: usize) -> Result<Self> {
        Ok(build_lattice_kernel(beta, c, j_max, m, None)?.0)
    }

    /// `k(j)` for any integer `j`.
    pub fn k_at(&self, j: i64) -> f64 {
        let a = j.unsigned_abs() as usize;
        if a == 0 || a > self.j_max {
            0.0
        } else {
            self.k[a - 1]
        }
    }

    /// Nonzero jumps `(j, k(j))` for `0 < |j| <= J`.
    pub fn jumps(&self) -> Vec<(i64, f64)> {
        let mut v = Vec::with_capacity(2 * self.j_max);
        for j in 1..=self.j_max as i64 {
            v.push((-j, self.k[j as usize - 1]));
            v.push((j, self.k[j as usize - 1]));
        }
        v
    }

    pub fn total_rate(&self) -> f64 {
        2.0 * self.k.iter().sum::<f64>()
    }

    pub fn wrap(&self, x: i64) -> usize {
        x.rem_euclid(self.m as i64) as usize
    }

    /// Distance on `ℤ_M`.
    pub fn torus_distance(&self, x: usize, y: usize) -> usize {
        let d = x.abs_diff(y) % self.m;
        d.min(self.m - d)
    }

    /// The equivalent `M`-state circulant chain with uniform measure.
    pub fn torus_chain(&self) -> Chain {
        let mut rates = Vec::with_capacity(2 * self.j_max * self.m);
        for x in 0..self.m {
            for (j, k) in self.jumps() {
                rates.push((x, self.wrap(x as i64 + j), k));
            }
        }
        Chain::new(self.m, &rates, PiSpec::Uniform).expect("circulant chain is well formed")
    }

    fn check(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.m {
            return invalid(format!(
                "function has {} values, torus has {}",
                f.len(),
                self.m
            ));
        }
        Ok(())
    }
}

pub fn lattice_generator(kern: &LatticeKernel, f: &[f64]) -> Result<Vec<f64>> {
    kern.check(f)?;
    let jumps = kern.jumps();
    Ok((0..kern.m)
        .map(|x| {
            jumps
                .iter()
                .map(|&(j, k)| k * (f[kern.wrap(x as i64 + j)] - f[x]))
                .sum()
        })
        .collect())
}

pub fn lattice_psi_upsilon(kern: &LatticeKernel, f: &[f64]) -> Result<Vec<f64>> {
    kern.check(f)?;
    let jumps = kern.jumps();
    Ok((0..kern.m)
        .map(|x| {
            jumps
                .iter()
                .map(|&(j, k)| k * upsilon(f[kern.wrap(x as i64 + j)] - f[x]))
                .sum()
        })
        .collect())
}

/// `Ψ_{2,Υ}(f)(x) = ½ Σ_{j,l} k(j)k(l) e^{f(x+l)-f(x)} Υ(f(x+j+l) - f(x+j) - f(x+l) + f(x))`.
pub fn lattice_psi2_closed_form(kern: &LatticeKernel, f: &[f64], x: usize) -> Result<f64> {
    kern.check(f)?;
    if x >= kern.m {
        return invalid(format!("state {x} outside the torus"));
    }
    let jumps = kern.jumps();
    let xi = x as i64;
    let fx = f[x];
    let mut total = 0.0;
    for &(l, kl) in &jumps {
        let fl = f[kern.wrap(xi + l)];
        let el = (fl - fx).exp();
        let mut inner = 0.0;
        for &(j, kj) in &jumps {
            let s = f[kern.wrap(xi + j + l)] - f[kern.wrap(xi + j)] - fl + fx;
            inner += kj * upsilon(s);
        }
        total += kl * el * inner;
    }
    Ok(0.5 * total)
}

pub fn lattice_psi2(kern: &LatticeKernel, f: &[f64]) -> Result<Vec<f64>> {
    (0..kern.m)
        .map(|x| lattice_psi2_closed_form(kern, f, x))
        .collect()
}

/// Envelope model at the origin: `g` holds `f` on offsets `[-2J, 2J] \ {0}`,
/// `f(0) = 0` and `f = 0` elsewhere (the only values `Ψ₂(f)(0)` sees).
pub struct LatticeEnvelope<'a> {
    kern: &'a LatticeKernel,
}

impl<'a> LatticeEnvelope<'a> {
    pub fn new(kern: &'a LatticeKernel) -> Self {
        LatticeEnvelope { kern }
    }

    fn half(&self) -> i64 {
        2 * self.kern.j_max as i64
    }

    /// Offsets in `g` order.
    pub fn offsets(&self) -> Vec<i64> {
        (-self.half()..=self.half()).filter(|&o| o != 0).collect()
    }

    fn full(&self, g: &[f64]) -> Vec<f64> {
        let h = self.half() as usize;
        let mut v = Vec::with_capacity(2 * h + 1);
        v.extend_from_slice(&g[..h]);
        v.push(0.0);
        v.extend_from_slice(&g[h..]);
        v
    }
}

impl EnvelopeModel for LatticeEnvelope<'_> {
    fn points(&self) -> usize {
        1
    }
    fn dim(&self, _point: usize) -> usize {
        4 * self.kern.j_max
    }
    fn wz(&self, point: usize, g: &[f64]) -> (f64, f64) {
        let mut grad = vec![0.0; g.len()];
        let z = self.z_gradient(point, g, &mut grad);
        let w: f64 = self
            .w_coefficients(point)
            .iter()
            .zip(g)
            .map(|(a, b)| a * b)
            .sum();
        (w, z)
    }
    fn w_coefficients(&self, _point: usize) -> Vec<f64> {
        self.offsets().iter().map(|&o| -self.kern.k_at(o)).collect()
    }
    fn z_gradient(&self, _point: usize, g: &[f64], grad: &mut [f64]) -> f64 {
        let f = self.full(g);
        let c = self.half();
        let at = |o: i64| f[(o + c) as usize];
        let mut gf = vec![0.0; f.len()];
        let jumps = self.kern.jumps();
        let mut total = 0.0;
        for &(l, kl) in &jumps {
            let el = at(l).exp();
            for &(j, kj) in &jumps {
                let s = at(j + l) - at(j) - at(l);
                let w = 0.5 * kl * kj * el;
                let u = upsilon(s);
                let up = upsilon_prime(s);
                total += w * u;
                gf[(l + c) as usize] += w * (u - up);
                gf[(j + l + c) as usize] += w * up;
                gf[(j + c) as usize] -= w * up;
            }
        }
        let h = c as usize;
        grad[..h].copy_from_slice(&gf[..h]);
        grad[h..].copy_from_slice(&gf[h + 1..]);
        total
    }
    fn special_directions(&self, _point: usize) -> Vec<Vec<f64>> {
        // slow ramps and the negative indicator of the origin
        let offs = self.offsets();
        let scale = self.half() as f64;
        vec![
            vec![1.0; offs.len()],
            offs.iter().map(|&o| o as f64 / scale).collect(),
            offs.iter().map(|&o| (o as f64 / scale).powi(2)).collect(),
            offs.iter().map(|&o| -(o as f64 / scale).powi(2)).collect(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalCdCheck {
    pub d: f64,
    pub holds_at_origin: bool,
    /// Smallest eigenvalue of `Γ₂(f)(0) - (1/d)(Lf(0))²` over `f` on
    /// `[-2J, 2J]` with `f(0) = 0`.
    pub min_eigenvalue: f64,
    /// Eigenvector as a torus function when the form is negative.
    pub witness: Option<Vec<f64>>,
}

/// Tolerance on the smallest eigenvalue below which CD(0,d) is declared violated.
pub const CD_EIGEN_TOL: f64 = 1e-12;

/// Tests CD(0,d) at the origin through the smallest eigenvalue of the
/// local form (translation invariance makes one state sufficient).
pub fn check_classical_cd(kern: &LatticeKernel, d: f64) -> Result<ClassicalCdCheck> {
    if !(d >= 1.0) {
        return invalid(format!("dimension must be at least 1, got {d}"));
    }
    let chain = kern.torus_chain();
    let forms = local_forms(&chain, 0);
    let a = forms.cd_form(d);
    // states[0] is the origin; dropping it fixes the gauge
    let m = a.nrows() - 1;
    let sub = DMatrix::from_fn(m, m, |i, j| a[(i + 1, j + 1)]);
    let e = SymmetricEigen::new(sub);
    let (imin, &min_eigenvalue) = e
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty form");
    let holds = min_eigenvalue >= -CD_EIGEN_TOL;
    let witness = (!holds).then(|| {
        let mut v = DVector::zeros(m + 1);
        for i in 0..m {
            v[i + 1] = e.eigenvectors[(i, imin)];
        }
        forms.embed(kern.m, &v)
    });
    Ok(ClassicalCdCheck {
        d,
        holds_at_origin: holds,
        min_eigenvalue,
        witness,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialDatum {
    /// `1 + height` on `|x| <= width` (torus distance to 0), `1` elsewhere.
    Bump {
        height: f64,
        width: usize,
    },
    /// I.i.d. uniform values on `[low, high]`.
    Random {
        low: f64,
        high: f64,
    },
    Values {
        values: Vec<f64>,
    },
}

pub fn initial_datum(kern: &LatticeKernel, spec: &InitialDatum, seed: u64) -> Result<Vec<f64>> {
    let u: Vec<f64> = match spec {
        InitialDatum::Bump { height, width } => (0..kern.m)
            .map(|x| {
                if kern.torus_distance(x, 0) <= *width {
                    1.0 + height
                } else {
                    1.0
                }
            })
            .collect(),
        InitialDatum::Random { low, high } => {
            if !(low < high) {
                return invalid("random initial datum needs low < high");
            }
            let mut rng = stream_rng(seed, stream_id(5, 0, 0));
            (0..kern.m).map(|_| rng.random_range(*low..*high)).collect()
        }
        InitialDatum::Values { values } => values.clone(),
    };
    kern.check(&u)?;
    if u.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return invalid("initial datum must be positive and bounded");
    }
    Ok(u)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeSolution {
    pub times: Vec<f64>,
    pub u: Vec<Vec<f64>>,
}

pub fn evolve_lattice(kern: &LatticeKernel, u0: &[f64], times: &[f64]) -> Result<LatticeSolution> {
    kern.check(u0)?;
    let prop = Propagator::new(&kern.torus_chain())?;
    let u = prop.apply_many(u0, times);
    Ok(LatticeSolution {
        times: times.to_vec(),
        u,
    })
}

/// `max_x -L log u(x)`.
pub fn li_yau_functional(kern: &LatticeKernel, u: &[f64]) -> Result<f64> {
    if let Some(v) = u.iter().find(|v| !(**v > DENSITY_FLOOR)) {
        return invalid(format!("solution touched the positivity floor ({v:e})"));
    }
    let logu: Vec<f64> = u.iter().map(|v| v.ln()).collect();
    Ok(lattice_generator(kern, &logu)?
        .into_iter()
        .fold(f64::NEG_INFINITY, |m, v| m.max(-v)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiYauReport {
    pub times: Vec<f64>,
    pub functional: Vec<f64>,
    pub phi: Vec<f64>,
    /// `min_t φ(t) - max_x(-L log u)`
    pub worst_slack: f64,
    pub worst_time: f64,
    pub violations: usize,
}

impl LiYauReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,max_neg_L_log_u,phi\n");
        for i in 0..self.times.len() {
            s.push_str(&format!(
                "{:.17e},{:.17e},{:.17e}\n",
                self.times[i], self.functional[i], self.phi[i]
            ));
        }
        s
    }
}

/// Profile covering `[t_lo, t_hi]` with room on both sides.
pub fn relaxation_for(f: &CDFunctionSpec, t_lo: f64, t_hi: f64) -> Result<RelaxationProfile> {
    solve_relaxation(f, (t_lo / 10.0).min(1e-6), t_hi * 10.0, 1e-10)
}

/// Compares `max_x -L log u(t,x)` with the relaxation function of `f`.
pub fn li_yau_check(
    kern: &LatticeKernel,
    u0: &[f64],
    f: &CDFunctionSpec,
    times: &[f64],
) -> Result<LiYauReport> {
    if times.is_empty() || times.iter().any(|t| !(*t > 0.0)) {
        return invalid("Li-Yau times must be positive");
    }
    let lo = times.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = times.iter().cloned().fold(0.0, f64::max);
    let profile = relaxation_for(f, lo, hi)?;
    li_yau_check_with(kern, u0, &profile, times)
}

pub fn li_yau_check_with(
    kern: &LatticeKernel,
    u0: &[f64],
    profile: &RelaxationProfile,
    times: &[f64],
) -> Result<LiYauReport> {
    let sol = evolve_lattice(kern, u0, times)?;
    let mut rep = LiYauReport {
        times: times.to_vec(),
        functional: Vec::with_capacity(times.len()),
        phi: Vec::with_capacity(times.len()),
        worst_slack: f64::INFINITY,
        worst_time: times[0],
        violations: 0,
    };
    for (i, &t) in times.iter().enumerate() {
        let val = li_yau_functional(kern, &sol.u[i])?;
        let phi = profile.phi_at(t);
        let slack = phi - val;
        if slack < rep.worst_slack {
            rep.worst_slack = slack;
            rep.worst_time = t;
        }
        if slack < -1e-9 * phi.abs().max(1.0) {
            rep.violations += 1;
        }
        rep.functional.push(val);
        rep.phi.push(phi);
    }
    Ok(rep)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarnackPair {
    pub t1: f64,
    pub x1: usize,
    pub t2: f64,
    pub x2: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnackResidual {
    pub pair: HarnackPair,
    /// `log RHS - log LHS`; `+∞` when `∫φ` diverges.
    #[serde(with = "crate::json::ext")]
    pub residual: f64,
    pub trivially_infinite: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnackReport {
    pub exponent: f64,
    pub residuals: Vec<HarnackResidual>,
    #[serde(with = "crate::json::ext")]
    pub min_residual: f64,
    pub all_hold: bool,
}

/// Uniformly drawn pairs with `t1 < t2` log-uniform in `[t_lo, t_hi]`; the
/// first `with_zero` pairs have `t1 = 0`.
pub fn random_harnack_pairs(
    kern: &LatticeKernel,
    t_lo: f64,
    t_hi: f64,
    count: usize,
    with_zero: usize,
    seed: u64,
) -> Vec<HarnackPair> {
    let mut rng = stream_rng(seed, stream_id(6, 0, 0));
    let (a, b) = (t_lo.ln(), t_hi.ln());
    (0..count)
        .map(|i| {
            let mut s = rng.random_range(a..b).exp();
            let mut t = rng.random_range(a..b).exp();
            if s > t {
                std::mem::swap(&mut s, &mut t);
            }
            if t <= s {
                t = s * 1.5;
            }
            let x1 = rng.random_range(0..kern.m);
            let x2 = rng.random_range(0..kern.m);
            HarnackPair {
                t1: if i < with_zero { 0.0 } else { s },
                x1,
                t2: t,
                x2,
            }
        })
        .collect()
}

/// Residuals of `u(t1,x1) <= u(t2,x2) exp(∫_{t1}^{t2} φ + 2|x1-x2|^p/(t2-t1))`
/// with `p = min(1+β, 2)`.
pub fn harnack_check(
    kern: &LatticeKernel,
    u0: &[f64],
    f: &CDFunctionSpec,
    pairs: &[HarnackPair],
) -> Result<HarnackReport> {
    let hi = pairs.iter().map(|p| p.t2).fold(0.0, f64::max);
    let lo = pairs
        .iter()
        .flat_map(|p| [p.t1, p.t2])
        .filter(|t| *t > 0.0)
        .fold(f64::INFINITY, f64::min);
    if !hi.is_finite() || hi <= 0.0 {
        return invalid("Harnack pairs need positive end times");
    }
    let profile = relaxation_for(f, lo.min(1e-6), hi)?;
    harnack_check_with(kern, u0, &profile, pairs, (1.0 + kern.beta).min(2.0))
}

pub fn harnack_check_with(
    kern: &LatticeKernel,
    u0: &[f64],
    profile: &RelaxationProfile,
    pairs: &[HarnackPair],
    exponent: f64,
) -> Result<HarnackReport> {
    kern.check(u0)?;
    for p in pairs {
        if !(p.t1 >= 0.0) || !(p.t2 > p.t1) {
            return invalid(format!(
                "Harnack pair needs 0 <= t1 < t2, got t1 = {}, t2 = {}",
                p.t1, p.t2
            ));
        }
        if p.x1 >= kern.m || p.x2 >= kern.m {
            return invalid("Harnack pair state outside the torus");
        }
    }
    let prop = Propagator::new(&kern.torus_chain())?;
    let mut residuals = Vec::with_capacity(pairs.len());
    for p in pairs {
        let u1 = if p.t1 == 0.0 {
            u0[p.x1]
        } else {
            prop.apply(u0, p.t1)[p.x1]
        };
        let u2 = prop.apply(u0, p.t2)[p.x2];
        if !(u1 > DENSITY_FLOOR && u2 > DENSITY_FLOOR) {
            return invalid("solution touched the positivity floor");
        }
        let integral = integrate_relaxation(profile, p.t1, p.t2)?;
        let dist = kern.torus_distance(p.x1, p.x2) as f64;
        let residual = u2.ln() + integral + 2.0 * dist.powf(exponent) / (p.t2 - p.t1) - u1.ln();
        residuals.push(HarnackResidual {
            pair: *p,
            residual,
            trivially_infinite: integral.is_infinite(),
        });
    }
    let min_residual = residuals
        .iter()
        .map(|r| r.residual)
        .fold(f64::INFINITY, f64::min);
    Ok(HarnackReport {
        exponent,
        all_hold: min_residual >= 0.0,
        residuals,
        min_residual,
    })
}
