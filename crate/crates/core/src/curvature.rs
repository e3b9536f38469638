//! Curvature-dimension constants: the classical `CD(κ,d)` optimum by a
//! generalized eigenproblem, sampled estimates and violation searches for
//! `CD_Υ(κ,F)`, and lower-envelope fits of CD-functions.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gamma::{gamma2_at, gamma_bilinear_at, generator_at, psi2_upsilon_at, psi_upsilon_at};
use crate::json;
use crate::markov::Chain;
use crate::numeric::optimize::{lbfgs, nelder_mead};
use crate::numeric::{linear_fit, logspace};
use crate::relaxation::{CDFunctionSpec, TabulatedCd};
use crate::sampling::{par_chunks, stream_id};

/// States within graph distance `radius` of `x`, with `x` first.
pub fn local_ball(c: &Chain, x: usize, radius: usize) -> Vec<usize> {
    let mut seen = vec![false; c.n()];
    seen[x] = true;
    let mut out = vec![x];
    let mut frontier = vec![x];
    for _ in 0..radius {
        let mut next = Vec::new();
        for &u in &frontier {
            for &(v, _) in c.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    next.push(v);
                }
            }
        }
        next.sort_unstable();
        out.extend_from_slice(&next);
        frontier = next;
    }
    out
}

/// Quadratic forms of `Γ(·)(x)`, `Γ₂(·)(x)` and the linear form `(L·)(x)`
/// in the coordinates of the 2-ball around `x`.
#[derive(Debug, Clone)]
pub struct LocalForms {
    pub states: Vec<usize>,
    pub gamma: DMatrix<f64>,
    pub gamma2: DMatrix<f64>,
    pub lap: DVector<f64>,
}

fn add_diff_outer(m: &mut DMatrix<f64>, i: usize, j: usize, w: f64) {
    m[(i, i)] += w;
    m[(j, j)] += w;
    m[(i, j)] -= w;
    m[(j, i)] -= w;
}

pub fn local_forms(c: &Chain, x: usize) -> LocalForms {
    let states = local_ball(c, x, 2);
    let m = states.len();
    let mut pos = vec![usize::MAX; c.n()];
    for (i, &s) in states.iter().enumerate() {
        pos[s] = i;
    }
    let lap_of = |y: usize| {
        let mut l = DVector::zeros(m);
        for &(z, k) in c.neighbors(y) {
            l[pos[z]] += k;
            l[pos[y]] -= k;
        }
        l
    };
    let px = pos[x];
    let mut gamma = DMatrix::zeros(m, m);
    for &(y, k) in c.neighbors(x) {
        add_diff_outer(&mut gamma, pos[y], px, 0.5 * k);
    }
    let lap_x = lap_of(x);
    // Γ₂ = ½ Σ_y k(B_y - B_x) - ½ Σ_y k sym((e_y - e_x)(ℓ_y - ℓ_x)ᵀ)
    let mut gamma2 = -0.5 * c.out_rate(x) * &gamma;
    for &(y, k) in c.neighbors(x) {
        let py = pos[y];
        for &(z, kz) in c.neighbors(y) {
            add_diff_outer(&mut gamma2, pos[z], py, 0.25 * k * kz);
        }
        let dl = lap_of(y) - &lap_x;
        for j in 0..m {
            let v = 0.25 * k * dl[j];
            gamma2[(py, j)] -= v;
            gamma2[(j, py)] -= v;
            gamma2[(px, j)] += v;
            gamma2[(j, px)] += v;
        }
    }
    LocalForms {
        states,
        gamma,
        gamma2,
        lap: lap_x,
    }
}

impl LocalForms {
    /// `Γ₂ - (1/d) ℓ ℓᵀ`; `d = ∞` drops the correction.
    pub fn cd_form(&self, d: f64) -> DMatrix<f64> {
        if d.is_infinite() {
            self.gamma2.clone()
        } else {
            &self.gamma2 - (&self.lap * self.lap.transpose()) / d
        }
    }

    /// Embeds a local vector into a full state function (zero elsewhere).
    pub fn embed(&self, n: usize, v: &DVector<f64>) -> Vec<f64> {
        let mut f = vec![0.0; n];
        for (i, &s) in self.states.iter().enumerate() {
            f[s] = v[i];
        }
        f
    }
}

/// Smallest value of `vᵀAv / vᵀBv` over `v` with `vᵀBv > 0`.
#[derive(Debug, Clone)]
pub enum FormMinimum {
    Finite {
        value: f64,
        witness: DVector<f64>,
    },
    /// `A` is negative somewhere `B` vanishes, or unbounded below along it.
    NegInfinite {
        witness: DVector<f64>,
    },
    /// `B` vanishes identically.
    PosInfinite,
}

/// Generalized minimum by deflating the kernel of `B` with a Schur complement.
pub fn generalized_minimum(a: &DMatrix<f64>, b: &DMatrix<f64>) -> FormMinimum {
    let m = a.nrows();
    let eb = SymmetricEigen::new(b.clone());
    let lmax = eb.eigenvalues.iter().cloned().fold(0.0, f64::max);
    if lmax <= 1e-300 {
        return FormMinimum::PosInfinite;
    }
    let tol_b = 1e-10 * lmax;
    let range: Vec<usize> = (0..m).filter(|&i| eb.eigenvalues[i] > tol_b).collect();
    let kernel: Vec<usize> = (0..m).filter(|&i| eb.eigenvalues[i] <= tol_b).collect();
    let r = eb.eigenvectors.select_columns(&range);
    let d: Vec<f64> = range.iter().map(|&i| eb.eigenvalues[i]).collect();
    let scale_a = a.amax().max(1e-300);
    let a_rr = r.transpose() * a * &r;
    let (s, correction) = if kernel.is_empty() {
        (a_rr, None)
    } else {
        let k = eb.eigenvectors.select_columns(&kernel);
        let a_kk = k.transpose() * a * &k;
        let a_kr = k.transpose() * a * &r;
        let ek = SymmetricEigen::new(a_kk.clone());
        let (imin, mu_min) =
            ek.eigenvalues
                .iter()
                .enumerate()
                .fold(
                    (0, f64::INFINITY),
                    |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc },
                );
        if mu_min < -1e-10 * scale_a {
            return FormMinimum::NegInfinite {
                witness: &k * ek.eigenvectors.column(imin),
            };
        }
        let cut = 1e-10 * scale_a;
        let mut pinv = DMatrix::zeros(kernel.len(), kernel.len());
        for (i, &mu) in ek.eigenvalues.iter().enumerate() {
            if mu > cut {
                let v = ek.eigenvectors.column(i);
                pinv += (v * v.transpose()) / mu;
            }
        }
        let resid = &a_kr - &a_kk * &pinv * &a_kr;
        if resid.amax() > 1e-8 * scale_a {
            // a null direction of A_KK couples to the range: unbounded below
            let (row, col) = resid.iamax_full();
            let mut null = DVector::zeros(kernel.len());
            for (i, &mu) in ek.eigenvalues.iter().enumerate() {
                if mu <= cut {
                    let v = ek.eigenvectors.column(i);
                    null += v * v[row];
                }
            }
            let sign = (null.transpose() * a_kr.column(col))[(0, 0)].signum();
            let w = r.column(col) - &k * null * (1e6 * sign);
            return FormMinimum::NegInfinite { witness: w };
        }
        let s = &a_rr - a_kr.transpose() * &pinv * &a_kr;
        (s, Some((k, pinv * a_kr)))
    };
    let dinv: Vec<f64> = d.iter().map(|v| 1.0 / v.sqrt()).collect();
    let mut scaled = s.clone();
    for i in 0..range.len() {
        for j in 0..range.len() {
            scaled[(i, j)] *= dinv[i] * dinv[j];
        }
    }
    let es = SymmetricEigen::new(0.5 * (&scaled + scaled.transpose()));
    let (imin, value) =
        es.eigenvalues
            .iter()
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc },
            );
    let mut y = es.eigenvectors.column(imin).into_owned();
    for i in 0..range.len() {
        y[i] *= dinv[i];
    }
    let mut witness = &r * &y;
    if let Some((k, coupling)) = correction {
        witness -= k * (coupling * &y);
    }
    FormMinimum::Finite { value, witness }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurvatureMode {
    Classical,
    Upsilon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DimensionTerm {
    None,
    Quadratic { d: f64 },
    CdFunction { spec: CDFunctionSpec },
}

/// Sample and restart counts for the randomized searches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    /// Random candidates per evaluation state.
    pub samples: usize,
    /// Local descents started from the best candidates of each state.
    pub descents: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            samples: 20_000,
            descents: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureReport {
    pub mode: CurvatureMode,
    #[serde(with = "json::ext")]
    pub global_kappa: f64,
    #[serde(with = "json::ext_vec")]
    pub per_state: Vec<f64>,
    pub witness: Vec<f64>,
    pub witness_state: usize,
    pub dimension_term: DimensionTerm,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<Budget>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Ratio recomputed with the vector operators at the witness.
    #[serde(with = "json::ext")]
    pub lowest_verified_ratio: f64,
    pub warnings: Vec<String>,
}

fn check_dimension(d: f64) -> Result<()> {
    if !(d >= 1.0) {
        return invalid(format!("dimension must lie in [1, inf], got {d}"));
    }
    Ok(())
}

/// `(Γ₂(f) - (Lf)²/d)(x) / Γ(f)(x)` evaluated with the pointwise operators.
pub fn classical_ratio(c: &Chain, f: &[f64], x: usize, d: f64) -> f64 {
    let lf = generator_at(c, f, x);
    let dim = if d.is_infinite() { 0.0 } else { lf * lf / d };
    (gamma2_at(c, f, x) - dim) / gamma_bilinear_at(c, f, f, x)
}

/// Largest `κ_x` with `Γ₂(f)(x) - (Lf)(x)²/d >= κ_x Γ(f)(x)` for all `f`.
pub fn classical_optimal_kappa(c: &Chain, d: f64) -> Result<CurvatureReport> {
    check_dimension(d)?;
    let n = c.n();
    let per: Vec<(f64, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map(|x| {
            let forms = local_forms(c, x);
            match generalized_minimum(&forms.cd_form(d), &forms.gamma) {
                FormMinimum::Finite { value, witness } => (value, forms.embed(n, &witness)),
                FormMinimum::NegInfinite { witness } => {
                    (f64::NEG_INFINITY, forms.embed(n, &witness))
                }
                FormMinimum::PosInfinite => (f64::INFINITY, vec![0.0; n]),
            }
        })
        .collect();
    let mut warnings = Vec::new();
    for (x, (k, _)) in per.iter().enumerate() {
        if *k == f64::INFINITY {
            warnings.push(format!(
                "state {x} is isolated: the Γ-form vanishes, curvature set to +inf"
            ));
        }
    }
    let (witness_state, global) = per.iter().enumerate().fold(
        (0, f64::INFINITY),
        |acc, (x, (k, _))| if *k < acc.1 { (x, *k) } else { acc },
    );
    let witness = per[witness_state].1.clone();
    let verified = if global.is_finite() {
        classical_ratio(c, &witness, witness_state, d)
    } else {
        global
    };
    Ok(CurvatureReport {
        mode: CurvatureMode::Classical,
        global_kappa: global,
        per_state: per.iter().map(|p| p.0).collect(),
        witness,
        witness_state,
        dimension_term: if d.is_infinite() {
            DimensionTerm::None
        } else {
            DimensionTerm::Quadratic { d }
        },
        budget: None,
        seed: None,
        lowest_verified_ratio: verified,
        warnings,
    })
}

/// `Ψ_Υ(f)(x)`, `Ψ_{2,Υ}(f)(x)` and `(Lf)(x)` at one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantities {
    pub psi: f64,
    pub psi2: f64,
    pub lf: f64,
}

pub fn quantities(c: &Chain, f: &[f64], x: usize) -> Quantities {
    Quantities {
        psi: psi_upsilon_at(c, f, x),
        psi2: psi2_upsilon_at(c, f, x),
        lf: generator_at(c, f, x),
    }
}

/// Largest absolute local value tried by the searches; beyond this `e^z`
/// dominates every term and rounding takes over.
const AMPLITUDE_CAP: f64 = 40.0;

struct StateSearch<'a> {
    chain: &'a Chain,
    x: usize,
    /// ball around `x` without `x`; `f(x) = 0` is the gauge
    vars: Vec<usize>,
}

impl StateSearch<'_> {
    fn embed(&self, g: &[f64]) -> Vec<f64> {
        let mut f = vec![0.0; self.chain.n()];
        for (i, &s) in self.vars.iter().enumerate() {
            f[s] = g[i];
        }
        f
    }

    fn restrict(&self, f: &[f64]) -> Vec<f64> {
        self.vars.iter().map(|&s| f[s] - f[self.x]).collect()
    }

    fn eval<O: Fn(&Quantities) -> Option<f64>>(
        &self,
        g: &[f64],
        objective: &O,
    ) -> Option<(f64, Quantities)> {
        if g.iter().any(|v| !v.is_finite() || v.abs() > AMPLITUDE_CAP) {
            return None;
        }
        let f = self.embed(g);
        let q = quantities(self.chain, &f, self.x);
        if !(q.psi > 0.0) || !q.psi.is_finite() || !q.psi2.is_finite() {
            return None;
        }
        objective(&q).filter(|v| v.is_finite()).map(|v| (v, q))
    }
}

#[derive(Debug, Clone)]
struct Candidate {
    value: f64,
    g: Vec<f64>,
}

fn push_top(top: &mut Vec<Candidate>, cand: Candidate, k: usize) {
    let pos = top.partition_point(|c| c.value <= cand.value);
    if pos < k {
        top.insert(pos, cand);
        top.truncate(k);
    }
}

/// Minimizes `objective` over functions on the ball of `x` by random
/// sampling, Nelder-Mead descents from the best samples, and a
/// small-amplitude pass along the best directions and `extra_dirs`.
fn search_state<O>(
    c: &Chain,
    x: usize,
    budget: Budget,
    seed: u64,
    tag: u8,
    objective: &O,
    extra_dirs: &[Vec<f64>],
) -> Option<(f64, Vec<f64>)>
where
    O: Fn(&Quantities) -> Option<f64> + Sync,
{
    let ball = local_ball(c, x, 2);
    let s = StateSearch {
        chain: c,
        x,
        vars: ball[1..].to_vec(),
    };
    let dim = s.vars.len();
    if dim == 0 {
        return None;
    }
    let keep = budget.descents.max(1);
    let chunks = par_chunks(
        seed,
        stream_id(tag, x, 0),
        budget.samples,
        |rng: &mut ChaCha8Rng, _, count| {
            let mut top: Vec<Candidate> = Vec::new();
            let mut g = vec![0.0; dim];
            for _ in 0..count {
                let sigma = 10f64.powf(rng.random_range(-1.5..0.7));
                for v in g.iter_mut() {
                    *v = sigma * rng.sample::<f64, _>(StandardNormal);
                }
                if let Some((value, _)) = s.eval(&g, objective) {
                    push_top(
                        &mut top,
                        Candidate {
                            value,
                            g: g.clone(),
                        },
                        keep,
                    );
                }
            }
            top
        },
    );
    let mut top: Vec<Candidate> = Vec::new();
    for chunk in chunks {
        for cand in chunk {
            push_top(&mut top, cand, keep);
        }
    }
    let starts: Vec<Candidate> = top.iter().take(budget.descents).cloned().collect();
    let descended: Vec<Candidate> = starts
        .par_iter()
        .map(|start| {
            let obj = |g: &[f64]| s.eval(g, objective).map(|r| r.0).unwrap_or(f64::INFINITY);
            let scale = start.g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let mut m = nelder_mead(obj, &start.g, 0.25 * scale + 0.05, 300 * dim, 1e-13);
            // one restart shakes the simplex loose from premature collapse
            let scale = m.x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let m2 = nelder_mead(obj, &m.x, 0.1 * scale + 0.01, 300 * dim, 1e-14);
            if m2.value < m.value {
                m = m2;
            }
            Candidate {
                value: m.value,
                g: m.x,
            }
        })
        .collect();
    let mut all: Vec<Candidate> = top.clone();
    all.extend(descended);
    // small-amplitude pass
    let mut dirs: Vec<Vec<f64>> = all.iter().map(|cnd| cnd.g.clone()).collect();
    dirs.extend(extra_dirs.iter().map(|f| s.restrict(f)));
    for dir in &dirs {
        let norm = dir.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !(norm > 0.0) {
            continue;
        }
        for sign in [1.0, -1.0] {
            for eps in [1e-1, 1e-2, 1e-3, 1e-4] {
                let g: Vec<f64> = dir.iter().map(|v| sign * eps * v / norm).collect();
                if let Some((value, _)) = s.eval(&g, objective) {
                    all.push(Candidate { value, g });
                }
            }
        }
    }
    let best = all.into_iter().filter(|c| c.value.is_finite()).fold(
        None::<Candidate>,
        |acc, c| match acc {
            Some(a) if a.value <= c.value => Some(a),
            _ => Some(c),
        },
    )?;
    Some((best.value, s.embed(&best.g)))
}

fn upsilon_ratio(q: &Quantities) -> Option<f64> {
    Some(q.psi2 / q.psi)
}

/// Two-state chains: the ratio depends on `s = f(y) - f(x)` only, so scan it
/// densely on both signs and refine the best bracket by golden section.
fn two_state_scan(c: &Chain, x: usize) -> Option<(f64, Vec<f64>)> {
    let y = 1 - x;
    c.neighbors(x).first()?;
    let ratio = |s: f64| {
        let mut f = vec![0.0; 2];
        f[y] = s;
        let q = quantities(c, &f, x);
        if q.psi > 0.0 && q.psi2.is_finite() {
            q.psi2 / q.psi
        } else {
            f64::INFINITY
        }
    };
    let mut grid: Vec<f64> = logspace(1e-6, 30.0, 20_000);
    let neg: Vec<f64> = grid.iter().rev().map(|v| -v).collect();
    grid = neg.into_iter().chain(grid).collect();
    let vals: Vec<f64> = grid.iter().map(|&s| ratio(s)).collect();
    let (i, _) =
        vals.iter().enumerate().fold(
            (0, f64::INFINITY),
            |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc },
        );
    let (mut a, mut b) = (grid[i.saturating_sub(1)], grid[(i + 1).min(grid.len() - 1)]);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let c1 = b - phi * (b - a);
        let c2 = a + phi * (b - a);
        if ratio(c1) <= ratio(c2) {
            b = c2;
        } else {
            a = c1;
        }
    }
    let s_ref = 0.5 * (a + b);
    let (s_best, v_best) = if ratio(s_ref) < vals[i] {
        (s_ref, ratio(s_ref))
    } else {
        (grid[i], vals[i])
    };
    let mut f = vec![0.0; 2];
    f[y] = s_best;
    Some((v_best, f))
}

/// Estimates `inf Ψ_{2,Υ}(f)(x) / Ψ_Υ(f)(x)` over nonconstant `f` and all
/// states. The result is an upper bound on the optimal `κ` of `CD_Υ(κ,∞)`.
pub fn estimate_upsilon_kappa(c: &Chain, budget: Budget, seed: u64) -> Result<CurvatureReport> {
    if budget.samples == 0 {
        return invalid("budget needs at least one sample");
    }
    let n = c.n();
    let classical = classical_optimal_kappa(c, f64::INFINITY)?;
    let per: Vec<Option<(f64, Vec<f64>)>> = (0..n)
        .map(|x| {
            if n == 2 {
                two_state_scan(c, x)
            } else {
                let forms = local_forms(c, x);
                let extra = match generalized_minimum(&forms.gamma2, &forms.gamma) {
                    FormMinimum::Finite { witness, .. } | FormMinimum::NegInfinite { witness } => {
                        vec![forms.embed(n, &witness)]
                    }
                    FormMinimum::PosInfinite => vec![],
                };
                search_state(c, x, budget, seed, 1, &upsilon_ratio, &extra)
            }
        })
        .collect();
    let mut warnings = Vec::new();
    let per_state: Vec<f64> = per
        .iter()
        .enumerate()
        .map(|(x, p)| match p {
            Some((v, _)) => *v,
            None => {
                warnings.push(format!(
                    "state {x} has no neighbours: curvature set to +inf"
                ));
                f64::INFINITY
            }
        })
        .collect();
    let (witness_state, global) = per_state.iter().enumerate().fold(
        (0, f64::INFINITY),
        |acc, (x, &k)| if k < acc.1 { (x, k) } else { acc },
    );
    let witness = per[witness_state]
        .as_ref()
        .map(|p| p.1.clone())
        .unwrap_or_else(|| vec![0.0; n]);
    let verified = if global.is_finite() {
        let psi2 = crate::gamma::psi2_upsilon(c, &witness)?[witness_state];
        let psi = crate::gamma::psi_upsilon(c, &witness)?[witness_state];
        psi2 / psi
    } else {
        global
    };
    if global > classical.global_kappa + 1e-6 {
        warnings.push(format!(
            "estimate {global} exceeds the classical curvature {}; the search budget is likely too small",
            classical.global_kappa
        ));
    }
    Ok(CurvatureReport {
        mode: CurvatureMode::Upsilon,
        global_kappa: global,
        per_state,
        witness,
        witness_state,
        dimension_term: DimensionTerm::None,
        budget: Some(budget),
        seed: Some(seed),
        lowest_verified_ratio: verified,
        warnings,
    })
}

/// A concrete `(f, x)` with `Ψ_{2,Υ}(f)(x) < κ Ψ_Υ(f)(x) + F₀(-Lf(x))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationWitness {
    pub state: usize,
    pub f: Vec<f64>,
    pub psi2: f64,
    pub psi: f64,
    pub minus_lf: f64,
    pub f_term: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub kappa: f64,
    pub cd_function: Option<CDFunctionSpec>,
    pub violation_found: bool,
    /// Smallest `(Ψ₂ - κΨ - F₀(-Lf)) / Ψ` observed.
    pub min_normalized_slack: f64,
    pub witness: Option<ViolationWitness>,
    pub budget: Budget,
    pub seed: u64,
}

/// Searches for a violation of `CD_Υ(κ,F)`: `Ψ₂(f) >= κΨ_Υ(f) + F₀(-Lf)`.
/// A violation is reported only when the slack is negative beyond a
/// relative rounding allowance of `1e-9`.
pub fn verify_cd_upsilon(
    c: &Chain,
    kappa: f64,
    f: Option<&CDFunctionSpec>,
    budget: Budget,
    seed: u64,
) -> Result<VerificationReport> {
    if let Some(spec) = f {
        spec.validate()?;
    }
    if !kappa.is_finite() {
        return invalid("kappa must be finite");
    }
    let n = c.n();
    let f_term = |q: &Quantities| f.map(|s| s.eval(-q.lf)).unwrap_or(0.0);
    let objective = |q: &Quantities| Some((q.psi2 - kappa * q.psi - f_term(q)) / q.psi);
    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    for x in 0..n {
        let forms = local_forms(c, x);
        let extra = match generalized_minimum(&forms.gamma2, &forms.gamma) {
            FormMinimum::Finite { witness, .. } | FormMinimum::NegInfinite { witness } => {
                vec![forms.embed(n, &witness)]
            }
            FormMinimum::PosInfinite => vec![],
        };
        if let Some((v, g)) = search_state(c, x, budget, seed, 2, &objective, &extra) {
            if best.as_ref().is_none_or(|b| v < b.0) {
                best = Some((v, x, g));
            }
        }
    }
    let (min_normalized_slack, witness) = match best {
        None => (f64::INFINITY, None),
        Some((v, x, g)) => {
            let q = quantities(c, &g, x);
            let ft = f_term(&q);
            let slack = q.psi2 - kappa * q.psi - ft;
            let allowance = 1e-9 * (q.psi2.abs() + kappa.abs() * q.psi + ft);
            let w = (slack < -allowance).then(|| ViolationWitness {
                state: x,
                f: g,
                psi2: q.psi2,
                psi: q.psi,
                minus_lf: -q.lf,
                f_term: ft,
                slack,
            });
            (v, w)
        }
    };
    Ok(VerificationReport {
        kappa,
        cd_function: f.cloned(),
        violation_found: witness.is_some(),
        min_normalized_slack,
        witness,
        budget,
        seed,
    })
}

/// Source of `(w, z) = (-Lf(x), Ψ_{2,Υ}(f)(x))` pairs for envelope fits.
/// Local values `g` exclude the evaluation point, where `f = 0`.
pub trait EnvelopeModel: Sync {
    /// Number of evaluation points.
    fn points(&self) -> usize;
    fn dim(&self, point: usize) -> usize;
    fn wz(&self, point: usize, g: &[f64]) -> (f64, f64);
    /// Coefficients `a` with `w = aᵀg`.
    fn w_coefficients(&self, point: usize) -> Vec<f64>;
    /// Gradient of `z` in `g`; central differences unless overridden.
    fn z_gradient(&self, point: usize, g: &[f64], grad: &mut [f64]) -> f64 {
        let mut h = g.to_vec();
        for i in 0..g.len() {
            let step = 1e-6 * (1.0 + g[i].abs());
            h[i] = g[i] + step;
            let up = self.wz(point, &h).1;
            h[i] = g[i] - step;
            let down = self.wz(point, &h).1;
            h[i] = g[i];
            grad[i] = (up - down) / (2.0 * step);
        }
        self.wz(point, g).1
    }
    /// Structured sampling directions beyond i.i.d. Gaussians.
    fn special_directions(&self, _point: usize) -> Vec<Vec<f64>> {
        Vec::new()
    }
}

/// Envelope model of a finite chain, evaluated at every state.
pub struct ChainEnvelope<'a> {
    chain: &'a Chain,
    balls: Vec<Vec<usize>>,
}

impl<'a> ChainEnvelope<'a> {
    pub fn new(chain: &'a Chain) -> Self {
        let balls = (0..chain.n()).map(|x| local_ball(chain, x, 2)).collect();
        ChainEnvelope { chain, balls }
    }

    fn embed(&self, point: usize, g: &[f64]) -> Vec<f64> {
        let mut f = vec![0.0; self.chain.n()];
        for (i, &s) in self.balls[point][1..].iter().enumerate() {
            f[s] = g[i];
        }
        f
    }
}

impl EnvelopeModel for ChainEnvelope<'_> {
    fn points(&self) -> usize {
        self.chain.n()
    }
    fn dim(&self, point: usize) -> usize {
        self.balls[point].len() - 1
    }
    fn wz(&self, point: usize, g: &[f64]) -> (f64, f64) {
        let f = self.embed(point, g);
        (
            -generator_at(self.chain, &f, point),
            psi2_upsilon_at(self.chain, &f, point),
        )
    }
    fn w_coefficients(&self, point: usize) -> Vec<f64> {
        self.balls[point][1..]
            .iter()
            .map(|&s| -self.chain.rate(point, s))
            .collect()
    }
    fn special_directions(&self, point: usize) -> Vec<Vec<f64>> {
        // f = -indicator of the evaluation point, in gauge form
        vec![vec![1.0; self.dim(point)]]
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnvelopeOptions {
    pub samples: usize,
    /// Sampling amplitudes are log-uniform on `[10^lo, 10^hi]`.
    pub amplitude_log10: (f64, f64),
    pub bins_per_decade: usize,
    /// L-BFGS iterations for the per-bin constrained refinement (0 disables).
    pub refine_iterations: usize,
}

impl Default for EnvelopeOptions {
    fn default() -> Self {
        EnvelopeOptions {
            samples: 20_000,
            amplitude_log10: (-4.0, 0.5),
            bins_per_decade: 32,
            refine_iterations: 60,
        }
    }
}

/// Lower envelope of sampled `(w, z)` pairs, fitted as a CD-function.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnvelopeFit {
    pub spec: CDFunctionSpec,
    /// `F(w) ≈ c w^γ̂` from a log-log regression on the lowest decade.
    pub c: f64,
    pub gamma_hat: f64,
    /// Raw per-bin minima `(w, z)` before the monotone projection.
    pub bins: Vec<(f64, f64)>,
    pub positive_samples: usize,
}

#[derive(Debug, Clone)]
struct BinEntry {
    w: f64,
    z: f64,
    point: usize,
    g: Vec<f64>,
}

fn merge_bin(map: &mut BTreeMap<i64, BinEntry>, key: i64, e: BinEntry) {
    match map.get(&key) {
        Some(old) if old.z / old.w <= e.z / e.w => {}
        _ => {
            map.insert(key, e);
        }
    }
}

/// Minimizes `z` over `aᵀg = w` starting from `g0`.
fn refine_bin<M: EnvelopeModel + ?Sized>(model: &M, e: &BinEntry, iterations: usize) -> BinEntry {
    let a = model.w_coefficients(e.point);
    let aa: f64 = a.iter().map(|v| v * v).sum();
    let project = |h: &[f64]| -> Vec<f64> {
        let ah: f64 = a.iter().zip(h).map(|(x, y)| x * y).sum();
        let t = (e.w - ah) / aa;
        h.iter().zip(&a).map(|(hv, av)| hv + t * av).collect()
    };
    let mut grad_full = vec![0.0; e.g.len()];
    let m = lbfgs(
        |h, grad| {
            let g = project(h);
            if g.iter().any(|v| v.abs() > AMPLITUDE_CAP) {
                return f64::INFINITY;
            }
            let z = model.z_gradient(e.point, &g, &mut grad_full);
            let ag: f64 = a.iter().zip(&grad_full).map(|(x, y)| x * y).sum();
            for i in 0..grad.len() {
                grad[i] = grad_full[i] - ag / aa * a[i];
            }
            // scale so the descent is amplitude-independent
            z / e.w.max(1e-300)
        },
        &e.g,
        8,
        iterations,
        1e-12,
    );
    let g = project(&m.x);
    let (w, z) = model.wz(e.point, &g);
    if z.is_finite() && z < e.z && (w - e.w).abs() <= 1e-9 * e.w {
        BinEntry {
            w,
            z,
            point: e.point,
            g,
        }
    } else {
        e.clone()
    }
}

pub fn fit_cd_function<M: EnvelopeModel + ?Sized>(
    model: &M,
    samples: usize,
    seed: u64,
) -> Result<EnvelopeFit> {
    fit_cd_function_with(
        model,
        &EnvelopeOptions {
            samples,
            ..Default::default()
        },
        seed,
    )
}

pub fn fit_cd_function_with<M: EnvelopeModel + ?Sized>(
    model: &M,
    opts: &EnvelopeOptions,
    seed: u64,
) -> Result<EnvelopeFit> {
    if opts.samples < 100 {
        return invalid(format!(
            "envelope fit needs at least 100 samples, got {}",
            opts.samples
        ));
    }
    let bpd = opts.bins_per_decade as f64;
    let points = model.points();
    let specials: Vec<Vec<Vec<f64>>> = (0..points).map(|p| model.special_directions(p)).collect();
    let (lo, hi) = opts.amplitude_log10;
    let chunks = par_chunks(
        seed,
        stream_id(3, 0, 0),
        opts.samples,
        |rng: &mut ChaCha8Rng, start, count| {
            let mut map: BTreeMap<i64, BinEntry> = BTreeMap::new();
            let mut positive = 0usize;
            for i in start..start + count {
                let point = i % points;
                let dim = model.dim(point);
                if dim == 0 {
                    continue;
                }
                let sigma = 10f64.powf(rng.random_range(lo..hi));
                let sp = &specials[point];
                let mut g: Vec<f64> = if !sp.is_empty() && rng.random_bool(0.3) {
                    let base = &sp[rng.random_range(0..sp.len())];
                    let noise = 10f64.powf(rng.random_range(-4.0..-0.5));
                    base.iter()
                        .map(|v| v + noise * rng.sample::<f64, _>(StandardNormal))
                        .collect()
                } else {
                    (0..dim)
                        .map(|_| rng.sample::<f64, _>(StandardNormal))
                        .collect()
                };
                let norm = g.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                for v in g.iter_mut() {
                    *v *= sign * sigma / norm;
                }
                let (w, z) = model.wz(point, &g);
                if !(w > 0.0) || !z.is_finite() || !w.is_finite() {
                    continue;
                }
                positive += 1;
                let key = (w.log10() * bpd).floor() as i64;
                merge_bin(&mut map, key, BinEntry { w, z, point, g });
            }
            (map, positive)
        },
    );
    let mut map: BTreeMap<i64, BinEntry> = BTreeMap::new();
    let mut positive = 0;
    for (m, p) in chunks {
        positive += p;
        for (k, e) in m {
            merge_bin(&mut map, k, e);
        }
    }
    if positive < 10 {
        return invalid(format!(
            "only {positive} samples with -Lf > 0; need at least 10"
        ));
    }
    let mut entries: Vec<BinEntry> = map.into_values().collect();
    if opts.refine_iterations > 0 {
        entries = entries
            .par_iter()
            .map(|e| refine_bin(model, e, opts.refine_iterations))
            .collect();
    }
    let bins: Vec<(f64, f64)> = entries.iter().map(|e| (e.w, e.z)).collect();
    build_envelope(&bins, positive)
}

/// Turns per-bin minima into a tabulated CD-function: a right-running
/// minimum makes `F(w)/w` nondecreasing (keeping the lower value), a tilt
/// of relative size `1e-10` makes it strict, and power/exponential
/// extensions are fitted on the lowest and highest decades.
pub fn build_envelope(bins: &[(f64, f64)], positive_samples: usize) -> Result<EnvelopeFit> {
    if bins.len() < 3 {
        return invalid("envelope needs at least 3 occupied bins");
    }
    if let Some(&(w, z)) = bins.iter().find(|b| !(b.1 > 0.0)) {
        return Err(Error::InvalidCdFunction(format!(
            "sampled Ψ₂ is not positive at w = {w:e} (z = {z:e}); no CD-function envelope exists"
        )));
    }
    let n = bins.len();
    let xs: Vec<f64> = bins.iter().map(|b| b.0).collect();
    let mut r: Vec<f64> = bins.iter().map(|b| b.1 / b.0).collect();
    for i in (0..n - 1).rev() {
        r[i] = r[i].min(r[i + 1]);
    }
    let on_envelope: Vec<bool> = (0..n)
        .map(|i| bins[i].1 / bins[i].0 <= r[i] * (1.0 + 1e-12))
        .collect();
    for (i, v) in r.iter_mut().enumerate() {
        *v *= 1.0 - 1e-10 * (n - 1 - i) as f64;
    }
    let z: Vec<f64> = xs.iter().zip(&r).map(|(x, r)| x * r).collect();
    let decade = |from_low: bool| -> Vec<usize> {
        let idx: Vec<usize> = if from_low {
            (0..n).filter(|&i| xs[i] <= 10.0 * xs[0]).collect()
        } else {
            (0..n).filter(|&i| xs[i] >= xs[n - 1] / 10.0).collect()
        };
        if idx.len() >= 3 {
            idx
        } else if from_low {
            (0..3).collect()
        } else {
            (n - 3..n).collect()
        }
    };
    // regress on bins that sit on the envelope; clamped bins were undersampled
    let mut low: Vec<usize> = decade(true)
        .into_iter()
        .filter(|&i| on_envelope[i])
        .collect();
    if low.len() < 3 {
        let active: Vec<usize> = (0..n).filter(|&i| on_envelope[i]).collect();
        low = if active.len() >= 3 {
            active[..3].to_vec()
        } else {
            decade(true)
        };
    }
    let lx: Vec<f64> = low.iter().map(|&i| xs[i].ln()).collect();
    let lz: Vec<f64> = low.iter().map(|&i| z[i].ln()).collect();
    let (gamma_hat, intercept, _) = linear_fit(&lx, &lz);
    let c = intercept.exp();
    let low_gamma = gamma_hat.max(1.0 + 1e-6);
    let low_c = z[0] / xs[0].powf(low_gamma);
    let high = decade(false);
    let hx: Vec<f64> = high.iter().map(|&i| xs[i]).collect();
    let hz: Vec<f64> = high.iter().map(|&i| z[i].ln()).collect();
    let (slope, _, _) = linear_fit(&hx, &hz);
    let high_a = slope.max(1.0 / xs[n - 1]);
    let spec = CDFunctionSpec::Tabulated(TabulatedCd {
        x: xs,
        ratio: r,
        low_c,
        low_gamma,
        high_a,
    });
    spec.validate()?;
    Ok(EnvelopeFit {
        spec,
        c,
        gamma_hat,
        bins: bins.to_vec(),
        positive_samples,
    })
}
