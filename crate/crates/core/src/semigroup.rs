//! Heat semigroup `P_t = e^{tL}` on reversible chains, entropy and Fisher
//! information, and numerical checks of the entropy identities, decay bounds
//! and the modified log-Sobolev constant.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gamma::{psi2_upsilon, psi_upsilon};
use crate::json;
use crate::markov::{Chain, ProbabilityDensity};
use crate::numeric::diff::{first_derivative, second_derivative, Order};
use crate::numeric::optimize::nelder_mead;
use crate::sampling::{par_chunks, stream_id};

/// Values below this are treated as zero before taking logarithms.
pub const DENSITY_FLOOR: f64 = 1e-300;

fn require_reversible(c: &Chain) -> Result<()> {
    if !c.is_reversible() {
        return Err(Error::NotReversible(format!(
            "the chain is not reversible w.r.t. its measure (defect {:.3e}); pass the reversible form \
             (a measure satisfying detailed balance) to evolve densities",
            c.detailed_balance_defect()
        )));
    }
    Ok(())
}

/// Spectral form of `e^{tL}` for a reversible chain:
/// `e^{tQ} = D^{-1/2} U e^{tΛ} Uᵀ D^{1/2}` with `D = diag(π)`.
#[derive(Debug, Clone)]
pub struct Propagator {
    sqrt_pi: Vec<f64>,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
}

impl Propagator {
    pub fn new(c: &Chain) -> Result<Self> {
        require_reversible(c)?;
        let n = c.n();
        let sqrt_pi: Vec<f64> = c.pi().iter().map(|p| p.sqrt()).collect();
        let q = c.generator_matrix();
        let mut s = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                s[(i, j)] = sqrt_pi[i] * q[(i, j)] / sqrt_pi[j];
            }
        }
        let s = 0.5 * (&s + s.transpose());
        let e = SymmetricEigen::new(s);
        Ok(Propagator {
            sqrt_pi,
            eigenvalues: e.eigenvalues,
            eigenvectors: e.eigenvectors,
        })
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    /// `P_t f` at each of `times`.
    pub fn apply_many(&self, f: &[f64], times: &[f64]) -> Vec<Vec<f64>> {
        let n = f.len();
        let g = DVector::from_iterator(n, f.iter().zip(&self.sqrt_pi).map(|(a, b)| a * b));
        let coeff = self.eigenvectors.transpose() * g;
        times
            .iter()
            .map(|&t| {
                let scaled = DVector::from_iterator(
                    n,
                    (0..n).map(|k| coeff[k] * (self.eigenvalues[k] * t).exp()),
                );
                let v = &self.eigenvectors * scaled;
                (0..n).map(|i| v[i] / self.sqrt_pi[i]).collect()
            })
            .collect()
    }

    pub fn apply(&self, f: &[f64], t: f64) -> Vec<f64> {
        self.apply_many(f, &[t]).pop().unwrap()
    }
}

/// `P_t f` by uniformization: `e^{tQ} = Σ_k Poisson(qt; k) P^k`, `P = I + Q/q`,
/// with `t` split so that each stage has `qt <= 16`.
pub fn evolve_uniformization(c: &Chain, f: &[f64], t: f64) -> Result<Vec<f64>> {
    c.check_len(f)?;
    if !(t >= 0.0) {
        return invalid("time must be nonnegative");
    }
    let q = c.max_out_rate();
    if q == 0.0 || t == 0.0 {
        return Ok(f.to_vec());
    }
    let stages = ((q * t) / 16.0).ceil().max(1.0) as usize;
    let lambda = q * t / stages as f64;
    let mut cur = f.to_vec();
    for _ in 0..stages {
        let mut term = cur.clone();
        let mut weight = (-lambda).exp();
        let mut acc: Vec<f64> = term.iter().map(|v| weight * v).collect();
        let mut mass = weight;
        let mut k = 0usize;
        while 1.0 - mass > 1e-17 && k < 1000 {
            k += 1;
            // term <- P term
            let next: Vec<f64> = (0..c.n())
                .map(|x| {
                    let lf: f64 = c
                        .neighbors(x)
                        .iter()
                        .map(|&(y, r)| r * (term[y] - term[x]))
                        .sum();
                    term[x] + lf / q
                })
                .collect();
            term = next;
            weight *= lambda / k as f64;
            mass += weight;
            for (a, v) in acc.iter_mut().zip(&term) {
                *a += weight * v;
            }
        }
        cur = acc;
    }
    Ok(cur)
}

/// `P_t f` for an arbitrary state function at each time.
pub fn evolve_function(c: &Chain, f: &[f64], times: &[f64]) -> Result<Vec<Vec<f64>>> {
    c.check_len(f)?;
    check_times(times)?;
    Ok(Propagator::new(c)?.apply_many(f, times))
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() || !(times[0] >= 0.0) || times.windows(2).any(|w| !(w[1] > w[0])) {
        return invalid("times must be nonnegative and strictly increasing");
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemigroupTrace {
    pub times: Vec<f64>,
    pub densities: Vec<Vec<f64>>,
    pub entropy: Vec<f64>,
    #[serde(with = "json::ext_vec")]
    pub fisher: Vec<f64>,
}

impl SemigroupTrace {
    pub fn to_csv(&self) -> String {
        let n = self.densities.first().map_or(0, |d| d.len());
        let mut s = String::from("t");
        for i in 0..n {
            s.push_str(&format!(",f{i}"));
        }
        s.push_str(",H,I\n");
        for k in 0..self.times.len() {
            s.push_str(&format!("{:.17e}", self.times[k]));
            for v in &self.densities[k] {
                s.push_str(&format!(",{v:.17e}"));
            }
            s.push_str(&format!(
                ",{:.17e},{:.17e}\n",
                self.entropy[k], self.fisher[k]
            ));
        }
        s
    }
}

/// Evolves a density; for reversible chains the density w.r.t. `μ` follows `e^{tL}`.
pub fn evolve(c: &Chain, f0: &ProbabilityDensity, times: &[f64]) -> Result<SemigroupTrace> {
    check_times(times)?;
    let densities = Propagator::new(c)?.apply_many(f0.values(), times);
    let mut entropy = Vec::with_capacity(times.len());
    let mut fisher = Vec::with_capacity(times.len());
    for d in &densities {
        let (h, i) = entropy_fisher_values(c, d);
        entropy.push(h);
        fisher.push(i);
    }
    Ok(SemigroupTrace {
        times: times.to_vec(),
        densities,
        entropy,
        fisher,
    })
}

fn entropy_fisher_values(c: &Chain, f: &[f64]) -> (f64, f64) {
    let pi = c.pi();
    let ln = |v: f64| v.max(DENSITY_FLOOR).ln();
    let mut h = 0.0;
    for x in 0..c.n() {
        if f[x] >= DENSITY_FLOOR {
            h += f[x] * f[x].ln() * pi[x];
        }
    }
    let mut i = 0.0;
    for x in 0..c.n() {
        for &(y, k) in c.neighbors(x) {
            let (a, b) = (f[x], f[y]);
            if a == b {
                continue;
            }
            if a <= 0.0 || b <= 0.0 {
                return (h, f64::INFINITY);
            }
            i += 0.5 * k * (b - a) * (ln(b) - ln(a)) * pi[x];
        }
    }
    (h, i)
}

/// Relative entropy `Σ f log f π` and Fisher information
/// `½ Σ k(x,y)(f(y)-f(x))(log f(y) - log f(x)) π(x)`.
pub fn entropy_fisher(c: &Chain, f: &ProbabilityDensity) -> Result<(f64, f64)> {
    require_reversible(c)?;
    Ok(entropy_fisher_values(c, f.values()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityResidual {
    pub identity: String,
    pub max_residual: f64,
    /// Time of the largest residual.
    pub at_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub first: IdentityResidual,
    pub second: IdentityResidual,
    pub stencil_order: u32,
}

/// Compares finite differences of `𝓗(P_t f)` on a uniform trace with
/// `-∫ P_t f Ψ_Υ(log P_t f) dμ` and `2 ∫ P_t f Ψ_{2,Υ}(log P_t f) dμ`.
/// Residuals are relative to the right-hand side where it is nonzero.
pub fn check_entropy_identities(c: &Chain, trace: &SemigroupTrace) -> Result<IdentityReport> {
    check_entropy_identities_with(c, trace, Order::Eighth)
}

pub fn check_entropy_identities_with(
    c: &Chain,
    trace: &SemigroupTrace,
    order: Order,
) -> Result<IdentityReport> {
    require_reversible(c)?;
    let m = trace.times.len();
    if m < 5 || m < 2 * order.half_width() + 1 {
        return invalid(format!(
            "grid too coarse: {m} points cannot support second differences"
        ));
    }
    let h = (trace.times[m - 1] - trace.times[0]) / (m - 1) as f64;
    for (k, t) in trace.times.iter().enumerate() {
        if (t - (trace.times[0] + k as f64 * h)).abs() > 1e-9 * h {
            return invalid("entropy identity check needs a uniform time grid");
        }
    }
    let d1 = first_derivative(&trace.entropy, h, order);
    let d2 = second_derivative(&trace.entropy, h, order);
    let mut first = (0.0f64, trace.times[0]);
    let mut second = (0.0f64, trace.times[0]);
    for k in 0..m {
        let (Some(a1), Some(a2)) = (d1[k], d2[k]) else {
            continue;
        };
        let f = &trace.densities[k];
        if f.iter().any(|v| !(*v > 0.0)) {
            return invalid(format!(
                "density at t = {} is not strictly positive",
                trace.times[k]
            ));
        }
        let logf: Vec<f64> = f.iter().map(|v| v.max(DENSITY_FLOOR).ln()).collect();
        let psi = psi_upsilon(c, &logf)?;
        let psi2 = psi2_upsilon(c, &logf)?;
        let weighted = |g: &[f64]| -> f64 { (0..c.n()).map(|x| f[x] * g[x] * c.pi()[x]).sum() };
        let rhs1 = -weighted(&psi);
        let rhs2 = 2.0 * weighted(&psi2);
        let rel = |a: f64, b: f64| {
            if b != 0.0 {
                (a - b).abs() / b.abs()
            } else {
                (a - b).abs()
            }
        };
        let r1 = rel(a1, rhs1);
        let r2 = rel(a2, rhs2);
        if r1 > first.0 {
            first = (r1, trace.times[k]);
        }
        if r2 > second.0 {
            second = (r2, trace.times[k]);
        }
    }
    Ok(IdentityReport {
        first: IdentityResidual {
            identity: "dH/dt = -I".into(),
            max_residual: first.0,
            at_time: first.1,
        },
        second: IdentityResidual {
            identity: "d2H/dt2 = 2 int f Psi2(log f)".into(),
            max_residual: second.0,
            at_time: second.1,
        },
        stencil_order: order.accuracy(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub kappa: f64,
    /// `min_t e^{-2κt}𝓗(f) - 𝓗(P_t f)`
    pub worst_entropy_slack: f64,
    pub worst_entropy_time: f64,
    /// `min_{t,x} e^{-2κt}P_tΨ_Υ(f)(x) - Ψ_Υ(P_t f)(x)`
    pub worst_gradient_slack: f64,
    pub worst_gradient_time: f64,
    pub worst_gradient_state: usize,
    pub entropy_bound_holds: bool,
    pub gradient_bound_holds: bool,
}

/// Signed slacks of `𝓗(P_t f) <= e^{-2κt}𝓗(f)` (with `f` normalised to a
/// density) and of `Ψ_Υ(P_t f) <= e^{-2κt} P_t Ψ_Υ(f)` pointwise. A bound
/// counts as holding when its worst slack is `>= -1e-10`.
pub fn check_decay_and_gradient_bound(
    c: &Chain,
    kappa: f64,
    f0: &[f64],
    times: &[f64],
) -> Result<DecayReport> {
    c.check_len(f0)?;
    check_times(times)?;
    if f0.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return invalid("initial function must be strictly positive and finite");
    }
    let prop = Propagator::new(c)?;
    let density = ProbabilityDensity::normalized(c, f0.to_vec())?;
    let (h0, _) = entropy_fisher_values(c, density.values());
    let dens_t = prop.apply_many(density.values(), times);
    let f_t = prop.apply_many(f0, times);
    let psi0 = psi_upsilon(c, f0)?;
    let p_psi = prop.apply_many(&psi0, times);
    let mut rep = DecayReport {
        kappa,
        worst_entropy_slack: f64::INFINITY,
        worst_entropy_time: times[0],
        worst_gradient_slack: f64::INFINITY,
        worst_gradient_time: times[0],
        worst_gradient_state: 0,
        entropy_bound_holds: true,
        gradient_bound_holds: true,
    };
    for (k, &t) in times.iter().enumerate() {
        let decay = (-2.0 * kappa * t).exp();
        let (h, _) = entropy_fisher_values(c, &dens_t[k]);
        let es = decay * h0 - h;
        if es < rep.worst_entropy_slack {
            rep.worst_entropy_slack = es;
            rep.worst_entropy_time = t;
        }
        let psi_t = psi_upsilon(c, &f_t[k])?;
        for x in 0..c.n() {
            let gs = decay * p_psi[k][x] - psi_t[x];
            if gs < rep.worst_gradient_slack {
                rep.worst_gradient_slack = gs;
                rep.worst_gradient_time = t;
                rep.worst_gradient_state = x;
            }
        }
    }
    rep.entropy_bound_holds = rep.worst_entropy_slack >= -1e-10;
    rep.gradient_bound_holds = rep.worst_gradient_slack >= -1e-10;
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlsiReport {
    /// Smallest `𝓘(f) / (2𝓗(f))` found: an upper bound on the MLSI constant.
    pub kappa_mlsi: f64,
    pub witness: Vec<f64>,
    pub rejected_near_uniform: usize,
    pub samples: usize,
    pub seed: u64,
}

/// Entropies below this are rejected to avoid `0/0` near the uniform density.
pub const MIN_ENTROPY: f64 = 1e-14;

/// Infimum of `𝓘(f) / (2𝓗(f))` over sampled positive densities, refined by
/// Nelder-Mead descents in log-density coordinates.
pub fn estimate_mlsi(c: &Chain, samples: usize, seed: u64) -> Result<MlsiReport> {
    require_reversible(c)?;
    if samples < 100 {
        return invalid(format!(
            "MLSI estimate needs at least 100 samples, got {samples}"
        ));
    }
    let n = c.n();
    if n < 2 {
        return invalid("every density on a single state has zero entropy");
    }
    let ratio = |g: &[f64]| -> Option<f64> {
        if g.iter().any(|v| v.abs() > 50.0) {
            return None;
        }
        let raw: Vec<f64> = g.iter().map(|v| v.exp()).collect();
        let mass = c.integrate(&raw);
        let f: Vec<f64> = raw.iter().map(|v| v / mass).collect();
        let (h, i) = entropy_fisher_values(c, &f);
        (h >= MIN_ENTROPY && i.is_finite()).then(|| i / (2.0 * h))
    };
    let chunks = par_chunks(
        seed,
        stream_id(4, 0, 0),
        samples,
        |rng: &mut ChaCha8Rng, _, count| {
            let mut best: Vec<(f64, Vec<f64>)> = Vec::new();
            let mut rejected = 0usize;
            for _ in 0..count {
                let sigma = 10f64.powf(rng.random_range(-2.0..0.8));
                let g: Vec<f64> = (0..n)
                    .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                match ratio(&g) {
                    Some(r) => {
                        let pos = best.partition_point(|b| b.0 <= r);
                        if pos < 8 {
                            best.insert(pos, (r, g));
                            best.truncate(8);
                        }
                    }
                    None => rejected += 1,
                }
            }
            (best, rejected)
        },
    );
    let mut best: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut rejected = 0;
    for (b, r) in chunks {
        rejected += r;
        for cand in b {
            let pos = best.partition_point(|x| x.0 <= cand.0);
            best.insert(pos, cand);
        }
    }
    best.truncate(8);
    if best.is_empty() {
        return invalid("all sampled densities had vanishing entropy");
    }
    let refined: Vec<(f64, Vec<f64>)> = best
        .par_iter()
        .map(|(_, g)| {
            let m = nelder_mead(
                |g| ratio(g).unwrap_or(f64::INFINITY),
                g,
                0.3,
                400 * n,
                1e-13,
            );
            (m.value, m.x)
        })
        .collect();
    let (value, g) = best
        .into_iter()
        .chain(refined)
        .fold((f64::INFINITY, Vec::new()), |acc, c| {
            if c.0 < acc.0 {
                c
            } else {
                acc
            }
        });
    let raw: Vec<f64> = g.iter().map(|v| v.exp()).collect();
    let mass = c.integrate(&raw);
    Ok(MlsiReport {
        kappa_mlsi: value,
        witness: raw.iter().map(|v| v / mass).collect(),
        rejected_near_uniform: rejected,
        samples,
        seed,
    })
}
