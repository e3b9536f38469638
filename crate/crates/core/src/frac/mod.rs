//! Fractional heat kernels on ℝ and the checks built on them: Li-Yau
//! constants, Harnack fits, the reduction inequality and CD counterexample
//! certificates.

mod counterexample;
mod kernel;
mod nonlocal;

pub use counterexample::{
    bump_grid, search_bump_counterexample, verify_cd_counterexample, BumpSearchReport,
    CdClassification, CounterexampleOptions, CounterexamplePoint, CounterexampleReport,
};
pub use kernel::{
    frac_kernel, stable_density, stable_density_std, tail_coefficient, FracKernelGrid,
};
pub use nonlocal::{
    nonlocal_eval, nonlocal_eval_many, GridFunction, NonlocalEvaluation, NonlocalKind,
    NonlocalRule, TailFn, TailModel,
};

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub(crate) use kernel::check_beta;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FracGrid {
    pub half_width: f64,
    pub h: f64,
}

impl Default for FracGrid {
    fn default() -> Self {
        FracGrid {
            half_width: 40.0,
            h: 0.02,
        }
    }
}

/// `log G(t,·)` on the kernel grid, with a log-power tail of slope `-(1+β)`
/// whose constants are fitted on the outer quarter of each side.
pub fn log_kernel_function(kern: &FracKernelGrid) -> GridFunction {
    let slope = -(1.0 + kern.beta);
    let n = kern.x.len();
    let quarter = n / 8;
    let fit = |range: std::ops::Range<usize>| {
        let m = range.len() as f64;
        range
            .map(|i| kern.g[i].ln() - slope * kern.x[i].abs().ln())
            .sum::<f64>()
            / m
    };
    let left = fit(0..quarter);
    let right = fit(n - quarter..n);
    GridFunction::new(
        kern.x[0],
        kern.h,
        kern.g.iter().map(|g| g.ln()).collect(),
        Some(TailModel::Log { slope, left, right }),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClyRow {
    pub t: f64,
    /// `sup_x t (-Δ)^{β/2} log G`.
    pub s: f64,
    pub s_error: f64,
    pub s_argmax: f64,
    /// `sup_x t |∂_t G| / G`.
    pub t_ratio: f64,
    /// `sup_x t (|∂_t log G| + Ψ_Υ(log G))`.
    pub dh: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClyReport {
    pub beta: f64,
    pub grid: FracGrid,
    pub rows: Vec<ClyRow>,
    pub c_ly: f64,
    pub t_max: f64,
    pub dh_max: f64,
}

/// Suprema are taken over the grid nodes with `|x| <= X/4`.
pub fn estimate_cly(beta: f64, times: &[f64], grid: FracGrid) -> Result<ClyReport> {
    check_beta(beta)?;
    if times.is_empty() {
        return invalid("no times given");
    }
    let mut rows = Vec::with_capacity(times.len());
    for &t in times {
        let kern = frac_kernel(beta, t, grid.half_width, grid.h)?;
        let dt = t / 100.0;
        let plus = frac_kernel(beta, t + dt, grid.half_width, grid.h)?;
        let minus = frac_kernel(beta, t - dt, grid.half_width, grid.h)?;
        let logg = log_kernel_function(&kern);
        let inner = kern.x_half_width / 4.0;
        let idx: Vec<usize> = (0..kern.x.len())
            .filter(|&i| kern.x[i].abs() <= inner + 1e-12)
            .collect();
        let xs: Vec<f64> = idx.iter().map(|&i| kern.x[i]).collect();
        let lap = nonlocal_eval_many(&logg, beta, &xs, NonlocalKind::FracLaplacian)?;
        let psi = nonlocal_eval_many(&logg, beta, &xs, NonlocalKind::PsiUpsilon)?;
        let (mut s, mut s_error, mut s_argmax) = (f64::NEG_INFINITY, 0.0, 0.0);
        let (mut t_ratio, mut dh) = (0.0f64, 0.0f64);
        for (j, &i) in idx.iter().enumerate() {
            let v = t * lap[j].value;
            if v > s {
                s = v;
                s_error = t * lap[j].error;
                s_argmax = xs[j];
            }
            let dtg = (plus.g[i] - minus.g[i]) / (2.0 * dt);
            t_ratio = t_ratio.max(t * dtg.abs() / kern.g[i]);
            dh = dh.max(t * ((dtg / kern.g[i]).abs() + psi[j].value));
        }
        if s_error > 0.01 * s.abs() {
            return Err(Error::Quadrature(format!(
                "Li-Yau constant at t = {t}: error {s_error:.3e} exceeds 1% of {s:.6}"
            )));
        }
        rows.push(ClyRow {
            t,
            s,
            s_error,
            s_argmax,
            t_ratio,
            dh,
        });
    }
    let c_ly = rows.iter().map(|r| r.s).fold(f64::NEG_INFINITY, f64::max);
    let t_max = rows.iter().map(|r| r.t_ratio).fold(0.0, f64::max);
    let dh_max = rows.iter().map(|r| r.dh).fold(0.0, f64::max);
    Ok(ClyReport {
        beta,
        grid,
        rows,
        c_ly,
        t_max,
        dh_max,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FracPair {
    pub t1: f64,
    pub x1: f64,
    pub t2: f64,
    pub x2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HarnackSource {
    Kernel,
    Constant {
        value: f64,
    },
    /// `Σ m_i G(t, x - y_i)`.
    Mixture {
        points: Vec<(f64, f64)>,
    },
}

impl HarnackSource {
    pub fn eval(&self, beta: f64, t: f64, x: f64) -> f64 {
        match self {
            HarnackSource::Kernel => stable_density(beta, t, x),
            HarnackSource::Constant { value } => *value,
            HarnackSource::Mixture { points } => points
                .iter()
                .map(|(y, m)| m * stable_density(beta, t, x - y))
                .sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnackFitRow {
    pub pair: FracPair,
    pub log_ratio: f64,
    /// Smallest `C >= 0` for which the pair satisfies the Harnack inequality.
    pub c_required: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnackFitReport {
    pub beta: f64,
    pub c_ly: f64,
    pub rows: Vec<HarnackFitRow>,
    pub c_binding: f64,
    pub binding_pair: Option<FracPair>,
}

/// Fits `C` in `u(t1,x1) <= u(t2,x2) (t2/t1)^{C_LY} exp(C (1 + |Δx|^{β+1} / Δt^{1+1/β}))`.
pub fn harnack_fit(
    beta: f64,
    c_ly: f64,
    pairs: &[FracPair],
    source: &HarnackSource,
) -> Result<HarnackFitReport> {
    check_beta(beta)?;
    for p in pairs {
        if !(p.t1 > 0.0 && p.t2 > p.t1) {
            return invalid(format!("pair needs 0 < t1 < t2, got {p:?}"));
        }
    }
    if let HarnackSource::Constant { value } = source {
        if !(*value > 0.0) {
            return invalid("constant source must be positive");
        }
    }
    let rows: Vec<HarnackFitRow> = pairs
        .par_iter()
        .map(|p| {
            let u1 = source.eval(beta, p.t1, p.x1);
            let u2 = source.eval(beta, p.t2, p.x2);
            let log_ratio = u1.ln() - u2.ln();
            let num = log_ratio - c_ly * (p.t2 / p.t1).ln();
            let den =
                1.0 + (p.x2 - p.x1).abs().powf(beta + 1.0) / (p.t2 - p.t1).powf(1.0 + 1.0 / beta);
            HarnackFitRow {
                pair: *p,
                log_ratio,
                c_required: (num / den).max(0.0),
            }
        })
        .collect();
    let mut c_binding = 0.0;
    let mut binding_pair = None;
    for r in &rows {
        if r.c_required > c_binding {
            c_binding = r.c_required;
            binding_pair = Some(r.pair);
        }
    }
    Ok(HarnackFitReport {
        beta,
        c_ly,
        rows,
        c_binding,
        binding_pair,
    })
}

/// Deterministic pairs with `t1 < t2` in `[t_lo, t_hi]` and `|x| <= x_max`.
pub fn random_frac_pairs(
    t_lo: f64,
    t_hi: f64,
    x_max: f64,
    count: usize,
    seed: u64,
) -> Vec<FracPair> {
    use rand::Rng;
    let mut rng = crate::sampling::stream_rng(seed, 0);
    (0..count)
        .map(|_| {
            let a = t_lo * (t_hi / t_lo).powf(rng.random::<f64>());
            let b = t_lo * (t_hi / t_lo).powf(rng.random::<f64>());
            let (t1, t2) = if a < b {
                (a, b)
            } else {
                (b, a * (1.0 + 1e-9) + 1e-12)
            };
            FracPair {
                t1,
                x1: x_max * (2.0 * rng.random::<f64>() - 1.0),
                t2,
                x2: x_max * (2.0 * rng.random::<f64>() - 1.0),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionRow {
    pub x: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    pub rows: Vec<ReductionRow>,
    pub min_slack: f64,
    pub holds: bool,
}

impl ReductionReport {
    fn from_rows(rows: Vec<ReductionRow>) -> Self {
        let min_slack = rows.iter().map(|r| r.slack).fold(f64::INFINITY, f64::min);
        let scale = rows.iter().map(|r| r.lhs.abs()).fold(0.0, f64::max);
        let holds = min_slack >= -1e-12 * scale.max(1e-300);
        ReductionReport {
            rows,
            min_slack,
            holds,
        }
    }
}

/// Checks `∫ f(y) H(x,y) Ψ_Υ(log H(·,y))(x) dy >= P_f(x) Ψ_Υ(log P_f)(x)`,
/// `P_f = ∫ f(y) H(·,y) dy`, with `H(x,y) = G(t, x - y)` from the kernel table
/// and `f` given as positive point weights `(y_i, f_i)`.
///
/// All functions live on the nodes `|x| <= X/2` of the kernel lattice and
/// share one far-field closure (table, then linear interpolation, then the
/// power asymptote), so the discrete rule sees one common quadrature.
pub fn reduction_inequality_check(
    kern: &FracKernelGrid,
    weights: &[(f64, f64)],
    xs: &[f64],
) -> Result<ReductionReport> {
    if weights.is_empty() || weights.iter().any(|(_, f)| !(*f > 0.0)) {
        return invalid("weights must be positive");
    }
    let half = kern.half_nodes() as i64;
    let m = half / 2;
    let h = kern.h;
    let table = Arc::new(kern.g[half as usize..].to_vec());
    let amp = kern.t * tail_coefficient(kern.beta);
    let beta = kern.beta;
    let xe = kern.x_half_width;
    let g_of = {
        let table = table.clone();
        move |d: f64| -> f64 {
            let d = d.abs();
            let r = d / h;
            let k = r.round();
            if (r - k).abs() < 1e-7 && (k as i64) <= half {
                table[k as usize]
            } else if d < xe {
                let i = r.floor() as usize;
                let w = r - i as f64;
                (1.0 - w) * table[i] + w * table[i + 1]
            } else {
                amp * d.powf(-1.0 - beta)
            }
        }
    };
    let mut ys = Vec::with_capacity(weights.len());
    for (y, f) in weights {
        let r = y / h;
        if (r - r.round()).abs() > 1e-7 || r.round().abs() > m as f64 {
            return invalid(format!(
                "weight point y = {y} must be a lattice node with |y| <= X/2"
            ));
        }
        ys.push((r.round() as i64, *y, *f));
    }
    let x0 = -(m as f64) * h;
    let n = (2 * m + 1) as usize;
    let node_val = |k: i64, ki: i64| table[(k - ki).unsigned_abs() as usize];
    let logs: Vec<GridFunction> = ys
        .iter()
        .map(|&(ki, yi, _)| {
            let values = (0..n as i64).map(|j| node_val(j - m, ki).ln()).collect();
            let g = g_of.clone();
            GridFunction::new(
                x0,
                h,
                values,
                Some(TailModel::Function(Arc::new(move |z| g(z - yi).ln()))),
            )
        })
        .collect();
    let pf_values: Vec<f64> = (0..n as i64)
        .map(|j| ys.iter().map(|&(ki, _, f)| f * node_val(j - m, ki)).sum())
        .collect();
    let pf_log = {
        let g = g_of.clone();
        let pts: Vec<(f64, f64)> = ys.iter().map(|&(_, y, f)| (y, f)).collect();
        GridFunction::new(
            x0,
            h,
            pf_values.iter().map(|v| v.ln()).collect(),
            Some(TailModel::Function(Arc::new(move |z| {
                pts.iter().map(|(y, f)| f * g(z - y)).sum::<f64>().ln()
            }))),
        )
    };
    let rows = xs
        .par_iter()
        .map(|&x| -> Result<ReductionRow> {
            let mut rule = NonlocalRule::new(beta)?;
            let kx = pf_log
                .node_of(x)
                .ok_or_else(|| Error::InvalidArgument(format!("x = {x} is not a node")))?;
            let mut lhs = 0.0;
            for (lf, &(_, _, f)) in logs.iter().zip(&ys) {
                let hi = lf.values[kx as usize].exp();
                lhs += f * hi * rule.eval(lf, x, NonlocalKind::PsiUpsilon)?.value;
            }
            let rhs =
                pf_values[kx as usize] * rule.eval(&pf_log, x, NonlocalKind::PsiUpsilon)?.value;
            Ok(ReductionRow {
                x,
                lhs,
                rhs,
                slack: lhs - rhs,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ReductionReport::from_rows(rows))
}

/// Classical counterpart with the Gaussian heat kernel `H = (4πt)^{-1/2} e^{-(x-y)²/4t}`
/// and central-difference gradients: `∫ f |∇H|²/H >= |∇P_f|²/P_f`.
pub fn reduction_inequality_check_classical(
    t: f64,
    weights: &[(f64, f64)],
    xs: &[f64],
    fd_step: f64,
) -> Result<ReductionReport> {
    if !(t > 0.0 && fd_step > 0.0) {
        return invalid("need t > 0 and a positive difference step");
    }
    if weights.is_empty() || weights.iter().any(|(_, f)| !(*f > 0.0)) {
        return invalid("weights must be positive");
    }
    let heat = |x: f64, y: f64| {
        (-(x - y) * (x - y) / (4.0 * t)).exp() / (4.0 * std::f64::consts::PI * t).sqrt()
    };
    let rows = xs
        .iter()
        .map(|&x| {
            let (mut lhs, mut p, mut dp) = (0.0, 0.0, 0.0);
            for &(y, f) in weights {
                let hv = heat(x, y);
                let d = (heat(x + fd_step, y) - heat(x - fd_step, y)) / (2.0 * fd_step);
                lhs += f * d * d / hv;
                p += f * hv;
                dp += f * d;
            }
            let rhs = dp * dp / p;
            ReductionRow {
                x,
                lhs,
                rhs,
                slack: lhs - rhs,
            }
        })
        .collect();
    Ok(ReductionReport::from_rows(rows))
}
