//! Symmetric β-stable densities `G(t,x) = (1/2π)∫ cos(ξx) e^{-t|ξ|^β} dξ`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::numeric::quad::integrate;
use crate::numeric::special::{frac_laplacian_constant, gamma};

pub(crate) fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta < 2.0) {
        return invalid(format!("beta must lie in (0, 2), got {beta}"));
    }
    Ok(())
}

/// `e^z - 1` without cancellation for small `|z|`.
fn cexpm1(z: Complex64) -> Complex64 {
    let (x, y) = (z.re, z.im);
    let s = (0.5 * y).sin();
    Complex64::new(x.exp_m1() * y.cos() - 2.0 * s * s, x.exp() * y.sin())
}

fn direct_cutoff(beta: f64) -> f64 {
    42f64.powf(1.0 / beta)
}

/// `(1/π)∫_0^R cos(ξy) e^{-ξ^β} dξ` on the real axis.
fn direct(beta: f64, y: f64) -> f64 {
    let r = direct_cutoff(beta);
    let q = integrate(
        |xi| (xi * y).cos() * (-xi.powf(beta)).exp(),
        0.0,
        r,
        1e-17,
        1e-13,
        4000,
    );
    q.value / PI
}

/// The same integral along the ray `ξ = r e^{iθ}`, `0 < θ <= π/2`,
/// `θ < π/(2β)`; the `e^{iξy}` part integrates to `i/y` (no real part), so
/// only `expm1(-ξ^β)` is integrated.
fn rotated(beta: f64, y: f64, theta: f64) -> f64 {
    let rot = Complex64::from_polar(1.0, theta);
    let rot_b = Complex64::from_polar(1.0, beta * theta);
    // expm1 tends to -1, so only e^{-r y sinθ} decays
    let r = 45.0 / (y * theta.sin());
    let f = |s: f64| {
        let z = Complex64::new(0.0, s * y) * rot;
        let v = rot * z.exp() * cexpm1(-s.powf(beta) * rot_b);
        v.re
    };
    let q = integrate(f, 0.0, r, 1e-300, 1e-13, 4000);
    q.value / PI
}

/// `G(1, y)`.
pub fn stable_density_std(beta: f64, y: f64) -> f64 {
    let y = y.abs();
    if y == 0.0 {
        gamma(1.0 + 1.0 / beta) / PI
    } else if y * direct_cutoff(beta) <= 200.0 {
        direct(beta, y)
    } else if beta < 1.0 {
        rotated(beta, y, 0.5 * PI)
    } else {
        rotated(beta, y, PI / (4.0 * beta))
    }
}

/// `G(t, x) = t^{-1/β} G(1, x t^{-1/β})`.
pub fn stable_density(beta: f64, t: f64, x: f64) -> f64 {
    let s = t.powf(1.0 / beta);
    stable_density_std(beta, x / s) / s
}

/// `∫_Y^∞ G(1,y) dy` from the asymptotic series, summed while its terms decrease.
fn tail_integral_std(beta: f64, y: f64) -> f64 {
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    let mut fact = 1.0;
    for k in 1..40 {
        let kf = k as f64;
        fact *= kf;
        let a =
            (-1f64).powi(k + 1) * gamma(kf * beta + 1.0) / fact * (0.5 * kf * PI * beta).sin() / PI;
        let term = a * y.powf(-kf * beta) / (kf * beta);
        if term.abs() >= prev {
            break;
        }
        prev = term.abs();
        sum += term;
    }
    sum
}

/// Coefficient of the power tail `G(1,y) ~ c y^{-1-β}`.
pub fn tail_coefficient(beta: f64) -> f64 {
    gamma(1.0 + beta) * (0.5 * PI * beta).sin() / PI
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FracKernelGrid {
    pub beta: f64,
    pub t: f64,
    pub x_half_width: f64,
    pub h: f64,
    pub x: Vec<f64>,
    pub g: Vec<f64>,
    /// `c_{β,1}` of the singular-integral form of `(-Δ)^{β/2}`.
    pub c_norm: f64,
    /// Simpson integral over the grid plus the modeled power tail.
    pub mass: f64,
    pub tail_mass: f64,
}

impl FracKernelGrid {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,G\n");
        for (x, g) in self.x.iter().zip(&self.g) {
            s.push_str(&format!("{x:.17e},{g:.17e}\n"));
        }
        s
    }

    pub fn half_nodes(&self) -> usize {
        (self.x.len() - 1) / 2
    }
}

/// Kernel on the symmetric grid `x_k = k h`, `|k| <= round(X/h)`; values are
/// computed for `x >= 0` and mirrored.
pub fn frac_kernel(beta: f64, t: f64, x_half_width: f64, h: f64) -> Result<FracKernelGrid> {
    check_beta(beta)?;
    if !(t > 0.0) || !t.is_finite() {
        return invalid(format!("time must be positive, got {t}"));
    }
    if !(h > 0.0 && h < x_half_width) {
        return invalid(format!("need 0 < h < X, got h = {h}, X = {x_half_width}"));
    }
    let half = (x_half_width / h).round() as usize;
    let pos: Vec<f64> = (0..=half)
        .into_par_iter()
        .map(|k| stable_density(beta, t, k as f64 * h))
        .collect();
    let mut x = Vec::with_capacity(2 * half + 1);
    let mut g = Vec::with_capacity(2 * half + 1);
    for k in (1..=half).rev() {
        x.push(-(k as f64) * h);
        g.push(pos[k]);
    }
    for (k, v) in pos.iter().enumerate() {
        x.push(k as f64 * h);
        g.push(*v);
    }
    let xe = half as f64 * h;
    // Simpson on [0, X] (pad to an even number of panels with a trapezoid)
    let mut simpson = 0.0;
    let even = half - half % 2;
    for k in (0..even).step_by(2) {
        simpson += h / 3.0 * (pos[k] + 4.0 * pos[k + 1] + pos[k + 2]);
    }
    if even < half {
        simpson += 0.5 * h * (pos[half - 1] + pos[half]);
    }
    let tail_mass = 2.0 * tail_integral_std(beta, xe * t.powf(-1.0 / beta));
    Ok(FracKernelGrid {
        beta,
        t,
        x_half_width: xe,
        h,
        x,
        g,
        c_norm: frac_laplacian_constant(beta),
        mass: 2.0 * simpson + tail_mass,
        tail_mass,
    })
}
