//! Pointwise Γ-calculus on finite chains: `L`, `Γ`, `Γ₂`, `Ψ_H`, `B_{Υ'}`
//! and `Ψ_{2,Υ}`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::markov::Chain;
use crate::numeric::{upsilon, upsilon_prime};

/// `(Lf)(x) = sum_y k(x,y)(f(y) - f(x))`.
pub fn generator_at(c: &Chain, f: &[f64], x: usize) -> f64 {
    let fx = f[x];
    c.neighbors(x).iter().map(|&(y, k)| k * (f[y] - fx)).sum()
}

pub fn apply_generator(c: &Chain, f: &[f64]) -> Result<Vec<f64>> {
    c.check_len(f)?;
    Ok((0..c.n()).map(|x| generator_at(c, f, x)).collect())
}

/// Bilinear carré du champ `Γ(f,g)(x) = ½ sum_y k(x,y)(f(y)-f(x))(g(y)-g(x))`.
pub fn gamma_bilinear_at(c: &Chain, f: &[f64], g: &[f64], x: usize) -> f64 {
    0.5 * c
        .neighbors(x)
        .iter()
        .map(|&(y, k)| k * (f[y] - f[x]) * (g[y] - g[x]))
        .sum::<f64>()
}

pub fn gamma_bilinear(c: &Chain, f: &[f64], g: &[f64]) -> Result<Vec<f64>> {
    c.check_len(f)?;
    c.check_len(g)?;
    Ok((0..c.n()).map(|x| gamma_bilinear_at(c, f, g, x)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GammaOrder {
    First,
    Second,
}

/// `Γ(f)` or `Γ₂(f) = ½(LΓ(f) - 2Γ(f,Lf))`, the mixed term obtained by
/// polarization `Γ(f,g) = ¼(Γ(f+g) - Γ(f-g))`.
pub fn carre_du_champ(c: &Chain, f: &[f64], order: GammaOrder) -> Result<Vec<f64>> {
    c.check_len(f)?;
    let n = c.n();
    let gamma_f: Vec<f64> = (0..n).map(|x| gamma_bilinear_at(c, f, f, x)).collect();
    if order == GammaOrder::First {
        return Ok(gamma_f);
    }
    let lf = apply_generator(c, f)?;
    let plus: Vec<f64> = f.iter().zip(&lf).map(|(a, b)| a + b).collect();
    let minus: Vec<f64> = f.iter().zip(&lf).map(|(a, b)| a - b).collect();
    Ok((0..n)
        .map(|x| {
            let mixed = 0.25
                * (gamma_bilinear_at(c, &plus, &plus, x) - gamma_bilinear_at(c, &minus, &minus, x));
            0.5 * (generator_at(c, &gamma_f, x) - 2.0 * mixed)
        })
        .collect())
}

/// `Γ₂(f)(x)` from the direct bilinear form, touching only the 2-ball of `x`.
pub fn gamma2_at(c: &Chain, f: &[f64], x: usize) -> f64 {
    let lf_x = generator_at(c, f, x);
    let gx = gamma_bilinear_at(c, f, f, x);
    let mut lgamma = 0.0;
    let mut mixed = 0.0;
    for &(y, k) in c.neighbors(x) {
        lgamma += k * (gamma_bilinear_at(c, f, f, y) - gx);
        mixed += k * (f[y] - f[x]) * (generator_at(c, f, y) - lf_x);
    }
    0.5 * (lgamma - mixed)
}

/// Scalar function `H` with `H(0) = 0` used in `Ψ_H(f)(x) = sum_y k(x,y) H(f(y)-f(x))`.
#[derive(Clone)]
pub enum HFunction {
    /// `Υ(z) = e^z - 1 - z`
    Upsilon,
    /// `z²/2`, recovering `Γ`
    Square,
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for HFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HFunction::Upsilon => write!(f, "Upsilon"),
            HFunction::Square => write!(f, "Square"),
            HFunction::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl HFunction {
    pub fn eval(&self, z: f64) -> f64 {
        match self {
            HFunction::Upsilon => upsilon(z),
            HFunction::Square => 0.5 * z * z,
            HFunction::Custom(h) => h(z),
        }
    }
}

pub fn psi_upsilon_at(c: &Chain, f: &[f64], x: usize) -> f64 {
    let fx = f[x];
    c.neighbors(x)
        .iter()
        .map(|&(y, k)| k * upsilon(f[y] - fx))
        .sum()
}

pub fn psi_h(c: &Chain, f: &[f64], h: &HFunction) -> Result<Vec<f64>> {
    c.check_len(f)?;
    let h0 = h.eval(0.0);
    if h0.abs() > 1e-14 {
        return invalid(format!("H(0) must vanish, got {h0}"));
    }
    Ok((0..c.n())
        .map(|x| {
            let fx = f[x];
            c.neighbors(x)
                .iter()
                .map(|&(y, k)| k * h.eval(f[y] - fx))
                .sum()
        })
        .collect())
}

pub fn psi_upsilon(c: &Chain, f: &[f64]) -> Result<Vec<f64>> {
    c.check_len(f)?;
    Ok((0..c.n()).map(|x| psi_upsilon_at(c, f, x)).collect())
}

/// `B_{Υ'}(f,g)(x) = sum_y k(x,y) Υ'(f(y)-f(x)) (g(y)-g(x))`.
pub fn b_upsilon_prime_at(c: &Chain, f: &[f64], g: &[f64], x: usize) -> f64 {
    c.neighbors(x)
        .iter()
        .map(|&(y, k)| k * upsilon_prime(f[y] - f[x]) * (g[y] - g[x]))
        .sum()
}

pub fn b_upsilon_prime(c: &Chain, f: &[f64], g: &[f64]) -> Result<Vec<f64>> {
    c.check_len(f)?;
    c.check_len(g)?;
    Ok((0..c.n()).map(|x| b_upsilon_prime_at(c, f, g, x)).collect())
}

/// `Ψ_{2,Υ}(f)(x) = ½(LΨ_Υ(f)(x) - B_{Υ'}(f, Lf)(x))`, using only the 2-ball of `x`.
pub fn psi2_upsilon_at(c: &Chain, f: &[f64], x: usize) -> f64 {
    let psi_x = psi_upsilon_at(c, f, x);
    let lf_x = generator_at(c, f, x);
    let mut acc = 0.0;
    for &(y, k) in c.neighbors(x) {
        let dpsi = psi_upsilon_at(c, f, y) - psi_x;
        let dlf = generator_at(c, f, y) - lf_x;
        acc += k * (dpsi - upsilon_prime(f[y] - f[x]) * dlf);
    }
    0.5 * acc
}

pub fn psi2_upsilon(c: &Chain, f: &[f64]) -> Result<Vec<f64>> {
    c.check_len(f)?;
    let psi = psi_upsilon(c, f)?;
    let lf = apply_generator(c, f)?;
    let lpsi = apply_generator(c, &psi)?;
    let b = b_upsilon_prime(c, f, &lf)?;
    Ok(lpsi.iter().zip(&b).map(|(a, b)| 0.5 * (a - b)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorTag {
    Generator,
    Gamma,
    Gamma2,
    PsiUpsilon,
    Psi2Upsilon,
    BUpsilonPrime,
    PsiH,
}

/// Output of an operator evaluation, tagged with the operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorResult {
    pub values: Vec<f64>,
    pub operator_tag: OperatorTag,
}

/// Evaluates a one-argument operator by tag. `B_{Υ'}` takes `g = Lf`.
pub fn evaluate(c: &Chain, f: &[f64], tag: OperatorTag) -> Result<OperatorResult> {
    let values = match tag {
        OperatorTag::Generator => apply_generator(c, f)?,
        OperatorTag::Gamma => carre_du_champ(c, f, GammaOrder::First)?,
        OperatorTag::Gamma2 => carre_du_champ(c, f, GammaOrder::Second)?,
        OperatorTag::PsiUpsilon => psi_upsilon(c, f)?,
        OperatorTag::Psi2Upsilon => psi2_upsilon(c, f)?,
        OperatorTag::BUpsilonPrime => {
            let lf = apply_generator(c, f)?;
            b_upsilon_prime(c, f, &lf)?
        }
        OperatorTag::PsiH => psi_h(c, f, &HFunction::Upsilon)?,
    };
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("{tag:?} produced {v}")));
    }
    Ok(OperatorResult {
        values,
        operator_tag: tag,
    })
}
