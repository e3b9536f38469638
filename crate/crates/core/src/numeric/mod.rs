//! Numerical building blocks shared by the analysis modules: adaptive
//! Gauss-Kronrod quadrature, Gauss-Legendre rules, small unconstrained
//! optimizers, central finite differences and a few special functions.

pub mod diff;
pub mod optimize;
pub mod quad;
pub mod special;

/// Stable evaluation of `e^z - 1 - z`.
///
/// For small arguments the subtraction `expm1(z) - z` loses relative
/// accuracy, so a truncated Taylor series is used there.
pub fn upsilon(z: f64) -> f64 {
    if z.abs() < 0.1 {
        // z^2/2! + z^3/3! + ... + z^12/12!
        let mut term = z * z / 2.0;
        let mut sum = term;
        for k in 3..=12 {
            term *= z / k as f64;
            sum += term;
        }
        sum
    } else {
        z.exp_m1() - z
    }
}

/// Derivative of [`upsilon`]: `e^z - 1`.
#[inline]
pub fn upsilon_prime(z: f64) -> f64 {
    z.exp_m1()
}

/// `log(e^z - 1 - z)` for `z != 0`, without overflow for large `z`.
pub fn ln_upsilon(z: f64) -> f64 {
    if z > 30.0 {
        // e^z (1 - (1 + z) e^{-z})
        z + (-(1.0 + z) * (-z).exp()).ln_1p()
    } else {
        upsilon(z).ln()
    }
}

/// Log-spaced grid of `n` points on `[a, b]`, `0 < a < b`.
pub fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(a > 0.0 && b > a && n >= 2);
    let (la, lb) = (a.ln(), b.ln());
    (0..n)
        .map(|i| {
            if i == 0 {
                a
            } else if i + 1 == n {
                b
            } else {
                (la + (lb - la) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// Uniform grid of `n` points on `[a, b]`.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Ordinary least-squares line `y = slope * x + intercept`; returns
/// `(slope, intercept, rms residual)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum();
    (slope, intercept, (rss / n).sqrt())
}

/// Sum with pairwise reduction; keeps reductions reproducible and accurate
/// independent of how the terms were produced.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 16 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}
