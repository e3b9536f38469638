//! Special functions not covered by `statrs`.

pub use statrs::function::gamma::{gamma, ln_gamma};

/// Hurwitz zeta `sum_{k>=0} (k + q)^{-s}` for `s > 1`, `q > 0`,
/// by direct summation followed by an Euler-Maclaurin tail.
pub fn hurwitz_zeta(s: f64, q: f64) -> f64 {
    assert!(s > 1.0 && q > 0.0, "hurwitz_zeta needs s > 1, q > 0");
    const N: usize = 12;
    // Bernoulli numbers B_2, B_4, ..., B_16
    const B2K: [f64; 8] = [
        1.0 / 6.0,
        -1.0 / 30.0,
        1.0 / 42.0,
        -1.0 / 30.0,
        5.0 / 66.0,
        -691.0 / 2730.0,
        7.0 / 6.0,
        -3617.0 / 510.0,
    ];
    let mut sum = 0.0;
    for k in 0..N {
        sum += (k as f64 + q).powf(-s);
    }
    let a = N as f64 + q;
    sum += a.powf(1.0 - s) / (s - 1.0) + 0.5 * a.powf(-s);
    // term_k = B_2k / (2k)! * s(s+1)...(s+2k-2) a^{-s-2k+1}
    let mut poch = s;
    let mut fact = 2.0;
    let mut apow = a.powf(-s - 1.0);
    for (k, b) in B2K.iter().enumerate() {
        let term = b / fact * poch * apow;
        sum += term;
        let k2 = 2.0 * (k as f64 + 1.0);
        poch *= (s + k2 - 1.0) * (s + k2);
        fact *= (k2 + 1.0) * (k2 + 2.0);
        apow /= a * a;
    }
    sum
}

/// Normalising constant of the one-dimensional fractional Laplacian of
/// order `beta` in (0, 2): `2^beta Gamma((1+beta)/2) / (sqrt(pi) |Gamma(-beta/2)|)`.
pub fn frac_laplacian_constant(beta: f64) -> f64 {
    assert!(beta > 0.0 && beta < 2.0);
    2f64.powf(beta) * gamma(0.5 * (1.0 + beta))
        / (std::f64::consts::PI.sqrt() * gamma(-0.5 * beta).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn hurwitz_matches_riemann_zeta_values() {
        assert!((hurwitz_zeta(2.0, 1.0) - PI * PI / 6.0).abs() < 1e-14);
        assert!((hurwitz_zeta(4.0, 1.0) - PI.powi(4) / 90.0).abs() < 1e-14);
        // zeta(2, 1/2) = 3 zeta(2)
        assert!((hurwitz_zeta(2.0, 0.5) - PI * PI / 2.0).abs() < 1e-13);
    }

    #[test]
    fn hurwitz_against_brute_force_fractional_exponent() {
        let s = 1.7;
        let q = 3.3;
        let n = 2_000_000;
        let mut direct: f64 = (0..n).map(|k| (k as f64 + q).powf(-s)).sum();
        direct += (n as f64 + q - 0.5).powf(1.0 - s) / (s - 1.0);
        assert!((hurwitz_zeta(s, q) - direct).abs() < 1e-10);
    }

    #[test]
    fn laplacian_constant_reference_values() {
        assert!((frac_laplacian_constant(1.0) - 1.0 / PI).abs() < 1e-14);
        // beta = 1/2 : 2^{1/2} Gamma(3/4) / (sqrt(pi) Gamma(-1/4)) in abs value
        let v = 2f64.sqrt() * gamma(0.75) / (PI.sqrt() * gamma(-0.25).abs());
        assert!((frac_laplacian_constant(0.5) - v).abs() < 1e-15);
    }
}
