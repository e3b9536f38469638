//! Central finite differences on uniformly sampled series.

/// Stencil order for central differences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Order {
    Second,
    Fourth,
    Sixth,
    Eighth,
}

impl Order {
    /// Number of samples excluded at each end of the series.
    pub fn half_width(self) -> usize {
        match self {
            Order::Second => 1,
            Order::Fourth => 2,
            Order::Sixth => 3,
            Order::Eighth => 4,
        }
    }

    pub fn accuracy(self) -> u32 {
        match self {
            Order::Second => 2,
            Order::Fourth => 4,
            Order::Sixth => 6,
            Order::Eighth => 8,
        }
    }

    fn first_weights(self) -> &'static [f64] {
        match self {
            Order::Second => &[-0.5, 0.0, 0.5],
            Order::Fourth => &[1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0],
            Order::Sixth => &[
                -1.0 / 60.0,
                3.0 / 20.0,
                -3.0 / 4.0,
                0.0,
                3.0 / 4.0,
                -3.0 / 20.0,
                1.0 / 60.0,
            ],
            Order::Eighth => &[
                1.0 / 280.0,
                -4.0 / 105.0,
                1.0 / 5.0,
                -4.0 / 5.0,
                0.0,
                4.0 / 5.0,
                -1.0 / 5.0,
                4.0 / 105.0,
                -1.0 / 280.0,
            ],
        }
    }

    fn second_weights(self) -> &'static [f64] {
        match self {
            Order::Second => &[1.0, -2.0, 1.0],
            Order::Fourth => &[-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0],
            Order::Sixth => &[
                1.0 / 90.0,
                -3.0 / 20.0,
                3.0 / 2.0,
                -49.0 / 18.0,
                3.0 / 2.0,
                -3.0 / 20.0,
                1.0 / 90.0,
            ],
            Order::Eighth => &[
                -1.0 / 560.0,
                8.0 / 315.0,
                -1.0 / 5.0,
                8.0 / 5.0,
                -205.0 / 72.0,
                8.0 / 5.0,
                -1.0 / 5.0,
                8.0 / 315.0,
                -1.0 / 560.0,
            ],
        }
    }
}

fn apply(values: &[f64], weights: &[f64], scale: f64) -> Vec<Option<f64>> {
    let hw = weights.len() / 2;
    (0..values.len())
        .map(|i| {
            if i < hw || i + hw >= values.len() {
                None
            } else {
                let s: f64 = weights
                    .iter()
                    .enumerate()
                    .map(|(k, w)| w * values[i + k - hw])
                    .sum();
                Some(s / scale)
            }
        })
        .collect()
}

/// First derivative at every sample with a full stencil; `None` at the ends.
pub fn first_derivative(values: &[f64], step: f64, order: Order) -> Vec<Option<f64>> {
    apply(values, order.first_weights(), step)
}

/// Second derivative at every sample with a full stencil; `None` at the ends.
pub fn second_derivative(values: &[f64], step: f64, order: Order) -> Vec<Option<f64>> {
    apply(values, order.second_weights(), step * step)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stencils_are_exact_on_polynomials_of_their_order() {
        let h = 0.1;
        for (order, deg) in [
            (Order::Second, 2),
            (Order::Fourth, 4),
            (Order::Sixth, 6),
            (Order::Eighth, 8),
        ] {
            let xs: Vec<f64> = (0..15).map(|i| i as f64 * h).collect();
            let ys: Vec<f64> = xs.iter().map(|x| x.powi(deg)).collect();
            let d1 = first_derivative(&ys, h, order);
            let d2 = second_derivative(&ys, h, order);
            for i in 0..xs.len() {
                if let (Some(a), Some(b)) = (d1[i], d2[i]) {
                    let x = xs[i];
                    assert!((a - deg as f64 * x.powi(deg - 1)).abs() < 1e-9);
                    assert!((b - (deg * (deg - 1)) as f64 * x.powi(deg - 2)).abs() < 1e-7);
                } else {
                    assert!(i < order.half_width() || i + order.half_width() >= xs.len());
                }
            }
        }
    }
}
