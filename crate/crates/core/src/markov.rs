//! Finite-state Markov generators, reference measures and named graphs.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Rates below this are stored as exact zeros.
pub const RATE_THRESHOLD: f64 = 1e-15;
/// Relative tolerance of the detailed-balance test.
pub const REVERSIBILITY_TOL: f64 = 1e-12;

/// How the reference measure of a chain is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum PiSpec {
    /// Counting measure normalised to a probability vector, `pi = 1/n`.
    Uniform,
    /// Positive left null vector of the generator, normalised to sum 1.
    Stationary,
    Given(Vec<f64>),
}

/// Immutable finite Markov generator with sparse off-diagonal rates.
///
/// The diagonal is never stored: `k(x,x) = -sum_{y != x} k(x,y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    n: usize,
    neighbors: Vec<Vec<(usize, f64)>>,
    pi: Vec<f64>,
    reversible: bool,
}

impl Chain {
    /// Builds a chain from off-diagonal triplets `(x, y, k(x,y))`.
    /// Repeated triplets for the same pair are rejected.
    pub fn new(n: usize, rates: &[(usize, usize, f64)], pi: PiSpec) -> Result<Self> {
        if n == 0 {
            return invalid("chain needs at least one state");
        }
        let mut neighbors: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(x, y, v) in rates {
            if x >= n || y >= n {
                return invalid(format!("rate index ({x},{y}) out of range for n = {n}"));
            }
            if x == y {
                return invalid(format!(
                    "diagonal rate given for state {x}; the diagonal is derived"
                ));
            }
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("rate k({x},{y}) = {v}")));
            }
            if v < 0.0 {
                return Err(Error::NegativeRate {
                    from: x,
                    to: y,
                    value: v,
                });
            }
            if neighbors[x].iter().any(|&(z, _)| z == y) {
                return invalid(format!("duplicate rate for pair ({x},{y})"));
            }
            neighbors[x].push((y, v));
        }
        for row in neighbors.iter_mut() {
            row.retain(|&(_, v)| v >= RATE_THRESHOLD);
            row.sort_by_key(|&(y, _)| y);
        }
        Self::from_neighbors(neighbors, pi)
    }

    /// Builds a chain from a dense square matrix; diagonal entries are ignored.
    pub fn from_dense(rates: &[Vec<f64>], pi: PiSpec) -> Result<Self> {
        let n = rates.len();
        let mut trip = Vec::new();
        for (x, row) in rates.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    got: row.len(),
                });
            }
            for (y, &v) in row.iter().enumerate() {
                if x != y && v != 0.0 {
                    trip.push((x, y, v));
                }
            }
        }
        Self::new(n, &trip, pi)
    }

    fn from_neighbors(neighbors: Vec<Vec<(usize, f64)>>, pi: PiSpec) -> Result<Self> {
        let n = neighbors.len();
        let mut chain = Chain {
            n,
            neighbors,
            pi: vec![1.0 / n as f64; n],
            reversible: false,
        };
        chain.pi = match pi {
            PiSpec::Uniform => vec![1.0 / n as f64; n],
            PiSpec::Given(p) => {
                if p.len() != n {
                    return Err(Error::Dimension {
                        expected: n,
                        got: p.len(),
                    });
                }
                if let Some((i, v)) = p
                    .iter()
                    .enumerate()
                    .find(|(_, v)| !(**v > 0.0) || !v.is_finite())
                {
                    return Err(Error::InvalidMeasure(format!(
                        "pi[{i}] = {v} is not strictly positive"
                    )));
                }
                p
            }
            PiSpec::Stationary => chain.stationary_distribution()?,
        };
        chain.reversible = chain.detailed_balance_defect() <= REVERSIBILITY_TOL;
        Ok(chain)
    }

    /// A chain with a single state and no transitions.
    pub fn single_state() -> Self {
        Chain {
            n: 1,
            neighbors: vec![Vec::new()],
            pi: vec![1.0],
            reversible: true,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn is_reversible(&self) -> bool {
        self.reversible
    }

    /// Nonzero off-diagonal rates out of `x`, sorted by target.
    pub fn neighbors(&self, x: usize) -> &[(usize, f64)] {
        &self.neighbors[x]
    }

    pub fn rate(&self, x: usize, y: usize) -> f64 {
        self.neighbors[x]
            .binary_search_by_key(&y, |&(z, _)| z)
            .map(|i| self.neighbors[x][i].1)
            .unwrap_or(0.0)
    }

    /// Total jump rate out of `x` (minus the diagonal entry).
    pub fn out_rate(&self, x: usize) -> f64 {
        self.neighbors[x].iter().map(|&(_, v)| v).sum()
    }

    pub fn degree(&self, x: usize) -> usize {
        self.neighbors[x].len()
    }

    pub fn max_out_rate(&self) -> f64 {
        (0..self.n).map(|x| self.out_rate(x)).fold(0.0, f64::max)
    }

    /// Off-diagonal triplets in row-major order.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for (x, row) in self.neighbors.iter().enumerate() {
            for &(y, v) in row {
                out.push((x, y, v));
            }
        }
        out
    }

    /// Full generator matrix `Q` with rows summing to zero.
    pub fn generator_matrix(&self) -> DMatrix<f64> {
        let mut q = DMatrix::zeros(self.n, self.n);
        for (x, row) in self.neighbors.iter().enumerate() {
            let mut diag = 0.0;
            for &(y, v) in row {
                q[(x, y)] = v;
                diag += v;
            }
            q[(x, x)] = -diag;
        }
        q
    }

    /// Largest relative violation of `pi(x)k(x,y) = pi(y)k(y,x)`.
    pub fn detailed_balance_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for x in 0..self.n {
            for &(y, v) in &self.neighbors[x] {
                let a = self.pi[x] * v;
                let b = self.pi[y] * self.rate(y, x);
                worst = worst.max((a - b).abs() / a.abs().max(b.abs()));
            }
        }
        worst
    }

    fn stationary_distribution(&self) -> Result<Vec<f64>> {
        let n = self.n;
        if n == 1 {
            return Ok(vec![1.0]);
        }
        let q = self.generator_matrix();
        let scale = q.amax().max(f64::MIN_POSITIVE);
        let qt = q.transpose() / scale;
        let svd = qt.clone().svd(false, true);
        let v_t = svd.v_t.as_ref().expect("requested V^T");
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
        let smallest = svd.singular_values[order[0]];
        let second = svd.singular_values[order[1]];
        let tol = 1e-10 * n as f64;
        if smallest > tol || second <= tol {
            return Err(Error::NonUniqueStationary(format!(
                "null space of the generator is not one-dimensional (singular values {smallest:.3e}, {second:.3e})"
            )));
        }
        let mut p: Vec<f64> = v_t.row(order[0]).iter().copied().collect();
        let s: f64 = p.iter().sum();
        for v in p.iter_mut() {
            *v /= s;
        }
        if p.iter().any(|&v| v <= 0.0) {
            return Err(Error::NonUniqueStationary(
                "stationary vector is not strictly positive".into(),
            ));
        }
        // one step of iterative refinement on the bordered system [Q^T; 1^T] p = [0; 1]
        let mut a = DMatrix::zeros(n + 1, n);
        a.view_mut((0, 0), (n, n)).copy_from(&qt);
        for j in 0..n {
            a[(n, j)] = 1.0;
        }
        let pv = nalgebra::DVector::from_vec(p.clone());
        let mut rhs = nalgebra::DVector::zeros(n + 1);
        rhs[n] = 1.0;
        let r = &rhs - &a * &pv;
        if let Ok(delta) = a.clone().svd(true, true).solve(&r, 1e-14) {
            let refined: Vec<f64> = (&pv + delta).iter().copied().collect();
            if refined.iter().all(|&v| v > 0.0) {
                p = refined;
            }
        }
        Ok(p)
    }

    /// Residual `max_y |(pi Q)(y)|` relative to `max |Q|`.
    pub fn stationarity_residual(&self) -> f64 {
        let q = self.generator_matrix();
        let p = nalgebra::RowDVector::from_row_slice(&self.pi);
        let r = p * &q;
        r.amax() / q.amax().max(f64::MIN_POSITIVE)
    }

    /// Checks a state function length.
    pub fn check_len(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: f.len(),
            });
        }
        Ok(())
    }

    /// `sum_x f(x) pi(x)`.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.pi).map(|(a, b)| a * b).sum()
    }
}

/// Named unweighted graphs with unit edge rates and uniform measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StandardGraph {
    Complete(usize),
    Hypercube(usize),
    /// Star with `m` leaves; state 0 is the center.
    Star(usize),
}

pub fn standard_graph(kind: StandardGraph) -> Result<Chain> {
    let mut edges = Vec::new();
    let n = match kind {
        StandardGraph::Complete(n) => {
            if n < 2 {
                return invalid(format!("complete graph needs n >= 2, got {n}"));
            }
            for x in 0..n {
                for y in 0..n {
                    if x != y {
                        edges.push((x, y, 1.0));
                    }
                }
            }
            n
        }
        StandardGraph::Hypercube(d) => {
            if d < 1 {
                return invalid("hypercube needs dimension >= 1");
            }
            if d > 20 {
                return invalid(format!("hypercube dimension {d} is too large"));
            }
            let n = 1usize << d;
            for x in 0..n {
                for b in 0..d {
                    edges.push((x, x ^ (1 << b), 1.0));
                }
            }
            n
        }
        StandardGraph::Star(m) => {
            if m < 2 {
                return invalid(format!("star needs at least 2 leaves, got {m}"));
            }
            for leaf in 1..=m {
                edges.push((0, leaf, 1.0));
                edges.push((leaf, 0, 1.0));
            }
            m + 1
        }
    };
    Chain::new(n, &edges, PiSpec::Uniform)
}

/// Product chain with generator `L1 (+) L2` on states ordered `x1`-major:
/// `(x1, x2) -> x1 * b.n() + x2`.
pub fn tensor_product(a: &Chain, b: &Chain) -> Chain {
    let (na, nb) = (a.n, b.n);
    let mut neighbors = vec![Vec::new(); na * nb];
    for x1 in 0..na {
        for x2 in 0..nb {
            let row: &mut Vec<(usize, f64)> = &mut neighbors[x1 * nb + x2];
            for &(y1, v) in &a.neighbors[x1] {
                row.push((y1 * nb + x2, v));
            }
            for &(y2, v) in &b.neighbors[x2] {
                row.push((x1 * nb + y2, v));
            }
            row.sort_by_key(|&(y, _)| y);
        }
    }
    let mut pi = Vec::with_capacity(na * nb);
    for x1 in 0..na {
        for x2 in 0..nb {
            pi.push(a.pi[x1] * b.pi[x2]);
        }
    }
    let mut chain = Chain {
        n: na * nb,
        neighbors,
        pi,
        reversible: false,
    };
    chain.reversible = chain.detailed_balance_defect() <= REVERSIBILITY_TOL;
    chain
}

/// On-disk chain description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainFile {
    pub n: usize,
    pub rates: Vec<(usize, usize, f64)>,
    pub pi: PiField,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reversible_hint: Option<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PiField {
    Named(String),
    Values(Vec<f64>),
}

impl ChainFile {
    pub fn into_chain(self) -> Result<Chain> {
        let pi = match self.pi {
            PiField::Values(v) => PiSpec::Given(v),
            PiField::Named(s) if s == "uniform" => PiSpec::Uniform,
            PiField::Named(s) if s == "stationary" => PiSpec::Stationary,
            PiField::Named(s) => return Err(Error::Config(format!("unknown pi \"{s}\""))),
        };
        let chain = Chain::new(self.n, &self.rates, pi)?;
        if self.reversible_hint == Some(true) && !chain.is_reversible() {
            return Err(Error::NotReversible(format!(
                "reversible_hint is set but detailed balance fails (defect {:.3e})",
                chain.detailed_balance_defect()
            )));
        }
        Ok(chain)
    }

    pub fn from_chain(chain: &Chain) -> Self {
        ChainFile {
            n: chain.n(),
            rates: chain.triplets(),
            pi: PiField::Values(chain.pi().to_vec()),
            reversible_hint: Some(chain.is_reversible()),
        }
    }
}

pub fn chain_from_json(text: &str) -> Result<Chain> {
    let file: ChainFile = serde_json::from_str(text)?;
    file.into_chain()
}

pub fn chain_from_path(path: &std::path::Path) -> Result<Chain> {
    chain_from_json(&std::fs::read_to_string(path)?)
}

/// A nonnegative state function with `sum f pi = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityDensity(Vec<f64>);

impl ProbabilityDensity {
    pub fn new(chain: &Chain, values: Vec<f64>) -> Result<Self> {
        chain.check_len(&values)?;
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return invalid("density values must be finite and nonnegative");
        }
        let mass = chain.integrate(&values);
        if (mass - 1.0).abs() > 1e-12 {
            return invalid(format!("density has mass {mass}, expected 1"));
        }
        Ok(ProbabilityDensity(values))
    }

    /// Rescales nonnegative `values` to unit mass.
    pub fn normalized(chain: &Chain, mut values: Vec<f64>) -> Result<Self> {
        chain.check_len(&values)?;
        let mass = chain.integrate(&values);
        if !(mass > 0.0) || values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return invalid("cannot normalise: values must be nonnegative with positive mass");
        }
        for v in values.iter_mut() {
            *v /= mass;
        }
        Ok(ProbabilityDensity(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_state_symmetric_chain() {
        let c = Chain::from_dense(&[vec![0.0, 1.0], vec![1.0, 0.0]], PiSpec::Uniform).unwrap();
        assert!(c.is_reversible());
        let q = c.generator_matrix();
        assert_eq!(q[(0, 0)], -1.0);
        assert_eq!(q[(1, 1)], -1.0);
    }

    #[test]
    fn negative_rate_rejected() {
        let e = Chain::from_dense(&[vec![0.0, -1.0], vec![1.0, 0.0]], PiSpec::Uniform).unwrap_err();
        assert!(matches!(e, Error::NegativeRate { from: 0, to: 1, .. }));
        assert!(e.to_string().contains("negative rate"));
    }

    #[test]
    fn nonpositive_pi_rejected() {
        let e = Chain::new(
            2,
            &[(0, 1, 1.0), (1, 0, 1.0)],
            PiSpec::Given(vec![1.0, 0.0]),
        )
        .unwrap_err();
        assert!(matches!(e, Error::InvalidMeasure(_)));
    }

    #[test]
    fn stationary_of_biased_cycle_is_uniform_and_not_reversible() {
        let mut r = Vec::new();
        for x in 0..3 {
            r.push((x, (x + 1) % 3, 2.0));
            r.push((x, (x + 2) % 3, 1.0));
        }
        let c = Chain::new(3, &r, PiSpec::Stationary).unwrap();
        // pi Q = 0 by elimination: every column of Q sums to 0, so the uniform vector works
        for &p in c.pi() {
            assert!((p - 1.0 / 3.0).abs() < 1e-14);
        }
        assert!(!c.is_reversible());
        assert!(c.stationarity_residual() <= 1e-12);
    }

    #[test]
    fn stationary_of_birth_death_chain() {
        // rates up a, down b on a path: pi(x) proportional to (a/b)^x
        let (a, b) = (2.0, 1.0);
        let mut r = Vec::new();
        for x in 0..4 {
            r.push((x, x + 1, a));
            r.push((x + 1, x, b));
        }
        let c = Chain::new(5, &r, PiSpec::Stationary).unwrap();
        let z: f64 = (0..5).map(|x| 2f64.powi(x)).sum();
        for x in 0..5 {
            assert!((c.pi()[x] - 2f64.powi(x as i32) / z).abs() < 1e-14);
        }
        assert!(c.is_reversible());
    }

    #[test]
    fn disconnected_chain_has_no_unique_stationary_measure() {
        let r = [(0, 1, 1.0), (1, 0, 1.0), (2, 3, 1.0), (3, 2, 1.0)];
        let e = Chain::new(4, &r, PiSpec::Stationary).unwrap_err();
        assert!(matches!(e, Error::NonUniqueStationary(_)));
    }

    #[test]
    fn tiny_rates_are_dropped() {
        let c = Chain::new(2, &[(0, 1, 1e-16), (1, 0, 1.0)], PiSpec::Uniform).unwrap();
        assert_eq!(c.degree(0), 0);
        assert_eq!(c.rate(0, 1), 0.0);
    }

    #[test]
    fn standard_graph_shapes() {
        let k2 = standard_graph(StandardGraph::Complete(2)).unwrap();
        assert_eq!(k2.n(), 2);
        assert_eq!(k2.rate(0, 1), 1.0);
        assert_eq!(k2.rate(1, 0), 1.0);
        let h2 = standard_graph(StandardGraph::Hypercube(2)).unwrap();
        assert_eq!(h2.n(), 4);
        assert!((0..4).all(|x| h2.degree(x) == 2));
        let s3 = standard_graph(StandardGraph::Star(3)).unwrap();
        assert_eq!(s3.n(), 4);
        assert_eq!(s3.degree(0), 3);
        assert!((1..4).all(|x| s3.degree(x) == 1));
        assert!(standard_graph(StandardGraph::Complete(1)).is_err());
        assert!(standard_graph(StandardGraph::Hypercube(0)).is_err());
        assert!(standard_graph(StandardGraph::Star(1)).is_err());
    }

    #[test]
    fn product_of_edges_is_the_square() {
        let k2 = standard_graph(StandardGraph::Complete(2)).unwrap();
        let p = tensor_product(&k2, &k2);
        let h2 = standard_graph(StandardGraph::Hypercube(2)).unwrap();
        // (x1,x2) -> 2 x1 + x2 matches the bit labelling with x1 as the high bit
        let relabel = |s: usize| ((s & 1) << 1) | (s >> 1);
        for x in 0..4 {
            for y in 0..4 {
                assert_eq!(p.rate(x, y), h2.rate(relabel(x), relabel(y)));
            }
        }
        assert_eq!(p.pi(), &[0.25; 4]);
    }

    #[test]
    fn product_with_single_state_is_identity() {
        let s = standard_graph(StandardGraph::Star(3)).unwrap();
        assert_eq!(tensor_product(&s, &Chain::single_state()), s);
    }

    #[test]
    fn product_degrees_add() {
        let path = Chain::new(
            3,
            &[(0, 1, 1.0), (1, 0, 1.0), (1, 2, 1.0), (2, 1, 1.0)],
            PiSpec::Uniform,
        )
        .unwrap();
        let k3 = standard_graph(StandardGraph::Complete(3)).unwrap();
        let p = tensor_product(&path, &k3);
        assert_eq!(p.n(), 9);
        for x1 in 0..3 {
            for x2 in 0..3 {
                assert_eq!(p.degree(x1 * 3 + x2), path.degree(x1) + k3.degree(x2));
            }
        }
    }

    #[test]
    fn chain_file_round_trip_and_errors() {
        let text = r#"{"n": 3, "rates": [[0,1,1.0],[1,0,1.0],[1,2,0.5],[2,1,0.5]], "pi": "uniform", "reversible_hint": true}"#;
        let c = chain_from_json(text).unwrap();
        assert_eq!(c.rate(1, 2), 0.5);
        let again = ChainFile::from_chain(&c).into_chain().unwrap();
        assert_eq!(again, c);
        let dup = r#"{"n": 2, "rates": [[0,1,1.0],[0,1,2.0]], "pi": "uniform"}"#;
        assert!(chain_from_json(dup)
            .unwrap_err()
            .to_string()
            .contains("duplicate"));
        let diag = r#"{"n": 2, "rates": [[0,0,1.0]], "pi": "uniform"}"#;
        assert!(chain_from_json(diag).is_err());
        let nonrev = r#"{"n": 3, "rates": [[0,1,2.0],[1,2,2.0],[2,0,2.0],[1,0,1.0],[2,1,1.0],[0,2,1.0]], "pi": "stationary", "reversible_hint": true}"#;
        assert!(matches!(
            chain_from_json(nonrev).unwrap_err(),
            Error::NotReversible(_)
        ));
        let given = r#"{"n": 2, "rates": [[0,1,1.0],[1,0,3.0]], "pi": [0.75, 0.25]}"#;
        assert!(chain_from_json(given).unwrap().is_reversible());
    }

    #[test]
    fn density_validation() {
        let k2 = standard_graph(StandardGraph::Complete(2)).unwrap();
        assert!(ProbabilityDensity::new(&k2, vec![2.0, 0.0]).is_ok());
        assert!(ProbabilityDensity::new(&k2, vec![1.0, 0.0]).is_err());
        assert!(ProbabilityDensity::new(&k2, vec![2.5, -0.5]).is_err());
        let d = ProbabilityDensity::normalized(&k2, vec![3.0, 1.0]).unwrap();
        assert_eq!(d.values(), &[1.5, 0.5]);
    }

    fn random_chain() -> impl Strategy<Value = (usize, Vec<f64>, bool)> {
        (2usize..6).prop_flat_map(|n| {
            (
                Just(n),
                proptest::collection::vec(0.0f64..3.0, n * n),
                any::<bool>(),
            )
        })
    }

    proptest! {
        #[test]
        fn generator_rows_sum_to_zero((n, r, sym) in random_chain()) {
            let mut rates = vec![vec![0.0; n]; n];
            for x in 0..n {
                for y in 0..n {
                    rates[x][y] = if sym { r[x.min(y) * n + x.max(y)] } else { r[x * n + y] };
                }
            }
            let c = Chain::from_dense(&rates, PiSpec::Uniform).unwrap();
            let q = c.generator_matrix();
            for x in 0..n {
                let s: f64 = q.row(x).iter().sum();
                prop_assert!(s.abs() <= 1e-14 * (1.0 + q.amax()));
            }
            if sym {
                prop_assert!(c.is_reversible());
                // D_pi Q symmetric
                for x in 0..n {
                    for y in 0..n {
                        let a = c.pi()[x] * q[(x, y)];
                        let b = c.pi()[y] * q[(y, x)];
                        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300));
                    }
                }
            }
        }

        #[test]
        fn product_commutes_up_to_coordinate_swap(
            (na, ra, _) in random_chain(), (nb, rb, _) in random_chain()
        ) {
            let build = |n: usize, r: &[f64]| {
                let rates: Vec<Vec<f64>> =
                    (0..n).map(|x| (0..n).map(|y| if x == y { 0.0 } else { r[x * n + y] }).collect()).collect();
                Chain::from_dense(&rates, PiSpec::Uniform).unwrap()
            };
            let a = build(na, &ra);
            let b = build(nb, &rb);
            let ab = tensor_product(&a, &b);
            let ba = tensor_product(&b, &a);
            let swap = |s: usize| (s % nb) * na + s / nb;
            for x in 0..na * nb {
                for y in 0..na * nb {
                    prop_assert_eq!(ab.rate(x, y), ba.rate(swap(x), swap(y)));
                }
                prop_assert!((ab.pi()[x] - ba.pi()[swap(x)]).abs() < 1e-16);
            }
        }

        #[test]
        fn stationary_solves_pi_q(n in 2usize..7, r in proptest::collection::vec(0.1f64..3.0, 49)) {
            let rates: Vec<Vec<f64>> =
                (0..n).map(|x| (0..n).map(|y| if x == y { 0.0 } else { r[x * 7 + y] }).collect()).collect();
            let c = Chain::from_dense(&rates, PiSpec::Stationary).unwrap();
            prop_assert!(c.stationarity_residual() <= 1e-12);
            prop_assert!((c.pi().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
