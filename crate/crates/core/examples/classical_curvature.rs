//! Optimal classical curvature of small graphs, infinite and finite dimension.
use curvlab::curvature::classical_optimal_kappa;
use curvlab::markov::{standard_graph, StandardGraph};

fn main() -> curvlab::Result<()> {
    for (name, g) in [
        ("K3", StandardGraph::Complete(3)),
        ("K5", StandardGraph::Complete(5)),
        ("Q3", StandardGraph::Hypercube(3)),
        ("star(4)", StandardGraph::Star(4)),
    ] {
        let chain = standard_graph(g)?;
        let inf = classical_optimal_kappa(&chain, f64::INFINITY)?;
        let d4 = classical_optimal_kappa(&chain, 4.0)?;
        println!(
            "{name:>8}: kappa(d=inf) = {:>9.6}  kappa(d=4) = {:>9.6}  worst state {}",
            inf.global_kappa, d4.global_kappa, inf.witness_state
        );
    }
    Ok(())
}
