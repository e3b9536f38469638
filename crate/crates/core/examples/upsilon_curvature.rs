//! Sampled Upsilon-curvature and violation search.
//!
//! `cargo run --release --example upsilon_curvature`
use curvlab::curvature::{estimate_upsilon_kappa, verify_cd_upsilon, Budget};
use curvlab::markov::{standard_graph, StandardGraph};

fn main() -> curvlab::Result<()> {
    let seed = 7;
    for (name, g) in [
        ("K2", StandardGraph::Complete(2)),
        ("Q2", StandardGraph::Hypercube(2)),
        ("K4", StandardGraph::Complete(4)),
    ] {
        let chain = standard_graph(g)?;
        let r = estimate_upsilon_kappa(&chain, Budget::default(), seed)?;
        println!(
            "{name}: estimated kappa = {:.5} (per state {:?})",
            r.global_kappa, r.per_state
        );
    }

    // On a star the center carries a negative-curvature witness.
    let star = standard_graph(StandardGraph::Star(3))?;
    let v = verify_cd_upsilon(&star, 0.0, None, Budget::default(), seed)?;
    match v.witness {
        Some(w) => println!(
            "star(3), kappa = 0: violation at state {} with Psi2 = {:.3e}",
            w.state, w.psi2
        ),
        None => println!("star(3), kappa = 0: no violation found"),
    }
    Ok(())
}
