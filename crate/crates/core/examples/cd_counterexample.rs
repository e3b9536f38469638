//! Certificate verifier for CD(kappa, N) counterexamples of the fractional
//! Laplacian, plus a small random search over bumps.
use curvlab::frac::{
    bump_grid, search_bump_counterexample, verify_cd_counterexample, CounterexampleOptions,
};

fn main() -> curvlab::Result<()> {
    let beta = 1.0;
    let u = bump_grid(0.0, 1.0, 1.0, -4.0, 4.0, 0.01);
    let xs = [0.0, 0.5, 0.9, 2.0];
    for (kappa, n_dim) in [(0.0, 1.0), (0.0, 1e6), (5.0, 1e6)] {
        let r = verify_cd_counterexample(
            beta,
            &u,
            kappa,
            n_dim,
            &xs,
            CounterexampleOptions::default(),
        )?;
        println!("kappa = {kappa}, N = {n_dim:e}: {:?}", r.classification);
        for p in &r.points {
            println!(
                "  x = {:>4}: Gamma = {:.4e}  Gamma2 = {:.4e} +- {:.1e}  upper = {:.4e}  {:?}",
                p.x, p.gamma, p.gamma2, p.gamma2_error, p.upper, p.classification
            );
        }
    }
    let s = search_bump_counterexample(beta, 0.0, 1.0, 3.0, 20, 9)?;
    println!(
        "search: best bump center {:.3} width {:.3}, margin {:.3e} after {} evaluations",
        s.center, s.width, s.margin, s.evaluated
    );
    Ok(())
}
