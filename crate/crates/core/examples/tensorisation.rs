//! K2 x K2 is Q2: identical generators and operators, same curvature.
use curvlab::curvature::{estimate_upsilon_kappa, Budget};
use curvlab::gamma::psi2_upsilon;
use curvlab::markov::{standard_graph, tensor_product, StandardGraph};

fn main() -> curvlab::Result<()> {
    let k2 = standard_graph(StandardGraph::Complete(2))?;
    let k3 = standard_graph(StandardGraph::Complete(3))?;
    let q2 = standard_graph(StandardGraph::Hypercube(2))?;
    let prod = tensor_product(&k2, &k2);
    println!(
        "K2 x K2 generator equals Q2: {}",
        prod.generator_matrix() == q2.generator_matrix()
    );
    let f = [0.3, -1.2, 2.0, 0.5];
    println!("Psi2 on product: {:?}", psi2_upsilon(&prod, &f)?);
    println!("Psi2 on Q2:      {:?}", psi2_upsilon(&q2, &f)?);

    let mixed = tensor_product(&k2, &k3);
    for (name, c) in [("K2", &k2), ("K3", &k3), ("K2 x K3", &mixed)] {
        let k = estimate_upsilon_kappa(c, Budget::default(), 1)?.global_kappa;
        println!("{name:>8}: kappa ~ {k:.4}");
    }
    Ok(())
}
