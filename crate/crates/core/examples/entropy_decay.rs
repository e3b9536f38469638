//! Heat flow of a density on Q3: entropy, Fisher information, the
//! dissipation identities, exponential decay and the MLSI constant.
use curvlab::markov::{standard_graph, ProbabilityDensity, StandardGraph};
use curvlab::numeric::linspace;
use curvlab::semigroup::{
    check_decay_and_gradient_bound, check_entropy_identities, estimate_mlsi, evolve,
};

fn main() -> curvlab::Result<()> {
    let q3 = standard_graph(StandardGraph::Hypercube(3))?;
    let raw = vec![0.2, 1.5, 0.7, 1.1, 2.0, 0.4, 0.9, 1.2];
    let f0 = ProbabilityDensity::normalized(&q3, raw.clone())?;
    let times = linspace(0.0, 1.5, 151);
    let trace = evolve(&q3, &f0, &times)?;
    println!("{:>6} {:>12} {:>12}", "t", "H", "I");
    for i in (0..times.len()).step_by(30) {
        println!(
            "{:>6.2} {:>12.6e} {:>12.6e}",
            trace.times[i], trace.entropy[i], trace.fisher[i]
        );
    }

    let id = check_entropy_identities(&q3, &trace)?;
    println!(
        "dH/dt = -I residual {:.2e}, dI/dt identity residual {:.2e}",
        id.first.max_residual, id.second.max_residual
    );

    let decay = check_decay_and_gradient_bound(&q3, 2.0, &raw, &times)?;
    println!(
        "kappa = 2: entropy bound holds {} (slack {:.2e}), gradient bound holds {} (slack {:.2e})",
        decay.entropy_bound_holds,
        decay.worst_entropy_slack,
        decay.gradient_bound_holds,
        decay.worst_gradient_slack
    );

    let m = estimate_mlsi(&q3, 2000, 3)?;
    println!(
        "MLSI constant estimate {:.5} from {} samples",
        m.kappa_mlsi, m.samples
    );
    Ok(())
}
