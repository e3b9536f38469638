//! Symmetric stable densities on a grid; writes `x,G` CSV to stdout with
//! `--csv`.
use curvlab::frac::{frac_kernel, stable_density};

fn main() -> curvlab::Result<()> {
    let csv = std::env::args().any(|a| a == "--csv");
    let k = frac_kernel(1.5, 1.0, 20.0, 0.1)?;
    if csv {
        print!("{}", k.to_csv());
        return Ok(());
    }
    println!(
        "beta = 1.5, t = 1: grid mass {:.8}, tail mass {:.3e}",
        k.mass, k.tail_mass
    );
    println!(
        "{:>6} {:>14} {:>14} {:>14}",
        "x", "beta=0.5", "beta=1", "beta=1.9"
    );
    for x in [0.0, 0.5, 1.0, 2.0, 5.0, 20.0, 100.0] {
        println!(
            "{x:>6} {:>14.6e} {:>14.6e} {:>14.6e}",
            stable_density(0.5, 1.0, x),
            stable_density(1.0, 1.0, x),
            stable_density(1.9, 1.0, x)
        );
    }
    Ok(())
}
