//! Relaxation profiles for a few CD functions.
use curvlab::relaxation::{integrate_relaxation, solve_relaxation, CDFunctionSpec};

fn main() -> curvlab::Result<()> {
    for (name, f) in [
        (
            "power nu=2/3 gamma=2",
            CDFunctionSpec::Power {
                nu: 2.0 / 3.0,
                gamma: 2.0,
            },
        ),
        (
            "power nu=1 gamma=3",
            CDFunctionSpec::Power {
                nu: 1.0,
                gamma: 3.0,
            },
        ),
    ] {
        let p = solve_relaxation(&f, 1e-3, 10.0, 1e-10)?;
        println!(
            "{name}: small t {:?}, large t {:?}",
            p.small_t_tag, p.large_t_tag
        );
        for t in [0.01, 0.1, 1.0, 10.0] {
            println!("  phi({t:>5}) = {:.6e}", p.phi_at(t));
        }
        println!(
            "  integral of phi over [1, 10] = {:.6}",
            integrate_relaxation(&p, 1.0, 10.0)?
        );
    }
    Ok(())
}
