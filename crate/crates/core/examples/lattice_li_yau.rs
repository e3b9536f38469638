//! Long-range lattice kernel: classical CD check, envelope fit, Li-Yau
//! and Harnack inequalities along the heat flow.
use curvlab::curvature::{fit_cd_function_with, EnvelopeOptions};
use curvlab::lattice::{
    check_classical_cd, harnack_check, initial_datum, li_yau_check, random_harnack_pairs,
    InitialDatum, LatticeEnvelope, LatticeKernel,
};
use curvlab::numeric::logspace;

fn main() -> curvlab::Result<()> {
    let seed = 5;
    let j = 20;
    for beta in [1.0, 3.0] {
        let k = LatticeKernel::new(beta, 1.0, j, 4 * j + 5)?;
        let cd = check_classical_cd(&k, 100.0)?;
        println!(
            "beta = {beta}: classical CD(0, 100) min eigenvalue {:.3e}",
            cd.min_eigenvalue
        );

        let opts = EnvelopeOptions {
            samples: 5000,
            ..Default::default()
        };
        let fit = fit_cd_function_with(&LatticeEnvelope::new(&k), &opts, seed)?;
        println!(
            "  envelope exponent {:.3}, constant {:.3}",
            fit.gamma_hat, fit.c
        );

        let u0 = initial_datum(
            &k,
            &InitialDatum::Bump {
                height: 1.0,
                width: 2,
            },
            seed,
        )?;
        let ly = li_yau_check(&k, &u0, &fit.spec, &logspace(0.01, 10.0, 30))?;
        println!(
            "  Li-Yau: {} violations, worst slack {:.3e} at t = {:.3}",
            ly.violations, ly.worst_slack, ly.worst_time
        );
        let pairs = random_harnack_pairs(&k, 0.01, 10.0, 100, 10, seed);
        let h = harnack_check(&k, &u0, &fit.spec, &pairs)?;
        println!(
            "  Harnack: all hold {}, min residual {:.3e}",
            h.all_hold, h.min_residual
        );
    }
    Ok(())
}
