//! Li-Yau constants for the fractional heat kernel and a Harnack fit.
use curvlab::frac::{estimate_cly, harnack_fit, random_frac_pairs, FracGrid, HarnackSource};

fn main() -> curvlab::Result<()> {
    let grid = FracGrid {
        half_width: 30.0,
        h: 0.03,
    };
    for beta in [1.0, 1.5] {
        let r = estimate_cly(beta, &[0.5, 1.0, 2.0], grid)?;
        println!("beta = {beta}: C_LY = {:.5}", r.c_ly);
        for row in &r.rows {
            println!(
                "  t = {:>4}: S = {:.5} (at x = {:.2}), T = {:.5}, DH = {:.5}",
                row.t, row.s, row.s_argmax, row.t_ratio, row.dh
            );
        }
        let pairs = random_frac_pairs(0.1, 5.0, 5.0, 200, 11);
        let h = harnack_fit(beta, r.c_ly, &pairs, &HarnackSource::Kernel)?;
        println!(
            "  Harnack constant C = {:.5} over {} pairs",
            h.c_binding,
            pairs.len()
        );
    }
    Ok(())
}
