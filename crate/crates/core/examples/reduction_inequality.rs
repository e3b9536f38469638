//! Reduction inequality for positive mixtures of translated kernels,
//! nonlocal and classical.
use curvlab::frac::{
    frac_kernel, reduction_inequality_check, reduction_inequality_check_classical,
};

fn main() -> curvlab::Result<()> {
    let kern = frac_kernel(1.0, 1.0, 40.0, 0.05)?;
    let weights = [(-2.0, 0.5), (0.0, 1.0), (1.5, 0.2), (3.0, 1.4)];
    let xs: Vec<f64> = (0..13).map(|i| -3.0 + 0.5 * i as f64).collect();
    let r = reduction_inequality_check(&kern, &weights, &xs)?;
    println!("{:>6} {:>12} {:>12} {:>12}", "x", "lhs", "rhs", "slack");
    for row in &r.rows {
        println!(
            "{:>6.2} {:>12.5e} {:>12.5e} {:>12.5e}",
            row.x, row.lhs, row.rhs, row.slack
        );
    }
    println!("nonlocal: holds {}, min slack {:.3e}", r.holds, r.min_slack);
    let c = reduction_inequality_check_classical(1.0, &weights, &xs, 1e-4)?;
    println!(
        "classical: holds {}, min slack {:.3e}",
        c.holds, c.min_slack
    );
    Ok(())
}
