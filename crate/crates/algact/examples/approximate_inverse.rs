//! Approximate inverses by the spectral cutoff: one operator with a
//! spectral floor (the cutoff never activates) and one injective but
//! non-invertible operator (the residual tracks the cutoff mass 1/(pi k)).

use algact::expr::parse_ring_expr;
use algact::groupring::RingMatrix;
use algact::groups::GroupSpec;
use algact::spectral::{approximate_inverse, ApproxInverseConfig, WindowChoice};

fn main() -> algact::Result<()> {
    let z = GroupSpec::free_abelian(1)?;
    for text in ["2 - u1", "1 - u1"] {
        let f = RingMatrix::scalar(parse_ring_expr(text, &z)?);
        println!("f = {text}");
        println!("{:>6} {:>14} {:>14} {:>12} {:>12}", "k", "residual_left", "residual_right", "op_bound", "trunc_mass");
        for k in [2.0, 8.0, 32.0, 128.0] {
            let inv = approximate_inverse(
                &f,
                &ApproxInverseConfig {
                    k,
                    grid: 2048,
                    window: WindowChoice::Fixed(512),
                    mass_limit: 1.0,
                },
            )?;
            println!(
                "{:>6} {:>14.6e} {:>14.6e} {:>12.6} {:>12.3e}",
                k, inv.residual_left, inv.residual_right, inv.op_norm_bound,
                inv.truncation_fraction
            );
        }
        println!();
    }
    Ok(())
}
