//! l2 formal inverses from the exact symbol inverse: the one-sided
//! geometric tail of 2 - u1 and the two-sided decay of 3 - u1 - u1^-1,
//! both against their closed forms.

use algact::expr::parse_ring_expr;
use algact::groupring::RingMatrix;
use algact::groups::{GroupElement, GroupSpec};
use algact::spectral::l2_formal_inverse;

fn main() -> algact::Result<()> {
    let z = GroupSpec::free_abelian(1)?;

    let f = RingMatrix::scalar(parse_ring_expr("2 - u1", &z)?);
    let inv = l2_formal_inverse(&f, 2048, 64)?;
    println!("f = 2 - u1, residual {:.3e}", inv.residual);
    println!("{:>4} {:>22} {:>22}", "n", "coefficient", "2^-(n+1)");
    for n in 0..6 {
        let got = inv.xi.entry(0, 0).coeff(&GroupElement::Vector(vec![n]));
        println!("{:>4} {:>22.16} {:>22.16}", n, got, 0.5f64.powi(n as i32 + 1));
    }

    let f = RingMatrix::scalar(parse_ring_expr("3 - u1 - u1^-1", &z)?);
    let inv = l2_formal_inverse(&f, 2048, 64)?;
    let r = (3.0 - 5.0f64.sqrt()) / 2.0;
    println!("\nf = 3 - u1 - u1^-1, residual {:.3e}", inv.residual);
    println!("{:>4} {:>22} {:>22}", "n", "coefficient", "r^|n| / sqrt(5)");
    for n in -3i64..=3 {
        let got = inv.xi.entry(0, 0).coeff(&GroupElement::Vector(vec![n]));
        let want = r.powi(n.unsigned_abs() as i32) / 5.0f64.sqrt();
        println!("{:>4} {:>22.16} {:>22.16}", n, got, want);
    }
    Ok(())
}
