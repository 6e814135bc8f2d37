//! Uniform-measure witness columns: annihilator members hold at exactly
//! one while non-members decay at the Dirichlet rate 1/(2n+1).

use algact::annihilator::strong_witness_check;
use algact::expr::parse_ring_expr;
use algact::groupring::{RingElement, RingMatrix, VectorOverG};
use algact::groups::{GroupElement, GroupSpec};

fn main() -> algact::Result<()> {
    let z = GroupSpec::free_abelian(1)?;
    // Generating matrix of the dual subgroup of f = 2 - u1: the star of
    // the truncated formal inverse.
    let inverse = RingElement::from_terms(
        z.clone(),
        (0..48).map(|n| (GroupElement::Vector(vec![n]), 0.5f64.powi(n as i32 + 1))),
    )?;
    let xi = RingMatrix::scalar(inverse).star();

    let vector = |text: &str| -> algact::Result<VectorOverG> {
        VectorOverG::from_components(&[parse_ring_expr(text, &z)?])
    };
    let alphas = vec![
        ("f".to_string(), vector("2 - u1")?),
        ("delta0".to_string(), vector("1")?),
    ];
    let ns = [0u32, 1, 2, 4, 8, 16, 32];
    let rows = strong_witness_check(&xi, &ns, &alphas, 1e-6)?;
    for row in &rows {
        println!(
            "alpha = {:<7} member={} (deviation {:.3e})",
            row.alpha, row.annihilator_member, row.deviation
        );
        println!("{:>6} {:>22} {:>14} {:>14}", "n", "value", "min_factor", "1/(2n+1)");
        for cell in &row.cells {
            println!(
                "{:>6} {:>22.15} {:>14.8} {:>14.8}",
                cell.n,
                cell.value,
                cell.min_factor,
                1.0 / (2.0 * cell.n as f64 + 1.0)
            );
        }
        println!();
    }
    Ok(())
}
