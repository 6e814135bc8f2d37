//! The ideal-membership trichotomy from approximate-inverse trajectories:
//! integral limit, fractional limit, and divergence.

use algact::annihilator::{IdealTestConfig, IdealTester};
use algact::expr::parse_ring_expr;
use algact::groupring::{RingMatrix, VectorOverG};
use algact::groups::GroupSpec;

fn main() -> algact::Result<()> {
    let z = GroupSpec::free_abelian(1)?;
    let config = IdealTestConfig { window: 256, ..IdealTestConfig::new(1) };
    let ks: Vec<f64> = (1..=8).map(|j| 2.0f64.powi(j)).collect();
    let cases = [
        ("2 - u1", "2 - u1"),
        ("2 - u1", "1"),
        ("1 - u1", "1"),
    ];
    for (f_text, alpha_text) in cases {
        let f = RingMatrix::scalar(parse_ring_expr(f_text, &z)?);
        let alpha = VectorOverG::from_components(&[parse_ring_expr(alpha_text, &z)?])?;
        let tester = IdealTester::new(&f, &ks, config.clone())?;
        let out = tester.classify(&alpha)?;
        println!("f = {f_text:<8} alpha = {alpha_text:<8} -> {:?}", out.classification);
        let norms: Vec<String> = out
            .rows
            .iter()
            .map(|r| format!("{:.4}", r.norm_grid))
            .collect();
        println!("  |r(xi_k) alpha| over k = {ks:?}:");
        println!("  {}", norms.join("  "));
        if let Some(dev) = out.limit_deviation {
            println!("  limit fractional deviation {dev:.3e}");
        }
        println!();
    }
    Ok(())
}
