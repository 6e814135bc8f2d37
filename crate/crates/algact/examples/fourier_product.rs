//! Monte Carlo estimates of the pushforward transform against the
//! certified analytic product formula.

use algact::expr::parse_ring_expr;
use algact::groupring::{RingElement, RingMatrix, VectorOverG};
use algact::groups::{GroupElement, GroupSpec};
use algact::measures::BaseMeasure;
use algact::rng::Stream;
use algact::theta::{fourier_check, ThetaPlan};

fn main() -> algact::Result<()> {
    let z = GroupSpec::free_abelian(1)?;
    let delta0 = VectorOverG::from_components(&[parse_ring_expr("1", &z)?])?;

    // Scaled point mass: a single transform factor, value -1/3.
    let plan = ThetaPlan::new(
        RingMatrix::scalar(parse_ring_expr("1/2", &z)?),
        BaseMeasure::uniform_int(1, 1),
        vec![z.identity()],
        0.0,
    )?;
    let check = fourier_check(&plan, &delta0, 100_000, &Stream::from_seed(7))?;
    println!("xi = (1/2) delta_0, nu uniform on {{-1,0,1}}, alpha = delta_0");
    println!("  analytic  {:+.6} {:+.6}i", check.analytic.re, check.analytic.im);
    println!("  empirical {:+.6} {:+.6}i  (stderr {:.2e})", check.empirical.re, check.empirical.im, check.stderr);
    println!("  pass: {}", check.pass);

    // Truncated geometric inverse of 2 - u1: infinitely many factors,
    // multiplied in expanding balls with a certified tail.
    let xi = RingElement::from_terms(
        z.clone(),
        (0..32).map(|n| (GroupElement::Vector(vec![n]), 0.5f64.powi(n as i32 + 1))),
    )?;
    let plan = ThetaPlan::new(
        RingMatrix::scalar(xi),
        BaseMeasure::uniform_int(1, 1),
        vec![z.identity()],
        2.0f64.powi(-33),
    )?;
    let check = fourier_check(&plan, &delta0, 100_000, &Stream::from_seed(8))?;
    println!("\nxi = truncated inverse of 2 - u1, alpha = delta_0");
    println!("  analytic  {:+.6} {:+.6}i  (tail bound {:.2e})", check.analytic.re, check.analytic.im, check.tail_bound);
    println!("  empirical {:+.6} {:+.6}i  (stderr {:.2e})", check.empirical.re, check.empirical.im, check.stderr);
    println!("  pass: {}", check.pass);
    Ok(())
}
