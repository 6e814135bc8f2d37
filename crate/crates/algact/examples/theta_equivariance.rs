//! The extension's shift equivariance and additivity hold exactly per
//! sample when the coefficients are dyadic and the inputs integer-valued.

use algact::groupring::{RingElement, RingMatrix, VectorOverG};
use algact::groups::{GroupElement, GroupSpec};
use algact::measures::BaseMeasure;
use algact::rng::Stream;
use algact::theta::{shift_input_left, shift_matrix_right, shift_input_right, ThetaPlan};

fn gv(n: i64) -> GroupElement {
    GroupElement::Vector(vec![n])
}

fn main() -> algact::Result<()> {
    let z = GroupSpec::free_abelian(1)?;
    let nu = BaseMeasure::uniform_int(2, 1);
    let mut stream = Stream::from_seed(7);

    let dyadic = |s: &mut Stream| -> algact::Result<RingElement> {
        let mut e = RingElement::zero(z.clone());
        for _ in 0..4 {
            e.add_term(gv(s.next_int(-3, 3)), s.next_int(-16, 16) as f64 / 8.0)?;
        }
        Ok(e)
    };
    let xi = RingMatrix::scalar(dyadic(&mut stream)?);
    let xi2 = RingMatrix::scalar(dyadic(&mut stream)?);
    let window: Vec<GroupElement> = (-5..=5).map(gv).collect();
    let plan = ThetaPlan::new(xi.clone(), nu.clone(), window.clone(), 0.0)?;
    let plan2 = ThetaPlan::new(xi2.clone(), nu.clone(), window.clone(), 0.0)?;
    let plan_sum = ThetaPlan::new(xi.add(&xi2)?, nu.clone(), window.clone(), 0.0)?;

    let samples = 1000;
    let h = gv(2);
    let mut violations = 0usize;
    for i in 0..samples {
        let mut sub = stream.substream(i);
        let mut x = VectorOverG::zero(z.clone(), 1);
        for n in -10..=10 {
            let v = nu.sample(&mut sub)[0];
            if v != 0.0 {
                x.add_term(gv(n), 0, v)?;
            }
        }
        // Left shift: theta(h x)(w) = theta(x)(h^{ -1} w).
        let lhs = plan.theta_of(&shift_input_left(&x, &h)?);
        let rhs = plan.theta_of(&x);
        for (wi, w) in window.iter().enumerate() {
            let target = z.inv_mul(&h, w)?;
            if let Some(ti) = window.iter().position(|g| *g == target) {
                if lhs[wi] != rhs[ti] {
                    violations += 1;
                }
            }
        }
        // Right shift: theta_xi(rho(h) x) = theta_{rho(h^{-1}) xi}(x).
        let plan_shifted = ThetaPlan::new(
            shift_matrix_right(&xi, &h)?,
            nu.clone(),
            window.clone(),
            0.0,
        )?;
        if plan.theta_of(&shift_input_right(&x, &h)?) != plan_shifted.theta_of(&x) {
            violations += 1;
        }
        // Additivity per sample.
        let sum_vals = plan_sum.theta_of(&x);
        let a = plan.theta_of(&x);
        let b = plan2.theta_of(&x);
        for wi in 0..window.len() {
            let expect = {
                let t = a[wi][0] + b[wi][0];
                t - t.floor()
            };
            if sum_vals[wi][0] != expect {
                violations += 1;
            }
        }
    }
    println!("samples checked: {samples}");
    println!("exact identity violations: {violations}");
    Ok(())
}
