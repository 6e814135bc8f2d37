//! The largest subgroup whose Haar measure lies in a convolution-closed
//! class, on (Z/2)^3 with the plane-support and shift-invariance
//! predicates, plus the single-coset support of class members.

use algact::groups::{parse_group_id, SubgroupSet};
use algact::haarlattice::{
    coset_support_check, largest_member_subgroup, FiniteMeasure, PredicateClass,
};

fn main() -> algact::Result<()> {
    let spec = parse_group_id("(Z/2)^3")?;
    let group = spec.finite_group()?.clone();

    // Plane x1 = 0 and the cyclic coordinate shift.
    let plane: Vec<usize> = ["000", "001", "010", "011"]
        .iter()
        .map(|n| group.element_by_name(n).unwrap())
        .collect();
    let h = SubgroupSet::new(&group, plane)?;
    let class = PredicateClass::intersection(vec![
        PredicateClass::support_in(&spec, &h)?,
        PredicateClass::invariant_under(&spec, vec![group.shift_automorphism()?])?,
    ]);

    let out = largest_member_subgroup(&spec, &class)?;
    let names: Vec<&str> = out
        .subgroup
        .elements()
        .iter()
        .map(|&i| group.names[i].as_str())
        .collect();
    println!("largest member subgroup: {names:?}");
    println!("certificate size: {} member subgroup(s)", out.certificate.len());

    // Any member measure sits inside one coset of the maximum.
    let nu = FiniteMeasure::point_mass(&spec, group.element_by_name("000").unwrap())?;
    if class.contains(&nu) {
        let coset = coset_support_check(&spec, &nu, &out.subgroup)?;
        println!(
            "point mass at 000: coset rep {}, leak {}",
            group.names[coset.coset_rep], coset.max_leak
        );
    }
    Ok(())
}
