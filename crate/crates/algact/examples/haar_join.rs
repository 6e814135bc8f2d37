//! Recover the Haar measure of the join of two subgroups as a limit of
//! convolution powers, and compare against the brute-force closure.

use algact::groups::{parse_group_id, subgroup_generate};
use algact::haarlattice::{haar_of, join_by_iteration, total_variation};

fn main() -> algact::Result<()> {
    let spec = parse_group_id("S3")?;
    let group = spec.finite_group()?.clone();
    let t12 = group.element_by_name("(12)").unwrap();
    let t13 = group.element_by_name("(13)").unwrap();
    let y1 = subgroup_generate(&spec, &[t12])?;
    let y2 = subgroup_generate(&spec, &[t13])?;
    println!("Y1 = {:?}", y1.elements());
    println!("Y2 = {:?}", y2.elements());

    let out = join_by_iteration(&spec, &y1, &y2, 1e-12, 500)?;
    println!("converged after {} iterations", out.iterations);
    for (i, p) in out.measure.probs().iter().enumerate() {
        println!("  {:>6}  {:.12}", group.names[i], p);
    }

    let mut gens = y1.elements().to_vec();
    gens.extend_from_slice(y2.elements());
    let join = subgroup_generate(&spec, &gens)?;
    let oracle = haar_of(&spec, &join)?;
    println!(
        "join has order {}, total variation to the closure oracle: {:.3e}",
        join.len(),
        total_variation(&out.measure, &oracle)
    );
    Ok(())
}
