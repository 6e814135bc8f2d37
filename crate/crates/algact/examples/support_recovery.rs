//! Convolution powers of mu* * mu converge to the Haar measure of the
//! subgroup generated by the support of mu* * mu.

use algact::groups::{parse_group_id, subgroup_generate};
use algact::haarlattice::{
    convolve_fm, haar_of, star_fm, support_recovery, total_variation, FiniteMeasure,
};

fn main() -> algact::Result<()> {
    let spec = parse_group_id("Z/6")?;
    let mu = FiniteMeasure::uniform_on(&spec, &[1, 3])?;
    println!("mu uniform on {{1, 3}} in Z/6");

    let rec = support_recovery(&spec, &mu, 1e-12, 200)?;
    println!("stationary after {} power doublings", rec.doublings);
    println!("recovered subgroup: {:?}", rec.subgroup.elements());

    let sym = convolve_fm(&star_fm(&mu), &mu)?;
    let oracle_subgroup = subgroup_generate(&spec, &sym.support())?;
    let oracle = haar_of(&spec, &oracle_subgroup)?;
    println!(
        "closure oracle:     {:?}  (tv distance {:.3e})",
        oracle_subgroup.elements(),
        total_variation(&rec.measure, &oracle)
    );
    Ok(())
}
