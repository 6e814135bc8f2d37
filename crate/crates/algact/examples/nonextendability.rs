//! The l^p obstruction: frequencies and block sizes on which the
//! transform deficit diverges while the l^p mass stays bounded.

use algact::measures::{nonextendability_witness, BaseMeasure};

fn main() -> algact::Result<()> {
    let nu = BaseMeasure::uniform_int(1, 1);
    let report = nonextendability_witness(&nu, 3.0, 10)?;
    println!("nu uniform on {{-1,0,1}}, p = 3, coordinate {}", report.coordinate);
    println!(
        "{:>3} {:>14} {:>12} {:>16} {:>16} {:>12}",
        "n", "t_n", "|E_n|", "|1-nu_hat|", "divergent sum", "l^p sum"
    );
    for r in &report.rows {
        println!(
            "{:>3} {:>14.6e} {:>12.0} {:>16.6e} {:>16.6} {:>12.6}",
            r.n, r.t_n, r.block_size, r.one_minus_fourier, r.divergent_partial, r.lp_partial
        );
    }

    println!("\npoint mass at 0:");
    match nonextendability_witness(&BaseMeasure::dirac(1), 3.0, 5) {
        Err(e) => println!("  {e}"),
        Ok(_) => println!("  unexpected witness"),
    }
    Ok(())
}
