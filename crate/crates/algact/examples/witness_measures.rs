//! The witness-measure table for f = 2 - u1: in-ideal rows converge to
//! exp(-delta |beta|^2) while off-ideal rows stay bounded away from
//! modulus one.

use algact::annihilator::{claims_report, ClaimVerdict, IdealTestConfig};
use algact::expr::parse_ring_expr;
use algact::groupring::{RingMatrix, VectorOverG};
use algact::groups::GroupSpec;
use algact::measures::BaseMeasure;

fn main() -> algact::Result<()> {
    let z = GroupSpec::free_abelian(1)?;
    let f = RingMatrix::scalar(parse_ring_expr("2 - u1", &z)?);
    let eta = BaseMeasure::geometric_sym(1);
    let vector = |text: &str| -> algact::Result<VectorOverG> {
        VectorOverG::from_components(&[parse_ring_expr(text, &z)?])
    };
    let alphas = vec![
        ("f".to_string(), vector("2 - u1")?),
        ("u1*f".to_string(), vector("2*u1 - u1^2")?),
        ("delta0".to_string(), vector("1")?),
        ("delta1".to_string(), vector("u1")?),
    ];
    let ks: Vec<f64> = (1..=8).map(|j| 2.0f64.powi(j)).collect();
    let deltas = [0.2, 0.1, 0.05, 0.025, 0.0125];
    let config = IdealTestConfig { window: 256, ..IdealTestConfig::new(1) };
    let report = claims_report(&f, &eta, &alphas, &ks, &deltas, &config, 1e-10)?;

    for row in &report.rows {
        println!("alpha = {:<8} classified {:?}", row.alpha, row.classification);
        match &row.verdict {
            ClaimVerdict::Claim1 { max_gap, pass } => {
                println!("  in-ideal values vs exp(-delta |beta|^2): max gap {max_gap:.2e}, pass {pass}");
            }
            ClaimVerdict::Claim2 { margin, pass } => {
                println!("  off-ideal modulus margin below 1: {margin:.4}, pass {pass}");
            }
            ClaimVerdict::Inconclusive => println!("  inconclusive"),
        }
        let last_k = *ks.last().unwrap();
        let line: Vec<String> = row
            .cells
            .iter()
            .filter(|c| c.k == last_k)
            .map(|c| format!("delta={:>6}: {:+.6}", c.delta, c.value_re))
            .collect();
        println!("  k = {last_k}: {}", line.join("  "));
    }
    Ok(())
}
