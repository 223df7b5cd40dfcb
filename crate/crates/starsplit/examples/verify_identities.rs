//! Commutation relations between the Lefschetz operators, del, delbar, the
//! torsion operators and their adjoints, on a random metric.

use starsplit::{catalog, operators};

fn main() -> starsplit::Result<()> {
    let e = catalog::default_entry("nakamura")?;
    let g = operators::random_metric_seeded(3, 11)?;
    let report = operators::verify_commutation_suite(&e.manifold, &g);
    for entry in &report.entries {
        println!("{:<32} {:?} {:.3e}", entry.id, entry.pass, entry.residual.unwrap_or(f64::NAN));
    }
    println!("all passed: {}", report.all_passed());
    Ok(())
}
