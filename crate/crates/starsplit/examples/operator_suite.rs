//! The operators T, S, P, R and Q and the integral identities relating them,
//! for a pair of metrics on the five-dimensional Iwasawa manifold.

use starsplit::{catalog, operators, Form};

fn main() -> starsplit::Result<()> {
    let e = catalog::default_entry("iwasawa5")?;
    let omega = e.metric.clone();
    let gamma = operators::random_metric_seeded(5, 3)?;

    let p = operators::p_omega(&e.manifold, &omega, &omega.omega())?;
    println!("P(omega) = {p}");
    let t: Form = operators::t_omega(&omega, &omega.omega())?;
    println!("T(omega) = {t}");

    let report = operators::verify_operator_identities(&e.manifold, &omega, &gamma);
    for entry in &report.entries {
        let status = match (entry.pass, &entry.skipped_reason) {
            (_, Some(why)) => format!("skipped: {why}"),
            (Some(true), _) => "ok".to_string(),
            _ => "FAILED".to_string(),
        };
        println!("{:<32} {status}", entry.id);
    }
    Ok(())
}
