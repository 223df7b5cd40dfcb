//! Nelder-Mead search for a pluriclosed star split metric in the diagonal and
//! full Hermitian families.

use starsplit::{catalog, search};
use starsplit::search::MetricFamily;

fn main() -> starsplit::Result<()> {
    let e = catalog::default_entry("iwasawa3")?;
    for family in [MetricFamily::diagonal(3), MetricFamily::full_hermitian(3)] {
        let r = search::search_pss(&e.manifold, &family, 2000, 0)?;
        println!(
            "{:?}: defect {:.3e} after {} evaluations, f = {:.6}",
            family.kind, r.best_defect, r.evaluations, r.report.f
        );
    }
    Ok(())
}
