//! rho, *rho and f for every catalog entry with its default metric.

use starsplit::{analysis, catalog};

fn main() -> starsplit::Result<()> {
    for name in catalog::list() {
        let entry = catalog::default_entry(&name)?;
        let data = analysis::rho_data(&entry.manifold, &entry.metric)?;
        println!("{name}: f = {:.6}", data.f);
        println!("  rho  = {}", data.rho);
        println!("  *rho = {}", data.star_rho);
    }
    Ok(())
}
