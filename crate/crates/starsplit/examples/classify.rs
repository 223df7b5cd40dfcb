//! Metric classes of the catalog entries, plus a non-standard metric on the
//! Iwasawa manifold.

use starsplit::{analysis, catalog, HermitianMetric};

fn main() -> starsplit::Result<()> {
    for name in catalog::list() {
        let entry = catalog::default_entry(&name)?;
        let r = entry.classify(&entry.metric)?;
        let fl = &r.flags;
        println!(
            "{name:<16} kahler={:<5} balanced={:<5} skt={:<5} pss={:<5} css={:<5} f={:.4}",
            fl.kahler.holds, fl.balanced.holds, fl.skt.holds, fl.pluriclosed_star_split.holds, fl.closed_star_split.holds, r.f
        );
        assert!(r.implication_violations().is_empty());
    }

    let iwasawa = catalog::default_entry("iwasawa3")?;
    let g = HermitianMetric::diagonal(&[1.0, 2.0, 3.0])?;
    let r = analysis::classify(&iwasawa.manifold, &g)?;
    println!("iwasawa3 with diag(1,2,3): f = {:.6}, balanced = {}", r.f, r.flags.balanced.holds);
    Ok(())
}
