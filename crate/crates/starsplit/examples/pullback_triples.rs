//! Triples (phi, omega, gamma) built from isometries of the Iwasawa metric,
//! and a pair of distinct metrics.

use starsplit::{analysis, catalog, HermitianMetric};

fn main() -> starsplit::Result<()> {
    let e = catalog::default_entry("iwasawa3")?;
    let gamma = HermitianMetric::diagonal(&[1.0, 2.0, 3.0])?;
    let pair = analysis::pair_analysis(&e.manifold, &e.metric, &gamma)?;
    println!("pair: f = {:.6}, pluriclosed = {}", pair.f_pair, pair.pluriclosed.holds);

    for phi in &e.isometries {
        let t = analysis::triple_analysis(&e.manifold, phi, &e.metric, &e.metric)?;
        println!(
            "triple: compatible = {}, f = {:.6}, pullback residual = {:?}",
            t.structure_compatible, t.f_triple, t.pullback_residual
        );
    }
    let composed = e.isometries[0].compose(&e.isometries[1])?;
    let t = analysis::triple_analysis(&e.manifold, &composed, &e.metric, &e.metric)?;
    println!("composition: compatible = {}, f = {:.6}", t.structure_compatible, t.f_triple);
    Ok(())
}
