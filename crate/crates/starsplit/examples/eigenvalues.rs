//! Spectra of rho relative to the metric, including the deformed Iwasawa
//! family where they scale with the constant A.

use starsplit::{analysis, catalog, Complex64};

fn main() -> starsplit::Result<()> {
    for name in ["iwasawa3", "nakamura", "iwasawa5"] {
        let e = catalog::default_entry(name)?;
        let r = e.classify(&e.metric)?;
        println!("{name}: {:?}", r.eigenvalues);
        for note in &r.notes {
            println!("  note: {note}");
        }
    }

    let sigma = [
        ("sigma12", Complex64::new(-1.0, 0.0)),
        ("sigma11b", Complex64::new(0.3, 0.0)),
        ("sigma22b", Complex64::new(0.2, 0.0)),
        ("sigma21b", Complex64::new(0.1, 0.0)),
    ];
    let params: Vec<(String, Complex64)> = sigma.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    let e = catalog::get("iwasawa_def", &params)?;
    let a = catalog::deformation_a(&e.manifold);
    let r = analysis::classify(&e.manifold, &e.metric)?;
    println!("iwasawa_def: A = {a:.4}, f = {:.4}, eigenvalues {:?}", r.f, r.eigenvalues);
    println!("  pss = {}, css = {}", r.flags.pluriclosed_star_split.holds, r.flags.closed_star_split.holds);
    Ok(())
}
