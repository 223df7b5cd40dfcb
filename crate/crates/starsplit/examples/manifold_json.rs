//! Round trip of a manifold through JSON, and rejection of structure
//! equations with d^2 != 0.

use serde_json::json;
use starsplit::{analysis, catalog, HermitianMetric, InvariantComplexManifold};

fn main() -> starsplit::Result<()> {
    let e = catalog::default_entry("nakamura")?;
    let text = serde_json::to_string_pretty(&e.manifold.to_json())?;
    println!("{text}");
    let back = InvariantComplexManifold::from_json(&serde_json::from_str(&text)?)?;
    back.validate(starsplit::DEFAULT_TOL)?;
    println!("f after round trip = {}", analysis::f_scalar(&back, &HermitianMetric::identity(3)?)?);

    let broken = json!({
        "name": "broken",
        "dim": 3,
        "structure": {
            "phi1": { "(1,1)": [{ "i": 2, "jbar": 2, "coeff": "1" }] },
            "phi3": { "(1,1)": [{ "i": 1, "jbar": 1, "coeff": "1" }] }
        }
    });
    let m = InvariantComplexManifold::from_json(&broken)?;
    match m.validate(starsplit::DEFAULT_TOL) {
        Ok(()) => println!("unexpectedly valid"),
        Err(err) => println!("rejected: {err}"),
    }
    Ok(())
}
