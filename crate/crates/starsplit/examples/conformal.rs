//! f along the conformal change exp(sin(2 pi x)) of the Iwasawa metric,
//! and under constant rescaling.

use starsplit::analysis;

fn main() -> starsplit::Result<()> {
    let f = 1.0;
    for k in 0..=8 {
        let x = k as f64 / 8.0;
        let (g, lap) = analysis::iwasawa_conformal_profile(x);
        println!("x = {x:.3}  g = {g:.6}  f = {:+.6}", analysis::conformal_f(f, g, lap)?);
    }
    for lambda in [0.5, 2.0, 10.0] {
        println!("rescaled by {lambda}: f = {}", analysis::rescale_f(f, lambda)?);
    }
    Ok(())
}
