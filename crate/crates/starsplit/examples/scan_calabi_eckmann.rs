//! f along the Calabi-Eckmann family, printed as CSV.

use starsplit::{search, Complex64};

fn main() -> starsplit::Result<()> {
    let values: Vec<Complex64> = (-4..=4).map(|k| Complex64::new(0.1, k as f64 / 5.0)).collect();
    let rows = search::scan_catalog("calabi_eckmann", &[], "t", &values)?;
    print!("{}", search::scan_to_csv(&rows)?);
    Ok(())
}
