//! Built-in manifolds with their default metrics and expected invariants.

use num_complex::Complex64;
use serde::Serialize;

use crate::analysis::{self, MetricReport};
use crate::complex_structure::{InvariantComplexManifold, PullbackMap, StructureTerm};
use crate::error::{Error, Result};
use crate::metric::HermitianMetric;
use crate::DEFAULT_TOL;

pub const NAMES: [&str; 6] = ["torus_n", "iwasawa3", "nakamura", "iwasawa_def", "iwasawa5", "calabi_eckmann"];

/// Concrete names usable with [`get`].
pub fn list() -> Vec<String> {
    let mut out: Vec<String> = (3..=6).map(|n| format!("torus_{n}")).collect();
    out.extend(NAMES[1..].iter().map(|s| s.to_string()));
    out
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Expectations {
    pub f: Option<f64>,
    pub kahler: Option<bool>,
    pub balanced: Option<bool>,
    pub skt: Option<bool>,
    pub pluriclosed_star_split: Option<bool>,
    pub closed_star_split: Option<bool>,
    pub rho_zero: Option<bool>,
    pub eigenvalues: Option<Vec<f64>>,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub name: String,
    pub manifold: InvariantComplexManifold,
    pub metric: HermitianMetric,
    pub expectations: Expectations,
    pub isometries: Vec<PullbackMap>,
}

impl CatalogEntry {
    /// Classification report; the entry's notes are attached when `g` is the
    /// default metric.
    pub fn classify(&self, g: &HermitianMetric) -> Result<MetricReport> {
        self.classify_with_tol(g, DEFAULT_TOL)
    }

    pub fn classify_with_tol(&self, g: &HermitianMetric, tol: f64) -> Result<MetricReport> {
        let mut r = analysis::classify_with_tol(&self.manifold, g, tol)?;
        if (g.matrix() - self.metric.matrix()).norm() == 0.0 {
            r.notes.extend(self.expectations.notes.iter().cloned());
        }
        Ok(r)
    }
}

pub const IWASAWA_EIGENVALUE_NOTE: &str =
    "the published eigenvalues for this example are 1, 1, -1; the spectrum of the computed rho is -1/2, 1/2, 1/2";

pub const DEFORMATION_EIGENVALUE_NOTE: &str =
    "the published eigenvalues for this family are 1, 1, -1; the spectrum of the computed rho is A/2 * (-1, 1, 1)";

fn owned(params: &[(&str, Complex64)]) -> Vec<(String, Complex64)> {
    params.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn hol(i: usize, j: usize, coeff: &str) -> StructureTerm {
    StructureTerm::hol(i, j, coeff).expect("catalog expressions parse")
}

fn mixed(i: usize, j: usize, coeff: &str) -> StructureTerm {
    StructureTerm::mixed(i, j, coeff).expect("catalog expressions parse")
}

/// The unbound structure equations of an entry, with default parameters.
pub fn template(name: &str) -> Result<InvariantComplexManifold> {
    if let Some(rest) = name.strip_prefix("torus_") {
        let n: usize = rest.parse().map_err(|_| Error::UnknownManifold(name.into()))?;
        if !(1..=crate::forms::MAX_DIM).contains(&n) {
            return Err(Error::UnsupportedDimension(n));
        }
        return InvariantComplexManifold::new(name, n, vec![], vec![Vec::new(); n]);
    }
    match name {
        "iwasawa3" => InvariantComplexManifold::new(name, 3, vec![], vec![vec![], vec![], vec![hol(1, 2, "-1")]]),
        "nakamura" => InvariantComplexManifold::new(
            name,
            3,
            vec![],
            vec![vec![], vec![hol(1, 2, "1")], vec![hol(1, 3, "-1")]],
        ),
        "iwasawa_def" => InvariantComplexManifold::new(
            name,
            3,
            owned(&[
                ("t", c(0.0, 0.0)),
                ("sigma12", c(-1.0, 0.0)),
                ("sigma11b", c(0.0, 0.0)),
                ("sigma12b", c(0.0, 0.0)),
                ("sigma21b", c(0.0, 0.0)),
                ("sigma22b", c(0.0, 0.0)),
            ]),
            vec![
                vec![],
                vec![],
                vec![
                    hol(1, 2, "sigma12"),
                    mixed(1, 1, "sigma11b"),
                    mixed(1, 2, "sigma12b"),
                    mixed(2, 1, "sigma21b"),
                    mixed(2, 2, "sigma22b"),
                ],
            ],
        ),
        "iwasawa5" => InvariantComplexManifold::new(
            name,
            5,
            vec![],
            vec![vec![], vec![], vec![hol(1, 2, "1")], vec![hol(1, 3, "1")], vec![hol(2, 3, "1")]],
        ),
        "calabi_eckmann" => InvariantComplexManifold::new(
            name,
            3,
            owned(&[("t", c(0.0, 0.0))]),
            vec![
                vec![hol(1, 3, "i*(conj(t)+1)/(1-abs2(t))"), mixed(1, 3, "i*(t+1)/(1-abs2(t))")],
                vec![hol(2, 3, "(1-conj(t))/(1-abs2(t))"), mixed(2, 3, "(t-1)/(1-abs2(t))")],
                vec![mixed(1, 1, "i*(t-1)"), mixed(2, 2, "t+1")],
            ],
        ),
        _ => Err(Error::UnknownManifold(name.into())),
    }
}

/// `A = |s12|^2 + |s21b|^2 + |s12b|^2 - 2 Re(s11b conj(s22b))`, the constant
/// value of f on the deformed Iwasawa structure.
pub fn deformation_a(m: &InvariantComplexManifold) -> f64 {
    let p = |k: &str| m.param(k).unwrap_or_default();
    p("sigma12").norm_sqr() + p("sigma21b").norm_sqr() + p("sigma12b").norm_sqr()
        - 2.0 * (p("sigma11b") * p("sigma22b").conj()).re
}

/// The isometry `diag(u, v, uv)` of the standard Iwasawa metric, `|u| = |v| = 1`.
pub fn iwasawa_isometry(theta_u: f64, theta_v: f64) -> PullbackMap {
    let u = Complex64::from_polar(1.0, theta_u);
    let v = Complex64::from_polar(1.0, theta_v);
    PullbackMap::diagonal(&[u, v, u * v]).expect("unit diagonal is invertible")
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

pub fn get(name: &str, params: &[(String, Complex64)]) -> Result<CatalogEntry> {
    let base = template(name)?;
    if name == "calabi_eckmann" {
        if let Some((_, t)) = params.iter().find(|(k, _)| k == "t") {
            if !(t.norm() < 1.0) {
                return Err(Error::Domain(format!("calabi_eckmann requires |t| < 1, got |t| = {}", t.norm())));
            }
        }
    }
    let manifold = base.bind_all(params)?;
    let n = manifold.dim();
    let mut metric = HermitianMetric::identity(n)?;
    let mut ex = Expectations::default();
    let mut isometries = Vec::new();
    match name {
        "iwasawa3" => {
            ex.f = Some(1.0);
            ex.kahler = Some(false);
            ex.balanced = Some(true);
            ex.closed_star_split = Some(true);
            ex.pluriclosed_star_split = Some(true);
            ex.eigenvalues = Some(vec![-0.5, 0.5, 0.5]);
            ex.notes.push(IWASAWA_EIGENVALUE_NOTE.into());
            isometries = [(0.3, 1.1), (-0.8, 0.4), (2.0, -1.7), (0.0, 0.9)]
                .iter()
                .map(|&(a, b)| iwasawa_isometry(a, b))
                .collect();
        }
        "nakamura" => {
            ex.f = Some(2.0);
            ex.kahler = Some(false);
            ex.balanced = Some(true);
            ex.closed_star_split = Some(true);
            ex.pluriclosed_star_split = Some(true);
            ex.eigenvalues = Some(vec![0.0, 0.0, 1.0]);
        }
        "iwasawa5" => {
            ex.f = Some(3.0);
            ex.kahler = Some(false);
            ex.balanced = Some(true);
            ex.closed_star_split = Some(true);
            ex.pluriclosed_star_split = Some(true);
            ex.eigenvalues = Some(vec![-0.25, -0.25, -0.25, 0.75, 0.75]);
        }
        "iwasawa_def" => {
            let a = deformation_a(&manifold);
            ex.f = Some(a);
            ex.kahler = Some(false);
            ex.pluriclosed_star_split = Some(true);
            let p = |k: &str| manifold.param(k).unwrap_or_default();
            if a.abs() > DEFAULT_TOL && (p("sigma11b") + p("sigma22b")).norm() > DEFAULT_TOL {
                ex.closed_star_split = Some(false);
            }
            ex.eigenvalues = Some(sorted(vec![-a / 2.0, a / 2.0, a / 2.0]));
            ex.notes.push(DEFORMATION_EIGENVALUE_NOTE.into());
        }
        "calabi_eckmann" => {
            let t = manifold.param("t").unwrap_or_default();
            metric = metric.scaled(0.5)?;
            let im = t.im;
            ex.f = Some(8.0 * im);
            ex.balanced = Some(false);
            ex.kahler = Some(false);
            ex.pluriclosed_star_split = Some(true);
            ex.skt = Some(im.abs() <= DEFAULT_TOL);
            ex.rho_zero = Some(im.abs() <= DEFAULT_TOL);
            ex.eigenvalues = Some(sorted(vec![4.0 * im, 4.0 * im, -4.0 * im]));
        }
        _ => {
            ex.f = Some(0.0);
            ex.kahler = Some(true);
            ex.balanced = Some(true);
            ex.skt = Some(true);
            ex.closed_star_split = Some(true);
            ex.pluriclosed_star_split = Some(true);
            ex.rho_zero = Some(true);
            ex.eigenvalues = Some(vec![0.0; n]);
        }
    }
    manifold.validate(DEFAULT_TOL)?;
    Ok(CatalogEntry { name: name.to_string(), manifold, metric, expectations: ex, isometries })
}

/// Entry with default parameters.
pub fn default_entry(name: &str) -> Result<CatalogEntry> {
    get(name, &[])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entries_are_valid() {
        for name in list() {
            let e = get(&name, &[]).unwrap();
            assert!(e.manifold.check_integrability() < 1e-12, "{name}");
            assert!(e.manifold.check_stokes() < 1e-12, "{name}");
        }
        let ce = get("calabi_eckmann", &[("t".into(), c(0.1, 0.2))]).unwrap();
        assert!(ce.manifold.check_integrability() < 1e-12);
    }

    #[test]
    fn guards() {
        assert!(matches!(get("calabi_eckmann", &[("t".into(), c(1.0, 0.0))]), Err(Error::Domain(_))));
        assert!(matches!(get("calabi_eckmann", &[("t".into(), c(0.0, -1.5))]), Err(Error::Domain(_))));
        assert!(matches!(get("hopf", &[]), Err(Error::UnknownManifold(_))));
        assert!(get("iwasawa3", &[("t".into(), c(0.0, 0.0))]).is_err());
    }

    #[test]
    fn isometries_are_compatible() {
        let e = get("iwasawa3", &[]).unwrap();
        for phi in &e.isometries {
            assert!(phi.is_structure_compatible(&e.manifold, 1e-12));
        }
    }

    #[test]
    fn export_roundtrip() {
        for name in list() {
            let e = get(&name, &[]).unwrap();
            let text = serde_json::to_string(&e.manifold.to_json()).unwrap();
            let back = InvariantComplexManifold::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
            assert_eq!(serde_json::to_string(&back.to_json()).unwrap(), text);
        }
    }
}
