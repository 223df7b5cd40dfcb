//! Derivative-free search for pluriclosed star split metrics in families of
//! invariant metrics, and parameter scans over catalog structures.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{self, Flags, MetricReport};
use crate::catalog;
use crate::complex_structure::InvariantComplexManifold;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::metric::HermitianMetric;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    Diagonal,
    FullHermitian,
}

/// Invariant metrics parametrized by real vectors.
///
/// `Diagonal` uses the `n` diagonal entries; `FullHermitian` adds the real
/// and imaginary parts of the strictly upper entries, row by row.
#[derive(Clone, Debug)]
pub struct MetricFamily {
    pub kind: FamilyKind,
    pub n: usize,
}

impl MetricFamily {
    pub fn diagonal(n: usize) -> Self {
        MetricFamily { kind: FamilyKind::Diagonal, n }
    }

    pub fn full_hermitian(n: usize) -> Self {
        MetricFamily { kind: FamilyKind::FullHermitian, n }
    }

    pub fn param_count(&self) -> usize {
        match self.kind {
            FamilyKind::Diagonal => self.n,
            FamilyKind::FullHermitian => self.n * self.n,
        }
    }

    /// Parameters of the standard metric.
    pub fn identity_params(&self) -> Vec<f64> {
        let mut p = vec![0.0; self.param_count()];
        p[..self.n].iter_mut().for_each(|x| *x = 1.0);
        p
    }

    pub fn matrix(&self, params: &[f64]) -> Result<CMatrix> {
        if params.len() != self.param_count() {
            return Err(Error::Invalid(format!("{} parameters for a family of {}", params.len(), self.param_count())));
        }
        let n = self.n;
        let mut h = CMatrix::zeros(n, n);
        for k in 0..n {
            h[(k, k)] = Complex64::new(params[k], 0.0);
        }
        if self.kind == FamilyKind::FullHermitian {
            let mut idx = n;
            for i in 0..n {
                for j in i + 1..n {
                    let c = Complex64::new(params[idx], params[idx + 1]);
                    idx += 2;
                    h[(i, j)] = c;
                    h[(j, i)] = c.conj();
                }
            }
        }
        Ok(h)
    }

    /// The metric, or an error outside the positive cone.
    pub fn metric(&self, params: &[f64]) -> Result<HermitianMetric> {
        if params.iter().any(|x| !x.is_finite()) {
            return Err(Error::NotPositiveDefinite);
        }
        HermitianMetric::new(self.matrix(params)?)
    }

    fn random_start(&self, rng: &mut impl Rng) -> Vec<f64> {
        let mut p = self.identity_params();
        for x in p[..self.n].iter_mut() {
            *x = rng.gen_range(-1.0f64..1.0).exp();
        }
        for x in p[self.n..].iter_mut() {
            *x = rng.gen_range(-0.3..0.3);
        }
        p
    }
}

/// `||del delbar(*rho)||` in the coefficient norm of the standard metric.
pub fn pss_defect(m: &InvariantComplexManifold, g: &HermitianMetric) -> Result<f64> {
    let s = analysis::star_rho(m, g)?;
    Ok(m.del(&m.delbar(&s)).coeff_norm())
}

#[derive(Clone, Copy, Debug)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    pub initial_step: f64,
    /// Stop once the spread of values and the simplex diameter are both below this.
    pub xtol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions { max_evals: 400, initial_step: 0.25, xtol: 1e-12 }
    }
}

#[derive(Clone, Debug)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    /// Best value after each iteration.
    pub history: Vec<f64>,
}

/// Nelder–Mead descent with reflection 1, expansion 2, contraction 1/2 and
/// shrink 1/2. Returns as soon as a zero value is found.
pub fn nelder_mead(f: &mut impl FnMut(&[f64]) -> f64, x0: &[f64], opts: &NelderMeadOptions) -> Minimum {
    let d = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let v0 = eval(x0, &mut evals);
    let mut history = vec![v0];
    if v0 == 0.0 || d == 0 || opts.max_evals <= 1 {
        return Minimum { x: x0.to_vec(), value: v0, evaluations: evals, history };
    }
    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(x0.to_vec(), v0)];
    for k in 0..d {
        if evals >= opts.max_evals {
            break;
        }
        let mut x = x0.to_vec();
        x[k] += if x[k].abs() > 1e-12 { opts.initial_step * x[k].abs() } else { opts.initial_step };
        let v = eval(&x, &mut evals);
        simplex.push((x, v));
        if v == 0.0 {
            break;
        }
    }
    let sort = |s: &mut Vec<(Vec<f64>, f64)>| s.sort_by(|a, b| a.1.total_cmp(&b.1));
    sort(&mut simplex);
    if simplex.len() < d + 1 || simplex[0].1 == 0.0 {
        history.push(simplex[0].1);
        let (x, value) = simplex.swap_remove(0);
        return Minimum { x, value, evaluations: evals, history };
    }
    let lerp = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect() };
    while evals < opts.max_evals {
        let best = simplex[0].1;
        let worst = simplex[d].1;
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if best == 0.0 || ((worst - best).abs() <= opts.xtol && diameter <= opts.xtol) {
            break;
        }
        let centroid: Vec<f64> = (0..d).map(|k| simplex[..d].iter().map(|(x, _)| x[k]).fold(0.0, |a, b| a + b) / d as f64).collect();
        let xr = lerp(&centroid, &simplex[d].0, -1.0);
        let vr = eval(&xr, &mut evals);
        if vr < simplex[0].1 {
            let xe = lerp(&centroid, &simplex[d].0, -2.0);
            let ve = eval(&xe, &mut evals);
            simplex[d] = if ve < vr { (xe, ve) } else { (xr, vr) };
        } else if vr < simplex[d - 1].1 {
            simplex[d] = (xr, vr);
        } else {
            let (xc, vc) = if vr < simplex[d].1 {
                let xc = lerp(&centroid, &xr, 0.5);
                let vc = eval(&xc, &mut evals);
                (xc, vc)
            } else {
                let xc = lerp(&centroid, &simplex[d].0, 0.5);
                let vc = eval(&xc, &mut evals);
                (xc, vc)
            };
            if vc < simplex[d].1.min(vr) {
                simplex[d] = (xc, vc);
            } else {
                let x_best = simplex[0].0.clone();
                for k in 1..=d {
                    if evals >= opts.max_evals {
                        break;
                    }
                    let xs = lerp(&x_best, &simplex[k].0, 0.5);
                    let vs = eval(&xs, &mut evals);
                    simplex[k] = (xs, vs);
                }
            }
        }
        sort(&mut simplex);
        history.push(simplex[0].1);
    }
    let (x, value) = simplex.swap_remove(0);
    Minimum { x, value, evaluations: evals, history }
}

#[derive(Clone, Copy, Debug)]
pub struct SearchOptions {
    /// Total objective evaluations, split evenly across restarts.
    pub budget: usize,
    pub seed: u64,
    pub restarts: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { budget: 2000, seed: 0, restarts: 4 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TraceRow {
    pub restart: usize,
    pub iteration: usize,
    pub best_defect: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SearchResult {
    pub family: FamilyKind,
    pub best_params: Vec<f64>,
    pub best_defect: f64,
    pub best_restart: usize,
    pub evaluations: usize,
    /// Whether `f` took both signs over the evaluated metrics; recorded only.
    pub f_sign_changed: bool,
    pub report: MetricReport,
    pub trace: Vec<TraceRow>,
}

struct RestartOutcome {
    min: Minimum,
    signs: (bool, bool),
}

pub fn search_pss(
    m: &InvariantComplexManifold,
    family: &MetricFamily,
    budget: usize,
    seed: u64,
) -> Result<SearchResult> {
    search_pss_with(m, family, &SearchOptions { budget, seed, ..SearchOptions::default() })
}

pub fn search_pss_with(
    m: &InvariantComplexManifold,
    family: &MetricFamily,
    opts: &SearchOptions,
) -> Result<SearchResult> {
    if opts.budget == 0 {
        return Err(Error::Invalid("search budget must be at least 1".into()));
    }
    if family.n != m.dim() {
        return Err(Error::DimMismatch(m.dim(), family.n));
    }
    if m.dim() < 3 {
        return Err(Error::DimensionTooSmall { min: 3, got: m.dim() });
    }
    let restarts = opts.restarts.clamp(1, opts.budget);
    let per = opts.budget / restarts;
    let extra = opts.budget % restarts;
    let outcomes: Vec<RestartOutcome> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_mul(0x9e37_79b9).wrapping_add(r as u64));
            let x0 = if r == 0 { family.identity_params() } else { family.random_start(&mut rng) };
            let mut signs = (false, false);
            let mut objective = |x: &[f64]| -> f64 {
                let Ok(g) = family.metric(x) else { return f64::INFINITY };
                match analysis::rho_data(m, &g) {
                    Ok(data) => {
                        if data.f > 0.0 {
                            signs.0 = true;
                        } else if data.f < 0.0 {
                            signs.1 = true;
                        }
                        m.del(&m.delbar(&data.star_rho)).coeff_norm()
                    }
                    Err(_) => f64::INFINITY,
                }
            };
            let nm = NelderMeadOptions { max_evals: per + usize::from(r < extra), ..NelderMeadOptions::default() };
            let min = nelder_mead(&mut objective, &x0, &nm);
            RestartOutcome { min, signs }
        })
        .collect();
    let (best_restart, best) = outcomes
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.min.value.total_cmp(&b.1.min.value).then(a.0.cmp(&b.0)))
        .expect("at least one restart");
    if !best.min.value.is_finite() {
        return Err(Error::Invalid("the family produced no positive definite metric".into()));
    }
    let g = family.metric(&best.min.x)?;
    let report = analysis::classify(m, &g)?;
    let trace = outcomes
        .iter()
        .enumerate()
        .flat_map(|(r, o)| {
            o.min.history.iter().enumerate().map(move |(i, &v)| TraceRow { restart: r, iteration: i, best_defect: v })
        })
        .collect();
    let pos = outcomes.iter().any(|o| o.signs.0);
    let neg = outcomes.iter().any(|o| o.signs.1);
    Ok(SearchResult {
        family: family.kind,
        best_params: best.min.x.clone(),
        best_defect: best.min.value,
        best_restart,
        evaluations: outcomes.iter().map(|o| o.min.evaluations).sum(),
        f_sign_changed: pos && neg,
        report,
        trace,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ScanRow {
    pub param: String,
    pub value: String,
    pub f: f64,
    pub flags: Flags,
    pub eigenvalues: Vec<f64>,
}

/// `a+bi` with the shortest round-trip float formatting.
pub fn format_complex(c: Complex64) -> String {
    if c.im == 0.0 {
        format!("{}", c.re)
    } else if c.re == 0.0 {
        format!("{}i", c.im)
    } else if c.im < 0.0 {
        format!("{}-{}i", c.re, -c.im)
    } else {
        format!("{}+{}i", c.re, c.im)
    }
}

fn row(param: &str, value: Complex64, report: &MetricReport) -> ScanRow {
    ScanRow {
        param: param.to_string(),
        value: format_complex(value),
        f: report.f,
        flags: report.flags.clone(),
        eigenvalues: report.eigenvalues.clone(),
    }
}

/// Re-binds `param` to each value and classifies with the fixed metric `g`.
pub fn scan(
    m: &InvariantComplexManifold,
    g: &HermitianMetric,
    param: &str,
    values: &[Complex64],
) -> Result<Vec<ScanRow>> {
    if m.param(param).is_none() {
        return Err(Error::UnknownParameter(param.to_string()));
    }
    values
        .iter()
        .map(|&v| {
            let bound = m.bind(param, v)?;
            bound.validate(crate::DEFAULT_TOL)?;
            Ok(row(param, v, &analysis::classify(&bound, g)?))
        })
        .collect()
}

/// Scan of a catalog entry, rebuilding the entry (and its default metric and
/// domain checks) for each value.
pub fn scan_catalog(
    name: &str,
    fixed: &[(String, Complex64)],
    param: &str,
    values: &[Complex64],
) -> Result<Vec<ScanRow>> {
    let template = catalog::template(name)?;
    if template.param(param).is_none() {
        return Err(Error::UnknownParameter(param.to_string()));
    }
    values
        .iter()
        .map(|&v| {
            let mut params: Vec<(String, Complex64)> = fixed.iter().filter(|(k, _)| k != param).cloned().collect();
            params.push((param.to_string(), v));
            let e = catalog::get(name, &params)?;
            Ok(row(param, v, &e.classify(&e.metric)?))
        })
        .collect()
}

pub const SCAN_CSV_HEADER: [&str; 13] = [
    "param",
    "value",
    "f",
    "kahler",
    "balanced",
    "gauduchon",
    "skt",
    "astheno_kahler",
    "n2_gauduchon",
    "pluriclosed_star_split",
    "closed_star_split",
    "pss_defect",
    "eigenvalues",
];

pub fn scan_to_csv(rows: &[ScanRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SCAN_CSV_HEADER)?;
    for r in rows {
        let fl = &r.flags;
        let ev: Vec<String> = r.eigenvalues.iter().map(|e| e.to_string()).collect();
        w.write_record([
            r.param.clone(),
            r.value.clone(),
            r.f.to_string(),
            fl.kahler.holds.to_string(),
            fl.balanced.holds.to_string(),
            fl.gauduchon.holds.to_string(),
            fl.skt.holds.to_string(),
            fl.astheno_kahler.holds.to_string(),
            fl.n2_gauduchon.holds.to_string(),
            fl.pluriclosed_star_split.holds.to_string(),
            fl.closed_star_split.holds.to_string(),
            fl.pluriclosed_star_split.defect.to_string(),
            ev.join(" "),
        ])?;
    }
    finish_csv(w)
}

pub fn trace_to_csv(trace: &[TraceRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for t in trace {
        w.serialize(t)?;
    }
    finish_csv(w)
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Invalid(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Invalid(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nelder_mead_quadratic() {
        let mut f = |x: &[f64]| (x[0] - 1.0).powi(2) + 3.0 * (x[1] + 0.5).powi(2);
        let r = nelder_mead(&mut f, &[0.0, 0.0], &NelderMeadOptions { max_evals: 2000, ..Default::default() });
        assert!(r.value < 1e-14, "{}", r.value);
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] + 0.5).abs() < 1e-6);
    }

    #[test]
    fn family_constraints() {
        let fam = MetricFamily::diagonal(3);
        assert!(fam.metric(&[1.0, -1.0, 1.0]).is_err());
        let full = MetricFamily::full_hermitian(2);
        assert_eq!(full.param_count(), 4);
        let h = full.matrix(&[1.0, 2.0, 0.5, -0.25]).unwrap();
        assert_eq!(h[(1, 0)], Complex64::new(0.5, 0.25));
        assert!(full.metric(&[1.0, 1.0, 2.0, 0.0]).is_err());
    }

    #[test]
    fn torus_returns_first_iterate() {
        let e = catalog::default_entry("torus_3").unwrap();
        let r = search_pss(&e.manifold, &MetricFamily::diagonal(3), 50, 1).unwrap();
        assert_eq!(r.best_defect, 0.0);
        assert_eq!(r.best_params, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn defect_vanishes_on_unimodular_models() {
        let c = Complex64::new;
        let params = vec![("sigma21b".to_string(), c(0.1, 0.0)), ("sigma11b".to_string(), c(0.3, 0.0))];
        let e = catalog::get("iwasawa_def", &params).unwrap();
        let g = HermitianMetric::diagonal(&[1.0, 1.3, 1.0]).unwrap();
        assert!(pss_defect(&e.manifold, &g).unwrap() < 1e-12);
        assert!(pss_defect(&e.manifold, &e.metric).unwrap() < 1e-12);
    }

    #[test]
    fn complex_labels() {
        assert_eq!(format_complex(c64(0.1, 0.1)), "0.1+0.1i");
        assert_eq!(format_complex(c64(0.0, -0.2)), "-0.2i");
        assert_eq!(format_complex(c64(0.5, 0.0)), "0.5");
    }

    fn c64(a: f64, b: f64) -> Complex64 {
        Complex64::new(a, b)
    }
}
