//! The forms `rho`, `*rho`, the scalar `f`, metric classification, pairs and
//! triples of metrics, eigenvalue reports and the conformal evaluator.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::complex_structure::{InvariantComplexManifold, PullbackMap};
use crate::error::{Error, Result};
use crate::forms::Form;
use crate::metric::HermitianMetric;
use crate::DEFAULT_TOL;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn require_dim(m: &InvariantComplexManifold) -> Result<usize> {
    let n = m.dim();
    if n < 3 {
        return Err(Error::DimensionTooSmall { min: 3, got: n });
    }
    Ok(n)
}

fn real_scalar(c: Complex64, tol: f64) -> Result<f64> {
    if c.im.abs() > tol * (1.0 + c.re.abs()) {
        return Err(Error::NonReal(c.im));
    }
    Ok(c.re)
}

/// All pieces of the `(omega, gamma)` computation; `gamma = omega` gives the
/// single-metric quantities.
#[derive(Clone, Debug)]
pub struct RhoData {
    /// `i del delbar omega_{n-2}`.
    pub ddbar_power: Form,
    pub rho: Form,
    /// `*_gamma rho` from the Hodge star.
    pub star_rho: Form,
    /// `f/(n-1) gamma_{n-1} - i del delbar omega_{n-2}`.
    pub star_rho_closed: Form,
    pub f: f64,
    /// `(n-1) Lambda_gamma(rho)`.
    pub f_trace: f64,
    pub star_residual: f64,
    pub f_residual: f64,
}

pub fn rho_data_pair(
    m: &InvariantComplexManifold,
    omega: &HermitianMetric,
    gamma: &HermitianMetric,
    tol: f64,
) -> Result<RhoData> {
    let n = require_dim(m)?;
    if omega.dim() != n || gamma.dim() != n {
        return Err(Error::DimMismatch(n, omega.dim().max(gamma.dim())));
    }
    let ddbar_power = m.i_ddbar(&omega.power(n - 2));
    let rho = gamma.divide_by_power(n - 2, &ddbar_power)?;
    let ratio = gamma.omega().wedge(&ddbar_power).top_coefficient() / gamma.power(n).top_coefficient();
    let f = real_scalar(ratio, tol)?;
    let trace = HermitianMetric::scalar_part(&gamma.lefschetz_lambda(&rho)) * (n as f64 - 1.0);
    let f_trace = real_scalar(trace, tol)?;
    let star_rho = gamma.hodge_star(&rho);
    let star_rho_closed = gamma.power(n - 1).scale(f / (n as f64 - 1.0)).sub_form(&ddbar_power);
    Ok(RhoData {
        star_residual: star_rho.sub_form(&star_rho_closed).max_abs(),
        f_residual: (f - f_trace).abs(),
        ddbar_power,
        rho,
        star_rho,
        star_rho_closed,
        f,
        f_trace,
    })
}

pub fn rho_data(m: &InvariantComplexManifold, g: &HermitianMetric) -> Result<RhoData> {
    rho_data_pair(m, g, g, DEFAULT_TOL)
}

pub fn rho(m: &InvariantComplexManifold, g: &HermitianMetric) -> Result<Form> {
    Ok(rho_data(m, g)?.rho)
}

pub fn star_rho(m: &InvariantComplexManifold, g: &HermitianMetric) -> Result<Form> {
    Ok(rho_data(m, g)?.star_rho)
}

pub fn f_scalar(m: &InvariantComplexManifold, g: &HermitianMetric) -> Result<f64> {
    Ok(rho_data(m, g)?.f)
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct Flag {
    pub holds: bool,
    pub defect: f64,
}

impl Flag {
    /// `defect < tol * (1 + scale)`.
    pub fn from_defect(defect: f64, scale: f64, tol: f64) -> Self {
        Flag { holds: defect < tol * (1.0 + scale), defect }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Flags {
    pub kahler: Flag,
    pub balanced: Flag,
    pub gauduchon: Flag,
    pub skt: Flag,
    pub astheno_kahler: Flag,
    pub n2_gauduchon: Flag,
    pub pluriclosed_star_split: Flag,
    pub closed_star_split: Flag,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Norms {
    /// `||del omega||^2` for the global pairing.
    pub del_omega_sq: f64,
    /// Integral of `f omega_n`.
    pub integral_f: f64,
    /// Pointwise norm of `rho`.
    pub rho: f64,
    /// Pointwise norm of `*rho`.
    pub star_rho: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Checks {
    /// Star of rho against the closed form of `*rho`.
    pub star_rho_residual: f64,
    /// `f` against `(n-1) Lambda(rho)`.
    pub f_trace_residual: f64,
    /// `||del delbar (f omega_{n-1})||`, the other reading of the pss condition.
    pub pss_via_f: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MetricReport {
    pub manifold: String,
    pub dim: usize,
    pub tolerance: f64,
    pub flags: Flags,
    pub f: f64,
    pub eigenvalues: Vec<f64>,
    pub norms: Norms,
    pub checks: Checks,
    pub rho: Form,
    pub star_rho: Form,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl MetricReport {
    /// Violations of the implications between the classes; empty on a
    /// consistent report.
    pub fn implication_violations(&self) -> Vec<String> {
        let fl = &self.flags;
        let mut out = Vec::new();
        let mut imply = |a: bool, b: bool, what: &str| {
            if a && !b {
                out.push(what.to_string());
            }
        };
        imply(fl.kahler.holds, fl.balanced.holds, "kahler => balanced");
        imply(fl.kahler.holds, fl.skt.holds, "kahler => skt");
        imply(fl.balanced.holds, fl.gauduchon.holds, "balanced => gauduchon");
        imply(fl.astheno_kahler.holds, fl.n2_gauduchon.holds, "astheno_kahler => n2_gauduchon");
        imply(fl.n2_gauduchon.holds, fl.closed_star_split.holds, "n2_gauduchon => closed_star_split");
        imply(fl.closed_star_split.holds, fl.pluriclosed_star_split.holds, "closed_star_split => pluriclosed_star_split");
        imply(
            fl.balanced.holds && fl.n2_gauduchon.holds,
            fl.kahler.holds,
            "balanced and n2_gauduchon => kahler",
        );
        out
    }

    /// Sign of `f`: 1, -1, or 0 within the tolerance.
    pub fn f_sign(&self) -> i32 {
        if self.f.abs() < self.tolerance * (1.0 + self.f.abs()) {
            0
        } else if self.f > 0.0 {
            1
        } else {
            -1
        }
    }
}

pub fn classify(m: &InvariantComplexManifold, g: &HermitianMetric) -> Result<MetricReport> {
    classify_with_tol(m, g, DEFAULT_TOL)
}

pub fn classify_with_tol(m: &InvariantComplexManifold, g: &HermitianMetric, tol: f64) -> Result<MetricReport> {
    let n = require_dim(m)?;
    let data = rho_data_pair(m, g, g, tol)?;
    let w = g.omega();
    let w_n1 = g.power(n - 1);
    let w_n2 = g.power(n - 2);
    let ddbar = |u: &Form| m.del(&m.delbar(u));
    let flag = |defect: &Form, base: &Form| Flag::from_defect(defect.coeff_norm(), base.max_abs(), tol);

    let dd_w_n2 = ddbar(&w_n2);
    let flags = Flags {
        kahler: flag(&m.exterior_d(&w), &w),
        balanced: flag(&m.exterior_d(&w_n1), &w_n1),
        gauduchon: flag(&ddbar(&w_n1), &w_n1),
        skt: flag(&ddbar(&w), &w),
        astheno_kahler: flag(&dd_w_n2, &w_n2),
        n2_gauduchon: flag(&w.wedge(&dd_w_n2), &w_n2),
        pluriclosed_star_split: flag(&ddbar(&data.star_rho), &data.star_rho),
        closed_star_split: flag(&m.exterior_d(&data.star_rho), &data.star_rho),
    };
    let eigenvalues = eigenvalues_rel_omega(m, g, &data.star_rho, tol)?;
    let vol = g.power(n).top_coefficient().re;
    let norms = Norms {
        del_omega_sq: m.l2_norm_sq(g, &m.del(&w)),
        integral_f: data.f * vol,
        rho: g.norm(&data.rho),
        star_rho: g.norm(&data.star_rho),
    };
    let checks = Checks {
        star_rho_residual: data.star_residual,
        f_trace_residual: data.f_residual,
        pss_via_f: ddbar(&w_n1.scale(data.f)).coeff_norm(),
    };
    Ok(MetricReport {
        manifold: m.name().to_string(),
        dim: n,
        tolerance: tol,
        flags,
        f: data.f,
        eigenvalues,
        norms,
        checks,
        rho: data.rho,
        star_rho: data.star_rho,
        notes: Vec::new(),
    })
}

/// Spectrum of the (1,1)-form `*gamma_form` relative to the metric.
pub fn eigenvalues_rel_omega(
    m: &InvariantComplexManifold,
    g: &HermitianMetric,
    gamma_form: &Form,
    tol: f64,
) -> Result<Vec<f64>> {
    let n = m.dim();
    if !gamma_form.is_homogeneous_of(n - 1, n - 1) {
        return Err(Error::WrongBidegree { expected: (n - 1, n - 1), got: format!("{:?}", gamma_form.bidegrees()) });
    }
    if !gamma_form.is_real(tol * (1.0 + gamma_form.max_abs())) {
        return Err(Error::NonReal(gamma_form.sub_form(&gamma_form.conjugate()).max_abs()));
    }
    g.eigenvalues_11(&g.hodge_star(gamma_form), tol)
}

#[derive(Clone, Debug, Serialize)]
pub struct PairReport {
    pub rho_pair: Form,
    pub star_rho_pair: Form,
    pub f_pair: f64,
    pub f_trace_residual: f64,
    pub star_residual: f64,
    pub pluriclosed: Flag,
    pub closed: Flag,
}

pub fn pair_analysis(
    m: &InvariantComplexManifold,
    omega: &HermitianMetric,
    gamma: &HermitianMetric,
) -> Result<PairReport> {
    pair_analysis_tol(m, omega, gamma, DEFAULT_TOL)
}

pub fn pair_analysis_tol(
    m: &InvariantComplexManifold,
    omega: &HermitianMetric,
    gamma: &HermitianMetric,
    tol: f64,
) -> Result<PairReport> {
    let data = rho_data_pair(m, omega, gamma, tol)?;
    let scale = data.star_rho.max_abs();
    Ok(PairReport {
        pluriclosed: Flag::from_defect(m.del(&m.delbar(&data.star_rho)).coeff_norm(), scale, tol),
        closed: Flag::from_defect(m.exterior_d(&data.star_rho).coeff_norm(), scale, tol),
        f_pair: data.f,
        f_trace_residual: data.f_residual,
        star_residual: data.star_residual,
        rho_pair: data.rho,
        star_rho_pair: data.star_rho,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct TripleReport {
    pub pair: PairReport,
    pub rho_triple: Form,
    pub f_triple: f64,
    pub pluriclosed: bool,
    pub structure_compatible: bool,
    pub structure_residual: f64,
    /// `|| rho_{phi,omega,gamma} - phi^* rho_{omega,gamma} ||` when `phi^* gamma = gamma`.
    pub pullback_residual: Option<f64>,
}

pub fn triple_analysis(
    m: &InvariantComplexManifold,
    phi: &PullbackMap,
    omega: &HermitianMetric,
    gamma: &HermitianMetric,
) -> Result<TripleReport> {
    let tol = DEFAULT_TOL;
    let pulled = omega.pulled_back(phi.matrix())?;
    let structure_residual = phi.structure_residual(m);
    let pair = pair_analysis_tol(m, &pulled, gamma, tol)?;
    let gamma_fixed = phi.apply(&gamma.omega()).sub_form(&gamma.omega()).max_abs() < tol * (1.0 + gamma.omega().max_abs());
    let pullback_residual = if gamma_fixed {
        let base = pair_analysis_tol(m, omega, gamma, tol)?;
        Some(pair.rho_pair.sub_form(&phi.apply(&base.rho_pair)).max_abs())
    } else {
        None
    };
    Ok(TripleReport {
        rho_triple: pair.rho_pair.clone(),
        f_triple: pair.f_pair,
        pluriclosed: pair.pluriclosed.holds,
        structure_compatible: structure_residual < tol,
        structure_residual,
        pullback_residual,
        pair,
    })
}

/// `f_{g omega} = f/g - 2 Delta(g)/g^2` at one point, for a balanced metric in
/// dimension three.
pub fn conformal_f(f_base: f64, g_val: f64, laplacian_g_val: f64) -> Result<f64> {
    if !(g_val > 0.0) {
        return Err(Error::Domain(format!("conformal factor must be positive, got {g_val}")));
    }
    Ok(f_base / g_val - 2.0 * laplacian_g_val / (g_val * g_val))
}

pub fn rescale_f(f_base: f64, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("scale must be positive, got {lambda}")));
    }
    Ok(f_base / lambda)
}

/// `g = exp(sin(2 pi x))` with `x = Re z_1` on the Iwasawa manifold with its
/// standard metric, and `Delta g = -Lambda(i del delbar g)
/// = -pi^2 g (cos^2(2 pi x) - sin(2 pi x))`.
pub fn iwasawa_conformal_profile(x: f64) -> (f64, f64) {
    let s = (2.0 * std::f64::consts::PI * x).sin();
    let c = (2.0 * std::f64::consts::PI * x).cos();
    let g = s.exp();
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    (g, -pi2 * g * (c * c - s))
}

/// `c * i * (delbar del omega_{n-1})`, the Gauduchon adjoint of the constant `c`.
pub fn gauduchon_adjoint_on_constant(m: &InvariantComplexManifold, g: &HermitianMetric, c: f64) -> Form {
    let n = m.dim();
    let inner = m.delbar(&m.del(&g.power(n - 1))).scale(c);
    g.hodge_star(&inner).scale(I)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::forms::approx_equal;

    #[test]
    fn iwasawa_rho_display() {
        let e = catalog::default_entry("iwasawa3").unwrap();
        let r = rho(&e.manifold, &e.metric).unwrap();
        let expect = (Form::i_phi_phibar(3, 1, 1) + Form::i_phi_phibar(3, 2, 2) - Form::i_phi_phibar(3, 3, 3)).scale(0.5);
        assert!(approx_equal(&r, &expect, 1e-12));
        assert!((f_scalar(&e.manifold, &e.metric).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nakamura_rho_display() {
        let e = catalog::default_entry("nakamura").unwrap();
        let r = rho(&e.manifold, &e.metric).unwrap();
        assert!(approx_equal(&r, &Form::i_phi_phibar(3, 1, 1), 1e-12));
    }

    #[test]
    fn conformal_values() {
        let pi2 = std::f64::consts::PI.powi(2);
        let (g0, l0) = iwasawa_conformal_profile(0.0);
        assert!((conformal_f(1.0, g0, l0).unwrap() - (1.0 + 2.0 * pi2)).abs() < 1e-12);
        let (g1, l1) = iwasawa_conformal_profile(0.25);
        let e = std::f64::consts::E;
        assert!((conformal_f(1.0, g1, l1).unwrap() - (1.0 - 2.0 * pi2) / e).abs() < 1e-12);
        assert_eq!(rescale_f(3.0, 2.0).unwrap(), 1.5);
        assert!(conformal_f(1.0, 0.0, 0.0).is_err());
        assert!(rescale_f(1.0, -1.0).is_err());
    }

    #[test]
    fn too_small_dimension() {
        let e = catalog::get("torus_2", &[]).unwrap();
        assert!(matches!(classify(&e.manifold, &e.metric), Err(Error::DimensionTooSmall { .. })));
    }

    fn check_entry(e: &catalog::CatalogEntry) {
        let r = classify(&e.manifold, &e.metric).unwrap();
        let ex = &e.expectations;
        let name = &e.name;
        if let Some(f) = ex.f {
            assert!((r.f - f).abs() < 1e-9, "{name}: f {} vs {f}", r.f);
        }
        let pairs = [
            (ex.kahler, r.flags.kahler.holds),
            (ex.balanced, r.flags.balanced.holds),
            (ex.skt, r.flags.skt.holds),
            (ex.pluriclosed_star_split, r.flags.pluriclosed_star_split.holds),
            (ex.closed_star_split, r.flags.closed_star_split.holds),
            (ex.rho_zero, r.rho.max_abs() < 1e-10),
        ];
        for (k, (want, got)) in pairs.iter().enumerate() {
            if let Some(w) = want {
                assert_eq!(w, got, "{name}: flag {k}");
            }
        }
        if let Some(ev) = &ex.eigenvalues {
            for (a, b) in ev.iter().zip(&r.eigenvalues) {
                assert!((a - b).abs() < 1e-9, "{name}: {:?} vs {:?}", r.eigenvalues, ev);
            }
        }
        assert!(r.checks.star_rho_residual < 1e-10, "{name}");
        assert!(r.checks.f_trace_residual < 1e-10, "{name}");
        assert!(r.implication_violations().is_empty(), "{name}");
    }

    #[test]
    fn catalog_expectations() {
        for name in catalog::list() {
            check_entry(&catalog::default_entry(&name).unwrap());
        }
        let c = Complex64::new;
        let defs = [
            [c(-1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.1, 0.0), c(0.0, 0.0)],
            [c(-1.0, 0.0), c(0.3, 0.0), c(0.2, 0.0), c(0.1, 0.0), c(0.4, 0.0)],
            [c(-1.0, 0.5), c(0.0, 0.2), c(0.3, 0.0), c(-0.1, 0.0), c(0.5, 0.0)],
        ];
        let keys = ["sigma12", "sigma11b", "sigma12b", "sigma21b", "sigma22b"];
        for vals in defs {
            let params: Vec<_> = keys.iter().zip(vals).map(|(k, v)| (k.to_string(), v)).collect();
            check_entry(&catalog::get("iwasawa_def", &params).unwrap());
        }
        for t in [c(0.1, 0.0), c(0.0, 0.25), c(0.0, -0.25), c(0.1, 0.1), c(-0.3, 0.5)] {
            check_entry(&catalog::get("calabi_eckmann", &[("t".into(), t)]).unwrap());
        }
    }
}
