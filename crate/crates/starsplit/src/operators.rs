//! The operators `T`, `S`, `P`, `R`, `Q` and the torsion operators, with the
//! identity verifiers.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{self, Flag};
use crate::complex_structure::InvariantComplexManifold;
use crate::error::{Error, Result};
use crate::forms::{basis, full_mask, mono_wedge, Form, Mask};
use crate::linalg::{self, CMatrix};
use crate::metric::HermitianMetric;
use crate::DEFAULT_TOL;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn require_11(u: &Form) -> Result<()> {
    if u.is_homogeneous_of(1, 1) {
        Ok(())
    } else {
        Err(Error::WrongBidegree { expected: (1, 1), got: format!("{:?}", u.bidegrees()) })
    }
}

fn require_nn(n: usize, u: &Form) -> Result<()> {
    if u.is_homogeneous_of(n - 1, n - 1) {
        Ok(())
    } else {
        Err(Error::WrongBidegree { expected: (n - 1, n - 1), got: format!("{:?}", u.bidegrees()) })
    }
}

fn require_n3(n: usize) -> Result<()> {
    if n < 3 {
        return Err(Error::DimensionTooSmall { min: 3, got: n });
    }
    Ok(())
}

fn scalar(u: &Form) -> Complex64 {
    HermitianMetric::scalar_part(u)
}

/// `T(alpha) = -alpha + (Lambda alpha) omega / (n-1)`.
pub fn t_omega(g: &HermitianMetric, alpha: &Form) -> Result<Form> {
    let n = g.dim();
    require_n3(n)?;
    require_11(alpha)?;
    let tr = scalar(&g.lefschetz_lambda(alpha));
    Ok(alpha.scale(-1.0) + g.omega().scale(tr / (n as f64 - 1.0)))
}

/// `T` as division of `*alpha` by `omega_{n-2}`.
pub fn t_omega_by_definition(g: &HermitianMetric, alpha: &Form) -> Result<Form> {
    let n = g.dim();
    require_n3(n)?;
    require_11(alpha)?;
    g.divide_by_power(n - 2, &g.hodge_star(alpha))
}

/// `S(Omega) = -Omega + Lambda(*Omega) omega_{n-1} / (n-1)`.
pub fn s_omega(g: &HermitianMetric, big: &Form) -> Result<Form> {
    let n = g.dim();
    require_n3(n)?;
    require_nn(n, big)?;
    let tr = scalar(&g.lefschetz_lambda(&g.hodge_star(big)));
    Ok(big.scale(-1.0) + g.power(n - 1).scale(tr / (n as f64 - 1.0)))
}

/// `S` as the star of the quotient of `Omega` by `omega_{n-2}`.
pub fn s_omega_by_definition(g: &HermitianMetric, big: &Form) -> Result<Form> {
    let n = g.dim();
    require_n3(n)?;
    require_nn(n, big)?;
    Ok(g.hodge_star(&g.divide_by_power(n - 2, big)?))
}

/// `P(alpha)`: the quotient of `i del delbar alpha ^ omega_{n-3}` by `omega_{n-2}`.
pub fn p_omega(m: &InvariantComplexManifold, g: &HermitianMetric, alpha: &Form) -> Result<Form> {
    let n = m.dim();
    require_n3(n)?;
    require_11(alpha)?;
    g.divide_by_power(n - 2, &m.i_ddbar(alpha).wedge(&g.power(n - 3)))
}

/// `P(alpha) = Lambda(G) - Lambda^2(G) omega / (2(n-1))` with `G = i del delbar alpha`.
pub fn p_omega_trace(m: &InvariantComplexManifold, g: &HermitianMetric, alpha: &Form) -> Result<Form> {
    let n = m.dim();
    require_n3(n)?;
    require_11(alpha)?;
    let gg = m.i_ddbar(alpha);
    let tr2 = scalar(&g.lambda_power(&gg, 2));
    Ok(g.lefschetz_lambda(&gg) - g.omega().scale(tr2 / (2.0 * (n as f64 - 1.0))))
}

/// `R(alpha) = (i del^* delbar^* alpha) omega`.
pub fn r_omega(m: &InvariantComplexManifold, g: &HermitianMetric, alpha: &Form) -> Result<Form> {
    require_n3(m.dim())?;
    require_11(alpha)?;
    let c = scalar(&m.adjoint_del(g, &m.adjoint_delbar(g, alpha)));
    Ok(g.omega().scale(I * c))
}

/// `Q(alpha) = P + R - i del Lambda(delbar alpha) - i del^*(omega ^ delbar^* alpha)
/// - delbar^* Lambda(delbar alpha) omega / (n-1)`.
pub fn q_omega(m: &InvariantComplexManifold, g: &HermitianMetric, alpha: &Form) -> Result<Form> {
    let n = m.dim();
    let p = p_omega(m, g, alpha)?;
    let r = r_omega(m, g, alpha)?;
    let lam_db = g.lefschetz_lambda(&m.delbar(alpha));
    let t3 = m.del(&lam_db).scale(I);
    let t4 = m.adjoint_del(g, &g.omega().wedge(&m.adjoint_delbar(g, alpha))).scale(I);
    let c5 = scalar(&m.adjoint_delbar(g, &lam_db));
    let t5 = g.omega().scale(c5 / (n as f64 - 1.0));
    Ok(p + r - t3 - t4 - t5)
}

/// `tau(u) = [Lambda, del omega ^ .](u)`.
pub fn tau(m: &InvariantComplexManifold, g: &HermitianMetric, u: &Form) -> Form {
    let dw = m.del(&g.omega());
    g.lefschetz_lambda(&dw.wedge(u)) - dw.wedge(&g.lefschetz_lambda(u))
}

/// `tau_bar(u) = [Lambda, delbar omega ^ .](u)`.
pub fn tau_bar(m: &InvariantComplexManifold, g: &HermitianMetric, u: &Form) -> Form {
    let dw = m.delbar(&g.omega());
    g.lefschetz_lambda(&dw.wedge(u)) - dw.wedge(&g.lefschetz_lambda(u))
}

/// Pointwise adjoint of `tau`, applied to a form of bidegree `to`.
pub fn tau_adjoint(
    m: &InvariantComplexManifold,
    g: &HermitianMetric,
    from: (usize, usize),
    v: &Form,
) -> Form {
    g.adjoint_apply(|u| tau(m, g, u), from, (from.0 + 1, from.1), v)
}

/// Pointwise adjoint of `tau_bar`, applied to a form of bidegree `(p, q+1)`.
pub fn tau_bar_adjoint(
    m: &InvariantComplexManifold,
    g: &HermitianMetric,
    from: (usize, usize),
    v: &Form,
) -> Form {
    g.adjoint_apply(|u| tau_bar(m, g, u), from, (from.0, from.1 + 1), v)
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct IdentityEntry {
    pub id: String,
    /// The identity being checked, written out.
    pub anchor: String,
    /// Relative residual `|lhs - rhs| / (1 + max(|lhs|, |rhs|))`, maximized
    /// over all samples; absent when skipped.
    pub residual: Option<f64>,
    /// Absent when skipped.
    pub pass: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skipped_reason: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl IdentityEntry {
    pub fn is_skipped(&self) -> bool {
        self.skipped_reason.is_some()
    }

    pub fn failed(&self) -> bool {
        self.pass == Some(false)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ReportContext {
    pub manifold: String,
    pub metric: String,
    pub tolerance: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct IdentityReport {
    pub context: ReportContext,
    pub entries: Vec<IdentityEntry>,
}

impl IdentityReport {
    pub fn all_passed(&self) -> bool {
        !self.entries.iter().any(IdentityEntry::failed)
    }

    pub fn get(&self, id: &str) -> Option<&IdentityEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn max_residual(&self) -> f64 {
        self.entries.iter().filter_map(|e| e.residual).fold(0.0, f64::max)
    }

    pub fn failures(&self) -> Vec<&IdentityEntry> {
        self.entries.iter().filter(|e| e.failed()).collect()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SuiteOptions {
    pub tol: f64,
    pub seed: u64,
    /// Random samples per randomized identity.
    pub samples: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions { tol: DEFAULT_TOL, seed: 7, samples: 20 }
    }
}

enum Outcome {
    Residual(f64),
    Skipped(String),
}

type Check<'a> = Box<dyn Fn() -> Result<Outcome> + Send + Sync + 'a>;

struct Identity<'a> {
    id: &'static str,
    anchor: &'static str,
    check: Check<'a>,
}

fn identity<'a>(
    id: &'static str,
    anchor: &'static str,
    check: impl Fn() -> Result<Outcome> + Send + Sync + 'a,
) -> Identity<'a> {
    Identity { id, anchor, check: Box::new(check) }
}

fn run_suite(list: Vec<Identity<'_>>, context: ReportContext) -> IdentityReport {
    let tol = context.tolerance;
    let mut entries: Vec<IdentityEntry> = list
        .par_iter()
        .map(|it| {
            let base = IdentityEntry {
                id: it.id.to_string(),
                anchor: it.anchor.to_string(),
                residual: None,
                pass: None,
                skipped_reason: None,
                error: None,
            };
            match (it.check)() {
                Ok(Outcome::Residual(r)) => IdentityEntry { residual: Some(r), pass: Some(r < tol), ..base },
                Ok(Outcome::Skipped(why)) => IdentityEntry { skipped_reason: Some(why), ..base },
                Err(e) => IdentityEntry { pass: Some(false), error: Some(e.to_string()), ..base },
            }
        })
        .collect();
    entries.sort_by(|a, b| a.id.cmp(&b.id));
    IdentityReport { context, entries }
}

/// Short description of a metric for report headers.
pub fn describe_metric(g: &HermitianMetric) -> String {
    let h = g.matrix();
    let n = g.dim();
    let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || h[(i, j)].norm() == 0.0))
        && (0..n).all(|i| h[(i, i)].im == 0.0);
    if diagonal {
        let d: Vec<String> = (0..n).map(|i| format!("{}", h[(i, i)].re)).collect();
        format!("diag({})", d.join(", "))
    } else {
        format!("hermitian {n}x{n}")
    }
}

pub fn rel_residual(a: &Form, b: &Form) -> f64 {
    a.sub_form(b).max_abs() / (1.0 + a.max_abs().max(b.max_abs()))
}

pub fn rel_scalar_residual(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / (1.0 + a.norm().max(b.norm()))
}

fn mat_residual(a: &CMatrix, b: &CMatrix) -> f64 {
    let max = |m: &CMatrix| m.iter().map(|c| c.norm()).fold(0.0, f64::max);
    max(&(a - b)) / (1.0 + max(a).max(max(b)))
}

fn rng_for(seed: u64, salt: &str) -> ChaCha8Rng {
    let h = salt.bytes().fold(seed ^ 0x9e37_79b9_7f4a_7c15, |acc, b| acc.rotate_left(7) ^ b as u64);
    ChaCha8Rng::seed_from_u64(h)
}

/// Form of bidegree `(p, q)` with coefficients uniform in the unit square.
pub fn random_form(n: usize, p: usize, q: usize, rng: &mut impl Rng) -> Form {
    let terms = basis(n, p, q)
        .into_iter()
        .map(|m| (m, Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))));
    Form::from_terms(n, terms)
}

/// Real form of bidegree `(p, p)`.
pub fn random_real_form(n: usize, p: usize, rng: &mut impl Rng) -> Form {
    let x = random_form(n, p, p, rng);
    (x.add_form(&x.conjugate())).scale(0.5)
}

/// Form of total degree `k` with every bidegree present.
pub fn random_mixed_form(n: usize, k: usize, rng: &mut impl Rng) -> Form {
    let mut acc = Form::zero(n);
    for p in 0..=k.min(n) {
        if k - p <= n {
            acc = acc + random_form(n, p, k - p, rng);
        }
    }
    acc
}

/// Positive definite metric `B^H B + I/2` with `B` uniform in the unit square.
pub fn random_metric(n: usize, rng: &mut impl Rng) -> Result<HermitianMetric> {
    let b = CMatrix::from_fn(n, n, |_, _| Complex64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)));
    let h = b.adjoint() * &b + CMatrix::identity(n, n) * Complex64::new(0.5, 0.0);
    HermitianMetric::new((&h + h.adjoint()) * Complex64::new(0.5, 0.0))
}

pub fn random_metric_seeded(n: usize, seed: u64) -> Result<HermitianMetric> {
    random_metric(n, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Gram matrix `G[i][j] = <<b_j, b_i>>` of the global pairing on a bidegree.
fn global_gram(m: &InvariantComplexManifold, g: &HermitianMetric, bd: (usize, usize)) -> CMatrix {
    let n = m.dim();
    let one = Complex64::new(1.0, 0.0);
    let full = full_mask(n);
    let unit = m.integrate(&Form::monomial(n, (full, full), one));
    let monos = basis(n, bd.0, bd.1);
    let stars: Vec<Form> = monos.iter().map(|&b| g.hodge_star(&Form::monomial(n, b, one).conjugate())).collect();
    let comps: Vec<(f64, (Mask, Mask))> = monos
        .iter()
        .map(|&(a, b)| {
            let c = (full & !a, full & !b);
            (mono_wedge((a, b), c).map_or(0.0, |(s, _)| s), c)
        })
        .collect();
    CMatrix::from_fn(monos.len(), monos.len(), |i, j| unit * comps[j].0 * stars[i].coeff(comps[j].1))
}

/// Matrix of the adjoint, for the global pairing, of a map `from -> to`.
fn global_adjoint(
    m: &InvariantComplexManifold,
    g: &HermitianMetric,
    from: (usize, usize),
    to: (usize, usize),
    op: impl Fn(&Form) -> Form,
) -> Result<CMatrix> {
    let a = linalg::operator_matrix(m.dim(), from, to, op);
    let g_from = global_gram(m, g, from);
    let g_to = global_gram(m, g, to);
    let chol = nalgebra::linalg::Cholesky::new(g_from).ok_or(Error::NotPositiveDefinite)?;
    Ok(chol.solve(&(a.adjoint() * g_to)))
}

fn matrix_apply(n: usize, mat: &CMatrix, from: (usize, usize), to: (usize, usize), v: &Form) -> Form {
    let x = linalg::form_to_cvec(v, from.0, from.1);
    linalg::cvec_to_form(n, to.0, to.1, &(mat * x))
}

fn bidegrees(n: usize) -> Vec<(usize, usize)> {
    (0..=n).flat_map(|p| (0..=n).map(move |q| (p, q))).collect()
}

fn max_of(iter: impl Iterator<Item = Result<f64>>) -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for r in iter {
        worst = worst.max(r?);
    }
    Ok(Outcome::Residual(worst))
}

fn lambda_l_power(g: &HermitianMetric, u: &Form, r: usize) -> Form {
    (0..r).fold(u.clone(), |acc, _| g.lefschetz_l(&acc))
}

/// Kahler-type commutation relations with torsion, the Lefschetz identities
/// and the pointwise star identities, on every basis monomial of every
/// bidegree and on random dense forms.
pub fn verify_commutation_suite(m: &InvariantComplexManifold, g: &HermitianMetric) -> IdentityReport {
    verify_commutation_suite_with(m, g, &SuiteOptions::default())
}

pub fn verify_commutation_suite_with(
    m: &InvariantComplexManifold,
    g: &HermitianMetric,
    opts: &SuiteOptions,
) -> IdentityReport {
    let n = m.dim();
    let seed = opts.seed;
    let samples = opts.samples;
    let i = I;
    let lam_comm = move |v: &Form, op: &dyn Fn(&Form) -> Form| g.lefschetz_lambda(&op(v)) - op(&g.lefschetz_lambda(v));

    let list = vec![
        identity("comm_del_tau_adjoint", "(del + tau)^* = i [Lambda, delbar]", move || {
            max_of(bidegrees(n).into_iter().filter(|&(p, _)| p < n).map(|(p, q)| {
                let lhs = global_adjoint(m, g, (p, q), (p + 1, q), |u| m.del(u) + tau(m, g, u))?;
                let rhs = linalg::operator_matrix(n, (p + 1, q), (p, q), |v| lam_comm(v, &|x| m.delbar(x)).scale(i));
                Ok(mat_residual(&lhs, &rhs))
            }))
        }),
        identity("comm_delbar_taubar_adjoint", "(delbar + tau_bar)^* = -i [Lambda, del]", move || {
            max_of(bidegrees(n).into_iter().filter(|&(_, q)| q < n).map(|(p, q)| {
                let lhs = global_adjoint(m, g, (p, q), (p, q + 1), |u| m.delbar(u) + tau_bar(m, g, u))?;
                let rhs = linalg::operator_matrix(n, (p, q + 1), (p, q), |v| lam_comm(v, &|x| m.del(x)).scale(-i));
                Ok(mat_residual(&lhs, &rhs))
            }))
        }),
        identity("comm_del_tau_lefschetz", "del + tau = -i [delbar^*, L]", move || {
            max_of(bidegrees(n).into_iter().filter(|&(p, _)| p < n).map(|(p, q)| {
                let lhs = linalg::operator_matrix(n, (p, q), (p + 1, q), |u| m.del(u) + tau(m, g, u));
                let rhs = linalg::operator_matrix(n, (p, q), (p + 1, q), |u| {
                    (m.adjoint_delbar(g, &g.lefschetz_l(u)) - g.lefschetz_l(&m.adjoint_delbar(g, u))).scale(-i)
                });
                Ok(mat_residual(&lhs, &rhs))
            }))
        }),
        identity("comm_delbar_taubar_lefschetz", "delbar + tau_bar = i [del^*, L]", move || {
            max_of(bidegrees(n).into_iter().filter(|&(_, q)| q < n).map(|(p, q)| {
                let lhs = linalg::operator_matrix(n, (p, q), (p, q + 1), |u| m.delbar(u) + tau_bar(m, g, u));
                let rhs = linalg::operator_matrix(n, (p, q), (p, q + 1), |u| {
                    (m.adjoint_del(g, &g.lefschetz_l(u)) - g.lefschetz_l(&m.adjoint_del(g, u))).scale(i)
                });
                Ok(mat_residual(&lhs, &rhs))
            }))
        }),
        identity("lefschetz_lambda_l", "[Lambda, L] = (n - k) Id on k-forms", move || {
            let mut rng = rng_for(seed, "lefschetz_lambda_l");
            let basis_part = bidegrees(n).into_iter().map(|(p, q)| {
                let k = (p + q) as f64;
                let lhs = linalg::operator_matrix(n, (p, q), (p, q), |u| {
                    g.lefschetz_lambda(&g.lefschetz_l(u)) - g.lefschetz_l(&g.lefschetz_lambda(u))
                });
                let rhs = CMatrix::identity(lhs.nrows(), lhs.ncols()) * Complex64::new(n as f64 - k, 0.0);
                Ok(mat_residual(&lhs, &rhs))
            });
            let random: Vec<Result<f64>> = (0..samples)
                .map(|s| {
                    let k = s % (2 * n + 1);
                    let u = random_mixed_form(n, k, &mut rng);
                    let lhs = g.lefschetz_lambda(&g.lefschetz_l(&u)) - g.lefschetz_l(&g.lefschetz_lambda(&u));
                    Ok(rel_residual(&lhs, &u.scale(n as f64 - k as f64)))
                })
                .collect();
            max_of(basis_part.chain(random))
        }),
        identity("lefschetz_power_commutator", "[L^r, Lambda] = r (k - n + r - 1) L^(r-1) on k-forms", move || {
            max_of(bidegrees(n).into_iter().flat_map(|(p, q)| (1..=3usize).map(move |r| (p, q, r))).map(|(p, q, r)| {
                let k = (p + q) as f64;
                let c = r as f64 * (k - n as f64 + r as f64 - 1.0);
                let to = (p + r - 1, q + r - 1);
                if to.0 > n || to.1 > n {
                    return Ok(0.0);
                }
                let lhs = linalg::operator_matrix(n, (p, q), to, |u| {
                    lambda_l_power(g, &g.lefschetz_lambda(u), r) - g.lefschetz_lambda(&lambda_l_power(g, u, r))
                });
                let rhs = linalg::operator_matrix(n, (p, q), to, |u| lambda_l_power(g, u, r - 1).scale(c));
                Ok(mat_residual(&lhs, &rhs))
            }))
        }),
        identity("star_intertwines_lefschetz", "*L = Lambda* and *Lambda = L*", move || {
            let mut rng = rng_for(seed, "star_intertwines_lefschetz");
            let basis_part = bidegrees(n).into_iter().map(|(p, q)| {
                let a = if p < n && q < n {
                    let l1 = linalg::operator_matrix(n, (p, q), (n - q - 1, n - p - 1), |u| g.hodge_star(&g.lefschetz_l(u)));
                    let r1 = linalg::operator_matrix(n, (p, q), (n - q - 1, n - p - 1), |u| g.lefschetz_lambda(&g.hodge_star(u)));
                    mat_residual(&l1, &r1)
                } else {
                    0.0
                };
                let b = if p >= 1 && q >= 1 {
                    let l2 = linalg::operator_matrix(n, (p, q), (n - q + 1, n - p + 1), |u| g.hodge_star(&g.lefschetz_lambda(u)));
                    let r2 = linalg::operator_matrix(n, (p, q), (n - q + 1, n - p + 1), |u| g.lefschetz_l(&g.hodge_star(u)));
                    mat_residual(&l2, &r2)
                } else {
                    0.0
                };
                Ok(a.max(b))
            });
            let random: Vec<Result<f64>> = (0..samples)
                .map(|s| {
                    let u = random_mixed_form(n, s % (2 * n + 1), &mut rng);
                    let a = rel_residual(&g.hodge_star(&g.lefschetz_l(&u)), &g.lefschetz_lambda(&g.hodge_star(&u)));
                    let b = rel_residual(&g.hodge_star(&g.lefschetz_lambda(&u)), &g.lefschetz_l(&g.hodge_star(&u)));
                    Ok(a.max(b))
                })
                .collect();
            max_of(basis_part.chain(random))
        }),
        identity("torsion_adjoint_on_omega", "-tau_bar^* omega / 2 = delbar^* omega", move || {
            let w = g.omega();
            let adj = global_adjoint(m, g, (1, 0), (1, 1), |u| tau_bar(m, g, u))?;
            let lhs = matrix_apply(n, &adj, (1, 1), (1, 0), &w).scale(-0.5);
            Ok(Outcome::Residual(rel_residual(&lhs, &m.adjoint_delbar(g, &w))))
        }),
        identity("delbar_adjoint_of_omega", "delbar^* omega = i Lambda(del omega)", move || {
            let w = g.omega();
            let rhs = g.lefschetz_lambda(&m.del(&w)).scale(i);
            Ok(Outcome::Residual(rel_residual(&m.adjoint_delbar(g, &w), &rhs)))
        }),
        identity("primitive_star", "*v = (-1)^(k(k+1)/2) i^(p-q) omega_(n-k) ^ v for primitive v", move || {
            let mut rng = rng_for(seed, "primitive_star");
            let mut out = Vec::new();
            for (p, q) in bidegrees(n).into_iter().filter(|&(p, q)| p + q <= n) {
                for _ in 0..samples.div_ceil(4).max(1) {
                    let v = g.primitive_part(&random_form(n, p, q, &mut rng));
                    out.push(v.map(|v| {
                        let k = p + q;
                        let sign = if (k * (k + 1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
                        let ipq = i.powi(p as i32 - q as i32);
                        let rhs = g.power(n - k).wedge(&v).scale(ipq * sign);
                        rel_residual(&g.hodge_star(&v), &rhs)
                    }));
                }
            }
            max_of(out.into_iter())
        }),
        identity("star_pairing", "alpha ^ beta = *alpha ^ *beta when deg alpha + deg beta = 2n", move || {
            let mut rng = rng_for(seed, "star_pairing");
            let r: Vec<Result<f64>> = (0..samples)
                .map(|s| {
                    let k = s % (2 * n + 1);
                    let a = random_mixed_form(n, k, &mut rng);
                    let b = random_mixed_form(n, 2 * n - k, &mut rng);
                    Ok(rel_residual(&a.wedge(&b), &g.hodge_star(&a).wedge(&g.hodge_star(&b))))
                })
                .collect();
            max_of(r.into_iter())
        }),
        identity("star_trace_top", "gamma ^ Gamma = *Gamma ^ gamma_(n-1) for real Gamma of bidegree (n-1, n-1)", move || {
            let mut rng = rng_for(seed, "star_trace_top");
            let w = g.omega();
            let w1 = g.power(n - 1);
            let r: Vec<Result<f64>> = (0..samples)
                .map(|_| {
                    let big = random_real_form(n, n - 1, &mut rng);
                    Ok(rel_residual(&w.wedge(&big), &g.hodge_star(&big).wedge(&w1)))
                })
                .collect();
            max_of(r.into_iter())
        }),
    ];
    let context = ReportContext { manifold: m.name().to_string(), metric: describe_metric(g), tolerance: opts.tol };
    run_suite(list, context)
}

fn skip(why: &str) -> Result<Outcome> {
    Ok(Outcome::Skipped(why.to_string()))
}

/// Operator-level identities for `omega` and a second metric `gamma`.
pub fn verify_operator_identities(
    m: &InvariantComplexManifold,
    omega_m: &HermitianMetric,
    gamma_m: &HermitianMetric,
) -> IdentityReport {
    verify_operator_identities_with(m, omega_m, gamma_m, &SuiteOptions::default())
}

pub fn verify_operator_identities_with(
    m: &InvariantComplexManifold,
    om: &HermitianMetric,
    gm: &HermitianMetric,
    opts: &SuiteOptions,
) -> IdentityReport {
    let n = m.dim();
    let nf = n as f64;
    let seed = opts.seed;
    let samples = opts.samples;
    let tol = opts.tol;
    let w = om.omega();
    let w_n1 = om.power(n - 1);
    let balanced = Flag::from_defect(m.exterior_d(&w_n1).coeff_norm(), w_n1.max_abs(), tol).holds;
    let kahler = Flag::from_defect(m.exterior_d(&w).coeff_norm(), w.max_abs(), tol).holds;
    let stokes_ok = m.check_stokes() < tol;
    let w = &w;
    let w_n1 = &w_n1;
    let alphas = move |salt: &str| -> Vec<Form> {
        let mut rng = rng_for(seed, salt);
        let mut v: Vec<Form> = (0..samples).map(|_| random_form(n, 1, 1, &mut rng)).collect();
        v.push(w.clone());
        v
    };
    let reals = move |salt: &str| -> Vec<Form> {
        let mut rng = rng_for(seed, salt);
        (0..samples).map(|_| random_real_form(n, 1, &mut rng)).collect()
    };
    let top = |u: &Form| m.integrate(u);

    let list = vec![
        identity("t_closed_form", "T(alpha) = -alpha + (Lambda alpha) omega / (n-1) = (omega_(n-2) ^ .)^-1 (*alpha)", move || {
            max_of(alphas("t").iter().map(|a| Ok(rel_residual(&t_omega(om, a)?, &t_omega_by_definition(om, a)?))))
        }),
        identity("t_of_omega", "T(omega) = omega / (n-1)", move || {
            Ok(Outcome::Residual(rel_residual(&t_omega(om, w)?, &w.scale(1.0 / (nf - 1.0)))))
        }),
        identity("s_closed_form", "S(Omega) = -Omega + Lambda(*Omega) omega_(n-1) / (n-1) = *(omega_(n-2) ^ .)^-1 (Omega)", move || {
            max_of(alphas("s").iter().map(|a| {
                let big = om.hodge_star(a);
                Ok(rel_residual(&s_omega(om, &big)?, &s_omega_by_definition(om, &big)?))
            }))
        }),
        identity("s_of_omega_power", "S(omega_(n-1)) = omega_(n-1) / (n-1)", move || {
            Ok(Outcome::Residual(rel_residual(&s_omega(om, w_n1)?, &w_n1.scale(1.0 / (nf - 1.0)))))
        }),
        identity("s_star_t", "S * = * T and * S = T * = (omega_(n-2) ^ .)^-1", move || {
            max_of(alphas("st").iter().map(|a| {
                let r1 = rel_residual(&s_omega(om, &om.hodge_star(a))?, &om.hodge_star(&t_omega(om, a)?));
                let big = om.hodge_star(a);
                let div = om.divide_by_power(n - 2, &big)?;
                let r2 = rel_residual(&om.hodge_star(&s_omega(om, &big)?), &div);
                let r3 = rel_residual(&t_omega(om, &om.hodge_star(&big))?, &div);
                Ok(r1.max(r2).max(r3))
            }))
        }),
        identity("p_trace_formula", "P(alpha) = Lambda(G) - Lambda^2(G) omega / (2(n-1)), G = i del delbar alpha", move || {
            max_of(alphas("p").iter().map(|a| Ok(rel_residual(&p_omega(m, om, a)?, &p_omega_trace(m, om, a)?))))
        }),
        identity("p_wedge_top", "P(alpha) ^ omega_(n-1) = (n-2)/(n-1) i del delbar alpha ^ omega_(n-2)", move || {
            max_of(alphas("pw").iter().map(|a| {
                let lhs = p_omega(m, om, a)?.wedge(w_n1);
                let rhs = m.i_ddbar(a).wedge(&om.power(n - 2)).scale((nf - 2.0) / (nf - 1.0));
                Ok(rel_residual(&lhs, &rhs))
            }))
        }),
        identity("p_trace", "Lambda(P(alpha)) = (n-2)/(2(n-1)) Lambda^2(i del delbar alpha)", move || {
            max_of(alphas("pt").iter().map(|a| {
                let lhs = scalar(&om.lefschetz_lambda(&p_omega(m, om, a)?));
                let rhs = scalar(&om.lambda_power(&m.i_ddbar(a), 2)) * ((nf - 2.0) / (2.0 * (nf - 1.0)));
                Ok(rel_scalar_residual(lhs, rhs))
            }))
        }),
        identity("division_22", "(omega_(n-2) ^ .)^-1 (Gamma ^ omega_(n-3)) = Lambda(Gamma) - Lambda^2(Gamma) omega / (2(n-1))", move || {
            let mut rng = rng_for(seed, "division_22");
            let r: Vec<Result<f64>> = (0..samples)
                .map(|_| {
                    let gg = random_form(n, 2, 2, &mut rng);
                    let lhs = om.divide_by_power(n - 2, &gg.wedge(&om.power(n - 3)))?;
                    let tr2 = scalar(&om.lambda_power(&gg, 2));
                    let rhs = om.lefschetz_lambda(&gg) - w.scale(tr2 / (2.0 * (nf - 1.0)));
                    Ok(rel_residual(&lhs, &rhs))
                })
                .collect();
            max_of(r.into_iter())
        }),
        identity("double_trace_22", "Lambda^2(Gamma) / 2 = Gamma ^ omega_(n-2) / omega_n", move || {
            let mut rng = rng_for(seed, "double_trace_22");
            let vol = om.power(n).top_coefficient();
            let mut r: Vec<Result<f64>> = (0..samples)
                .map(|_| {
                    let gg = random_form(n, 2, 2, &mut rng);
                    let lhs = scalar(&om.lambda_power(&gg, 2)) * 0.5;
                    Ok(rel_scalar_residual(lhs, gg.wedge(&om.power(n - 2)).top_coefficient() / vol))
                })
                .collect();
            let gg = m.i_ddbar(w);
            let lhs = scalar(&om.lambda_power(&gg, 2)) * 0.5;
            r.push(Ok(rel_scalar_residual(lhs, gg.wedge(&om.power(n - 2)).top_coefficient() / vol)));
            max_of(r.into_iter())
        }),
        identity("star_22", "*(Gamma ^ omega_(n-3)) = -Lambda(Gamma) + Lambda^2(Gamma) omega / 2", move || {
            let mut rng = rng_for(seed, "star_22");
            let r: Vec<Result<f64>> = (0..samples)
                .map(|_| {
                    let gg = random_form(n, 2, 2, &mut rng);
                    let lhs = om.hodge_star(&gg.wedge(&om.power(n - 3)));
                    let rhs = om.lefschetz_lambda(&gg).scale(-1.0) + w.scale(scalar(&om.lambda_power(&gg, 2)) * 0.5);
                    Ok(rel_residual(&lhs, &rhs))
                })
                .collect();
            max_of(r.into_iter())
        }),
        identity("star_33", "*(Omega ^ omega_(n-4)) = -Lambda^2(Omega) / 2 + Lambda^3(Omega) omega / 6", move || {
            if n < 4 {
                return skip("requires n >= 4");
            }
            let mut rng = rng_for(seed, "star_33");
            let r: Vec<Result<f64>> = (0..samples)
                .map(|_| {
                    let big = random_form(n, 3, 3, &mut rng);
                    let lhs = om.hodge_star(&big.wedge(&om.power(n - 4)));
                    let rhs = om.lambda_power(&big, 2).scale(-0.5) + w.scale(scalar(&om.lambda_power(&big, 3)) / 6.0);
                    Ok(rel_residual(&lhs, &rhs))
                })
                .collect();
            max_of(r.into_iter())
        }),
        identity("division_33", "(omega_(n-2) ^ .)^-1 (Omega ^ omega_(n-4)) = Lambda^2(Omega) / 2 - Lambda^3(Omega) omega / (3(n-1))", move || {
            if n < 4 {
                return skip("requires n >= 4");
            }
            let mut rng = rng_for(seed, "division_33");
            let r: Vec<Result<f64>> = (0..samples)
                .map(|_| {
                    let big = random_form(n, 3, 3, &mut rng);
                    let lhs = om.divide_by_power(n - 2, &big.wedge(&om.power(n - 4)))?;
                    Ok(rel_residual(&lhs, &division_33_formula(om, &big)))
                })
                .collect();
            max_of(r.into_iter())
        }),
        identity("f_two_trace", "f = (n-2)/2 Lambda^2(i del delbar omega) + (n-3)/6 Lambda^3(i del omega ^ delbar omega)", move || {
            let f = analysis::rho_data_pair(m, om, om, tol)?.f;
            Ok(Outcome::Residual(rel_scalar_residual(f_two_trace(m, om).into(), f.into())))
        }),
        identity("rho_formula", "rho = P(omega) + Lambda^2(Omega)/2 - Lambda^3(Omega) omega / (3(n-1)), Omega = i del omega ^ delbar omega", move || {
            let rho = analysis::rho_data_pair(m, om, om, tol)?.rho;
            Ok(Outcome::Residual(rel_residual(&rho, &rho_by_p(m, om)?)))
        }),
        identity("star_rho_integral_p", "int eta ^ *_gamma rho(omega, gamma) = (n-1)/(n-2) int P(T_gamma eta) ^ omega_(n-1)", move || {
            if !stokes_ok {
                return skip("structure fails the Stokes check");
            }
            let data = analysis::rho_data_pair(m, om, gm, tol)?;
            max_of(alphas("eta").iter().map(|eta| {
                let lhs = top(&eta.wedge(&data.star_rho));
                let rhs = top(&p_omega(m, om, &t_omega(gm, eta)?)?.wedge(w_n1)) * ((nf - 1.0) / (nf - 2.0));
                Ok(rel_scalar_residual(lhs, rhs))
            }))
        }),
        identity("p_exact_integral", "int P(T_gamma(i del delbar phi)) ^ omega_(n-1) = 0", move || {
            let phi = Form::one(n);
            let v = top(&p_omega(m, om, &t_omega(gm, &m.i_ddbar(&phi))?)?.wedge(w_n1));
            Ok(Outcome::Residual(v.norm()))
        }),
        identity("semidefinite_zero_integral", "semi-definite Theta with int Theta ^ omega_(n-1) = 0 vanishes", move || {
            let mut worst: f64 = 0.0;
            let mut cands: Vec<Form> = reals("theta").iter().map(|eta| p_omega(m, om, &t_omega(gm, eta)?)).collect::<Result<_>>()?;
            cands.push(p_omega(m, om, &t_omega(gm, &m.i_ddbar(&Form::one(n)))?)?);
            for theta in cands {
                let ev = om.eigenvalues_11(&theta, tol)?;
                let semi = ev.iter().all(|&e| e >= -tol) || ev.iter().all(|&e| e <= tol);
                if semi && top(&theta.wedge(w_n1)).norm() < tol {
                    worst = worst.max(ev.iter().fold(0.0, |a: f64, e| a.max(e.abs())));
                }
            }
            Ok(Outcome::Residual(worst))
        }),
        identity("r_integral", "int R(alpha) ^ omega_(n-1) = 0", move || {
            max_of(alphas("r").iter().map(|a| Ok(top(&r_omega(m, om, a)?.wedge(w_n1)).norm())))
        }),
        identity("extra_terms_integral", "int delbar^* Lambda(delbar alpha) omega ^ omega_(n-1) = 0", move || {
            max_of(alphas("x1").iter().map(|a| {
                let c = scalar(&m.adjoint_delbar(om, &om.lefschetz_lambda(&m.delbar(a))));
                Ok(top(&w.scale(c).wedge(w_n1)).norm())
            }))
        }),
        identity("extra_terms_integral_balanced", "int i del Lambda(delbar alpha) ^ omega_(n-1) = 0 = int i del^*(omega ^ delbar^* alpha) ^ omega_(n-1)", move || {
            if !balanced {
                return skip("requires a balanced omega");
            }
            max_of(alphas("x2").iter().map(|a| {
                let t3 = m.del(&om.lefschetz_lambda(&m.delbar(a))).scale(I);
                let t4 = m.adjoint_del(om, &w.wedge(&m.adjoint_delbar(om, a))).scale(I);
                Ok(top(&t3.wedge(w_n1)).norm().max(top(&t4.wedge(w_n1)).norm()))
            }))
        }),
        identity("star_rho_integral_q", "int eta ^ *_gamma rho(omega, gamma) = (n-1)/(n-2) int Q(T_gamma eta) ^ omega_(n-1) for balanced omega", move || {
            if !balanced {
                return skip("requires a balanced omega");
            }
            if !stokes_ok {
                return skip("structure fails the Stokes check");
            }
            let data = analysis::rho_data_pair(m, om, gm, tol)?;
            max_of(alphas("etaq").iter().map(|eta| {
                let lhs = top(&eta.wedge(&data.star_rho));
                let rhs = top(&q_omega(m, om, &t_omega(gm, eta)?)?.wedge(w_n1)) * ((nf - 1.0) / (nf - 2.0));
                Ok(rel_scalar_residual(lhs, rhs))
            }))
        }),
        identity("q_minus_p_integral", "int (Q(alpha) - P(alpha)) ^ omega_(n-1) = 0 for balanced omega", move || {
            if !balanced {
                return skip("requires a balanced omega");
            }
            max_of(alphas("qp").iter().map(|a| {
                let d = q_omega(m, om, a)? - p_omega(m, om, a)?;
                Ok(top(&d.wedge(w_n1)).norm())
            }))
        }),
        identity("q_of_omega", "Q(omega) = P(omega) + n/(n-1) R(omega) + del del^* omega - i del^*(omega ^ delbar^* omega)", move || {
            let lhs = q_omega(m, om, w)?;
            let rhs = p_omega(m, om, w)? + r_omega(m, om, w)?.scale(nf / (nf - 1.0)) + m.del(&m.adjoint_del(om, w))
                - m.adjoint_del(om, &w.wedge(&m.adjoint_delbar(om, w))).scale(I);
            Ok(Outcome::Residual(rel_residual(&lhs, &rhs)))
        }),
        identity("q_of_omega_balanced", "Q(omega) = P(omega) for balanced omega", move || {
            if !balanced {
                return skip("requires a balanced omega");
            }
            Ok(Outcome::Residual(rel_residual(&q_omega(m, om, w)?, &p_omega(m, om, w)?)))
        }),
        identity("q_kahler", "Q = -Laplacian'' for Kahler omega", move || {
            if !kahler {
                return skip("requires a Kahler omega");
            }
            max_of(alphas("qk").iter().map(|a| {
                Ok(rel_residual(&q_omega(m, om, a)?, &m.laplacian_delbar(om, a).scale(-1.0)))
            }))
        }),
        identity("q_equals_p_on_harmonic", "Q(alpha) = P(alpha) for alpha in the kernel of Laplacian''", move || {
            max_of(harmonic_11(m, om).iter().map(|a| Ok(rel_residual(&q_omega(m, om, a)?, &p_omega(m, om, a)?))))
        }),
        identity("harmonic_kernel", "Laplacian'' alpha = 0 iff delbar alpha = 0 and delbar^* alpha = 0", move || {
            max_of(harmonic_11(m, om).iter().map(|a| {
                Ok(m.delbar(a).max_abs().max(m.adjoint_delbar(om, a).max_abs()))
            }))
        }),
    ];
    let context = ReportContext {
        manifold: m.name().to_string(),
        metric: format!("omega {}, gamma {}", describe_metric(om), describe_metric(gm)),
        tolerance: tol,
    };
    run_suite(list, context)
}

/// `Lambda^2(Omega)/2 - Lambda^3(Omega) omega / (3(n-1))` for a (3,3)-form.
pub fn division_33_formula(g: &HermitianMetric, big: &Form) -> Form {
    let nf = g.dim() as f64;
    g.lambda_power(big, 2).scale(0.5) - g.omega().scale(scalar(&g.lambda_power(big, 3)) / (3.0 * (nf - 1.0)))
}

/// `f` from the traces of `i del delbar omega` and `i del omega ^ delbar omega`.
pub fn f_two_trace(m: &InvariantComplexManifold, g: &HermitianMetric) -> f64 {
    let n = m.dim() as f64;
    let w = g.omega();
    let a = scalar(&g.lambda_power(&m.i_ddbar(&w), 2));
    let big = m.del(&w).wedge(&m.delbar(&w)).scale(I);
    let b = scalar(&g.lambda_power(&big, 3));
    ((n - 2.0) / 2.0 * a + (n - 3.0) / 6.0 * b).re
}

/// `rho` assembled from `P(omega)` and the traces of `i del omega ^ delbar omega`;
/// in dimension three only `P(omega)` contributes.
pub fn rho_by_p(m: &InvariantComplexManifold, g: &HermitianMetric) -> Result<Form> {
    let w = g.omega();
    let p = p_omega(m, g, &w)?;
    if m.dim() < 4 {
        return Ok(p);
    }
    let big = m.del(&w).wedge(&m.delbar(&w)).scale(I);
    Ok(p + division_33_formula(g, &big))
}

/// Basis of the kernel of the delbar-Laplacian on (1,1)-forms.
pub fn harmonic_11(m: &InvariantComplexManifold, g: &HermitianMetric) -> Vec<Form> {
    let n = m.dim();
    let mat = linalg::operator_matrix(n, (1, 1), (1, 1), |u| m.laplacian_delbar(g, u));
    linalg::null_space(&mat, 1e-9)
        .iter()
        .map(|v| linalg::cvec_to_form(n, 1, 1, v))
        .collect()
}
