//! Hermitian metrics on the coframe: inner product, Hodge star, Lefschetz
//! operators, division by powers of the metric form and the primitive
//! decomposition.
//!
//! Everything is computed in an orthonormal coframe `e_a = sum_j C[a][j] phi_j`
//! in which `omega = i sum_a e_a ^ ebar_a`. With the lower Cholesky factor
//! `H = L L^H` one can take `C = L^T`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{basis, full_mask, mono_wedge, popcount, top_orientation_sign, Form, Mono};
use crate::linalg::{self, CMatrix, CVector, Substitution};
use crate::DEFAULT_TOL;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Debug)]
pub struct HermitianMetric {
    n: usize,
    h: CMatrix,
    coframe: CMatrix,
    to_ortho: Substitution,
    from_ortho: Substitution,
}

impl HermitianMetric {
    pub fn new(h: CMatrix) -> Result<Self> {
        let n = h.nrows();
        if n != h.ncols() {
            return Err(Error::Invalid("metric matrix must be square".into()));
        }
        if n == 0 || n > crate::forms::MAX_DIM {
            return Err(Error::UnsupportedDimension(n));
        }
        if h.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Invalid("metric matrix has non-finite entries".into()));
        }
        let scale = h.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let herm = linalg::hermitian_residual(&h);
        if herm > 1e-12 * (1.0 + scale) {
            return Err(Error::NotHermitian(herm));
        }
        let h = (&h + h.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = linalg::hermitian_eigenvalues(&h);
        if eig[0] <= 1e-12 * scale.max(1e-300) {
            return Err(Error::NotPositiveDefinite);
        }
        let l = linalg::cholesky_lower(&h)?;
        let coframe = l.transpose();
        let inv = linalg::inverse(&coframe)?;
        Ok(HermitianMetric {
            n,
            to_ortho: Substitution::new(&inv),
            from_ortho: Substitution::new(&coframe),
            h,
            coframe,
        })
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::new(CMatrix::identity(n, n))
    }

    pub fn diagonal(coeffs: &[f64]) -> Result<Self> {
        if coeffs.iter().any(|&a| !(a > 0.0) || !a.is_finite()) {
            return Err(Error::NotPositiveDefinite);
        }
        let d = CVector::from_iterator(coeffs.len(), coeffs.iter().map(|&a| Complex64::new(a, 0.0)));
        Self::new(CMatrix::from_diagonal(&d))
    }

    pub fn scaled(&self, s: f64) -> Result<Self> {
        if !(s > 0.0) {
            return Err(Error::NotPositiveDefinite);
        }
        Self::new(&self.h * Complex64::new(s, 0.0))
    }

    /// Metric whose form is `omega` (must be a real positive (1,1)-form).
    pub fn from_form(omega: &Form) -> Result<Self> {
        if !omega.is_homogeneous_of(1, 1) {
            return Err(Error::WrongBidegree { expected: (1, 1), got: format!("{:?}", omega.bidegrees()) });
        }
        Self::new(matrix_of_11(omega))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.h
    }

    /// Rows are the orthonormal coframe in terms of `phi`.
    pub fn coframe(&self) -> &CMatrix {
        &self.coframe
    }

    pub fn det(&self) -> f64 {
        self.h.determinant().re
    }

    pub fn omega(&self) -> Form {
        form_of_11(&self.h)
    }

    pub fn omega_power(&self, p: usize) -> Result<Form> {
        if p > self.n {
            return Err(Error::Invalid(format!("power {p} exceeds dimension {}", self.n)));
        }
        Ok(self.power(p))
    }

    pub(crate) fn power(&self, p: usize) -> Form {
        let w = self.omega();
        let mut acc = Form::one(self.n);
        for k in 1..=p {
            acc = acc.wedge(&w).scale(1.0 / k as f64);
        }
        acc
    }

    pub fn to_ortho(&self, u: &Form) -> Form {
        self.to_ortho.apply(u)
    }

    pub fn from_ortho(&self, u: &Form) -> Form {
        self.from_ortho.apply(u)
    }

    /// Pointwise inner product of forms of one common bidegree.
    pub fn inner_product(&self, u: &Form, v: &Form) -> Result<Complex64> {
        let bu = u.bidegrees();
        let bv = v.bidegrees();
        if bu.len() > 1 || bv.len() > 1 || (!bu.is_empty() && !bv.is_empty() && bu != bv) {
            return Err(Error::Inhomogeneous(format!("{bu:?} vs {bv:?}")));
        }
        Ok(self.inner(u, v))
    }

    /// Inner product extended to mixed forms, distinct bidegrees being
    /// orthogonal.
    pub fn inner(&self, u: &Form, v: &Form) -> Complex64 {
        let ue = self.to_ortho(u);
        let ve = self.to_ortho(v);
        ue.terms().map(|(m, c)| c * ve.coeff(*m).conj()).sum()
    }

    pub fn norm(&self, u: &Form) -> f64 {
        self.inner(u, u).re.max(0.0).sqrt()
    }

    /// The C-linear Hodge star, `(p,q) -> (n-q, n-p)`, extended linearly to
    /// mixed forms.
    pub fn hodge_star(&self, u: &Form) -> Form {
        self.from_ortho(&std_star(&self.to_ortho(u)))
    }

    pub fn lefschetz_l(&self, u: &Form) -> Form {
        self.omega().wedge(u)
    }

    pub fn lefschetz_lambda(&self, u: &Form) -> Form {
        self.from_ortho(&std_lambda(&self.to_ortho(u)))
    }

    pub fn lambda_power(&self, u: &Form, r: usize) -> Form {
        let mut e = self.to_ortho(u);
        for _ in 0..r {
            e = std_lambda(&e);
        }
        self.from_ortho(&e)
    }

    /// The scalar part of a form of degree zero.
    pub fn scalar_part(u: &Form) -> Complex64 {
        u.coeff((0, 0))
    }

    /// Solve `omega_k ^ x = y` for a (1,1)-form `x`.
    pub fn divide_by_power(&self, k: usize, y: &Form) -> Result<Form> {
        let scale = 1.0 + self.to_ortho(y).max_abs();
        self.divide_by_power_tol(k, y, DEFAULT_TOL * scale)
    }

    pub fn divide_by_power_tol(&self, k: usize, y: &Form, tol: f64) -> Result<Form> {
        let n = self.n;
        if k + 1 > n {
            return Err(Error::Invalid(format!("cannot divide by omega_{k} in dimension {n}")));
        }
        let ye = self.to_ortho(y);
        let wk = std_power(n, k);
        let a = linalg::operator_matrix(n, (1, 1), (k + 1, k + 1), |m| wk.wedge(m));
        let b = linalg::form_to_cvec(&ye, k + 1, k + 1);
        let (x, _) = linalg::least_squares(&a, &b);
        let xe = linalg::cvec_to_form(n, 1, 1, &x);
        let residual = wk.wedge(&xe).sub_form(&ye).max_abs();
        if residual > tol {
            return Err(Error::NotInRange(residual));
        }
        Ok(self.from_ortho(&xe))
    }

    /// Decompose a homogeneous form of degree `k <= n` as
    /// `sum_r omega_r ^ u_r` with every `u_r` primitive. Returns `(r, u_r)`
    /// ordered by `r`, omitting nothing (zero pieces included).
    pub fn lefschetz_decompose(&self, u: &Form) -> Result<Vec<(usize, Form)>> {
        let n = self.n;
        let (p, q) = match u.bidegree() {
            Some(b) => b,
            None if u.is_empty() => return Ok(vec![(0, u.clone())]),
            None => return Err(Error::Inhomogeneous(format!("{:?}", u.bidegrees()))),
        };
        if p + q > n {
            return Err(Error::Invalid(format!("degree {} exceeds middle degree {n}", p + q)));
        }
        let pieces = std_decompose(n, p, q, &self.to_ortho(u));
        Ok(pieces.into_iter().enumerate().map(|(r, f)| (r, self.from_ortho(&f))).collect())
    }

    pub fn primitive_part(&self, u: &Form) -> Result<Form> {
        Ok(self.lefschetz_decompose(u)?.swap_remove(0).1)
    }

    /// Pointwise adjoint of a linear map `op` from `(p,q)` forms to `(pp,qq)`
    /// forms, evaluated on `v`.
    pub fn adjoint_apply(
        &self,
        op: impl Fn(&Form) -> Form,
        from: (usize, usize),
        to: (usize, usize),
        v: &Form,
    ) -> Form {
        let n = self.n;
        let m = linalg::operator_matrix(n, from, to, |e| self.to_ortho(&op(&self.from_ortho(e))));
        let ve = linalg::form_to_cvec(&self.to_ortho(&v.component(to.0, to.1)), to.0, to.1);
        let out = m.adjoint() * ve;
        self.from_ortho(&linalg::cvec_to_form(n, from.0, from.1, &out))
    }

    /// Eigenvalues of a real (1,1)-form relative to this metric, ascending.
    pub fn eigenvalues_11(&self, beta: &Form, tol: f64) -> Result<Vec<f64>> {
        if !beta.is_homogeneous_of(1, 1) {
            return Err(Error::WrongBidegree { expected: (1, 1), got: format!("{:?}", beta.bidegrees()) });
        }
        let be = matrix_of_11(&self.to_ortho(beta));
        let herm = linalg::hermitian_residual(&be);
        if herm > tol * (1.0 + be.norm()) {
            return Err(Error::NonReal(herm));
        }
        Ok(linalg::hermitian_eigenvalues(&be))
    }

    /// Metric `A^T H conj(A)` of the pulled back form under `phi_k -> sum_j A[k][j] phi_j`.
    pub fn pulled_back(&self, a: &CMatrix) -> Result<Self> {
        Self::new(a.transpose() * &self.h * a.map(|c| c.conj()))
    }
}

/// `i sum_{j,k} b[j][k] phi_j ^ phibar_k`.
pub fn form_of_11(b: &CMatrix) -> Form {
    let n = b.nrows();
    let mut terms = Vec::with_capacity(n * n);
    for j in 0..n {
        for k in 0..n {
            terms.push(((1u16 << j, 1u16 << k), I * b[(j, k)]));
        }
    }
    Form::from_terms(n, terms)
}

/// Inverse of [`form_of_11`] on the (1,1) part.
pub fn matrix_of_11(beta: &Form) -> CMatrix {
    let n = beta.dim();
    CMatrix::from_fn(n, n, |j, k| beta.coeff((1 << j, 1 << k)) / I)
}

/// Powers of the standard form `i sum e_a ^ ebar_a`.
pub fn std_power(n: usize, p: usize) -> Form {
    let w = form_of_11(&CMatrix::identity(n, n));
    let mut acc = Form::one(n);
    for k in 1..=p {
        acc = acc.wedge(&w).scale(1.0 / k as f64);
    }
    acc
}

fn std_star_mono(n: usize, m: Mono, vol_top: Complex64) -> (Complex64, Mono) {
    let (a, b) = m;
    let full = full_mask(n);
    let cu = if (popcount(a) * popcount(b)).is_multiple_of(2) { 1.0 } else { -1.0 };
    let target = (full & !b, full & !a);
    let (s, _) = mono_wedge((b, a), target).expect("complementary monomials");
    (vol_top * cu / s, target)
}

/// Hodge star of the standard metric, in which the coframe is orthonormal.
pub fn std_star(u: &Form) -> Form {
    let n = u.dim();
    let vol_top = top_orientation_sign(n);
    Form::from_terms(
        n,
        u.terms().map(|(m, c)| {
            let (y, t) = std_star_mono(n, *m, vol_top);
            (t, c * y)
        }),
    )
}

/// Adjoint of `L = omega ^ .` for the standard metric.
pub fn std_lambda(u: &Form) -> Form {
    let n = u.dim();
    let mut out = Vec::new();
    for (&(a, b), &c) in u.terms() {
        let mut common = a & b;
        while common != 0 {
            let bit = common & common.wrapping_neg();
            common &= common - 1;
            let m = (a & !bit, b & !bit);
            let (s, _) = mono_wedge((bit, bit), m).expect("disjoint");
            let l = I * s;
            out.push((m, l.conj() * c));
        }
    }
    Form::from_terms(n, out)
}

fn std_decompose(n: usize, p: usize, q: usize, u: &Form) -> Vec<Form> {
    if p == 0 || q == 0 {
        return vec![u.clone()];
    }
    let w = std_power(n, 1);
    let a = linalg::operator_matrix(n, (p - 1, q - 1), (p, q), |m| w.wedge(m));
    let b = linalg::form_to_cvec(u, p, q);
    let (x, _) = linalg::least_squares(&a, &b);
    let lower = linalg::cvec_to_form(n, p - 1, q - 1, &x);
    let prim = u.sub_form(&w.wedge(&lower));
    let mut out = vec![prim];
    for (s, piece) in std_decompose(n, p - 1, q - 1, &lower).into_iter().enumerate() {
        out.push(piece.scale((s + 1) as f64));
    }
    out
}

/// Orthonormal (for the standard metric) basis forms of bidegree `(p, q)`.
pub fn monomial_basis(n: usize, p: usize, q: usize) -> Vec<Form> {
    basis(n, p, q).into_iter().map(|m| Form::monomial(n, m, ONE)).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum MetricSpec {
    Diagonal {
        coeffs: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        scale: Option<f64>,
    },
    Hermitian {
        matrix: serde_json::Value,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        scale: Option<f64>,
    },
}

impl MetricSpec {
    pub fn build(&self) -> Result<HermitianMetric> {
        let (g, scale) = match self {
            MetricSpec::Diagonal { coeffs, scale } => (HermitianMetric::diagonal(coeffs)?, *scale),
            MetricSpec::Hermitian { matrix, scale } => {
                (HermitianMetric::new(crate::io::parse_complex_matrix(matrix)?)?, *scale)
            }
        };
        match scale {
            Some(s) => g.scaled(s),
            None => Ok(g),
        }
    }

    pub fn from_metric(g: &HermitianMetric) -> Self {
        MetricSpec::Hermitian { matrix: crate::io::complex_matrix_json(g.matrix()), scale: None }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::approx_equal;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn skewed(n: usize) -> HermitianMetric {
        let a = CMatrix::from_fn(n, n, |i, j| c(0.3 * i as f64 - 0.2 * j as f64, 0.1 * (i + 2 * j) as f64));
        let h = &a * a.adjoint() + CMatrix::identity(n, n) * c(1.5, 0.0);
        HermitianMetric::new(h).unwrap()
    }

    #[test]
    fn omega_is_orthonormal_frame_form() {
        for n in 3..=5 {
            let g = skewed(n);
            let we = g.to_ortho(&g.omega());
            assert!(approx_equal(&we, &std_power(n, 1), 1e-12));
            assert!((g.inner(&g.omega(), &g.omega()) - c(n as f64, 0.0)).norm() < 1e-11);
        }
    }

    #[test]
    fn star_anchors() {
        for n in 3..=5 {
            let g = skewed(n);
            let one = Form::one(n);
            assert!(approx_equal(&g.hodge_star(&one), &g.power(n), 1e-11));
            assert!(approx_equal(&g.hodge_star(&g.omega()), &g.power(n - 1), 1e-11));
        }
    }

    #[test]
    fn star_star_sign() {
        let n = 3;
        let g = skewed(n);
        let u = Form::from_indices(n, &[1, 2], &[3], c(0.7, -0.2)).unwrap();
        assert!(approx_equal(&g.hodge_star(&g.hodge_star(&u)), &u.scale(-1.0), 1e-11));
        let v = Form::from_indices(n, &[1], &[3], c(0.7, -0.2)).unwrap();
        assert!(approx_equal(&g.hodge_star(&g.hodge_star(&v)), &v, 1e-11));
    }

    #[test]
    fn primitive_11_star() {
        let n = 4;
        let g = HermitianMetric::identity(n).unwrap();
        let v = Form::i_phi_phibar(n, 1, 1) - Form::i_phi_phibar(n, 2, 2) + Form::from_indices(n, &[1], &[3], c(0.2, 0.1)).unwrap();
        assert!(g.lefschetz_lambda(&v).max_abs() < 1e-14);
        let expect = g.power(n - 2).wedge(&v).scale(-1.0);
        assert!(approx_equal(&g.hodge_star(&v), &expect, 1e-12));
    }

    #[test]
    fn lambda_of_omega() {
        let g = skewed(4);
        let l = g.lefschetz_lambda(&g.omega());
        assert!((HermitianMetric::scalar_part(&l) - c(4.0, 0.0)).norm() < 1e-11);
    }

    #[test]
    fn division_inverts_wedge() {
        let n = 4;
        let g = skewed(n);
        let x = Form::i_phi_phibar(n, 1, 2) + Form::i_phi_phibar(n, 3, 3).scale(0.4);
        for k in 0..n - 1 {
            let y = g.power(k).wedge(&x);
            assert!(approx_equal(&g.divide_by_power(k, &y).unwrap(), &x, 1e-10));
        }
        let w = g.divide_by_power(n - 2, &g.power(n - 1)).unwrap();
        assert!(approx_equal(&w, &g.omega().scale(1.0 / (n as f64 - 1.0)), 1e-11));
        assert!(g.divide_by_power(1, &Form::from_indices(n, &[1, 2], &[3], c(1.0, 0.0)).unwrap()).is_err());
    }

    #[test]
    fn decomposition_reconstructs() {
        let n = 5;
        let g = skewed(n);
        let u = Form::from_indices(n, &[1, 2], &[1, 3], c(1.0, 0.5)).unwrap()
            + Form::from_indices(n, &[4, 5], &[4, 5], c(-0.3, 0.0)).unwrap()
            + g.power(2).scale(2.0);
        let parts = g.lefschetz_decompose(&u).unwrap();
        assert_eq!(parts.len(), 3);
        let mut rebuilt = Form::zero(n);
        for (r, piece) in &parts {
            assert!(g.lefschetz_lambda(piece).max_abs() < 1e-10);
            rebuilt = rebuilt + g.power(*r).wedge(piece);
        }
        assert!(approx_equal(&rebuilt, &u, 1e-10));
        let trace = g.lefschetz_decompose(&g.omega()).unwrap();
        assert!(trace[0].1.max_abs() < 1e-12);
        assert!((trace[1].1.coeff((0, 0)) - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn rejects_bad_matrices() {
        assert!(HermitianMetric::diagonal(&[1.0, -1.0, 1.0]).is_err());
        let h = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 1.0), c(0.0, 1.0), c(1.0, 0.0)]);
        assert!(matches!(HermitianMetric::new(h), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn eigenvalues_relative_to_metric() {
        let g = HermitianMetric::diagonal(&[2.0, 1.0, 4.0]).unwrap();
        let beta = Form::i_phi_phibar(3, 1, 1) + Form::i_phi_phibar(3, 3, 3);
        let ev = g.eigenvalues_11(&beta, 1e-10).unwrap();
        assert!((ev[0] - 0.0).abs() < 1e-12 && (ev[1] - 0.25).abs() < 1e-12 && (ev[2] - 0.5).abs() < 1e-12);
    }
}
