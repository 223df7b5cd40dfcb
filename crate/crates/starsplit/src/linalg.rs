//! Small dense complex linear algebra and coframe substitutions.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::forms::{basis, full_mask, popcount, Form, Mask};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Linear change of coframe `phi_k -> sum_j a[k][j] psi_j` extended to the
/// whole exterior algebra, with `phibar_k -> sum_j conj(a[k][j]) psibar_j`.
///
/// The image of `phi_I` is `sum_{I'} det(a[I, I']) psi_{I'}`; every minor is
/// tabulated once at construction.
#[derive(Clone, Debug)]
pub struct Substitution {
    n: usize,
    minors: Vec<Complex64>,
    by_count: Vec<Vec<Mask>>,
}

impl Substitution {
    pub fn new(a: &CMatrix) -> Self {
        let n = a.nrows();
        assert_eq!(n, a.ncols(), "substitution matrix must be square");
        let size = 1usize << n;
        let mut minors = vec![ZERO; size * size];
        minors[0] = Complex64::new(1.0, 0.0);
        let mut by_count: Vec<Vec<Mask>> = vec![Vec::new(); n + 1];
        for m in 0..size {
            by_count[popcount(m as Mask)].push(m as Mask);
        }
        for k in 1..=n {
            for &rows in &by_count[k] {
                let r0 = rows.trailing_zeros() as usize;
                let rest = rows & (rows - 1);
                for &cols in &by_count[k] {
                    let mut acc = ZERO;
                    let mut sign = 1.0;
                    for c in 0..n {
                        if cols & (1 << c) == 0 {
                            continue;
                        }
                        let sub = minors[rest as usize * size + (cols & !(1 << c)) as usize];
                        acc += a[(r0, c)] * sub * sign;
                        sign = -sign;
                    }
                    minors[rows as usize * size + cols as usize] = acc;
                }
            }
        }
        Substitution { n, minors, by_count }
    }

    #[inline]
    fn minor(&self, rows: Mask, cols: Mask) -> Complex64 {
        self.minors[rows as usize * (1 << self.n) + cols as usize]
    }

    pub fn apply(&self, u: &Form) -> Form {
        assert_eq!(u.dim(), self.n, "dimension mismatch");
        let n = self.n;
        let mut acc = vec![ZERO; 1 << (2 * n)];
        for (&(i, j), &c) in u.terms() {
            let (p, q) = (popcount(i), popcount(j));
            for &ii in &self.by_count[p] {
                let a = self.minor(i, ii);
                if a == ZERO {
                    continue;
                }
                let ca = c * a;
                for &jj in &self.by_count[q] {
                    let b = self.minor(j, jj);
                    if b == ZERO {
                        continue;
                    }
                    acc[((ii as usize) << n) | jj as usize] += ca * b.conj();
                }
            }
        }
        let mask = (1usize << n) - 1;
        let out = acc
            .into_iter()
            .enumerate()
            .filter(|(_, c)| *c != ZERO)
            .map(|(k, c)| (((k >> n) as Mask, (k & mask) as Mask), c));
        Form::from_terms(n, out)
    }

    pub fn determinant(&self) -> Complex64 {
        let f = full_mask(self.n);
        self.minor(f, f)
    }
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn hermitian_residual(h: &CMatrix) -> f64 {
    (h - h.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Lower Cholesky factor `l` with `h = l l^H`, or an error if `h` is not
/// positive definite.
pub fn cholesky_lower(h: &CMatrix) -> Result<CMatrix> {
    let scale = h.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if hermitian_eigenvalues(h).first().is_none_or(|&e| e <= 1e-14 * scale) {
        return Err(Error::NotPositiveDefinite);
    }
    let chol = nalgebra::linalg::Cholesky::new(h.clone()).ok_or(Error::NotPositiveDefinite)?;
    Ok(chol.l())
}

pub fn inverse(a: &CMatrix) -> Result<CMatrix> {
    let scale = a.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let det = a.determinant();
    if scale == 0.0 || det.norm() <= 1e-13 * scale.powi(a.nrows() as i32) {
        return Err(Error::Singular);
    }
    a.clone().try_inverse().ok_or(Error::Singular)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let sym = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = nalgebra::linalg::SymmetricEigen::new(sym);
    let mut v: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

/// Least-squares solution of `a x = b`; returns `x` and the residual norm.
pub fn least_squares(a: &CMatrix, b: &CVector) -> (CVector, f64) {
    if a.ncols() == 0 {
        return (CVector::zeros(0), b.norm());
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let eps = smax * 1e-12 * (a.nrows().max(a.ncols()) as f64);
    let x = svd.solve(b, eps).expect("svd computed with both factors");
    let r = (a * &x - b).norm();
    (x, r)
}

/// Orthonormal basis of the numerical null space of a square matrix.
pub fn null_space(a: &CMatrix, rel_tol: f64) -> Vec<CVector> {
    let n = a.ncols();
    if n == 0 {
        return Vec::new();
    }
    let padded = if a.nrows() < n {
        let mut m = CMatrix::zeros(n, n);
        m.view_mut((0, 0), (a.nrows(), n)).copy_from(a);
        m
    } else {
        a.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max).max(1.0);
    (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] <= rel_tol * smax)
        .map(|k| v_t.row(k).adjoint())
        .collect()
}

/// Matrix of a linear map from `(p, q)` forms to `(pp, qq)` forms in the
/// canonical monomial bases.
pub fn operator_matrix(
    n: usize,
    from: (usize, usize),
    to: (usize, usize),
    op: impl Fn(&Form) -> Form,
) -> CMatrix {
    let src = basis(n, from.0, from.1);
    let dst = basis(n, to.0, to.1);
    let mut m = CMatrix::zeros(dst.len(), src.len());
    for (col, &mono) in src.iter().enumerate() {
        let img = op(&Form::monomial(n, mono, Complex64::new(1.0, 0.0)));
        for (row, &t) in dst.iter().enumerate() {
            m[(row, col)] = img.coeff(t);
        }
    }
    m
}

pub fn form_to_cvec(u: &Form, p: usize, q: usize) -> CVector {
    CVector::from_vec(u.to_vec(p, q))
}

pub fn cvec_to_form(n: usize, p: usize, q: usize, v: &CVector) -> Form {
    Form::from_vec(n, p, q, v.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sample(n: usize) -> CMatrix {
        CMatrix::from_fn(n, n, |i, j| c(1.0 + i as f64 * 0.3 - j as f64 * 0.7, 0.2 * (i * j) as f64 - 0.1))
    }

    #[test]
    fn substitution_matches_wedge_of_images() {
        let n = 3;
        let a = sample(n);
        let s = Substitution::new(&a);
        let image = |k: usize| {
            (0..n).fold(Form::zero(n), |acc, j| acc + Form::phi(n, j + 1).scale(a[(k - 1, j)]))
        };
        let u = Form::phi(n, 1).wedge(&Form::phi(n, 3)).wedge(&Form::phibar(n, 2));
        let expect = image(1).wedge(&image(3)).wedge(&image(2).conjugate());
        assert!(crate::forms::approx_equal(&s.apply(&u), &expect, 1e-12));
        assert!((s.determinant() - a.determinant()).norm() < 1e-12);
    }

    #[test]
    fn cholesky_and_eigen() {
        let h = CMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)]);
        let l = cholesky_lower(&h).unwrap();
        assert!((&l * l.adjoint() - &h).norm() < 1e-14);
        let ev = hermitian_eigenvalues(&h);
        assert!((ev[0] - 1.0).abs() < 1e-14 && (ev[1] - 3.0).abs() < 1e-14);
        let bad = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(1.0, 0.0)]);
        assert!(cholesky_lower(&bad).is_err());
    }

    #[test]
    fn null_space_of_projector() {
        let p = CMatrix::from_diagonal(&CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]));
        let ns = null_space(&p, 1e-10);
        assert_eq!(ns.len(), 1);
        assert!((ns[0][1].norm() - 1.0).abs() < 1e-14);
    }
}
