//! Sparse complexified exterior algebra over the coframe
//! `phi_1..phi_n, phibar_1..phibar_n`.
//!
//! A monomial is stored as a pair of bitmasks `(I, J)`; bit `k-1` of `I`
//! marks `phi_k`, bit `k-1` of `J` marks `phibar_k`. The canonical order is
//! `phi_I ^ phibar_J` with both index sets ascending.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::de::{self, Deserializer};
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ZERO_DROP: f64 = 1e-14;
pub const MAX_DIM: usize = 8;

pub type Mask = u16;
pub type Mono = (Mask, Mask);

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[inline]
pub fn popcount(m: Mask) -> usize {
    m.count_ones() as usize
}

#[inline]
fn bits_above(k: u32) -> Mask {
    if k >= 15 {
        0
    } else {
        !((1u16 << (k + 1)) - 1)
    }
}

/// Parity of the number of pairs `(a in x, b in y)` with `a > b`.
#[inline]
fn merge_parity(x: Mask, y: Mask) -> u32 {
    let mut count = 0u32;
    let mut rest = y;
    while rest != 0 {
        let b = rest.trailing_zeros();
        count += (x & bits_above(b)).count_ones();
        rest &= rest - 1;
    }
    count & 1
}

/// Product of two canonical monomials: `None` if an index repeats, otherwise
/// the sign and the canonical monomial of `a ^ b`.
#[inline]
pub fn mono_wedge(a: Mono, b: Mono) -> Option<(f64, Mono)> {
    if a.0 & b.0 != 0 || a.1 & b.1 != 0 {
        return None;
    }
    let mut parity = (popcount(a.1) * popcount(b.0)) as u32 & 1;
    parity ^= merge_parity(a.0, b.0);
    parity ^= merge_parity(a.1, b.1);
    let sign = if parity == 0 { 1.0 } else { -1.0 };
    Some((sign, (a.0 | b.0, a.1 | b.1)))
}

/// All masks with `k` bits among the low `n`, in ascending numeric order of
/// their sorted index lists.
pub fn subsets(n: usize, k: usize) -> Vec<Mask> {
    let mut out: Vec<Mask> = (0..(1u32 << n))
        .map(|m| m as Mask)
        .filter(|&m| popcount(m) == k)
        .collect();
    out.sort_by_key(|&m| mask_to_indices(m));
    out
}

pub fn mask_to_indices(m: Mask) -> Vec<usize> {
    (0..16).filter(|b| m & (1 << b) != 0).map(|b| b + 1).collect()
}

pub fn full_mask(n: usize) -> Mask {
    ((1u32 << n) - 1) as Mask
}

/// Canonical basis of the `(p, q)` forms.
pub fn basis(n: usize, p: usize, q: usize) -> Vec<Mono> {
    let hol = subsets(n, p);
    let anti = subsets(n, q);
    let mut out = Vec::with_capacity(hol.len() * anti.len());
    for &i in &hol {
        for &j in &anti {
            out.push((i, j));
        }
    }
    out
}

#[derive(Clone, PartialEq)]
pub struct Form {
    dim: usize,
    terms: BTreeMap<Mono, Complex64>,
}

impl Form {
    pub fn zero(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "unsupported dimension {dim}");
        Form { dim, terms: BTreeMap::new() }
    }

    pub fn scalar(dim: usize, c: Complex64) -> Self {
        Self::monomial(dim, (0, 0), c)
    }

    pub fn one(dim: usize) -> Self {
        Self::scalar(dim, ONE)
    }

    pub fn monomial(dim: usize, m: Mono, c: Complex64) -> Self {
        let mut f = Self::zero(dim);
        let limit = full_mask(dim);
        assert!(m.0 & !limit == 0 && m.1 & !limit == 0, "index beyond dimension");
        if c.norm() > ZERO_DROP {
            f.terms.insert(m, c);
        }
        f
    }

    /// `phi_k`, 1-based.
    pub fn phi(dim: usize, k: usize) -> Self {
        Self::monomial(dim, (1 << (k - 1), 0), ONE)
    }

    /// `phibar_k`, 1-based.
    pub fn phibar(dim: usize, k: usize) -> Self {
        Self::monomial(dim, (0, 1 << (k - 1)), ONE)
    }

    /// `c * phi_{hol[0]} ^ ... ^ phibar_{anti[0]} ^ ...` with 1-based indices in
    /// any order; the sign of sorting is applied.
    pub fn from_indices(dim: usize, hol: &[usize], anti: &[usize], c: Complex64) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::UnsupportedDimension(dim));
        }
        let mut acc = Self::one(dim).scale(c);
        for &k in hol {
            if k == 0 || k > dim {
                return Err(Error::Invalid(format!("index {k} out of range 1..={dim}")));
            }
            acc = acc.wedge(&Self::phi(dim, k));
        }
        for &k in anti {
            if k == 0 || k > dim {
                return Err(Error::Invalid(format!("index {k} out of range 1..={dim}")));
            }
            acc = acc.wedge(&Self::phibar(dim, k));
        }
        Ok(acc)
    }

    /// `i * phi_j ^ phibar_k`, the building block of metrics.
    pub fn i_phi_phibar(dim: usize, j: usize, k: usize) -> Self {
        Self::monomial(dim, (1 << (j - 1), 1 << (k - 1)), Complex64::i())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mono, &Complex64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, m: Mono) -> Complex64 {
        self.terms.get(&m).copied().unwrap_or(ZERO)
    }

    /// Coefficient against `phi_I ^ phibar_J` given 1-based sorted indices.
    pub fn coeff_of(&self, hol: &[usize], anti: &[usize]) -> Complex64 {
        let m = (indices_mask(hol), indices_mask(anti));
        self.coeff(m)
    }

    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = (Mono, Complex64)>) -> Self {
        let mut f = Self::zero(dim);
        for (m, c) in terms {
            *f.terms.entry(m).or_insert(ZERO) += c;
        }
        f.prune(ZERO_DROP)
    }

    pub fn prune(mut self, threshold: f64) -> Self {
        self.terms.retain(|_, c| c.norm() > threshold);
        self
    }

    pub fn bidegrees(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> =
            self.terms.keys().map(|m| (popcount(m.0), popcount(m.1))).collect();
        out.sort();
        out.dedup();
        out
    }

    /// The bidegree if the form is homogeneous and nonzero.
    pub fn bidegree(&self) -> Option<(usize, usize)> {
        let b = self.bidegrees();
        if b.len() == 1 {
            Some(b[0])
        } else {
            None
        }
    }

    pub fn is_homogeneous_of(&self, p: usize, q: usize) -> bool {
        self.terms.keys().all(|m| popcount(m.0) == p && popcount(m.1) == q)
    }

    pub fn bidegree_component(&self, p: usize, q: usize) -> Result<Self> {
        if p > self.dim || q > self.dim {
            return Err(Error::BidegreeOutOfRange(p, q, self.dim));
        }
        Ok(self.component(p, q))
    }

    pub(crate) fn component(&self, p: usize, q: usize) -> Self {
        Form {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| popcount(m.0) == p && popcount(m.1) == q)
                .map(|(m, c)| (*m, *c))
                .collect(),
        }
    }

    pub fn components(&self) -> Vec<((usize, usize), Self)> {
        self.bidegrees().into_iter().map(|(p, q)| ((p, q), self.component(p, q))).collect()
    }

    pub fn scale(&self, c: impl Into<Complex64>) -> Self {
        let c = c.into();
        Form::from_terms(self.dim, self.terms.iter().map(|(m, v)| (*m, v * c)))
    }

    pub fn add_form(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let mut terms = self.terms.clone();
        for (m, c) in &other.terms {
            *terms.entry(*m).or_insert(ZERO) += c;
        }
        Form { dim: self.dim, terms }.prune(ZERO_DROP)
    }

    pub fn sub_form(&self, other: &Self) -> Self {
        self.add_form(&other.scale(-1.0))
    }

    /// Exterior product. Panics on dimension mismatch; see [`wedge`] for the
    /// checked version.
    pub fn wedge(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let mut terms: BTreeMap<Mono, Complex64> = BTreeMap::new();
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                if let Some((s, m)) = mono_wedge(*a, *b) {
                    *terms.entry(m).or_insert(ZERO) += ca * cb * s;
                }
            }
        }
        Form { dim: self.dim, terms }.prune(ZERO_DROP)
    }

    pub fn conjugate(&self) -> Self {
        Form::from_terms(
            self.dim,
            self.terms.iter().map(|(m, c)| {
                let s = if (popcount(m.0) * popcount(m.1)).is_multiple_of(2) { 1.0 } else { -1.0 };
                ((m.1, m.0), c.conj() * s)
            }),
        )
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Euclidean norm of the coefficient vector, i.e. the norm of the standard
    /// metric in which the `phi` monomials are orthonormal.
    pub fn coeff_norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm_sqr()).fold(0.0, |a, b| a + b).sqrt()
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.sub_form(&self.conjugate()).max_abs() < tol
    }

    /// Coefficient vector in the canonical basis of `(p, q)`.
    pub fn to_vec(&self, p: usize, q: usize) -> Vec<Complex64> {
        basis(self.dim, p, q).into_iter().map(|m| self.coeff(m)).collect()
    }

    pub fn from_vec(dim: usize, p: usize, q: usize, v: &[Complex64]) -> Self {
        let b = basis(dim, p, q);
        assert_eq!(b.len(), v.len(), "coefficient vector length");
        Form::from_terms(dim, b.into_iter().zip(v.iter().copied()))
    }

    /// Coefficient of the top-degree part against `prod_j i phi_j ^ phibar_j`.
    pub fn top_coefficient(&self) -> Complex64 {
        let n = self.dim;
        let full = full_mask(n);
        self.coeff((full, full)) / top_orientation_sign(n)
    }
}

/// Coefficient of `prod_j (i phi_j ^ phibar_j)` on the canonical top monomial.
pub fn top_orientation_sign(n: usize) -> Complex64 {
    let mut acc = Form::one(n);
    for j in 1..=n {
        acc = acc.wedge(&Form::i_phi_phibar(n, j, j));
    }
    let full = full_mask(n);
    acc.coeff((full, full))
}

pub fn indices_mask(idx: &[usize]) -> Mask {
    idx.iter().fold(0, |m, &k| m | (1 << (k - 1)))
}

pub fn wedge(a: &Form, b: &Form) -> Result<Form> {
    if a.dim != b.dim {
        return Err(Error::DimMismatch(a.dim, b.dim));
    }
    Ok(a.wedge(b))
}

pub fn linear_combine(coeffs: &[Complex64], forms: &[Form]) -> Result<Form> {
    if coeffs.len() != forms.len() {
        return Err(Error::Invalid(format!(
            "{} coefficients for {} forms",
            coeffs.len(),
            forms.len()
        )));
    }
    let Some(first) = forms.first() else {
        return Err(Error::Invalid("empty combination".into()));
    };
    let dim = first.dim;
    let mut terms: BTreeMap<Mono, Complex64> = BTreeMap::new();
    for (c, f) in coeffs.iter().zip(forms) {
        if f.dim != dim {
            return Err(Error::DimMismatch(dim, f.dim));
        }
        for (m, v) in &f.terms {
            *terms.entry(*m).or_insert(ZERO) += c * v;
        }
    }
    Ok(Form { dim, terms }.prune(ZERO_DROP))
}

pub fn approx_equal(a: &Form, b: &Form, tol: f64) -> bool {
    a.dim == b.dim && a.sub_form(b).max_abs() <= tol
}

impl Add for Form {
    type Output = Form;
    fn add(self, rhs: Form) -> Form {
        self.add_form(&rhs)
    }
}

impl<'a> Add<&'a Form> for &'a Form {
    type Output = Form;
    fn add(self, rhs: &Form) -> Form {
        self.add_form(rhs)
    }
}

impl Sub for Form {
    type Output = Form;
    fn sub(self, rhs: Form) -> Form {
        self.sub_form(&rhs)
    }
}

impl<'a> Sub<&'a Form> for &'a Form {
    type Output = Form;
    fn sub(self, rhs: &Form) -> Form {
        self.sub_form(rhs)
    }
}

impl Neg for Form {
    type Output = Form;
    fn neg(self) -> Form {
        self.scale(-1.0)
    }
}

impl Mul<Complex64> for Form {
    type Output = Form;
    fn mul(self, rhs: Complex64) -> Form {
        self.scale(rhs)
    }
}

impl Mul<f64> for Form {
    type Output = Form;
    fn mul(self, rhs: f64) -> Form {
        self.scale(rhs)
    }
}

pub fn mono_label(m: Mono) -> String {
    let mut parts: Vec<String> = mask_to_indices(m.0).iter().map(|k| format!("phi{k}")).collect();
    parts.extend(mask_to_indices(m.1).iter().map(|k| format!("phibar{k}")));
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join("^")
    }
}

fn mono_key(m: Mono) -> String {
    let join = |v: Vec<usize>| v.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(",");
    format!("{}|{}", join(mask_to_indices(m.0)), join(mask_to_indices(m.1)))
}

fn parse_mono_key(s: &str) -> std::result::Result<Mono, String> {
    let (a, b) = s.split_once('|').ok_or_else(|| format!("bad monomial key '{s}'"))?;
    let parse = |part: &str| -> std::result::Result<Mask, String> {
        if part.is_empty() {
            return Ok(0);
        }
        let mut m: Mask = 0;
        for tok in part.split(',') {
            let k: usize = tok.trim().parse().map_err(|_| format!("bad index '{tok}'"))?;
            if k == 0 || k > MAX_DIM {
                return Err(format!("index {k} out of range"));
            }
            m |= 1 << (k - 1);
        }
        Ok(m)
    };
    Ok((parse(a)?, parse(b)?))
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({:.6}{:+.6}i) {}", c.re, c.im, mono_label(*m))?;
        }
        Ok(())
    }
}

impl fmt::Debug for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Form[n={}]{{{}}}", self.dim, self)
    }
}

/// JSON layout: `{"dim": n, "terms": {"1,2|3": [re, im], ...}}` where the key
/// lists holomorphic then antiholomorphic indices.
impl Serialize for Form {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        struct Terms<'a>(&'a Form);
        impl Serialize for Terms<'_> {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                let mut map = s.serialize_map(Some(self.0.terms.len()))?;
                for (m, c) in &self.0.terms {
                    map.serialize_entry(&mono_key(*m), &[c.re, c.im])?;
                }
                map.end()
            }
        }
        let mut map = s.serialize_map(Some(2))?;
        map.serialize_entry("dim", &self.dim)?;
        map.serialize_entry("terms", &Terms(self))?;
        map.end()
    }
}

impl<'de> Deserialize<'de> for Form {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            dim: usize,
            terms: BTreeMap<String, [f64; 2]>,
        }
        let raw = Raw::deserialize(d)?;
        if raw.dim == 0 || raw.dim > MAX_DIM {
            return Err(de::Error::custom(format!("unsupported dimension {}", raw.dim)));
        }
        let limit = full_mask(raw.dim);
        let mut terms = BTreeMap::new();
        for (k, [re, im]) in raw.terms {
            let m = parse_mono_key(&k).map_err(de::Error::custom)?;
            if m.0 & !limit != 0 || m.1 & !limit != 0 {
                return Err(de::Error::custom(format!("monomial '{k}' exceeds dimension")));
            }
            terms.insert(m, Complex64::new(re, im));
        }
        Ok(Form { dim: raw.dim, terms })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn one_forms_anticommute() {
        let a = Form::phi(3, 1).wedge(&Form::phi(3, 2));
        let b = Form::phi(3, 2).wedge(&Form::phi(3, 1));
        assert!(approx_equal(&a, &-b, 0.0));
        assert!(Form::phi(3, 1).wedge(&Form::phi(3, 1)).is_empty());
    }

    #[test]
    fn mixed_product_sign() {
        // (i phi1 phibar1) ^ (i phi2 phibar2) = - i^2 phi1 phi2 phibar1 phibar2
        let x = Form::i_phi_phibar(3, 1, 1).wedge(&Form::i_phi_phibar(3, 2, 2));
        assert_eq!(x.coeff((0b011, 0b011)), c(1.0, 0.0));
        let y = Form::from_indices(3, &[1], &[1, 2], ONE).unwrap();
        assert_eq!(y.coeff((0b001, 0b011)), ONE);
        let z = Form::from_indices(3, &[2, 1], &[], ONE).unwrap();
        assert_eq!(z.coeff((0b011, 0)), -ONE);
    }

    #[test]
    fn omega_squared_is_twice_omega2() {
        let n = 3;
        let w = (1..=n).fold(Form::zero(n), |acc, j| acc + Form::i_phi_phibar(n, j, j));
        let w2 = w.wedge(&w).scale(0.5);
        let pair = |a: usize, b: usize| Form::i_phi_phibar(n, a, a).wedge(&Form::i_phi_phibar(n, b, b));
        let expect = pair(1, 2) + pair(1, 3) + pair(2, 3);
        assert!(approx_equal(&w2, &expect, 1e-15));
    }

    #[test]
    fn conjugation() {
        assert_eq!(Form::phi(3, 1).conjugate(), Form::phibar(3, 1));
        let w = Form::i_phi_phibar(3, 1, 1);
        assert!(approx_equal(&w.conjugate(), &w, 0.0));
        let x = Form::from_indices(3, &[1, 2], &[3], c(0.3, 1.0)).unwrap();
        assert!(approx_equal(&x.conjugate().conjugate(), &x, 0.0));
    }

    #[test]
    fn linear_combination_drops_zeros() {
        let a = Form::i_phi_phibar(3, 1, 1);
        let z = linear_combine(&[ONE, -ONE], &[a.clone(), a.clone()]).unwrap();
        assert!(z.is_empty());
        let five = linear_combine(&[c(2.0, 0.0), c(3.0, 0.0)], &[a.clone(), a.clone()]).unwrap();
        assert!(approx_equal(&five, &a.scale(5.0), 0.0));
        assert!(linear_combine(&[ONE, ONE], &[a, Form::phi(4, 1)]).is_err());
    }

    #[test]
    fn components_and_tolerance() {
        let w = Form::i_phi_phibar(3, 1, 1);
        let extra = Form::from_indices(3, &[1, 2], &[3], ONE).unwrap();
        let sum = &w + &extra;
        assert_eq!(sum.bidegree_component(1, 1).unwrap(), w);
        assert!(sum.bidegree_component(4, 0).is_err());
        let nudged = &w + &Form::phi(3, 1).scale(1e-13);
        assert!(approx_equal(&w, &nudged, 1e-12));
        assert!(wedge(&w, &Form::phi(4, 1)).is_err());
    }

    #[test]
    fn vector_roundtrip() {
        let f = Form::from_indices(4, &[1, 3], &[2], c(1.0, -2.0)).unwrap();
        let v = f.to_vec(2, 1);
        assert_eq!(v.len(), 6 * 4);
        assert_eq!(Form::from_vec(4, 2, 1, &v), f);
    }

    #[test]
    fn json_roundtrip() {
        let f = Form::from_indices(3, &[1], &[2], c(0.5, -0.25)).unwrap() + Form::one(3);
        let s = serde_json::to_string(&f).unwrap();
        let back: Form = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
        assert_eq!(serde_json::to_string(&back).unwrap(), s);
    }

    #[test]
    fn top_coefficient_of_volume() {
        let n = 4;
        let mut v = Form::one(n);
        for j in 1..=n {
            v = v.wedge(&Form::i_phi_phibar(n, j, j));
        }
        assert!((v.top_coefficient() - ONE).norm() < 1e-15);
    }
}
