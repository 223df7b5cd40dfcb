//! Invariant complex manifolds given by structure equations on a coframe of
//! invariant (1,0)-forms.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::forms::{full_mask, mono_wedge, popcount, Form, Mask, Mono};
use crate::linalg::{self, CMatrix, Substitution};
use crate::metric::HermitianMetric;

#[derive(Clone, Debug, PartialEq)]
pub enum TermKind {
    /// `phi_i ^ phi_j`, `i < j`.
    Hol,
    /// `phi_i ^ phibar_j`.
    Mixed,
}

#[derive(Clone, Debug)]
pub struct StructureTerm {
    pub kind: TermKind,
    pub i: usize,
    pub j: usize,
    pub source: String,
    expr: Expr,
}

impl StructureTerm {
    pub fn hol(i: usize, j: usize, coeff: &str) -> Result<Self> {
        Ok(StructureTerm { kind: TermKind::Hol, i, j, source: coeff.to_string(), expr: Expr::parse(coeff)? })
    }

    pub fn mixed(i: usize, jbar: usize, coeff: &str) -> Result<Self> {
        Ok(StructureTerm { kind: TermKind::Mixed, i, j: jbar, source: coeff.to_string(), expr: Expr::parse(coeff)? })
    }
}

#[derive(Clone, Debug)]
pub struct InvariantComplexManifold {
    name: String,
    n: usize,
    params: Vec<(String, Complex64)>,
    structure: Vec<Vec<StructureTerm>>,
    dphi: Vec<Form>,
    dphibar: Vec<Form>,
}

impl InvariantComplexManifold {
    /// `structure[k]` lists the terms of `d phi_{k+1}`.
    pub fn new(
        name: &str,
        n: usize,
        params: Vec<(String, Complex64)>,
        structure: Vec<Vec<StructureTerm>>,
    ) -> Result<Self> {
        if n == 0 || n > crate::forms::MAX_DIM {
            return Err(Error::UnsupportedDimension(n));
        }
        if structure.len() != n {
            return Err(Error::Invalid(format!("{} structure equations for dimension {n}", structure.len())));
        }
        for (k, terms) in structure.iter().enumerate() {
            for t in terms {
                let bad = t.i == 0 || t.j == 0 || t.i > n || t.j > n || (t.kind == TermKind::Hol && t.i == t.j);
                if bad {
                    return Err(Error::Invalid(format!("bad indices ({}, {}) in d phi{}", t.i, t.j, k + 1)));
                }
                for v in t.expr.variables() {
                    if !params.iter().any(|(p, _)| *p == v) {
                        return Err(Error::UnknownParameter(v));
                    }
                }
            }
        }
        let mut m = InvariantComplexManifold {
            name: name.to_string(),
            n,
            params,
            structure,
            dphi: Vec::new(),
            dphibar: Vec::new(),
        };
        m.evaluate()?;
        Ok(m)
    }

    fn evaluate(&mut self) -> Result<()> {
        let env: BTreeMap<String, Complex64> = self.params.iter().cloned().collect();
        let n = self.n;
        let mut dphi = Vec::with_capacity(n);
        for terms in &self.structure {
            let mut acc = Vec::new();
            for t in terms {
                let c = t.expr.eval(&env)?;
                let hol = [t.i];
                let f = match t.kind {
                    TermKind::Hol => Form::from_indices(n, &[t.i, t.j], &[], c)?,
                    TermKind::Mixed => Form::from_indices(n, &hol, &[t.j], c)?,
                };
                acc.push(f);
            }
            dphi.push(acc.into_iter().fold(Form::zero(n), |a, b| a + b));
        }
        self.dphibar = dphi.iter().map(|f| f.conjugate()).collect();
        self.dphi = dphi;
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn params(&self) -> &[(String, Complex64)] {
        &self.params
    }

    pub fn param(&self, name: &str) -> Option<Complex64> {
        self.params.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }

    pub fn structure(&self) -> &[Vec<StructureTerm>] {
        &self.structure
    }

    /// A new instance with one parameter rebound.
    pub fn bind(&self, name: &str, value: Complex64) -> Result<Self> {
        let mut m = self.clone();
        let slot = m
            .params
            .iter_mut()
            .find(|(k, _)| k == name)
            .ok_or_else(|| Error::UnknownParameter(name.to_string()))?;
        slot.1 = value;
        m.evaluate()?;
        Ok(m)
    }

    pub fn bind_all(&self, values: &[(String, Complex64)]) -> Result<Self> {
        let mut m = self.clone();
        for (k, v) in values {
            let slot = m
                .params
                .iter_mut()
                .find(|(p, _)| p == k)
                .ok_or_else(|| Error::UnknownParameter(k.clone()))?;
            slot.1 = *v;
        }
        m.evaluate()?;
        Ok(m)
    }

    pub fn d_phi(&self, k: usize) -> &Form {
        &self.dphi[k - 1]
    }

    fn d_generator(&self, hol: bool, idx: usize) -> &Form {
        if hol {
            &self.dphi[idx]
        } else {
            &self.dphibar[idx]
        }
    }

    /// `(del u, delbar u)`.
    pub fn d_split(&self, u: &Form) -> (Form, Form) {
        assert_eq!(u.dim(), self.n, "dimension mismatch");
        let mut del: Vec<(Mono, Complex64)> = Vec::new();
        let mut delbar: Vec<(Mono, Complex64)> = Vec::new();
        for (&(a, b), &c) in u.terms() {
            let p = popcount(a);
            let mut pos = 0usize;
            let mut visit = |hol: bool, bit: usize, prefix: Mono, suffix: Mono, pos: usize| {
                let sign = if pos.is_multiple_of(2) { 1.0 } else { -1.0 };
                for (&m, &dc) in self.d_generator(hol, bit).terms() {
                    let Some((s1, w1)) = mono_wedge(prefix, m) else { continue };
                    let Some((s2, w2)) = mono_wedge(w1, suffix) else { continue };
                    let v = c * dc * (sign * s1 * s2);
                    if popcount(w2.0) == p + 1 {
                        del.push((w2, v));
                    } else {
                        delbar.push((w2, v));
                    }
                }
            };
            for bit in 0..self.n {
                if a & (1 << bit) == 0 {
                    continue;
                }
                let below: Mask = (1 << bit) - 1;
                visit(true, bit, (a & below, 0), (a & !below & !(1 << bit), b), pos);
                pos += 1;
            }
            for bit in 0..self.n {
                if b & (1 << bit) == 0 {
                    continue;
                }
                let below: Mask = (1 << bit) - 1;
                visit(false, bit, (a, b & below), (0, b & !below & !(1 << bit)), pos);
                pos += 1;
            }
        }
        (Form::from_terms(self.n, del), Form::from_terms(self.n, delbar))
    }

    pub fn exterior_d(&self, u: &Form) -> Form {
        let (a, b) = self.d_split(u);
        a + b
    }

    pub fn del(&self, u: &Form) -> Form {
        self.d_split(u).0
    }

    pub fn delbar(&self, u: &Form) -> Form {
        self.d_split(u).1
    }

    /// `i del delbar u`.
    pub fn i_ddbar(&self, u: &Form) -> Form {
        self.del(&self.delbar(u)).scale(Complex64::i())
    }

    /// Largest coefficient of `d d phi_k` over all generators.
    pub fn check_integrability(&self) -> f64 {
        (1..=self.n)
            .map(|k| self.exterior_d(&self.dphi[k - 1]).max_abs())
            .fold(0.0, f64::max)
    }

    /// Largest top coefficient of `d beta` over the invariant
    /// `(2n-1)`-monomials `beta`.
    pub fn check_stokes(&self) -> f64 {
        let full = full_mask(self.n);
        let one = Complex64::new(1.0, 0.0);
        let mut worst: f64 = 0.0;
        for bit in 0..self.n {
            for m in [(full & !(1 << bit), full), (full, full & !(1 << bit))] {
                let d = self.exterior_d(&Form::monomial(self.n, m, one));
                worst = worst.max(d.coeff((full, full)).norm());
            }
        }
        worst
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        let scale = 1.0 + self.dphi.iter().map(|f| f.max_abs()).fold(0.0, f64::max);
        let r = self.check_integrability();
        if r > tol * scale * scale {
            return Err(Error::NotIntegrable(r));
        }
        let s = self.check_stokes();
        if s > tol * scale {
            return Err(Error::NotUnimodular(s));
        }
        Ok(())
    }

    /// Integral of the (n,n) part against `prod_j i phi_j ^ phibar_j`, the
    /// total volume being normalized to one.
    pub fn integrate(&self, u: &Form) -> Complex64 {
        self.integrate_checked(u).0
    }

    /// As [`Self::integrate`], also reporting whether lower-degree parts were
    /// present and ignored.
    pub fn integrate_checked(&self, u: &Form) -> (Complex64, bool) {
        let n = self.n;
        let ignored = u.bidegrees().iter().any(|&b| b != (n, n));
        (u.component(n, n).top_coefficient(), ignored)
    }

    pub fn adjoint_del(&self, g: &HermitianMetric, u: &Form) -> Form {
        g.hodge_star(&self.delbar(&g.hodge_star(u))).scale(-1.0)
    }

    pub fn adjoint_delbar(&self, g: &HermitianMetric, u: &Form) -> Form {
        g.hodge_star(&self.del(&g.hodge_star(u))).scale(-1.0)
    }

    pub fn laplacian_delbar(&self, g: &HermitianMetric, u: &Form) -> Form {
        let a = self.delbar(&self.adjoint_delbar(g, u));
        let b = self.adjoint_delbar(g, &self.delbar(u));
        a + b
    }

    /// The global pairing `<<u, v>> = integral of u ^ *conj(v)`.
    pub fn l2_pairing(&self, g: &HermitianMetric, u: &Form, v: &Form) -> Complex64 {
        self.integrate(&u.wedge(&g.hodge_star(&v.conjugate())))
    }

    pub fn l2_norm_sq(&self, g: &HermitianMetric, u: &Form) -> f64 {
        self.l2_pairing(g, u, u).re
    }

    pub fn pullback(&self, phi: &PullbackMap, u: &Form) -> Form {
        phi.apply(u)
    }

    pub fn to_json(&self) -> Value {
        let mut params = Map::new();
        for (k, v) in &self.params {
            params.insert(k.clone(), json!({ "default": [v.re, v.im] }));
        }
        let mut structure = Map::new();
        for (k, terms) in self.structure.iter().enumerate() {
            let hol: Vec<Value> = terms
                .iter()
                .filter(|t| t.kind == TermKind::Hol)
                .map(|t| json!({ "i": t.i, "j": t.j, "coeff": t.source }))
                .collect();
            let mixed: Vec<Value> = terms
                .iter()
                .filter(|t| t.kind == TermKind::Mixed)
                .map(|t| json!({ "i": t.i, "jbar": t.j, "coeff": t.source }))
                .collect();
            let mut entry = Map::new();
            if !hol.is_empty() {
                entry.insert("(2,0)".into(), Value::Array(hol));
            }
            if !mixed.is_empty() {
                entry.insert("(1,1)".into(), Value::Array(mixed));
            }
            if !entry.is_empty() {
                structure.insert(format!("phi{}", k + 1), Value::Object(entry));
            }
        }
        json!({ "name": self.name, "dim": self.n, "parameters": params, "structure": structure })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let obj = v.as_object().ok_or_else(|| Error::Invalid("manifold must be a JSON object".into()))?;
        let name = obj.get("name").and_then(Value::as_str).unwrap_or("unnamed").to_string();
        let n = obj
            .get("dim")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Invalid("manifold needs an integer 'dim'".into()))? as usize;
        if n == 0 || n > crate::forms::MAX_DIM {
            return Err(Error::UnsupportedDimension(n));
        }
        let mut params = Vec::new();
        if let Some(p) = obj.get("parameters") {
            let p = p.as_object().ok_or_else(|| Error::Invalid("'parameters' must be an object".into()))?;
            for (k, spec) in p {
                let default = match spec.get("default") {
                    Some(d) => crate::io::parse_complex_value(d)?,
                    None => Complex64::new(0.0, 0.0),
                };
                params.push((k.clone(), default));
            }
        }
        let mut structure: Vec<Vec<StructureTerm>> = vec![Vec::new(); n];
        if let Some(s) = obj.get("structure") {
            let s = s.as_object().ok_or_else(|| Error::Invalid("'structure' must be an object".into()))?;
            for (key, parts) in s {
                let k: usize = key
                    .strip_prefix("phi")
                    .and_then(|r| r.parse().ok())
                    .filter(|&k| k >= 1 && k <= n)
                    .ok_or_else(|| Error::Invalid(format!("bad generator key '{key}'")))?;
                let parts = parts
                    .as_object()
                    .ok_or_else(|| Error::Invalid(format!("'{key}' must be an object")))?;
                for (bideg, list) in parts {
                    let list = list
                        .as_array()
                        .ok_or_else(|| Error::Invalid(format!("'{key}.{bideg}' must be a list")))?;
                    let mixed = match bideg.replace(' ', "").as_str() {
                        "(2,0)" => false,
                        "(1,1)" => true,
                        other => {
                            return Err(Error::Invalid(format!(
                                "d phi{k} may only have (2,0) and (1,1) parts, found {other}"
                            )))
                        }
                    };
                    for item in list {
                        let i = index_field(item, "i")?;
                        let j = index_field(item, if mixed { "jbar" } else { "j" })?;
                        let coeff = coeff_source(item.get("coeff"))?;
                        let term = if mixed {
                            StructureTerm::mixed(i, j, &coeff)?
                        } else {
                            StructureTerm::hol(i, j, &coeff)?
                        };
                        structure[k - 1].push(term);
                    }
                }
            }
        }
        Self::new(&name, n, params, structure)
    }
}

fn index_field(item: &Value, key: &str) -> Result<usize> {
    item.get(key)
        .and_then(Value::as_u64)
        .map(|v| v as usize)
        .ok_or_else(|| Error::Invalid(format!("structure term needs integer '{key}'")))
}

fn coeff_source(v: Option<&Value>) -> Result<String> {
    match v {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(Value::Number(x)) => Ok(x.to_string()),
        Some(Value::Array(a)) if a.len() == 2 => {
            let c = crate::io::parse_complex_value(&Value::Array(a.clone()))?;
            Ok(format!("({}) + ({})*i", c.re, c.im))
        }
        _ => Err(Error::Invalid("structure term needs a 'coeff'".into())),
    }
}

/// Linear map of the coframe, `phi^* phi_k = sum_j a[k][j] phi_j`.
#[derive(Clone, Debug)]
pub struct PullbackMap {
    a: CMatrix,
    sub: Substitution,
}

impl PullbackMap {
    pub fn new(a: CMatrix) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::Invalid("pullback matrix must be square".into()));
        }
        linalg::inverse(&a)?;
        let sub = Substitution::new(&a);
        Ok(PullbackMap { a, sub })
    }

    pub fn identity(n: usize) -> Self {
        Self::new(CMatrix::identity(n, n)).expect("identity is invertible")
    }

    pub fn diagonal(entries: &[Complex64]) -> Result<Self> {
        Self::new(CMatrix::from_diagonal(&nalgebra::DVector::from_vec(entries.to_vec())))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.a
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn apply(&self, u: &Form) -> Form {
        self.sub.apply(u)
    }

    /// The map of `self o other`, whose pullback is `other^* o self^*`.
    pub fn compose(&self, other: &PullbackMap) -> Result<PullbackMap> {
        PullbackMap::new(&self.a * &other.a)
    }

    pub fn inverse(&self) -> Result<PullbackMap> {
        PullbackMap::new(linalg::inverse(&self.a)?)
    }

    /// Largest defect of `phi^* d = d phi^*` on the generators.
    pub fn structure_residual(&self, m: &InvariantComplexManifold) -> f64 {
        let n = m.dim();
        (1..=n)
            .map(|k| {
                let phik = Form::phi(n, k);
                let lhs = self.apply(&m.exterior_d(&phik));
                let rhs = m.exterior_d(&self.apply(&phik));
                lhs.sub_form(&rhs).max_abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn is_structure_compatible(&self, m: &InvariantComplexManifold, tol: f64) -> bool {
        self.structure_residual(m) < tol
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::approx_equal;

    fn iwasawa() -> InvariantComplexManifold {
        InvariantComplexManifold::new("iw", 3, vec![], vec![vec![], vec![], vec![StructureTerm::hol(1, 2, "-1").unwrap()]])
            .unwrap()
    }

    #[test]
    fn iwasawa_i_ddbar_omega() {
        let m = iwasawa();
        let g = HermitianMetric::identity(3).unwrap();
        let lhs = m.i_ddbar(&g.omega());
        let expect = Form::i_phi_phibar(3, 1, 1).wedge(&Form::i_phi_phibar(3, 2, 2));
        assert!(approx_equal(&lhs, &expect, 1e-14));
        assert_eq!(m.check_integrability(), 0.0);
        assert_eq!(m.check_stokes(), 0.0);
    }

    #[test]
    fn leibniz_rule() {
        let m = iwasawa();
        let a = Form::phi(3, 3) + Form::phibar(3, 1).scale(Complex64::new(0.0, 2.0));
        let b = Form::phi(3, 3).wedge(&Form::phibar(3, 3));
        let lhs = m.exterior_d(&a.wedge(&b));
        let rhs = m.exterior_d(&a).wedge(&b) - a.wedge(&m.exterior_d(&b));
        assert!(approx_equal(&lhs, &rhs, 1e-14));
    }

    #[test]
    fn twisted_pair_is_integrable() {
        let m = InvariantComplexManifold::new(
            "twisted",
            3,
            vec![],
            vec![vec![], vec![StructureTerm::hol(1, 3, "1").unwrap()], vec![StructureTerm::hol(1, 2, "1").unwrap()]],
        )
        .unwrap();
        assert_eq!(m.check_integrability(), 0.0);
    }

    #[test]
    fn corrupted_structure_flagged() {
        let m = InvariantComplexManifold::new(
            "bad",
            3,
            vec![],
            vec![vec![StructureTerm::mixed(2, 2, "1").unwrap()], vec![], vec![StructureTerm::mixed(1, 1, "1").unwrap()]],
        )
        .unwrap();
        assert!(m.check_integrability() > 0.5);
        assert!(matches!(m.validate(1e-10), Err(Error::NotIntegrable(_))));
    }

    #[test]
    fn json_roundtrip_and_binding() {
        let src = r#"{"name":"demo","dim":3,"parameters":{"s":{"default":[2.0,0.0]}},
            "structure":{"phi3":{"(2,0)":[{"i":1,"j":2,"coeff":"-s"}],"(1,1)":[{"i":1,"jbar":1,"coeff":"conj(s)"}]}}}"#;
        let m = InvariantComplexManifold::from_json(&serde_json::from_str(src).unwrap()).unwrap();
        assert_eq!(m.d_phi(3).coeff((0b011, 0)), Complex64::new(-2.0, 0.0));
        let text = serde_json::to_string(&m.to_json()).unwrap();
        let again = InvariantComplexManifold::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(serde_json::to_string(&again.to_json()).unwrap(), text);
        let b = m.bind("s", Complex64::new(0.0, 1.0)).unwrap();
        assert_eq!(b.d_phi(3).coeff((0b001, 0b001)), Complex64::new(0.0, -1.0));
        assert!(m.bind("zz", Complex64::new(0.0, 1.0)).is_err());
        let bad = r#"{"dim":3,"structure":{"phi3":{"(0,2)":[{"i":1,"j":2,"coeff":"1"}]}}}"#;
        assert!(InvariantComplexManifold::from_json(&serde_json::from_str(bad).unwrap()).is_err());
    }

    #[test]
    fn pullback_identity_and_isometry() {
        let m = iwasawa();
        let u = Form::from_indices(3, &[1, 3], &[2], Complex64::new(0.3, 0.4)).unwrap();
        assert_eq!(PullbackMap::identity(3).apply(&u), u);
        let (a, b) = (Complex64::from_polar(1.0, 0.7), Complex64::from_polar(1.0, -1.9));
        let phi = PullbackMap::diagonal(&[a, b, a * b]).unwrap();
        assert!(phi.structure_residual(&m) < 1e-14);
        let g = HermitianMetric::identity(3).unwrap();
        assert!(approx_equal(&phi.apply(&g.omega()), &g.omega(), 1e-14));
        assert!(PullbackMap::new(CMatrix::zeros(3, 3)).is_err());
    }
}
