//! JSON helpers for complex values, matrices, metrics and pullback maps.

use std::path::Path;

use num_complex::Complex64;
use serde_json::{json, Value};

use crate::complex_structure::{InvariantComplexManifold, PullbackMap};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::metric::{HermitianMetric, MetricSpec};

/// Accepts `[re, im]`, a real number, or a literal string such as `"0.1+0.2i"`.
pub fn parse_complex_value(v: &Value) -> Result<Complex64> {
    match v {
        Value::Number(x) => Ok(Complex64::new(x.as_f64().unwrap_or(f64::NAN), 0.0)),
        Value::Array(a) if a.len() == 2 => {
            let re = a[0].as_f64().ok_or_else(|| Error::Invalid("complex entry must be numeric".into()))?;
            let im = a[1].as_f64().ok_or_else(|| Error::Invalid("complex entry must be numeric".into()))?;
            Ok(Complex64::new(re, im))
        }
        Value::String(s) => crate::expr::parse_complex(s),
        other => Err(Error::Invalid(format!("cannot read a complex number from {other}"))),
    }
}

/// A square matrix given row-major either as a flat list of `n*n` entries or
/// as a list of rows.
pub fn parse_complex_matrix(v: &Value) -> Result<CMatrix> {
    let list = v.as_array().ok_or_else(|| Error::Invalid("matrix must be a list".into()))?;
    let nested = !list.is_empty() && list.iter().all(|r| r.as_array().map(|a| a.len()) == Some(list.len()));
    let entries: Vec<Complex64> = if nested {
        list.iter()
            .flat_map(|r| r.as_array().unwrap().iter())
            .map(parse_complex_value)
            .collect::<Result<_>>()?
    } else {
        list.iter().map(parse_complex_value).collect::<Result<_>>()?
    };
    let n = (entries.len() as f64).sqrt().round() as usize;
    if n == 0 || n * n != entries.len() {
        return Err(Error::Invalid(format!("{} matrix entries do not form a square", entries.len())));
    }
    Ok(CMatrix::from_row_slice(n, n, &entries))
}

pub fn complex_matrix_json(m: &CMatrix) -> Value {
    let rows: Vec<Value> = (0..m.nrows())
        .map(|i| Value::Array((0..m.ncols()).map(|j| json!([m[(i, j)].re, m[(i, j)].im])).collect()))
        .collect();
    Value::Array(rows)
}

pub fn complex_json(c: Complex64) -> Value {
    json!([c.re, c.im])
}

pub fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn metric_from_json(v: &Value) -> Result<HermitianMetric> {
    let spec: MetricSpec = serde_json::from_value(v.clone())?;
    spec.build()
}

pub fn load_metric(path: &Path) -> Result<HermitianMetric> {
    metric_from_json(&read_json(path)?)
}

/// Pullback map file: `{"matrix": ...}` or a bare matrix.
pub fn pullback_from_json(v: &Value) -> Result<PullbackMap> {
    let m = v.get("matrix").unwrap_or(v);
    PullbackMap::new(parse_complex_matrix(m)?)
}

pub fn load_pullback(path: &Path) -> Result<PullbackMap> {
    pullback_from_json(&read_json(path)?)
}

pub fn load_manifold(path: &Path) -> Result<InvariantComplexManifold> {
    InvariantComplexManifold::from_json(&read_json(path)?)
}

pub fn to_pretty_json<T: serde::Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_layouts() {
        let flat: Value = serde_json::from_str("[[1,0],[0,0.5],[0,-0.5],[2,0]]").unwrap();
        let rows: Value = serde_json::from_str("[[[1,0],[0,0.5]],[[0,-0.5],[2,0]]]").unwrap();
        let a = parse_complex_matrix(&flat).unwrap();
        let b = parse_complex_matrix(&rows).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[(0, 1)], Complex64::new(0.0, 0.5));
        assert!(parse_complex_matrix(&serde_json::from_str("[[1,0],[0,1],[1,1]]").unwrap()).is_err());
        let real: Value = serde_json::from_str("[[1,0,0],[0,-1,0],[0,0,1]]").unwrap();
        assert_eq!(parse_complex_matrix(&real).unwrap()[(1, 1)], Complex64::new(-1.0, 0.0));
        let real2: Value = serde_json::from_str("[[2,1],[1,2]]").unwrap();
        assert_eq!(parse_complex_matrix(&real2).unwrap()[(0, 1)], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn metric_specs() {
        let d: Value = serde_json::from_str(r#"{"type":"diagonal","coeffs":[1,2,3],"scale":0.5}"#).unwrap();
        let g = metric_from_json(&d).unwrap();
        assert!((g.matrix()[(2, 2)].re - 1.5).abs() < 1e-15);
        let bad: Value = serde_json::from_str(r#"{"type":"diagonal","coeffs":[1,-2,3]}"#).unwrap();
        assert!(metric_from_json(&bad).is_err());
        let h: Value = serde_json::from_str(r#"{"type":"hermitian","matrix":[[[2,0],[0,1]],[[0,-1],[2,0]]]}"#).unwrap();
        assert!(metric_from_json(&h).is_ok());
        let spec = MetricSpec::from_metric(&g);
        let again = spec.build().unwrap();
        assert!((again.matrix() - g.matrix()).norm() < 1e-15);
    }
}
