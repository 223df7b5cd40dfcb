//! Coefficient expressions over named complex parameters.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | '+' unary | atom
//! atom   := number ['i'] | 'i' | name | func '(' expr ')' | '(' expr ')'
//! func   := 'conj' | 'abs2'
//! ```

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(Complex64),
    Var(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Conj(Box<Expr>),
    Abs2(Box<Expr>),
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Imag(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

fn lex(src: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut k = 0;
    while k < chars.len() {
        let ch = chars[k];
        if ch.is_whitespace() {
            k += 1;
        } else if ch.is_ascii_digit() || ch == '.' {
            let start = k;
            while k < chars.len() && (chars[k].is_ascii_digit() || chars[k] == '.') {
                k += 1;
            }
            if k < chars.len() && (chars[k] == 'e' || chars[k] == 'E') {
                let mut j = k + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    k = j;
                    while k < chars.len() && chars[k].is_ascii_digit() {
                        k += 1;
                    }
                }
            }
            let text: String = chars[start..k].iter().collect();
            let v: f64 = text.parse().map_err(|_| Error::Expr(format!("bad number '{text}'")))?;
            let imag = k < chars.len()
                && chars[k] == 'i'
                && !(k + 1 < chars.len() && (chars[k + 1].is_alphanumeric() || chars[k + 1] == '_'));
            if imag {
                k += 1;
                out.push(Tok::Imag(v));
            } else {
                out.push(Tok::Num(v));
            }
        } else if ch.is_alphabetic() || ch == '_' {
            let start = k;
            while k < chars.len() && (chars[k].is_alphanumeric() || chars[k] == '_') {
                k += 1;
            }
            out.push(Tok::Ident(chars[start..k].iter().collect()));
        } else if "+-*/".contains(ch) {
            out.push(Tok::Op(ch));
            k += 1;
        } else if ch == '(' {
            out.push(Tok::LParen);
            k += 1;
        } else if ch == ')' {
            out.push(Tok::RParen);
            k += 1;
        } else {
            return Err(Error::Expr(format!("unexpected character '{ch}' in '{src}'")));
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(Tok::Op(op @ ('+' | '-'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '+' {
                Expr::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(Tok::Op(op @ ('*' | '/'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == '*' {
                Expr::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(Tok::Op('-')) => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Some(Tok::Op('+')) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.next() {
            Some(Tok::Num(v)) => Ok(Expr::Num(Complex64::new(v, 0.0))),
            Some(Tok::Imag(v)) => Ok(Expr::Num(Complex64::new(0.0, v))),
            Some(Tok::Ident(name)) if name == "i" => Ok(Expr::Num(Complex64::i())),
            Some(Tok::Ident(name)) if name == "conj" || name == "abs2" => {
                if self.next() != Some(Tok::LParen) {
                    return Err(Error::Expr(format!("expected '(' after {name}")));
                }
                let inner = self.expr()?;
                if self.next() != Some(Tok::RParen) {
                    return Err(Error::Expr(format!("unclosed call to {name}")));
                }
                Ok(if name == "conj" {
                    Expr::Conj(Box::new(inner))
                } else {
                    Expr::Abs2(Box::new(inner))
                })
            }
            Some(Tok::Ident(name)) => Ok(Expr::Var(name)),
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                if self.next() != Some(Tok::RParen) {
                    return Err(Error::Expr("unbalanced parentheses".into()));
                }
                Ok(inner)
            }
            Some(t) => Err(Error::Expr(format!("unexpected token {t:?}"))),
            None => Err(Error::Expr("unexpected end of expression".into())),
        }
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let toks = lex(src)?;
        if toks.is_empty() {
            return Err(Error::Expr("empty expression".into()));
        }
        let mut p = Parser { toks, pos: 0 };
        let e = p.expr()?;
        if p.pos != p.toks.len() {
            return Err(Error::Expr(format!("trailing input in '{src}'")));
        }
        Ok(e)
    }

    pub fn eval(&self, params: &BTreeMap<String, Complex64>) -> Result<Complex64> {
        let v = match self {
            Expr::Num(c) => *c,
            Expr::Var(name) => *params.get(name).ok_or_else(|| Error::UnknownParameter(name.clone()))?,
            Expr::Neg(a) => -a.eval(params)?,
            Expr::Add(a, b) => a.eval(params)? + b.eval(params)?,
            Expr::Sub(a, b) => a.eval(params)? - b.eval(params)?,
            Expr::Mul(a, b) => a.eval(params)? * b.eval(params)?,
            Expr::Div(a, b) => {
                let d = b.eval(params)?;
                if d.norm() == 0.0 {
                    return Err(Error::Expr("division by zero".into()));
                }
                a.eval(params)? / d
            }
            Expr::Conj(a) => a.eval(params)?.conj(),
            Expr::Abs2(a) => Complex64::new(a.eval(params)?.norm_sqr(), 0.0),
        };
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::Expr("non-finite value".into()));
        }
        Ok(v)
    }

    pub fn variables(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect(&self, out: &mut Vec<String>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(n) => out.push(n.clone()),
            Expr::Neg(a) | Expr::Conj(a) | Expr::Abs2(a) => a.collect(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.collect(out);
                b.collect(out);
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(c) if c.im == 0.0 => write!(f, "{}", c.re),
            Expr::Num(c) if c.re == 0.0 => write!(f, "{}i", c.im),
            Expr::Num(c) => write!(f, "({}{:+}i)", c.re, c.im),
            Expr::Var(n) => write!(f, "{n}"),
            Expr::Neg(a) => write!(f, "-({a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "{a}*{b}"),
            Expr::Div(a, b) => write!(f, "{a}/({b})"),
            Expr::Conj(a) => write!(f, "conj({a})"),
            Expr::Abs2(a) => write!(f, "abs2({a})"),
        }
    }
}

/// Parse a parameter-free complex literal such as `0.1+0.2i`, `-0.25i`, `3`.
pub fn parse_complex(src: &str) -> Result<Complex64> {
    Expr::parse(src)?.eval(&BTreeMap::new())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(pairs: &[(&str, Complex64)]) -> BTreeMap<String, Complex64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn literals() {
        assert_eq!(parse_complex("0.1+0.2i").unwrap(), Complex64::new(0.1, 0.2));
        assert_eq!(parse_complex("-0.25i").unwrap(), Complex64::new(0.0, -0.25));
        assert_eq!(parse_complex("0+0.25i").unwrap(), Complex64::new(0.0, 0.25));
        assert_eq!(parse_complex("1e-3").unwrap(), Complex64::new(1e-3, 0.0));
        assert_eq!(parse_complex("2*i").unwrap(), Complex64::new(0.0, 2.0));
        assert_eq!(parse_complex("-(1-2i)").unwrap(), Complex64::new(-1.0, 2.0));
    }

    #[test]
    fn calabi_eckmann_coefficient() {
        let t = Complex64::new(0.1, 0.2);
        let e = Expr::parse("i*(conj(t)+1)/(1-abs2(t))").unwrap();
        let v = e.eval(&params(&[("t", t)])).unwrap();
        let expect = Complex64::i() * (t.conj() + 1.0) / (1.0 - t.norm_sqr());
        assert!((v - expect).norm() < 1e-15);
        assert_eq!(e.variables(), vec!["t".to_string()]);
    }

    #[test]
    fn precedence() {
        assert_eq!(parse_complex("1+2*3").unwrap(), Complex64::new(7.0, 0.0));
        assert_eq!(parse_complex("(1+2)*3").unwrap(), Complex64::new(9.0, 0.0));
        assert_eq!(parse_complex("8/2/2").unwrap(), Complex64::new(2.0, 0.0));
        assert_eq!(parse_complex("-2*-3").unwrap(), Complex64::new(6.0, 0.0));
    }

    #[test]
    fn errors() {
        assert!(Expr::parse("").is_err());
        assert!(Expr::parse("(1+2").is_err());
        assert!(Expr::parse("1 2").is_err());
        assert!(Expr::parse("conj 2").is_err());
        assert!(Expr::parse("1 $ 2").is_err());
        assert!(matches!(Expr::parse("s").unwrap().eval(&BTreeMap::new()), Err(Error::UnknownParameter(_))));
        assert!(parse_complex("1/(1-1)").is_err());
    }

    #[test]
    fn identifiers_starting_with_i() {
        let e = Expr::parse("im2 * 2").unwrap();
        assert_eq!(e.eval(&params(&[("im2", Complex64::new(1.5, 0.0))])).unwrap(), Complex64::new(3.0, 0.0));
    }
}
