//! Rendering in the input grammar, so that printed output parses back
//! to the same canonical tree.

use std::fmt::{self, Write};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};

use crate::expr::{pow, Expr, Kind};

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_expr(&mut s, self);
        f.write_str(&s)
    }
}

fn write_rational(out: &mut String, r: &BigRational) {
    if r.is_integer() {
        let _ = write!(out, "{}", r.numer());
    } else {
        let _ = write!(out, "{}/{}", r.numer(), r.denom());
    }
}

fn write_expr(out: &mut String, e: &Expr) {
    match e.kind() {
        Kind::Add(ts) => {
            // constant term last reads better and parses identically
            let mut ordered: Vec<&Expr> = ts.iter().filter(|t| !t.is_constant()).collect();
            ordered.extend(ts.iter().filter(|t| t.is_constant()));
            for (i, t) in ordered.iter().enumerate() {
                let (negative, body) = signed_body(t);
                match (i, negative) {
                    (0, true) => out.push('-'),
                    (0, false) => {}
                    (_, true) => out.push_str(" - "),
                    (_, false) => out.push_str(" + "),
                }
                out.push_str(&body);
            }
        }
        _ => {
            let (negative, body) = signed_body(e);
            if negative {
                out.push('-');
            }
            out.push_str(&body);
        }
    }
}

/// Split a term into its sign and the rendering of its magnitude.
fn signed_body(t: &Expr) -> (bool, String) {
    match t.kind() {
        Kind::Num(r) => {
            let mut s = String::new();
            write_rational(&mut s, &r.abs());
            (r.is_negative(), s)
        }
        Kind::Mul(fs) => {
            let (coeff, rest) = match fs[0].kind() {
                Kind::Num(r) => (r.clone(), &fs[1..]),
                _ => (BigRational::one(), &fs[..]),
            };
            (coeff.is_negative(), product_body(&coeff.abs(), rest))
        }
        Kind::Pow(_, x) if x.as_num().is_some_and(|r| r.is_negative()) => {
            (false, product_body(&BigRational::one(), std::slice::from_ref(t)))
        }
        _ => (false, atom_or_power(t)),
    }
}

fn product_body(coeff: &BigRational, factors: &[Expr]) -> String {
    let mut num: Vec<String> = Vec::new();
    let mut den: Vec<String> = Vec::new();
    if coeff.numer() != &BigInt::one() {
        num.push(coeff.numer().to_string());
    }
    if coeff.denom() != &BigInt::one() {
        den.push(coeff.denom().to_string());
    }
    for f in factors {
        match f.kind() {
            Kind::Pow(b, x) if x.as_num().is_some_and(|r| r.is_negative()) => {
                let flipped = pow(b, &(-x));
                den.push(factor(&flipped));
            }
            _ => num.push(factor(f)),
        }
    }
    let mut s = if num.is_empty() { "1".to_string() } else { num.join("*") };
    if !den.is_empty() {
        s.push('/');
        if den.len() == 1 {
            s.push_str(&den[0]);
        } else {
            s.push('(');
            s.push_str(&den.join("*"));
            s.push(')');
        }
    }
    s
}

fn factor(f: &Expr) -> String {
    match f.kind() {
        Kind::Add(_) | Kind::Mul(_) => format!("({})", f),
        Kind::Num(r) if r.is_negative() || !r.is_integer() => format!("({})", f),
        _ => atom_or_power(f),
    }
}

fn atom_or_power(e: &Expr) -> String {
    match e.kind() {
        Kind::Num(_) | Kind::Add(_) | Kind::Mul(_) => {
            let mut s = String::new();
            write_expr(&mut s, e);
            s
        }
        Kind::Sym(s) => s.to_string(),
        Kind::Fun(f, a) => format!("{}({})", f.name(), a),
        Kind::Pow(b, x) => {
            let base = match b.kind() {
                Kind::Sym(_) | Kind::Fun(..) => atom_or_power(b),
                Kind::Num(r) if r.is_integer() && !r.is_negative() => atom_or_power(b),
                _ => format!("({})", b),
            };
            let exponent = match x.kind() {
                Kind::Sym(_) | Kind::Fun(..) => atom_or_power(x),
                Kind::Num(r) if r.is_integer() && !r.is_negative() => atom_or_power(x),
                _ => format!("({})", x),
            };
            format!("{}^{}", base, exponent)
        }
    }
}

/// Serialize expressions as their printed form.
pub fn serialize_exprs<S: serde::Serializer>(v: &[Expr], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|e| e.to_string()))
}

pub fn serialize_expr<S: serde::Serializer>(e: &Expr, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders() {
        let x = Expr::sym("x");
        let u = Expr::sym("u");
        assert_eq!((&x * 3 / 4).to_string(), "3*x/4");
        assert_eq!((-(&x) * 3 / 4).to_string(), "-3*x/4");
        assert_eq!((x.recip()).to_string(), "1/x");
        assert_eq!((&u - &x.powi(-2)).to_string(), "u - 1/x^2");
        assert_eq!(x.sqrt().to_string(), "x^(1/2)");
        assert_eq!(x.pow(&(-&u)).to_string(), "x^(-u)");
        assert_eq!((&x + 1).powi(2).to_string(), "(x + 1)^2");
        assert_eq!((Expr::sym("u_[1]") - Expr::rat(3, 2) * &u).to_string(), "u_[1] - 3*u/2");
        assert_eq!(x.exp().powi(2).to_string(), "exp(2*x)");
    }
}
