//! Partial derivatives and simultaneous substitution.

use std::collections::HashMap;

use crate::expr::{add, func, mul, pow, Expr, Func, Kind, Symbol};

/// Partial derivative with respect to a symbol.
pub fn diff(e: &Expr, v: &Symbol) -> Expr {
    if !e.contains(v) {
        return Expr::zero();
    }
    match e.kind() {
        Kind::Num(_) => Expr::zero(),
        Kind::Sym(s) => {
            if s == v {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Kind::Add(ts) => add(&ts.iter().map(|t| diff(t, v)).collect::<Vec<_>>()),
        Kind::Mul(fs) => {
            let mut terms = Vec::new();
            for (i, f) in fs.iter().enumerate() {
                if !f.contains(v) {
                    continue;
                }
                let mut parts: Vec<Expr> = Vec::with_capacity(fs.len());
                parts.push(diff(f, v));
                for (j, g) in fs.iter().enumerate() {
                    if j != i {
                        parts.push(g.clone());
                    }
                }
                terms.push(mul(&parts));
            }
            add(&terms)
        }
        Kind::Pow(b, x) => {
            let db = b.contains(v);
            let dx = x.contains(v);
            if !dx {
                mul(&[x.clone(), pow(b, &add(&[x.clone(), Expr::int(-1)])), diff(b, v)])
            } else if !db {
                mul(&[e.clone(), func(Func::Log, b), diff(x, v)])
            } else {
                let t1 = mul(&[diff(x, v), func(Func::Log, b)]);
                let t2 = mul(&[x.clone(), diff(b, v), pow(b, &Expr::int(-1))]);
                mul(&[e.clone(), add(&[t1, t2])])
            }
        }
        Kind::Fun(f, a) => {
            let da = diff(a, v);
            let outer = match f {
                Func::Exp => e.clone(),
                Func::Log => pow(a, &Expr::int(-1)),
                Func::Sin => func(Func::Cos, a),
                Func::Cos => mul(&[Expr::int(-1), func(Func::Sin, a)]),
                Func::Tan => add(&[Expr::one(), pow(e, &Expr::int(2))]),
            };
            mul(&[outer, da])
        }
    }
}

/// Simultaneous substitution; unbound symbols pass through.
pub fn substitute(e: &Expr, bindings: &HashMap<Symbol, Expr>) -> Expr {
    if bindings.is_empty() || !e.symbols().iter().any(|s| bindings.contains_key(s)) {
        return e.clone();
    }
    match e.kind() {
        Kind::Num(_) => e.clone(),
        Kind::Sym(s) => bindings.get(s).cloned().unwrap_or_else(|| e.clone()),
        Kind::Add(ts) => add(&ts.iter().map(|t| substitute(t, bindings)).collect::<Vec<_>>()),
        Kind::Mul(fs) => mul(&fs.iter().map(|t| substitute(t, bindings)).collect::<Vec<_>>()),
        Kind::Pow(b, x) => pow(&substitute(b, bindings), &substitute(x, bindings)),
        Kind::Fun(f, a) => func(*f, &substitute(a, bindings)),
    }
}

/// Substitution of a single symbol.
pub fn substitute_one(e: &Expr, s: &Symbol, value: &Expr) -> Expr {
    let mut m = HashMap::new();
    m.insert(s.clone(), value.clone());
    substitute(e, &m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_linearity() {
        let u = Expr::sym("u");
        assert_eq!(diff(&u, &Symbol::new("u")), Expr::one());
        let e = Expr::sym("x") * Expr::sym("u_[1]");
        assert_eq!(diff(&e, &Symbol::new("u_[1]")), Expr::sym("x"));
    }

    #[test]
    fn chain_rule_exp() {
        let x = Expr::sym("x");
        let d = diff(&x.powi(2).exp(), &Symbol::new("x"));
        assert_eq!(d, Expr::int(2) * &x * x.powi(2).exp());
    }

    #[test]
    fn substitution_is_simultaneous() {
        let x = Expr::sym("x");
        let y = Expr::sym("y");
        let mut m = HashMap::new();
        m.insert(Symbol::new("x"), y.clone());
        m.insert(Symbol::new("y"), x.clone());
        assert_eq!(substitute(&(&x - &y * 2), &m), &y - &x * 2);
    }

    #[test]
    fn restriction_to_own_solution() {
        let f = Expr::sym("u") * Expr::sym("x");
        let uxx = Expr::sym("u_[2]");
        let e = &uxx - &f;
        assert!(substitute_one(&e, &Symbol::new("u_[2]"), &f).is_zero());
        let ux2 = Expr::sym("u_[1]").powi(2);
        assert_eq!(substitute_one(&ux2, &Symbol::new("u_[1]"), &Expr::sym("u_[1]")), ux2);
    }
}
