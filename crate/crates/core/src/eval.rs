//! Floating point evaluation.

use std::collections::HashMap;

use num_traits::ToPrimitive;

use crate::expr::{Expr, Func, Kind, Symbol};

pub type Point = HashMap<Symbol, f64>;

const EPS: f64 = f64::EPSILON;

#[derive(Debug, Clone, PartialEq)]
pub enum EvalError {
    /// Domain violation at this point; the oracle resamples.
    Singular,
    Unbound(Symbol),
}

impl std::fmt::Display for EvalError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EvalError::Singular => f.write_str("singular sample point"),
            EvalError::Unbound(s) => write!(f, "unbound symbol `{}`", s),
        }
    }
}

impl std::error::Error for EvalError {}

/// IEEE double evaluation. Division by zero, logarithms of non-positive
/// numbers and fractional powers of negative numbers are singular.
pub fn eval_numeric(e: &Expr, point: &Point) -> Result<f64, EvalError> {
    eval_tracked(e, point, 0.0).map(|(v, _)| v)
}

/// Evaluation with a first-order bound on accumulated rounding error.
/// `guard` widens the singular set: denominators with `|b| < guard`
/// and logarithms of arguments below `guard` are rejected.
pub fn eval_tracked(e: &Expr, point: &Point, guard: f64) -> Result<(f64, f64), EvalError> {
    let (v, err) = match e.kind() {
        Kind::Num(r) => {
            let v = r.to_f64().unwrap_or(f64::NAN);
            (v, v.abs() * EPS)
        }
        Kind::Sym(s) => match point.get(s) {
            Some(v) => (*v, 0.0),
            None => return Err(EvalError::Unbound(s.clone())),
        },
        Kind::Add(ts) => {
            let mut v = 0.0;
            let mut err = 0.0;
            let mut mag = 0.0;
            for t in ts {
                let (tv, te) = eval_tracked(t, point, guard)?;
                v += tv;
                err += te;
                mag += tv.abs();
            }
            (v, err + mag * EPS * ts.len() as f64)
        }
        Kind::Mul(fs) => {
            let vals = fs
                .iter()
                .map(|f| eval_tracked(f, point, guard))
                .collect::<Result<Vec<_>, _>>()?;
            let v: f64 = vals.iter().map(|p| p.0).product();
            let mut err = 0.0;
            for i in 0..vals.len() {
                let others: f64 = vals
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, p)| p.0.abs())
                    .product();
                err += vals[i].1 * others;
            }
            (v, err + v.abs() * EPS * fs.len() as f64)
        }
        Kind::Pow(b, x) => {
            let (bv, be) = eval_tracked(b, point, guard)?;
            let (xv, xe) = eval_tracked(x, point, guard)?;
            let integral = xv.fract() == 0.0 && x.is_constant();
            if xv < 0.0 && (bv == 0.0 || bv.abs() < guard) {
                return Err(EvalError::Singular);
            }
            if bv < 0.0 && !integral {
                return Err(EvalError::Singular);
            }
            let v = if integral && xv.abs() < 1024.0 { bv.powi(xv as i32) } else { bv.powf(xv) };
            let mut err = (xv * bv.powf(xv - 1.0)).abs() * be;
            if xe > 0.0 && bv > 0.0 {
                err += (v * bv.ln()).abs() * xe;
            }
            if !err.is_finite() {
                err = v.abs();
            }
            (v, err + v.abs() * EPS * 2.0)
        }
        Kind::Fun(f, a) => {
            let (av, ae) = eval_tracked(a, point, guard)?;
            match f {
                Func::Exp => {
                    let v = av.exp();
                    (v, v * ae + v * EPS)
                }
                Func::Log => {
                    if av <= 0.0 || av < guard {
                        return Err(EvalError::Singular);
                    }
                    let v = av.ln();
                    (v, ae / av + v.abs() * EPS)
                }
                Func::Sin => (av.sin(), av.cos().abs() * ae + EPS),
                Func::Cos => (av.cos(), av.sin().abs() * ae + EPS),
                Func::Tan => {
                    if av.cos().abs() < guard.max(f64::MIN_POSITIVE) {
                        return Err(EvalError::Singular);
                    }
                    let v = av.tan();
                    (v, (1.0 + v * v) * ae + v.abs() * EPS)
                }
            }
        }
    };
    if !v.is_finite() {
        return Err(EvalError::Singular);
    }
    Ok((v, err))
}
