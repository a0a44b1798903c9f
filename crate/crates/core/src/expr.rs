//! Immutable expression trees with exact rational constants.
//!
//! Every constructor returns a canonical node: sums and products are
//! flattened and sorted, constants are folded, like terms and like factors
//! are collected. The rewrite set is intentionally small; equality of
//! non-identical trees is decided by [`crate::oracle`].

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Integer exponents above this magnitude are not folded into constants.
const MAX_FOLD_EXPONENT: i64 = 512;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(Arc<str>);

impl Symbol {
    pub fn new(name: &str) -> Self {
        Symbol(Arc::from(name))
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Symbol {
    fn from(s: &str) -> Self {
        Symbol::new(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Tan,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
        }
    }
}

#[derive(Debug, Clone)]
pub enum Kind {
    Num(BigRational),
    Sym(Symbol),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Pow(Expr, Expr),
    Fun(Func, Expr),
}

struct Node {
    kind: Kind,
    hash: u64,
    symbols: Arc<[Symbol]>,
}

/// Shared handle to an immutable, canonical expression node.
#[derive(Clone)]
pub struct Expr(Arc<Node>);

fn mix(h: u64, v: u64) -> u64 {
    (h ^ v).wrapping_mul(0x100000001b3).rotate_left(17)
}

fn str_hash(s: &str) -> u64 {
    s.bytes().fold(0xcbf29ce484222325, |h, b| mix(h, b as u64))
}

fn merge_symbols(children: &[&Expr]) -> Arc<[Symbol]> {
    match children.len() {
        0 => Arc::from(Vec::new()),
        1 => children[0].0.symbols.clone(),
        _ => {
            let mut all: Vec<Symbol> = Vec::new();
            for c in children {
                all.extend(c.0.symbols.iter().cloned());
            }
            all.sort();
            all.dedup();
            Arc::from(all)
        }
    }
}

impl Expr {
    fn make(kind: Kind) -> Expr {
        let (hash, symbols) = match &kind {
            Kind::Num(r) => (
                mix(mix(1, str_hash(&r.numer().to_string())), str_hash(&r.denom().to_string())),
                Arc::from(Vec::new()),
            ),
            Kind::Sym(s) => (mix(2, str_hash(s.name())), Arc::from(vec![s.clone()])),
            Kind::Add(c) | Kind::Mul(c) => {
                let tag = if matches!(kind, Kind::Add(_)) { 5 } else { 4 };
                let h = c.iter().fold(tag, |h, e| mix(h, e.0.hash));
                let refs: Vec<&Expr> = c.iter().collect();
                (h, merge_symbols(&refs))
            }
            Kind::Pow(b, e) => (mix(mix(3, b.0.hash), e.0.hash), merge_symbols(&[b, e])),
            Kind::Fun(f, a) => (mix(mix(6, *f as u64), a.0.hash), a.0.symbols.clone()),
        };
        Expr(Arc::new(Node { kind, hash, symbols }))
    }

    pub fn kind(&self) -> &Kind {
        &self.0.kind
    }

    /// Sorted free symbols.
    pub fn symbols(&self) -> &[Symbol] {
        &self.0.symbols
    }

    pub fn contains(&self, s: &Symbol) -> bool {
        self.0.symbols.binary_search(s).is_ok()
    }

    pub fn num(r: BigRational) -> Expr {
        Expr::make(Kind::Num(r))
    }

    pub fn int(i: i64) -> Expr {
        Expr::num(BigRational::from_integer(BigInt::from(i)))
    }

    pub fn rat(n: i64, d: i64) -> Expr {
        Expr::num(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn sym(name: &str) -> Expr {
        Expr::make(Kind::Sym(Symbol::new(name)))
    }

    pub fn symbol(s: &Symbol) -> Expr {
        Expr::make(Kind::Sym(s.clone()))
    }

    pub fn as_num(&self) -> Option<&BigRational> {
        match self.kind() {
            Kind::Num(r) => Some(r),
            _ => None,
        }
    }

    pub fn as_sym(&self) -> Option<&Symbol> {
        match self.kind() {
            Kind::Sym(s) => Some(s),
            _ => None,
        }
    }

    /// Structural zero test.
    pub fn is_zero(&self) -> bool {
        self.as_num().is_some_and(|r| r.is_zero())
    }

    pub fn is_one(&self) -> bool {
        self.as_num().is_some_and(|r| r.is_one())
    }

    pub fn is_constant(&self) -> bool {
        self.0.symbols.is_empty()
    }

    fn rank(&self) -> u8 {
        match self.kind() {
            Kind::Num(_) => 0,
            Kind::Sym(_) => 1,
            Kind::Fun(..) => 2,
            Kind::Pow(..) => 3,
            Kind::Mul(_) => 4,
            Kind::Add(_) => 5,
        }
    }

    pub fn node_count(&self) -> usize {
        match self.kind() {
            Kind::Num(_) | Kind::Sym(_) => 1,
            Kind::Add(c) | Kind::Mul(c) => 1 + c.iter().map(Expr::node_count).sum::<usize>(),
            Kind::Pow(b, e) => 1 + b.node_count() + e.node_count(),
            Kind::Fun(_, a) => 1 + a.node_count(),
        }
    }

    pub fn pow(&self, e: &Expr) -> Expr {
        pow(self, e)
    }

    pub fn powi(&self, e: i64) -> Expr {
        pow(self, &Expr::int(e))
    }

    pub fn recip(&self) -> Expr {
        self.powi(-1)
    }

    pub fn exp(&self) -> Expr {
        func(Func::Exp, self)
    }

    pub fn log(&self) -> Expr {
        func(Func::Log, self)
    }

    pub fn sin(&self) -> Expr {
        func(Func::Sin, self)
    }

    pub fn cos(&self) -> Expr {
        func(Func::Cos, self)
    }

    pub fn tan(&self) -> Expr {
        func(Func::Tan, self)
    }

    /// Square root, represented as the power `1/2`.
    pub fn sqrt(&self) -> Expr {
        pow(self, &Expr::rat(1, 2))
    }
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || (self.0.hash == other.0.hash && self.cmp(other) == Ordering::Equal)
    }
}

impl Eq for Expr {}

impl Hash for Expr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl PartialOrd for Expr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn cmp_lists(a: &[Expr], b: &[Expr]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = x.cmp(y);
        if o != Ordering::Equal {
            return o;
        }
    }
    a.len().cmp(&b.len())
}

impl Ord for Expr {
    fn cmp(&self, other: &Self) -> Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            return Ordering::Equal;
        }
        let r = self.rank().cmp(&other.rank());
        if r != Ordering::Equal {
            return r;
        }
        match (self.kind(), other.kind()) {
            (Kind::Num(a), Kind::Num(b)) => a.cmp(b),
            (Kind::Sym(a), Kind::Sym(b)) => a.cmp(b),
            (Kind::Add(a), Kind::Add(b)) | (Kind::Mul(a), Kind::Mul(b)) => cmp_lists(a, b),
            (Kind::Pow(b1, e1), Kind::Pow(b2, e2)) => b1.cmp(b2).then_with(|| e1.cmp(e2)),
            (Kind::Fun(f1, a1), Kind::Fun(f2, a2)) => f1.cmp(f2).then_with(|| a1.cmp(a2)),
            _ => unreachable!("rank mismatch"),
        }
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

fn split_coeff(t: &Expr) -> (BigRational, Expr) {
    match t.kind() {
        Kind::Num(r) => (r.clone(), Expr::one()),
        Kind::Mul(fs) => match fs[0].kind() {
            Kind::Num(r) => {
                let rest = if fs.len() == 2 { fs[1].clone() } else { Expr::make(Kind::Mul(fs[1..].to_vec())) };
                (r.clone(), rest)
            }
            _ => (BigRational::one(), t.clone()),
        },
        _ => (BigRational::one(), t.clone()),
    }
}

fn with_coeff(c: BigRational, rest: Expr) -> Expr {
    if c.is_one() {
        return rest;
    }
    if rest.is_one() {
        return Expr::num(c);
    }
    match rest.kind() {
        Kind::Mul(fs) => {
            let mut v = Vec::with_capacity(fs.len() + 1);
            v.push(Expr::num(c));
            v.extend(fs.iter().cloned());
            Expr::make(Kind::Mul(v))
        }
        _ => Expr::make(Kind::Mul(vec![Expr::num(c), rest])),
    }
}

/// Canonical sum.
pub fn add(terms: &[Expr]) -> Expr {
    let mut constant = BigRational::zero();
    let mut collected: BTreeMap<Expr, BigRational> = BTreeMap::new();
    let mut stack: Vec<(BigRational, Expr)> = terms.iter().rev().map(|t| (BigRational::one(), t.clone())).collect();
    while let Some((scale, t)) = stack.pop() {
        match t.kind() {
            Kind::Num(r) => constant += scale * r,
            Kind::Add(inner) => {
                for s in inner.iter().rev() {
                    stack.push((scale.clone(), s.clone()));
                }
            }
            _ => {
                let (c, rest) = split_coeff(&t);
                let c = c * &scale;
                if let Kind::Add(inner) = rest.kind() {
                    for s in inner.iter().rev() {
                        stack.push((c.clone(), s.clone()));
                    }
                    continue;
                }
                let entry = collected.entry(rest).or_insert_with(BigRational::zero);
                *entry += c;
            }
        }
    }
    let mut out: Vec<Expr> = Vec::with_capacity(collected.len() + 1);
    if !constant.is_zero() {
        out.push(Expr::num(constant));
    }
    for (rest, c) in collected {
        if !c.is_zero() {
            out.push(with_coeff(c, rest));
        }
    }
    match out.len() {
        0 => Expr::zero(),
        1 => out.pop().unwrap(),
        _ => {
            out.sort();
            Expr::make(Kind::Add(out))
        }
    }
}

fn split_power(f: &Expr) -> (Expr, Expr) {
    match f.kind() {
        Kind::Pow(b, e) => (b.clone(), e.clone()),
        _ => (f.clone(), Expr::one()),
    }
}

/// Canonical product.
pub fn mul(factors: &[Expr]) -> Expr {
    mul_depth(factors, 0)
}

fn mul_depth(factors: &[Expr], depth: usize) -> Expr {
    let mut coeff = BigRational::one();
    let mut bases: BTreeMap<Expr, Vec<Expr>> = BTreeMap::new();
    let mut exp_args: Vec<Expr> = Vec::new();
    let mut stack: Vec<Expr> = factors.iter().rev().cloned().collect();
    while let Some(f) = stack.pop() {
        match f.kind() {
            Kind::Num(r) => {
                if r.is_zero() {
                    return Expr::zero();
                }
                coeff *= r;
            }
            Kind::Mul(inner) => stack.extend(inner.iter().rev().cloned()),
            Kind::Fun(Func::Exp, a) => exp_args.push(a.clone()),
            _ => {
                let (b, e) = split_power(&f);
                bases.entry(b).or_default().push(e);
            }
        }
    }
    let mut out: Vec<Expr> = Vec::with_capacity(bases.len() + 1);
    let mut restart = false;
    for (b, es) in bases {
        let e = if es.len() == 1 { es.into_iter().next().unwrap() } else { add(&es) };
        let p = pow(&b, &e);
        if is_singular(&p) {
            return p;
        }
        match p.kind() {
            Kind::Num(r) => {
                if r.is_zero() {
                    return Expr::zero();
                }
                coeff *= r;
            }
            Kind::Mul(_) | Kind::Fun(Func::Exp, _) => {
                restart = true;
                out.push(p);
            }
            _ => out.push(p),
        }
    }
    if !exp_args.is_empty() {
        let e = func(Func::Exp, &add(&exp_args));
        if !e.is_one() {
            out.push(e);
        }
    }
    if restart && depth < 4 {
        out.push(Expr::num(coeff));
        return mul_depth(&out, depth + 1);
    }
    out.sort();
    if out.is_empty() {
        return Expr::num(coeff);
    }
    if out.len() == 1 && coeff.is_one() {
        return out.pop().unwrap();
    }
    if !coeff.is_one() {
        out.insert(0, Expr::num(coeff));
    }
    Expr::make(Kind::Mul(out))
}

fn rational_root(r: &BigRational, q: u32) -> Option<BigRational> {
    if r.is_negative() {
        return None;
    }
    let n = r.numer().nth_root(q);
    let d = r.denom().nth_root(q);
    if num_traits::pow(n.clone(), q as usize) == *r.numer() && num_traits::pow(d.clone(), q as usize) == *r.denom() {
        Some(BigRational::new(n, d))
    } else {
        None
    }
}

fn rational_powi(r: &BigRational, k: i64) -> Option<BigRational> {
    if k.abs() > MAX_FOLD_EXPONENT {
        return None;
    }
    if r.is_zero() {
        return if k > 0 { Some(BigRational::zero()) } else { None };
    }
    let base = if k < 0 { r.recip() } else { r.clone() };
    Some(num_traits::pow(base, k.unsigned_abs() as usize))
}

fn integer_value(e: &Expr) -> Option<i64> {
    e.as_num().filter(|r| r.is_integer()).and_then(|r| r.numer().to_i64())
}

/// `0^-1`, the single representative of every negative power of zero.
/// It absorbs the other factors of a product.
fn is_singular(e: &Expr) -> bool {
    matches!(e.kind(), Kind::Pow(b, x) if b.is_zero() && x.as_num().is_some_and(|r| r.is_negative()))
}

/// Canonical power.
pub fn pow(b: &Expr, e: &Expr) -> Expr {
    if e.is_zero() {
        return Expr::one();
    }
    if e.is_one() {
        return b.clone();
    }
    if b.is_one() {
        return Expr::one();
    }
    let k = integer_value(e);
    match b.kind() {
        Kind::Num(r) => {
            // every negative power of zero is the same singular value
            if r.is_zero() && e.as_num().is_some_and(|x| x.is_negative()) {
                return Expr::make(Kind::Pow(Expr::zero(), Expr::int(-1)));
            }
            if let Some(k) = k {
                if let Some(v) = rational_powi(r, k) {
                    return Expr::num(v);
                }
            } else if let Some(er) = e.as_num() {
                if let (Some(p), Some(q)) = (er.numer().to_i64(), er.denom().to_u32()) {
                    if let Some(root) = rational_root(r, q) {
                        if let Some(v) = rational_powi(&root, p) {
                            return Expr::num(v);
                        }
                    }
                }
            }
            Expr::make(Kind::Pow(b.clone(), e.clone()))
        }
        Kind::Pow(b2, e2) if k.is_some() => pow(b2, &mul(&[e2.clone(), e.clone()])),
        Kind::Mul(fs) if k.is_some() => {
            let parts: Vec<Expr> = fs.iter().map(|f| pow(f, e)).collect();
            mul(&parts)
        }
        Kind::Fun(Func::Exp, a) => func(Func::Exp, &mul(&[a.clone(), e.clone()])),
        _ => Expr::make(Kind::Pow(b.clone(), e.clone())),
    }
}

/// Canonical function application.
pub fn func(f: Func, a: &Expr) -> Expr {
    match (f, a.kind()) {
        (Func::Exp, Kind::Num(r)) if r.is_zero() => Expr::one(),
        (Func::Exp, Kind::Fun(Func::Log, inner)) => inner.clone(),
        (Func::Log, Kind::Num(r)) if r.is_one() => Expr::zero(),
        (Func::Log, Kind::Fun(Func::Exp, inner)) => inner.clone(),
        (Func::Sin, Kind::Num(r)) | (Func::Tan, Kind::Num(r)) if r.is_zero() => Expr::zero(),
        (Func::Cos, Kind::Num(r)) if r.is_zero() => Expr::one(),
        _ => Expr::make(Kind::Fun(f, a.clone())),
    }
}

pub fn neg(a: &Expr) -> Expr {
    mul(&[Expr::int(-1), a.clone()])
}

pub fn sub(a: &Expr, b: &Expr) -> Expr {
    add(&[a.clone(), neg(b)])
}

pub fn div(a: &Expr, b: &Expr) -> Expr {
    mul(&[a.clone(), pow(b, &Expr::int(-1))])
}

/// Bottom-up rebuild through the canonical constructors.
pub fn simplify(e: &Expr) -> Expr {
    match e.kind() {
        Kind::Num(_) | Kind::Sym(_) => e.clone(),
        Kind::Add(c) => add(&c.iter().map(simplify).collect::<Vec<_>>()),
        Kind::Mul(c) => mul(&c.iter().map(simplify).collect::<Vec<_>>()),
        Kind::Pow(b, x) => pow(&simplify(b), &simplify(x)),
        Kind::Fun(f, a) => func(*f, &simplify(a)),
    }
}

/// Fully expand products of sums and positive integer powers of sums.
pub fn expand(e: &Expr) -> Expr {
    match e.kind() {
        Kind::Num(_) | Kind::Sym(_) => e.clone(),
        Kind::Add(c) => add(&c.iter().map(expand).collect::<Vec<_>>()),
        Kind::Mul(c) => {
            let mut acc = vec![Expr::one()];
            for f in c.iter().map(expand) {
                let terms: Vec<Expr> = match f.kind() {
                    Kind::Add(t) => t.clone(),
                    _ => vec![f.clone()],
                };
                let mut next = Vec::with_capacity(acc.len() * terms.len());
                for a in &acc {
                    for t in &terms {
                        next.push(mul(&[a.clone(), t.clone()]));
                    }
                }
                acc = next;
            }
            add(&acc)
        }
        Kind::Pow(b, x) => {
            let b = expand(b);
            match (integer_value(x), b.kind()) {
                (Some(k), Kind::Add(_)) if (2..=8).contains(&k) => {
                    let factors = vec![b.clone(); k as usize];
                    expand(&mul_raw(factors))
                }
                _ => pow(&b, &expand(x)),
            }
        }
        Kind::Fun(f, a) => func(*f, &expand(a)),
    }
}

fn mul_raw(factors: Vec<Expr>) -> Expr {
    Expr::make(Kind::Mul(factors))
}

pub fn sum<I: IntoIterator<Item = Expr>>(it: I) -> Expr {
    add(&it.into_iter().collect::<Vec<_>>())
}

pub fn product<I: IntoIterator<Item = Expr>>(it: I) -> Expr {
    mul(&it.into_iter().collect::<Vec<_>>())
}

macro_rules! binop {
    ($tr:ident, $m:ident, $f:expr) => {
        impl std::ops::$tr<Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                $f(&self, &rhs)
            }
        }
        impl std::ops::$tr<&Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                $f(&self, rhs)
            }
        }
        impl std::ops::$tr<Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                $f(self, &rhs)
            }
        }
        impl std::ops::$tr<&Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                $f(self, rhs)
            }
        }
        impl std::ops::$tr<i64> for Expr {
            type Output = Expr;
            fn $m(self, rhs: i64) -> Expr {
                $f(&self, &Expr::int(rhs))
            }
        }
        impl std::ops::$tr<i64> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: i64) -> Expr {
                $f(self, &Expr::int(rhs))
            }
        }
    };
}

binop!(Add, add, |a: &Expr, b: &Expr| add(&[a.clone(), b.clone()]));
binop!(Sub, sub, sub);
binop!(Mul, mul, |a: &Expr, b: &Expr| mul(&[a.clone(), b.clone()]));
binop!(Div, div, div);

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        neg(&self)
    }
}

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        neg(self)
    }
}

impl From<i64> for Expr {
    fn from(i: i64) -> Self {
        Expr::int(i)
    }
}
