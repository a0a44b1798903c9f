//! Jet coordinates, multi-indices, total derivatives and solved systems.

use std::collections::HashMap;
use std::fmt;

use crate::calculus::{diff, substitute};
use crate::error::{Error, Result};
use crate::expr::{sum, Expr, Symbol};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn zero(q: usize) -> Self {
        MultiIndex(vec![0; q])
    }

    pub fn new(counts: Vec<u32>) -> Self {
        MultiIndex(counts)
    }

    /// ODE sugar: the single count `k`.
    pub fn ode(k: u32) -> Self {
        MultiIndex(vec![k])
    }

    pub fn unit(q: usize, i: usize) -> Self {
        let mut v = vec![0; q];
        v[i] = 1;
        MultiIndex(v)
    }

    pub fn counts(&self) -> &[u32] {
        &self.0
    }

    pub fn q(&self) -> usize {
        self.0.len()
    }

    pub fn order(&self) -> usize {
        self.0.iter().map(|c| *c as usize).sum()
    }

    pub fn successor(&self, i: usize) -> Self {
        let mut v = self.0.clone();
        v[i] += 1;
        MultiIndex(v)
    }

    pub fn predecessor(&self, i: usize) -> Option<Self> {
        if self.0[i] == 0 {
            return None;
        }
        let mut v = self.0.clone();
        v[i] -= 1;
        Some(MultiIndex(v))
    }

    pub fn first_nonzero(&self) -> Option<usize> {
        self.0.iter().position(|c| *c > 0)
    }

    /// Componentwise `self >= other`.
    pub fn dominates(&self, other: &MultiIndex) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a >= b)
    }

    pub fn minus(&self, other: &MultiIndex) -> Option<MultiIndex> {
        if !self.dominates(other) {
            return None;
        }
        Some(MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect()))
    }

    /// All multi-indices of exactly order `k` in `q` variables, in
    /// lexicographically decreasing order of counts.
    pub fn all_of_order(q: usize, k: usize) -> Vec<MultiIndex> {
        fn rec(q: usize, k: usize, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
            if prefix.len() == q - 1 {
                prefix.push(k as u32);
                out.push(MultiIndex(prefix.clone()));
                prefix.pop();
                return;
            }
            for c in (0..=k).rev() {
                prefix.push(c as u32);
                rec(q, k - c, prefix, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        rec(q, k, &mut Vec::new(), &mut out);
        out
    }

    /// All multi-indices with order at most `k`, by increasing order.
    pub fn all_up_to(q: usize, k: usize) -> Vec<MultiIndex> {
        (0..=k).flat_map(|m| Self::all_of_order(q, m)).collect()
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|c| c.to_string()).collect();
        write!(f, "[{}]", parts.join(","))
    }
}

pub fn index_successor(j: &MultiIndex, i: usize) -> MultiIndex {
    j.successor(i)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Coord {
    Indep(usize),
    Dep(usize, MultiIndex),
    Param(usize),
}

/// Jet space declaration: `q` independent and `p` dependent variables,
/// truncation order `n`, plus named constant parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct JetContext {
    q: usize,
    p: usize,
    n: usize,
    params: Vec<Symbol>,
}

fn parse_index(s: &str) -> Option<usize> {
    if s.is_empty() || s.starts_with('0') || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

impl JetContext {
    pub fn new(q: usize, p: usize, n: usize) -> Result<Self> {
        if q < 1 || p < 1 || n < 1 {
            return Err(Error::InvalidInput("q, p and n must all be at least 1".into()));
        }
        Ok(JetContext { q, p, n, params: Vec::new() })
    }

    pub fn ode(p: usize, n: usize) -> Result<Self> {
        Self::new(1, p, n)
    }

    pub fn with_params(mut self, names: &[&str]) -> Result<Self> {
        for nm in names {
            let valid = nm.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
                && nm.chars().all(|c| c.is_ascii_alphanumeric());
            if !valid || self.canonical_name(nm).is_some() || ["exp", "log", "sin", "cos", "tan", "sqrt"].contains(nm) {
                return Err(Error::InvalidInput(format!("invalid parameter name `{}`", nm)));
            }
            self.params.push(Symbol::new(nm));
        }
        Ok(self)
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn params(&self) -> &[Symbol] {
        &self.params
    }

    /// Same coordinates, different truncation order.
    pub fn with_order(&self, n: usize) -> Self {
        JetContext { n: n.max(1), ..self.clone() }
    }

    /// A context deep enough for the scratch work of restriction and
    /// prolongation; truncation checks belong to the public entry points.
    pub(crate) fn unbounded(&self) -> Self {
        self.with_order(usize::MAX / 4)
    }

    pub fn x_name(&self, i: usize) -> String {
        if self.q == 1 {
            "x".into()
        } else {
            format!("x{}", i + 1)
        }
    }

    pub fn u_base(&self, a: usize) -> String {
        if self.p == 1 {
            "u".into()
        } else {
            format!("u{}", a + 1)
        }
    }

    pub fn coord_name(&self, a: usize, j: &MultiIndex) -> String {
        if j.order() == 0 {
            self.u_base(a)
        } else {
            format!("{}_{}", self.u_base(a), j)
        }
    }

    pub fn x_sym(&self, i: usize) -> Symbol {
        Symbol::new(&self.x_name(i))
    }

    pub fn x(&self, i: usize) -> Expr {
        Expr::sym(&self.x_name(i))
    }

    pub fn u_sym(&self, a: usize, j: &MultiIndex) -> Symbol {
        Symbol::new(&self.coord_name(a, j))
    }

    pub fn u(&self, a: usize) -> Expr {
        Expr::sym(&self.u_base(a))
    }

    pub fn u_j(&self, a: usize, j: &MultiIndex) -> Expr {
        Expr::sym(&self.coord_name(a, j))
    }

    /// ODE sugar for `u^a_(k)`.
    pub fn u_k(&self, a: usize, k: u32) -> Expr {
        self.u_j(a, &MultiIndex::ode(k))
    }

    fn parse_dep_base(&self, base: &str) -> Option<(usize, bool)> {
        let rest = base.strip_prefix('u')?;
        if rest.is_empty() {
            return (self.p == 1).then_some((0, true));
        }
        let k = parse_index(rest)?;
        if k >= 1 && k <= self.p {
            Some((k - 1, self.p > 1))
        } else {
            None
        }
    }

    /// Parse a name, accepting the aliases `x1` (q = 1), `u1` (p = 1) and an
    /// explicit zero index. The flag is true iff the spelling is canonical.
    fn parse_name(&self, name: &str) -> Option<(Coord, bool)> {
        if let Some(i) = self.params.iter().position(|s| s.name() == name) {
            return Some((Coord::Param(i), true));
        }
        if let Some(rest) = name.strip_prefix('x') {
            if rest.is_empty() {
                return (self.q == 1).then_some((Coord::Indep(0), true));
            }
            let k = parse_index(rest)?;
            return (k >= 1 && k <= self.q).then_some((Coord::Indep(k - 1), self.q > 1));
        }
        let (base, bracket) = match name.find("_[") {
            Some(pos) => (&name[..pos], Some(&name[pos + 2..])),
            None => (name, None),
        };
        let (a, base_canonical) = self.parse_dep_base(base)?;
        match bracket {
            None => Some((Coord::Dep(a, MultiIndex::zero(self.q)), base_canonical)),
            Some(b) => {
                let inner = b.strip_suffix(']')?;
                let counts = inner
                    .split(',')
                    .map(|c| {
                        let c = c.trim();
                        if c == "0" {
                            Some(0)
                        } else {
                            parse_index(c).map(|v| v as u32)
                        }
                    })
                    .collect::<Option<Vec<u32>>>()?;
                if counts.len() != self.q {
                    return None;
                }
                let j = MultiIndex(counts);
                let canonical = base_canonical && j.order() > 0 && !inner.contains(' ');
                Some((Coord::Dep(a, j), canonical))
            }
        }
    }

    /// Canonical spelling of a (possibly aliased) coordinate name.
    pub fn canonical_name(&self, name: &str) -> Option<String> {
        let (c, _) = self.parse_name(name)?;
        Some(match c {
            Coord::Indep(i) => self.x_name(i),
            Coord::Dep(a, j) => self.coord_name(a, &j),
            Coord::Param(i) => self.params[i].to_string(),
        })
    }

    /// Classify a canonical symbol irrespective of the truncation order.
    pub fn classify(&self, s: &Symbol) -> Option<Coord> {
        match self.parse_name(s.name()) {
            Some((c, true)) => Some(c),
            _ => None,
        }
    }

    pub fn is_declared(&self, s: &Symbol) -> bool {
        match self.classify(s) {
            Some(Coord::Dep(_, j)) => j.order() <= self.n,
            Some(_) => true,
            None => false,
        }
    }

    /// Highest derivative order among the free symbols of `e`.
    pub fn order_of(&self, e: &Expr) -> Result<usize> {
        let mut ord = 0;
        for s in e.symbols() {
            match self.classify(s) {
                Some(Coord::Dep(_, j)) => ord = ord.max(j.order()),
                Some(_) => {}
                None => return Err(Error::UndeclaredSymbol(s.to_string())),
            }
        }
        Ok(ord)
    }

    /// Derivative coordinates only; true iff `e` is a function on M.
    pub fn is_on_base(&self, e: &Expr) -> Result<bool> {
        Ok(self.order_of(e)? == 0)
    }

    pub fn depends_on_params(&self, e: &Expr) -> bool {
        self.params.iter().any(|p| e.contains(p))
    }

    /// Partial derivative with respect to a declared coordinate.
    pub fn diff(&self, e: &Expr, v: &Symbol) -> Result<Expr> {
        if !self.is_declared(v) {
            return Err(Error::UndeclaredSymbol(v.to_string()));
        }
        Ok(diff(e, v))
    }

    /// Total derivative `D_i`.
    pub fn total_derivative(&self, e: &Expr, i: usize) -> Result<Expr> {
        if i >= self.q {
            return Err(Error::InvalidInput(format!("direction {} out of range", i + 1)));
        }
        let ord = self.order_of(e)?;
        if ord >= self.n {
            return Err(Error::TruncationExceeded { order: ord, n: self.n });
        }
        let xi = self.x_sym(i);
        let mut terms = vec![diff(e, &xi)];
        for s in e.symbols() {
            if let Some(Coord::Dep(a, j)) = self.classify(s) {
                terms.push(self.u_j(a, &j.successor(i)) * diff(e, s));
            }
        }
        Ok(sum(terms))
    }

    /// `D_J e`, applied in order of the counts.
    pub fn total_derivative_multi(&self, e: &Expr, j: &MultiIndex) -> Result<Expr> {
        let mut out = e.clone();
        for (i, c) in j.counts().iter().enumerate() {
            for _ in 0..*c {
                out = self.total_derivative(&out, i)?;
            }
        }
        Ok(out)
    }

    /// All coordinates of order at most `k`: independent variables first,
    /// then `u^a_J` by increasing order.
    pub fn coordinates(&self, k: usize) -> Vec<Symbol> {
        let mut out: Vec<Symbol> = (0..self.q).map(|i| self.x_sym(i)).collect();
        for j in MultiIndex::all_up_to(self.q, k) {
            for a in 0..self.p {
                out.push(self.u_sym(a, &j));
            }
        }
        out
    }

    /// Bindings `u^a_J ↦ ∂^J f^a(x)` for the prolonged section `u = f(x)`.
    pub fn section_bindings(&self, f: &[Expr], k: usize) -> Result<HashMap<Symbol, Expr>> {
        if f.len() != self.p {
            return Err(Error::Dimension(format!("section has {} components, expected {}", f.len(), self.p)));
        }
        for fa in f {
            for s in fa.symbols() {
                if matches!(self.classify(s), Some(Coord::Dep(..)) | None) {
                    return Err(Error::InvalidInput(format!("section component depends on `{}`", s)));
                }
            }
        }
        let mut m = HashMap::new();
        for (a, fa) in f.iter().enumerate() {
            let mut table: HashMap<MultiIndex, Expr> = HashMap::new();
            table.insert(MultiIndex::zero(self.q), fa.clone());
            for j in MultiIndex::all_up_to(self.q, k) {
                if j.order() > 0 {
                    let i = j.first_nonzero().unwrap();
                    let prev = &table[&j.predecessor(i).unwrap()];
                    let d = diff(prev, &self.x_sym(i));
                    table.insert(j.clone(), d);
                }
                m.insert(self.u_sym(a, &j), table[&j].clone());
            }
        }
        Ok(m)
    }
}

/// One solved equation `u^dep_lead = rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Equation {
    pub dep: usize,
    pub lead: MultiIndex,
    pub rhs: Expr,
}

/// A system solved for one leading derivative per dependent variable.
#[derive(Debug, Clone, PartialEq)]
pub struct SolvedSystem {
    ctx: JetContext,
    equations: Vec<Equation>,
}

/// The ODE case of [`SolvedSystem`].
pub type OdeSystem = SolvedSystem;

impl SolvedSystem {
    pub fn new(ctx: JetContext, equations: Vec<Equation>) -> Result<Self> {
        let mut seen = vec![false; ctx.p()];
        for eq in &equations {
            if eq.dep >= ctx.p() || eq.lead.q() != ctx.q() || eq.lead.order() == 0 {
                return Err(Error::InvalidInput("malformed equation head".into()));
            }
            if std::mem::replace(&mut seen[eq.dep], true) {
                return Err(Error::InvalidInput(format!("two equations for {}", ctx.u_base(eq.dep))));
            }
        }
        let sys = SolvedSystem { ctx, equations };
        for eq in &sys.equations {
            sys.ctx.order_of(&eq.rhs)?;
            if let Some(s) = eq.rhs.symbols().iter().find(|s| sys.dominated(s).is_some()) {
                return Err(Error::InvalidInput(format!("not in solved form: right-hand side contains {}", s)));
            }
        }
        Ok(sys)
    }

    /// ODE system `u^a_(orders[a]) = rhs[a]`.
    pub fn ode(ctx: JetContext, orders: &[u32], rhs: Vec<Expr>) -> Result<Self> {
        if ctx.q() != 1 || orders.len() != rhs.len() {
            return Err(Error::InvalidInput("ODE system needs q = 1 and one order per equation".into()));
        }
        let eqs = rhs
            .into_iter()
            .enumerate()
            .map(|(a, r)| Equation { dep: a, lead: MultiIndex::ode(orders[a]), rhs: r })
            .collect();
        Self::new(ctx, eqs)
    }

    /// ODE system with every equation of the context order.
    pub fn ode_uniform(ctx: JetContext, rhs: Vec<Expr>) -> Result<Self> {
        let n = ctx.n() as u32;
        let orders = vec![n; rhs.len()];
        Self::ode(ctx, &orders, rhs)
    }

    pub fn ctx(&self) -> &JetContext {
        &self.ctx
    }

    pub fn equations(&self) -> &[Equation] {
        &self.equations
    }

    pub fn is_ode(&self) -> bool {
        self.ctx.q() == 1
    }

    /// `u^lead − rhs` for each equation.
    pub fn residual_forms(&self) -> Vec<Expr> {
        self.equations.iter().map(|eq| self.ctx.u_j(eq.dep, &eq.lead) - &eq.rhs).collect()
    }

    /// The equation whose leading derivative `s` is, or is a derivative of.
    fn dominated(&self, s: &Symbol) -> Option<(usize, MultiIndex)> {
        match self.ctx.classify(s) {
            Some(Coord::Dep(a, j)) => self
                .equations
                .iter()
                .position(|eq| eq.dep == a && j.dominates(&eq.lead))
                .map(|e| (e, j)),
            _ => None,
        }
    }

    /// Restrict `e` to the solution manifold, replacing leading
    /// derivatives and their differential consequences.
    pub fn restrict(&self, e: &Expr) -> Result<Expr> {
        Restrictor::new(self).restrict(e)
    }
}

pub(crate) struct Restrictor<'a> {
    sys: &'a SolvedSystem,
    work: JetContext,
    memo: HashMap<(usize, MultiIndex), Expr>,
}

const MAX_RESTRICT_DEPTH: usize = 256;

impl<'a> Restrictor<'a> {
    pub(crate) fn new(sys: &'a SolvedSystem) -> Self {
        Restrictor { sys, work: sys.ctx.unbounded(), memo: HashMap::new() }
    }

    pub(crate) fn restrict(&mut self, e: &Expr) -> Result<Expr> {
        self.restrict_depth(e, 0)
    }

    fn restrict_depth(&mut self, e: &Expr, depth: usize) -> Result<Expr> {
        let mut bindings = HashMap::new();
        for s in e.symbols() {
            if let Some((eq, j)) = self.sys.dominated(s) {
                let v = self.value(eq, &j, depth + 1)?;
                bindings.insert(s.clone(), v);
            }
        }
        if bindings.is_empty() {
            return Ok(e.clone());
        }
        Ok(substitute(e, &bindings))
    }

    fn value(&mut self, eq: usize, j: &MultiIndex, depth: usize) -> Result<Expr> {
        if depth > MAX_RESTRICT_DEPTH {
            return Err(Error::NotNormal);
        }
        if let Some(v) = self.memo.get(&(eq, j.clone())) {
            return Ok(v.clone());
        }
        let equation = &self.sys.equations[eq];
        let v = if *j == equation.lead {
            equation.rhs.clone()
        } else {
            let excess = j.minus(&equation.lead).ok_or(Error::NotNormal)?;
            let i = excess.first_nonzero().ok_or(Error::NotNormal)?;
            let prev = self.value(eq, &j.predecessor(i).unwrap(), depth + 1)?;
            let d = self.work.total_derivative(&prev, i)?;
            self.restrict_depth(&d, depth + 1)?
        };
        self.memo.insert((eq, j.clone()), v.clone());
        Ok(v)
    }
}
