//! Differential invariants: the first ones by ansatz search, higher ones by
//! differentiation.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::eval::{eval_tracked, Point};
use crate::expr::{sum, Expr};
use crate::field::monomials;
use crate::jet::JetContext;
use crate::linalg::{kernel, rank, rationalize, rref, RANK_TOL};
use crate::oracle::{is_zero, union_symbols, EqualityConfig, Sampler, GUARD};
use crate::prolong::{extend_set, scalar_part, ProlongedField, TwistSpec};

/// `η` and, per starting invariant, `ζ_(0), ζ_(1), …`, all annihilated by a
/// fixed family of prolonged fields.
#[derive(Debug, Clone)]
pub struct InvariantChain {
    fields: Vec<ProlongedField>,
    eta: Expr,
    zeta: Vec<Vec<Expr>>,
}

impl InvariantChain {
    /// Start a chain; every member is checked for invariance.
    pub fn new(fields: &[ProlongedField], eta: Expr, zeta: Vec<Expr>, cfg: &EqualityConfig) -> Result<Self> {
        if fields.is_empty() {
            return Err(Error::InvalidInput("no fields".into()));
        }
        check_eligible(fields, cfg)?;
        let ctx = fields[0].ctx();
        let mut top = ctx.order_of(&eta)?;
        for z in &zeta {
            top = top.max(ctx.order_of(z)?);
        }
        let ext = extend_set(fields, top.max(1), cfg)?;
        for (k, e) in std::iter::once(&eta).chain(&zeta).enumerate() {
            if !annihilated(&ext, e, &cfg.reseeded(k as u64))? {
                return Err(Error::InputsNotInvariant);
            }
        }
        Ok(InvariantChain { fields: ext, eta, zeta: zeta.into_iter().map(|z| vec![z]).collect() })
    }

    pub fn fields(&self) -> &[ProlongedField] {
        &self.fields
    }

    pub fn eta(&self) -> &Expr {
        &self.eta
    }

    /// Number of starting invariants.
    pub fn width(&self) -> usize {
        self.zeta.len()
    }

    /// Number of levels currently present.
    pub fn levels(&self) -> usize {
        self.zeta.first().map_or(0, |z| z.len())
    }

    pub fn zeta(&self, a: usize, k: usize) -> &Expr {
        &self.zeta[a][k]
    }

    pub fn zetas(&self, a: usize) -> &[Expr] {
        &self.zeta[a]
    }

    /// Append `ζ_(k+1) = D_x ζ_(k) / D_x η` to every chain.
    pub fn extend(&mut self, cfg: &EqualityConfig) -> Result<()> {
        let ctx = self.fields[0].ctx().clone();
        let mut top = 1;
        for a in 0..self.zeta.len() {
            let last = self.zeta[a].last().unwrap().clone();
            let next = ibdp_next(&self.fields, &self.eta, &last, &cfg.reseeded(a as u64))?;
            let ord = ctx.unbounded().order_of(&next)?;
            if ord <= ctx.unbounded().order_of(&last)? {
                return Err(Error::DegenerateInvariantPair);
            }
            top = top.max(ord);
            self.zeta[a].push(next);
        }
        self.fields = extend_set(&self.fields, top, cfg)?;
        Ok(())
    }

    pub fn extend_to(&mut self, levels: usize, cfg: &EqualityConfig) -> Result<()> {
        while self.levels() < levels {
            self.extend(cfg)?;
        }
        Ok(())
    }
}

fn check_eligible(ys: &[ProlongedField], cfg: &EqualityConfig) -> Result<()> {
    for y in ys {
        let scalar = match y.twist() {
            TwistSpec::Mu(ls) => {
                let mut ok = true;
                for l in ls {
                    ok &= scalar_part(l, cfg)?.is_some();
                }
                ok
            }
            TwistSpec::Chi(l, _) => scalar_part(l, cfg)?.is_some(),
            _ => true,
        };
        if !scalar {
            return Err(Error::NotIbdpEligible);
        }
    }
    Ok(())
}

fn annihilated(ys: &[ProlongedField], e: &Expr, cfg: &EqualityConfig) -> Result<bool> {
    for (k, y) in ys.iter().enumerate() {
        if !is_zero(&y.apply(e)?, &cfg.reseeded(k as u64))?.equal {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `D_x ζ / D_x η` for a pair of common invariants.
pub fn ibdp_next(ys: &[ProlongedField], eta: &Expr, zeta: &Expr, cfg: &EqualityConfig) -> Result<Expr> {
    ibdp_next_in(ys, eta, zeta, 0, cfg)
}

/// `D_i ζ / D_i η` along direction `i`.
pub fn ibdp_next_in(ys: &[ProlongedField], eta: &Expr, zeta: &Expr, i: usize, cfg: &EqualityConfig) -> Result<Expr> {
    if ys.is_empty() {
        return Err(Error::InvalidInput("no fields".into()));
    }
    check_eligible(ys, cfg)?;
    let work = ys[0].ctx().unbounded();
    let need = work.order_of(eta)?.max(work.order_of(zeta)?) + 1;
    let ext = extend_set(ys, need, cfg)?;
    if !annihilated(&ext, eta, cfg)? || !annihilated(&ext, zeta, &cfg.reseeded(1))? {
        return Err(Error::InputsNotInvariant);
    }
    let d_eta = work.total_derivative(eta, i)?;
    if is_zero(&d_eta, &cfg.reseeded(2))?.equal {
        return Err(Error::DegenerateInvariantPair);
    }
    let next = work.total_derivative(zeta, i)? / d_eta;
    if !annihilated(&ext, &next, &cfg.reseeded(3))? {
        return Err(Error::VerificationFailed("differentiated invariant is not annihilated".into()));
    }
    Ok(next)
}

#[derive(Debug, Clone, Serialize)]
pub struct FirstInvariants {
    #[serde(serialize_with = "crate::print::serialize_exprs")]
    pub eta: Vec<Expr>,
    #[serde(serialize_with = "crate::print::serialize_exprs")]
    pub zeta: Vec<Expr>,
    pub note: Option<String>,
}

/// Search polynomials of degree at most `degree` in the coordinates of
/// order at most one (and parameters) for common invariants. Candidates
/// are kernel vectors of the sampled action, brought to reduced echelon
/// form with higher-order monomials first, rounded to rationals and
/// confirmed symbolically. Only functionally independent candidates are
/// kept; the search can miss invariants outside the ansatz.
pub fn find_first_invariants(ys: &[ProlongedField], degree: usize, cfg: &EqualityConfig) -> Result<FirstInvariants> {
    if ys.is_empty() {
        return Err(Error::InvalidInput("no fields".into()));
    }
    let ctx = ys[0].ctx().clone();
    let ext = extend_set(ys, 1, cfg)?;
    let coords: Vec<Expr> = ctx.coordinates(1).iter().map(Expr::symbol).collect();
    let mut vars = coords.clone();
    vars.extend(ctx.params().iter().map(Expr::symbol));
    let mut keyed: Vec<(usize, usize, Expr)> = Vec::new();
    for (m, deg) in graded_monomials(&vars, degree) {
        if !coords.iter().any(|c| m.contains(c.as_sym().unwrap())) {
            continue;
        }
        keyed.push((ctx.order_of(&m)?, deg, m));
    }
    keyed.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let monos: Vec<Expr> = keyed.into_iter().map(|t| t.2).collect();
    let none = |note: &str| FirstInvariants { eta: vec![], zeta: vec![], note: Some(note.to_string()) };
    if monos.is_empty() {
        return Ok(none("empty ansatz"));
    }
    let actions: Vec<Vec<Expr>> =
        ext.iter().map(|y| monos.iter().map(|m| y.apply(m)).collect::<Result<Vec<_>>>()).collect::<Result<_>>()?;
    let all: Vec<&Expr> = actions.iter().flatten().collect();
    let mut symbols = union_symbols(&all);
    symbols.extend(vars.iter().map(|v| v.as_sym().unwrap().clone()));
    let mut sampler = Sampler::new(cfg, symbols);
    let npts = cfg.samples.max(monos.len() + 10);
    let r = ext.len();
    let mut m = DMatrix::zeros(npts * r, monos.len());
    let mut points = Vec::with_capacity(npts);
    for s in 0..npts {
        let pt = sampler.draw_regular(&all)?;
        for (al, row) in actions.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                m[(s * r + al, j)] = ev(e, &pt)?;
            }
        }
        points.push(pt);
    }
    let k = kernel(&m, RANK_TOL);
    if k.ncols() == 0 {
        return Ok(none("no invariants in ansatz"));
    }
    let mut basis = k.transpose();
    let pivots = rref(&mut basis, 1e-9);

    let mut candidates = Vec::new();
    for row in 0..pivots.len() {
        let mut terms = Vec::new();
        let mut ok = true;
        for (j, mono) in monos.iter().enumerate() {
            let v = basis[(row, j)];
            if v == 0.0 {
                continue;
            }
            match rationalize(v, 1000, 1e-7) {
                Some(c) => terms.push(Expr::num(c) * mono),
                None => ok = false,
            }
        }
        if !ok {
            continue;
        }
        let f = sum(terms);
        if annihilated(&ext, &f, &cfg.reseeded(100 + row as u64))? {
            candidates.push(f);
        }
    }

    let mut eta = Vec::new();
    let mut zeta = Vec::new();
    let mut kept: Vec<Expr> = Vec::new();
    let jac_points = &points[..points.len().min(3)];
    for order in [0usize, 1] {
        for c in &candidates {
            if ctx.order_of(c)? != order {
                continue;
            }
            let mut trial = kept.clone();
            trial.push(c.clone());
            if jacobian_rank(&ctx, &trial, &coords, jac_points)? > kept.len() {
                kept.push(c.clone());
                if order == 0 {
                    eta.push(c.clone());
                } else {
                    zeta.push(c.clone());
                }
            }
        }
    }
    if kept.is_empty() {
        return Ok(none("no invariants in ansatz"));
    }
    Ok(FirstInvariants { eta, zeta, note: None })
}

/// Monomials of degree `1..=degree` paired with their degree.
fn graded_monomials(vars: &[Expr], degree: usize) -> Vec<(Expr, usize)> {
    // `monomials` lists degree 0, then 1, then 2, …
    let all = monomials(vars, degree);
    let mut out = Vec::new();
    let mut count = 1;
    let mut idx = 1;
    for d in 1..=degree {
        count = count * (vars.len() + d - 1) / d;
        for m in all.iter().skip(idx).take(count) {
            out.push((m.clone(), d));
        }
        idx += count;
    }
    out
}

fn ev(e: &Expr, p: &Point) -> Result<f64> {
    eval_tracked(e, p, GUARD).map(|v| v.0).map_err(|_| Error::SingularOnBox)
}

/// Maximal rank of the Jacobian of `fs` over the given points.
pub(crate) fn jacobian_rank(ctx: &JetContext, fs: &[Expr], coords: &[Expr], points: &[Point]) -> Result<usize> {
    let work = ctx.unbounded();
    let grads: Vec<Vec<Expr>> = fs
        .iter()
        .map(|f| coords.iter().map(|c| work.diff(f, c.as_sym().unwrap())).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let mut best = 0;
    for p in points {
        let mut m = DMatrix::zeros(fs.len(), coords.len());
        for (i, g) in grads.iter().enumerate() {
            for (j, e) in g.iter().enumerate() {
                m[(i, j)] = ev(e, p)?;
            }
        }
        best = best.max(rank(&m, 1e-7));
    }
    Ok(best)
}
