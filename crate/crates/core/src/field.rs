//! Vector fields on M and on jet spaces.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::calculus::{diff, substitute};
use crate::error::{Error, Result};
use crate::eval::eval_tracked;
use crate::expr::{sum, Expr, Symbol};
use crate::jet::{Coord, JetContext, MultiIndex};
use crate::linalg::{lstsq, rank, rationalize, RANK_TOL};
use crate::matrix::MatrixExpr;
use crate::oracle::{equal_all, equal_numeric, union_symbols, EqualityConfig, OracleReport, Sampler, GUARD};
use crate::prolong::{prolong_with, ProlongedField};

/// `ξ^i ∂_i + φ^a ∂_a`; coefficients may depend on derivative coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    ctx: JetContext,
    xi: Vec<Expr>,
    phi: Vec<Expr>,
}

impl VectorField {
    pub fn new(ctx: &JetContext, xi: Vec<Expr>, phi: Vec<Expr>) -> Result<Self> {
        if xi.len() != ctx.q() || phi.len() != ctx.p() {
            return Err(Error::Dimension(format!(
                "field needs {} xi and {} phi components, got {} and {}",
                ctx.q(),
                ctx.p(),
                xi.len(),
                phi.len()
            )));
        }
        for e in xi.iter().chain(&phi) {
            ctx.order_of(e)?;
        }
        Ok(VectorField { ctx: ctx.clone(), xi, phi })
    }

    /// A field whose coefficients depend on `(x, u)` only.
    pub fn lie_point(ctx: &JetContext, xi: Vec<Expr>, phi: Vec<Expr>) -> Result<Self> {
        let f = Self::new(ctx, xi, phi)?;
        if !f.is_lie_point() {
            return Err(Error::InvalidInput("lie-point field depends on derivative coordinates".into()));
        }
        Ok(f)
    }

    pub fn vertical(ctx: &JetContext, q_coeffs: Vec<Expr>) -> Result<Self> {
        Self::new(ctx, vec![Expr::zero(); ctx.q()], q_coeffs)
    }

    pub fn ctx(&self) -> &JetContext {
        &self.ctx
    }

    pub fn xi(&self) -> &[Expr] {
        &self.xi
    }

    pub fn phi(&self) -> &[Expr] {
        &self.phi
    }

    pub fn components(&self) -> Vec<Expr> {
        self.xi.iter().chain(&self.phi).cloned().collect()
    }

    /// Highest derivative order appearing in a coefficient.
    pub fn order(&self) -> usize {
        self.xi.iter().chain(&self.phi).map(|e| self.ctx.order_of(e).unwrap_or(0)).max().unwrap_or(0)
    }

    pub fn is_lie_point(&self) -> bool {
        self.order() == 0
    }

    pub fn is_vertical(&self) -> bool {
        self.xi.iter().all(Expr::is_zero)
    }

    pub fn scaled(&self, g: &Expr) -> VectorField {
        VectorField {
            ctx: self.ctx.clone(),
            xi: self.xi.iter().map(|e| g * e).collect(),
            phi: self.phi.iter().map(|e| g * e).collect(),
        }
    }

    /// Vector-index mixing `φ ↦ A φ`.
    pub fn mixed_components(&self, a: &MatrixExpr) -> Result<VectorField> {
        Ok(VectorField { ctx: self.ctx.clone(), xi: self.xi.clone(), phi: a.mul_vec(&self.phi)? })
    }

    /// Module-index mixing `X_α ↦ Γ_α^β X_β`.
    pub fn combine(gamma: &MatrixExpr, fields: &[VectorField]) -> Result<Vec<VectorField>> {
        let r = fields.len();
        if r == 0 || gamma.rows() != r || gamma.cols() != r {
            return Err(Error::Dimension(format!("module matrix must be {}x{}", r, r)));
        }
        let ctx = fields[0].ctx.clone();
        (0..r)
            .map(|al| {
                let comb = |get: &dyn Fn(&VectorField) -> &[Expr], k: usize| {
                    sum((0..r).map(|b| gamma.get(al, b) * &get(&fields[b])[k]))
                };
                let xi = (0..ctx.q()).map(|k| comb(&|f| f.xi(), k)).collect();
                let phi = (0..ctx.p()).map(|k| comb(&|f| f.phi(), k)).collect();
                VectorField::new(&ctx, xi, phi)
            })
            .collect()
    }

    /// Act on a function, prolonging the field as far as `f` requires.
    pub fn act(&self, f: &Expr) -> Result<Expr> {
        let ord = self.ctx.order_of(f)?;
        if ord > self.ctx.n() {
            return Err(Error::TruncationExceeded { order: ord, n: self.ctx.n() });
        }
        if ord == 0 {
            let mut terms = Vec::new();
            for s in f.symbols() {
                match self.ctx.classify(s) {
                    Some(Coord::Indep(i)) => terms.push(&self.xi[i] * diff(f, s)),
                    Some(Coord::Dep(a, _)) => terms.push(&self.phi[a] * diff(f, s)),
                    _ => {}
                }
            }
            return Ok(sum(terms));
        }
        prolong_with(self, ord, false, &EqualityConfig::default())?.apply(f)
    }
}

/// `Q^a = φ^a − u^a_i ξ^i`, as a vertical field.
pub fn evolutionary_rep(x: &VectorField) -> Result<VectorField> {
    let ctx = x.ctx();
    let q = (0..ctx.p())
        .map(|a| {
            let mut terms = vec![x.phi[a].clone()];
            for i in 0..ctx.q() {
                terms.push(-(ctx.u_j(a, &MultiIndex::unit(ctx.q(), i)) * &x.xi[i]));
            }
            sum(terms)
        })
        .collect();
    let work = ctx.with_order(ctx.n().max(x.order() + 1));
    VectorField::vertical(&work, q).map(|v| VectorField { ctx: ctx.clone(), ..v })
}

/// Recover the Lie-point field whose evolutionary representative is `qf`.
pub fn reconstruct_liepoint(qf: &VectorField) -> Result<VectorField> {
    reconstruct_liepoint_with(qf, &EqualityConfig::default())
}

pub fn reconstruct_liepoint_with(qf: &VectorField, cfg: &EqualityConfig) -> Result<VectorField> {
    if !qf.is_vertical() {
        return Err(Error::NonVertical);
    }
    let ctx = qf.ctx();
    let (q, p) = (ctx.q(), ctx.p());
    let firsts: Vec<Vec<Symbol>> =
        (0..p).map(|a| (0..q).map(|i| ctx.u_sym(a, &MultiIndex::unit(q, i))).collect()).collect();
    for qa in &qf.phi {
        if ctx.order_of(qa)? > 1 {
            return Err(Error::NotAffine);
        }
        for s in firsts.iter().flatten() {
            let d = diff(qa, s);
            for t in firsts.iter().flatten() {
                if !diff(&d, t).is_zero() {
                    return Err(Error::NotAffine);
                }
            }
        }
    }
    let mut xi: Option<Vec<Expr>> = None;
    for (a, qa) in qf.phi.iter().enumerate() {
        for (b, row) in firsts.iter().enumerate() {
            if b != a && row.iter().any(|s| qa.contains(s)) {
                return Err(Error::InconsistentReconstruction(format!(
                    "Q^{} depends on first derivatives of {}",
                    a + 1,
                    ctx.u_base(b)
                )));
            }
        }
        let cand: Vec<Expr> = firsts[a].iter().map(|s| -diff(qa, s)).collect();
        for c in &cand {
            if ctx.order_of(c)? > 0 {
                return Err(Error::NotAffine);
            }
        }
        match &xi {
            None => xi = Some(cand),
            Some(prev) => {
                let r = equal_all(prev.iter().zip(cand.iter()), cfg)?;
                if !r.equal {
                    return Err(Error::InconsistentReconstruction(format!(
                        "candidate xi from component 1 and component {} disagree",
                        a + 1
                    )));
                }
            }
        }
    }
    let xi = xi.unwrap_or_else(|| vec![Expr::zero(); q]);
    let phi: Vec<Expr> = qf
        .phi
        .iter()
        .enumerate()
        .map(|(a, qa)| {
            let zero: std::collections::HashMap<Symbol, Expr> =
                firsts[a].iter().map(|s| (s.clone(), Expr::zero())).collect();
            substitute(qa, &zero)
        })
        .collect();
    VectorField::lie_point(ctx, xi, phi)
}

/// Lie bracket `[X, Y]`, with coefficients `X(Y^c) − Y(X^c)`.
pub fn commutator(x: &VectorField, y: &VectorField) -> Result<VectorField> {
    if x.ctx != y.ctx {
        return Err(Error::InvalidInput("fields live in different contexts".into()));
    }
    let comps = |f: fn(&VectorField) -> &[Expr]| -> Result<Vec<Expr>> {
        f(x).iter().zip(f(y)).map(|(xc, yc)| Ok(x.act(yc)? - y.act(xc)?)).collect()
    };
    let xi = comps(|f| f.xi())?;
    let phi = comps(|f| f.phi())?;
    VectorField::new(&x.ctx, xi, phi)
}

#[derive(Debug, Clone, Serialize)]
pub struct CommutatorVerdict {
    pub holds: bool,
    pub report: OracleReport,
}

/// Check `[X^(n), Y^(n)] = ([X, Y])^(n)` coefficientwise.
pub fn verify_prolong_commutator(x: &VectorField, y: &VectorField, n: usize, cfg: &EqualityConfig) -> Result<CommutatorVerdict> {
    let px = prolong_with(x, n, false, cfg)?;
    let py = prolong_with(y, n, false, cfg)?;
    let lhs = prolonged_bracket(&px, &py)?;
    let rhs = prolong_with(&commutator(x, y)?, n, false, cfg)?.coefficients();
    let report = equal_all(lhs.iter().zip(rhs.iter()), cfg)?;
    Ok(CommutatorVerdict { holds: report.equal, report })
}

/// Coefficients of the bracket of two fields on `J^n M`.
pub fn prolonged_bracket(a: &ProlongedField, b: &ProlongedField) -> Result<Vec<Expr>> {
    a.coefficients()
        .iter()
        .zip(b.coefficients().iter())
        .map(|(ca, cb)| Ok(a.apply(cb)? - b.apply(ca)?))
        .collect()
}

/// Fields closed under brackets: `[X_α, X_β] = f_αβ^γ X_γ`.
#[derive(Debug, Clone)]
pub struct InvolutionSystem {
    fields: Vec<VectorField>,
    structure: Vec<Vec<Vec<Expr>>>,
    numeric_only: bool,
}

impl InvolutionSystem {
    pub fn fields(&self) -> &[VectorField] {
        &self.fields
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn ctx(&self) -> &JetContext {
        self.fields[0].ctx()
    }

    /// `f_αβ^γ`.
    pub fn structure(&self, alpha: usize, beta: usize, gamma: usize) -> &Expr {
        &self.structure[alpha][beta][gamma]
    }

    /// True when structure functions were found numerically but could not
    /// be confirmed symbolically.
    pub fn numeric_only(&self) -> bool {
        self.numeric_only
    }

    pub fn is_commuting(&self) -> bool {
        self.structure.iter().flatten().flatten().all(Expr::is_zero)
    }
}

/// Degrees tried for the polynomial ansatz of structure functions.
const STRUCTURE_DEGREES: [usize; 3] = [0, 1, 2];

pub(crate) fn monomials(vars: &[Expr], degree: usize) -> Vec<Expr> {
    let mut out = vec![Expr::one()];
    let mut last = vec![(Expr::one(), 0usize)];
    for _ in 0..degree {
        let mut next = Vec::new();
        for (m, start) in &last {
            for (k, v) in vars.iter().enumerate().skip(*start) {
                next.push((m * v, k));
            }
        }
        out.extend(next.iter().map(|(m, _)| m.clone()));
        last = next;
    }
    out
}

pub fn check_involution(fields: &[VectorField]) -> Result<InvolutionSystem> {
    check_involution_with(fields, &EqualityConfig::default())
}

pub fn check_involution_with(fields: &[VectorField], cfg: &EqualityConfig) -> Result<InvolutionSystem> {
    let r = fields.len();
    if r == 0 {
        return Err(Error::InvalidInput("empty field set".into()));
    }
    let ctx = fields[0].ctx().clone();
    if fields.iter().any(|f| f.ctx() != &ctx || !f.is_lie_point()) {
        return Err(Error::InvalidInput("involution systems need lie-point fields in one context".into()));
    }
    let dim = ctx.q() + ctx.p();
    if r > dim {
        return Err(Error::FieldsDependent);
    }
    let comps: Vec<Vec<Expr>> = fields.iter().map(|f| f.components()).collect();
    let all: Vec<&Expr> = comps.iter().flatten().collect();
    let mut vars: Vec<Symbol> = ctx.coordinates(0);
    vars.extend(ctx.params().iter().cloned());
    vars.extend(union_symbols(&all));
    let mut sampler = Sampler::new(cfg, vars);
    let n_samples = cfg.samples.max(40);
    let points = (0..n_samples).map(|_| sampler.draw_regular(&all)).collect::<Result<Vec<_>>>()?;
    let eval = |e: &Expr, p: &crate::eval::Point| eval_tracked(e, p, GUARD).map(|v| v.0).map_err(|_| Error::SingularOnBox);

    // linear independence over the reals
    let mut stacked = DMatrix::zeros(n_samples * dim, r);
    for (s, p) in points.iter().enumerate() {
        for (al, c) in comps.iter().enumerate() {
            for k in 0..dim {
                stacked[(s * dim + k, al)] = eval(&c[k], p)?;
            }
        }
    }
    if rank(&stacked, RANK_TOL) < r {
        return Err(Error::FieldsDependent);
    }

    let zero = Expr::zero();
    let mut structure = vec![vec![vec![zero.clone(); r]; r]; r];
    let mut numeric_only = false;
    let mut basis_vars: Vec<Expr> = ctx.coordinates(0).iter().map(Expr::symbol).collect();
    basis_vars.extend(ctx.params().iter().map(Expr::symbol));
    for al in 0..r {
        for be in (al + 1)..r {
            let bracket = commutator(&fields[al], &fields[be])?.components();
            let (fs, numeric) = match solve_structure(&bracket, &comps, &points, &basis_vars, cfg)? {
                StructureFit::Confirmed(fs) => (fs, false),
                StructureFit::NumericOnly(fs) => (fs, true),
                StructureFit::NoFit => return Err(Error::NotInInvolution),
            };
            numeric_only |= numeric;
            for g in 0..r {
                structure[al][be][g] = fs[g].clone();
                structure[be][al][g] = -&fs[g];
            }
        }
    }
    Ok(InvolutionSystem { fields: fields.to_vec(), structure, numeric_only })
}

/// Try a polynomial ansatz for `f^γ` in `(x, u)` of increasing degree.
fn solve_structure(
    bracket: &[Expr],
    comps: &[Vec<Expr>],
    points: &[crate::eval::Point],
    vars: &[Expr],
    cfg: &EqualityConfig,
) -> Result<StructureFit> {
    let r = comps.len();
    let dim = bracket.len();
    if bracket.iter().all(Expr::is_zero) {
        return Ok(StructureFit::Confirmed(vec![Expr::zero(); r]));
    }
    let mut numeric: Option<Vec<Expr>> = None;
    let ev = |e: &Expr, p: &crate::eval::Point| eval_tracked(e, p, GUARD).map(|v| v.0).map_err(|_| Error::SingularOnBox);
    for degree in STRUCTURE_DEGREES {
        let monos = monomials(vars, degree);
        let m = monos.len();
        let mut a = DMatrix::zeros(points.len() * dim, r * m);
        let mut b = DVector::zeros(points.len() * dim);
        for (s, p) in points.iter().enumerate() {
            let mv: Vec<f64> = monos.iter().map(|mo| ev(mo, p)).collect::<Result<_>>()?;
            for k in 0..dim {
                b[s * dim + k] = ev(&bracket[k], p)?;
                for g in 0..r {
                    let xv = ev(&comps[g][k], p)?;
                    for (j, mvj) in mv.iter().enumerate() {
                        a[(s * dim + k, g * m + j)] = mvj * xv;
                    }
                }
            }
        }
        let (sol, res) = lstsq(&a, &b);
        if res > 1e-8 * (1.0 + b.norm()) {
            continue;
        }
        let mut fs = Vec::with_capacity(r);
        let mut approx = Vec::with_capacity(r);
        let mut ok = true;
        for g in 0..r {
            let mut terms = Vec::new();
            let mut aterms = Vec::new();
            for j in 0..m {
                let v = sol[g * m + j];
                match rationalize(v, 1000, 1e-9) {
                    Some(c) => terms.push(Expr::num(c) * &monos[j]),
                    None => ok = false,
                }
                aterms.push(approximate(v) * &monos[j]);
            }
            fs.push(sum(terms));
            approx.push(sum(aterms));
        }
        if ok && confirm_structure(bracket, comps, &fs, cfg)? {
            return Ok(StructureFit::Confirmed(fs));
        }
        numeric.get_or_insert(approx);
    }
    Ok(match numeric {
        Some(fs) => StructureFit::NumericOnly(fs),
        None => StructureFit::NoFit,
    })
}

enum StructureFit {
    Confirmed(Vec<Expr>),
    NumericOnly(Vec<Expr>),
    NoFit,
}

/// Six significant decimals, as an exact rational.
fn approximate(v: f64) -> Expr {
    rationalize(v, 1_000_000, 1e-12).map(Expr::num).unwrap_or_else(|| Expr::rat((v * 1e6).round() as i64, 1_000_000))
}

fn confirm_structure(bracket: &[Expr], comps: &[Vec<Expr>], fs: &[Expr], cfg: &EqualityConfig) -> Result<bool> {
    let combo: Vec<Expr> =
        (0..bracket.len()).map(|k| sum(fs.iter().zip(comps).map(|(f, c)| f * &c[k]))).collect();
    Ok(equal_all(bracket.iter().zip(combo.iter()), cfg)?.equal)
}

/// Check that a symbolic identity between two fields' components holds.
pub fn fields_equal(a: &VectorField, b: &VectorField, cfg: &EqualityConfig) -> Result<OracleReport> {
    let ca = a.components();
    let cb = b.components();
    equal_all(ca.iter().zip(cb.iter()), cfg)
}

/// Oracle equality of two expressions, convenience for callers.
pub fn same(a: &Expr, b: &Expr, cfg: &EqualityConfig) -> Result<bool> {
    Ok(equal_numeric(a, b, cfg)?.equal)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ode() -> JetContext {
        JetContext::ode(1, 2).unwrap()
    }

    #[test]
    fn evolutionary_examples() {
        let c = ode();
        let t = VectorField::new(&c, vec![Expr::one()], vec![Expr::zero()]).unwrap();
        assert_eq!(evolutionary_rep(&t).unwrap().phi()[0], -c.u_k(0, 1));
        let s = VectorField::new(&c, vec![c.x(0)], vec![c.u(0)]).unwrap();
        let q = evolutionary_rep(&s).unwrap();
        assert_eq!(q.phi()[0], c.u(0) - c.x(0) * c.u_k(0, 1));
        assert_eq!(reconstruct_liepoint(&q).unwrap(), s);
    }

    #[test]
    fn diagonal_obstruction() {
        let c = JetContext::ode(2, 2).unwrap();
        let q = VectorField::vertical(&c, vec![-c.u_k(0, 1), Expr::int(-2) * c.u_k(1, 1)]).unwrap();
        assert!(matches!(reconstruct_liepoint(&q), Err(Error::InconsistentReconstruction(_))));
    }

    #[test]
    fn brackets() {
        let c = ode();
        let dx = VectorField::new(&c, vec![Expr::one()], vec![Expr::zero()]).unwrap();
        let du = VectorField::new(&c, vec![Expr::zero()], vec![Expr::one()]).unwrap();
        let xdx = VectorField::new(&c, vec![c.x(0)], vec![Expr::zero()]).unwrap();
        assert!(commutator(&dx, &du).unwrap().components().iter().all(Expr::is_zero));
        assert_eq!(commutator(&xdx, &dx).unwrap(), dx.scaled(&Expr::int(-1)));
    }

    #[test]
    fn involution_examples() {
        let c = JetContext::ode(2, 1).unwrap();
        let d1 = VectorField::new(&c, vec![Expr::zero()], vec![Expr::one(), Expr::zero()]).unwrap();
        let d2 = VectorField::new(&c, vec![Expr::zero()], vec![Expr::zero(), Expr::one()]).unwrap();
        let s = check_involution(&[d1, d2]).unwrap();
        assert!(s.is_commuting());

        let c1 = ode();
        let dx = VectorField::new(&c1, vec![Expr::one()], vec![Expr::zero()]).unwrap();
        let xdx = VectorField::new(&c1, vec![c1.x(0)], vec![Expr::zero()]).unwrap();
        let s = check_involution(&[dx, xdx]).unwrap();
        assert!(s.structure(0, 1, 0).is_one());
        assert!(s.structure(0, 1, 1).is_zero());

        let du = VectorField::new(&c1, vec![Expr::zero()], vec![Expr::one()]).unwrap();
        let mixed = VectorField::new(&c1, vec![c1.u(0)], vec![c1.x(0)]).unwrap();
        assert!(matches!(check_involution(&[du, mixed]), Err(Error::NotInInvolution)));
    }
}
