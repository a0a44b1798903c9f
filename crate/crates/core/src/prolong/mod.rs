//! Standard and twisted prolongations.
//!
//! Each recursion is written out separately rather than as a special case
//! of the most general one; the degeneration checks between them are only
//! meaningful that way.

mod checks;
mod collective;

use std::collections::BTreeMap;

use serde::Serialize;

pub use checks::{
    check_maurer_cartan, commutator_identity_report, mu_difference, sigma_involution_condition, IdentityResult,
    McReport, MuDifference, SigmaInvolutionReport,
};
pub(crate) use checks::scalar_part;
pub use collective::{prolong_chi, prolong_sigma, prolong_sigma_fields};

use crate::error::{Error, Result};
use crate::expr::{sum, Expr};
use crate::field::VectorField;
use crate::jet::{Coord, JetContext, MultiIndex};
use crate::matrix::MatrixExpr;
use crate::oracle::{equal_all, EqualityConfig, OracleReport};

/// Which prolongation produced a table.
#[derive(Debug, Clone, PartialEq)]
pub enum TwistSpec {
    Standard,
    Lambda(Expr),
    Mu(Vec<MatrixExpr>),
    Sigma(MatrixExpr),
    Chi(MatrixExpr, MatrixExpr),
}

impl TwistSpec {
    pub fn name(&self) -> &'static str {
        match self {
            TwistSpec::Standard => "standard",
            TwistSpec::Lambda(_) => "lambda",
            TwistSpec::Mu(_) => "mu",
            TwistSpec::Sigma(_) => "sigma",
            TwistSpec::Chi(..) => "chi",
        }
    }

    fn entries(&self) -> Vec<&Expr> {
        match self {
            TwistSpec::Standard => vec![],
            TwistSpec::Lambda(l) => vec![l],
            TwistSpec::Mu(ms) => ms.iter().flat_map(|m| m.entries()).collect(),
            TwistSpec::Sigma(s) => s.entries().iter().collect(),
            TwistSpec::Chi(l, s) => l.entries().iter().chain(s.entries()).collect(),
        }
    }

    /// Twist payloads live on the first jet space.
    pub fn validate(&self, ctx: &JetContext) -> Result<()> {
        for e in self.entries() {
            let ord = ctx.order_of(e)?;
            if ord > 1 {
                return Err(Error::InvalidInput(format!("twist entry `{}` has order {} > 1", e, ord)));
            }
        }
        Ok(())
    }
}

/// A field on `J^n M`: `ξ^i` together with `ψ^a_J` for all `|J| <= n`.
#[derive(Debug, Clone)]
pub struct ProlongedField {
    ctx: JetContext,
    n: usize,
    xi: Vec<Expr>,
    psi: Vec<BTreeMap<MultiIndex, Expr>>,
    twist: TwistSpec,
    path_check: Option<OracleReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TableEntry {
    pub name: String,
    pub value: String,
}

impl ProlongedField {
    pub(crate) fn from_parts(
        ctx: &JetContext,
        n: usize,
        xi: Vec<Expr>,
        psi: Vec<BTreeMap<MultiIndex, Expr>>,
        twist: TwistSpec,
    ) -> Self {
        ProlongedField { ctx: ctx.with_order(n), n, xi, psi, twist, path_check: None }
    }

    pub fn ctx(&self) -> &JetContext {
        &self.ctx
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn xi(&self) -> &[Expr] {
        &self.xi
    }

    pub fn twist(&self) -> &TwistSpec {
        &self.twist
    }

    pub fn path_check(&self) -> Option<&OracleReport> {
        self.path_check.as_ref()
    }

    pub fn psi(&self, a: usize, j: &MultiIndex) -> &Expr {
        &self.psi[a][j]
    }

    /// ODE sugar for `ψ^a_(k)`.
    pub fn psi_k(&self, a: usize, k: u32) -> &Expr {
        self.psi(a, &MultiIndex::ode(k))
    }

    pub fn is_vertical(&self) -> bool {
        self.xi.iter().all(Expr::is_zero)
    }

    /// Coefficients in a fixed order: `ξ^i`, then `ψ^a_J` by increasing `J`.
    pub fn coefficients(&self) -> Vec<Expr> {
        let mut out = self.xi.clone();
        for j in MultiIndex::all_up_to(self.ctx.q(), self.n) {
            for a in 0..self.ctx.p() {
                out.push(self.psi[a][&j].clone());
            }
        }
        out
    }

    pub fn coefficient_names(&self) -> Vec<String> {
        let mut out: Vec<String> = (0..self.ctx.q()).map(|i| format!("xi^{}", self.ctx.x_name(i))).collect();
        for j in MultiIndex::all_up_to(self.ctx.q(), self.n) {
            for a in 0..self.ctx.p() {
                out.push(format!("psi^{}", self.ctx.coord_name(a, &j)));
            }
        }
        out
    }

    pub fn table(&self) -> Vec<TableEntry> {
        self.coefficient_names()
            .into_iter()
            .zip(self.coefficients())
            .map(|(name, e)| TableEntry { name, value: e.to_string() })
            .collect()
    }

    /// Act on a function of order at most `n` as a derivation.
    pub fn apply(&self, f: &Expr) -> Result<Expr> {
        let mut terms = Vec::new();
        for s in f.symbols() {
            match self.ctx.classify(s) {
                Some(Coord::Indep(i)) => {
                    if !self.xi[i].is_zero() {
                        terms.push(&self.xi[i] * crate::calculus::diff(f, s));
                    }
                }
                Some(Coord::Dep(a, j)) => {
                    if j.order() > self.n {
                        return Err(Error::TruncationExceeded { order: j.order(), n: self.n });
                    }
                    let c = &self.psi[a][&j];
                    if !c.is_zero() {
                        terms.push(c * crate::calculus::diff(f, s));
                    }
                }
                Some(Coord::Param(_)) => {}
                None => return Err(Error::UndeclaredSymbol(s.to_string())),
            }
        }
        Ok(sum(terms))
    }

    /// Pointwise rescaling `γ Y`.
    pub fn scaled(&self, g: &Expr) -> ProlongedField {
        let mut out = self.clone();
        out.xi = self.xi.iter().map(|e| g * e).collect();
        for col in out.psi.iter_mut() {
            for v in col.values_mut() {
                *v = g * &*v;
            }
        }
        out
    }

    /// Vector-index mixing `(A ψ_J)^a = A^a_b ψ^b_J`; `ξ` is unchanged.
    pub fn mixed_components(&self, a_mat: &MatrixExpr) -> Result<ProlongedField> {
        let p = self.ctx.p();
        if a_mat.rows() != p || a_mat.cols() != p {
            return Err(Error::Dimension(format!("component matrix must be {}x{}", p, p)));
        }
        let mut out = self.clone();
        for j in MultiIndex::all_up_to(self.ctx.q(), self.n) {
            let v: Vec<Expr> = (0..p).map(|b| self.psi[b][&j].clone()).collect();
            let w = a_mat.mul_vec(&v)?;
            for (a, e) in w.into_iter().enumerate() {
                out.psi[a].insert(j.clone(), e);
            }
        }
        Ok(out)
    }

    /// Module-index mixing `Z_α = Γ_α^β Y_β`.
    pub fn combine(gamma: &MatrixExpr, fields: &[ProlongedField]) -> Result<Vec<ProlongedField>> {
        let r = fields.len();
        if gamma.rows() != r || gamma.cols() != r || r == 0 {
            return Err(Error::Dimension(format!("module matrix must be {}x{}", r, r)));
        }
        let mut out = Vec::with_capacity(r);
        for alpha in 0..r {
            let mut f = fields[0].clone();
            let cs: Vec<Vec<Expr>> = fields.iter().map(|y| y.coefficients()).collect();
            let combined: Vec<Expr> =
                (0..cs[0].len()).map(|k| sum((0..r).map(|b| gamma.get(alpha, b) * &cs[b][k]))).collect();
            f.set_coefficients(&combined);
            out.push(f);
        }
        Ok(out)
    }

    fn set_coefficients(&mut self, cs: &[Expr]) {
        let q = self.ctx.q();
        let p = self.ctx.p();
        self.xi = cs[..q].to_vec();
        let mut k = q;
        for j in MultiIndex::all_up_to(q, self.n) {
            for a in 0..p {
                self.psi[a].insert(j.clone(), cs[k].clone());
                k += 1;
            }
        }
    }
}

/// Coefficientwise oracle comparison of two tables of the same shape.
pub fn compare_tables(a: &ProlongedField, b: &ProlongedField, cfg: &EqualityConfig) -> Result<OracleReport> {
    if a.n != b.n || a.ctx.p() != b.ctx.p() || a.ctx.q() != b.ctx.q() {
        return Err(Error::Dimension("prolonged fields of different shape".into()));
    }
    let ca = a.coefficients();
    let cb = b.coefficients();
    equal_all(ca.iter().zip(cb.iter()), cfg)
}

/// Compare lists of prolonged fields pairwise.
pub fn compare_sets(a: &[ProlongedField], b: &[ProlongedField], cfg: &EqualityConfig) -> Result<OracleReport> {
    if a.len() != b.len() {
        return Err(Error::Dimension("field sets of different size".into()));
    }
    let mut acc: Option<OracleReport> = None;
    for (i, (x, y)) in a.iter().zip(b).enumerate() {
        let r = compare_tables(x, y, &cfg.reseeded(1000 + i as u64))?;
        acc = Some(match acc {
            None => r,
            Some(p) => p.merge(r),
        });
    }
    Ok(acc.unwrap_or(OracleReport { equal: true, samples: 0, worst: None }))
}

fn empty_table(ctx: &JetContext, phi: &[Expr]) -> Vec<BTreeMap<MultiIndex, Expr>> {
    phi.iter()
        .map(|f| {
            let mut m = BTreeMap::new();
            m.insert(MultiIndex::zero(ctx.q()), f.clone());
            m
        })
        .collect()
}

fn require_ode(ctx: &JetContext, what: &str) -> Result<()> {
    if ctx.q() != 1 {
        return Err(Error::InvalidInput(format!("{} requires a single independent variable", what)));
    }
    Ok(())
}

/// Standard prolongation `ψ^a_{J,i} = D_i ψ^a_J − u^a_{J,k} D_i ξ^k`.
pub fn prolong(x: &VectorField, n: usize) -> Result<ProlongedField> {
    prolong_with(x, n, true, &EqualityConfig::default())
}

pub(crate) fn prolong_with(x: &VectorField, n: usize, verify_paths: bool, cfg: &EqualityConfig) -> Result<ProlongedField> {
    let ctx = x.ctx();
    let work = ctx.unbounded();
    let q = ctx.q();
    let p = ctx.p();
    let dxi: Vec<Vec<Expr>> = (0..q)
        .map(|i| (0..q).map(|k| work.total_derivative(&x.xi()[k], i)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let step = |psi: &[BTreeMap<MultiIndex, Expr>], parent: &MultiIndex, i: usize, a: usize| -> Result<Expr> {
        let mut terms = vec![work.total_derivative(&psi[a][parent], i)?];
        for k in 0..q {
            if !dxi[i][k].is_zero() {
                terms.push(-(work.u_j(a, &parent.successor(k)) * &dxi[i][k]));
            }
        }
        Ok(sum(terms))
    };
    let mut psi = empty_table(ctx, x.phi());
    for ord in 1..=n {
        for j in MultiIndex::all_of_order(q, ord) {
            let i = j.first_nonzero().unwrap();
            let parent = j.predecessor(i).unwrap();
            for a in 0..p {
                let v = step(&psi, &parent, i, a)?;
                psi[a].insert(j.clone(), v);
            }
        }
    }
    let mut out = ProlongedField::from_parts(ctx, n, x.xi().to_vec(), psi, TwistSpec::Standard);
    if verify_paths && q > 1 {
        let report = verify_paths_with(&out, |psi, parent, i, a| step(psi, parent, i, a), cfg)?;
        if !report.equal {
            return Err(Error::Internal("standard prolongation depends on the recursion path".into()));
        }
        out.path_check = Some(report);
    }
    Ok(out)
}

/// Recompute every `ψ^a_J` from each parent other than the one used and
/// compare with the stored value.
fn verify_paths_with<F>(y: &ProlongedField, step: F, cfg: &EqualityConfig) -> Result<OracleReport>
where
    F: Fn(&[BTreeMap<MultiIndex, Expr>], &MultiIndex, usize, usize) -> Result<Expr>,
{
    let mut lhs = Vec::new();
    let mut rhs = Vec::new();
    for ord in 2..=y.n {
        for j in MultiIndex::all_of_order(y.ctx.q(), ord) {
            let first = j.first_nonzero().unwrap();
            for i in (first + 1)..y.ctx.q() {
                if let Some(parent) = j.predecessor(i) {
                    for a in 0..y.ctx.p() {
                        lhs.push(step(&y.psi, &parent, i, a)?);
                        rhs.push(y.psi[a][&j].clone());
                    }
                }
            }
        }
    }
    equal_all(lhs.iter().zip(rhs.iter()), cfg)
}

/// λ-prolongation, `ψ_(k+1) = (D_x + λ) ψ_(k) − u_(k+1) (D_x + λ) ξ`.
pub fn prolong_lambda(x: &VectorField, lambda: &Expr, n: usize) -> Result<ProlongedField> {
    let ctx = x.ctx();
    require_ode(ctx, "lambda-prolongation")?;
    let twist = TwistSpec::Lambda(lambda.clone());
    twist.validate(ctx)?;
    let work = ctx.unbounded();
    let xi = &x.xi()[0];
    let nabla_xi = work.total_derivative(xi, 0)? + lambda * xi;
    let mut psi = empty_table(ctx, x.phi());
    for k in 0..n as u32 {
        for a in 0..ctx.p() {
            let prev = &psi[a][&MultiIndex::ode(k)];
            let v = work.total_derivative(prev, 0)? + lambda * prev - work.u_k(a, k + 1) * &nabla_xi;
            psi[a].insert(MultiIndex::ode(k + 1), v);
        }
    }
    Ok(ProlongedField::from_parts(ctx, n, x.xi().to_vec(), psi, twist))
}

/// μ-prolongation with one `p×p` matrix per independent variable:
/// `ψ^a_{J,i} = D_i ψ^a_J − u^a_{J,k} D_i ξ^k + (Λ_i)^a_b (ψ^b_J − u^b_{J,k} ξ^k)`.
pub fn prolong_mu(x: &VectorField, lambdas: &[MatrixExpr], n: usize, skip_compat: bool) -> Result<ProlongedField> {
    prolong_mu_with(x, lambdas, n, skip_compat, &EqualityConfig::default())
}

pub fn prolong_mu_with(
    x: &VectorField,
    lambdas: &[MatrixExpr],
    n: usize,
    skip_compat: bool,
    cfg: &EqualityConfig,
) -> Result<ProlongedField> {
    let ctx = x.ctx();
    let q = ctx.q();
    let p = ctx.p();
    if lambdas.len() != q || lambdas.iter().any(|m| m.rows() != p || m.cols() != p) {
        return Err(Error::Dimension(format!("mu twist needs {} matrices of size {}x{}", q, p, p)));
    }
    let twist = TwistSpec::Mu(lambdas.to_vec());
    twist.validate(ctx)?;
    if !skip_compat && q > 1 && !check_maurer_cartan(ctx, lambdas, cfg)?.holds {
        return Err(Error::CompatibilityFailure);
    }
    let work = ctx.unbounded();
    let dxi: Vec<Vec<Expr>> = (0..q)
        .map(|i| (0..q).map(|k| work.total_derivative(&x.xi()[k], i)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let step = |psi: &[BTreeMap<MultiIndex, Expr>], parent: &MultiIndex, i: usize, a: usize| -> Result<Expr> {
        let mut terms = vec![work.total_derivative(&psi[a][parent], i)?];
        for k in 0..q {
            if !dxi[i][k].is_zero() {
                terms.push(-(work.u_j(a, &parent.successor(k)) * &dxi[i][k]));
            }
        }
        for b in 0..p {
            let l = lambdas[i].get(a, b);
            if l.is_zero() {
                continue;
            }
            let mut inner = vec![psi[b][parent].clone()];
            for k in 0..q {
                if !x.xi()[k].is_zero() {
                    inner.push(-(work.u_j(b, &parent.successor(k)) * &x.xi()[k]));
                }
            }
            terms.push(l * sum(inner));
        }
        Ok(sum(terms))
    };
    let mut psi = empty_table(ctx, x.phi());
    for ord in 1..=n {
        for j in MultiIndex::all_of_order(q, ord) {
            let i = j.first_nonzero().unwrap();
            let parent = j.predecessor(i).unwrap();
            for a in 0..p {
                let v = step(&psi, &parent, i, a)?;
                psi[a].insert(j.clone(), v);
            }
        }
    }
    let mut out = ProlongedField::from_parts(ctx, n, x.xi().to_vec(), psi, twist);
    if q > 1 {
        out.path_check = Some(verify_paths_with(&out, |psi, parent, i, a| step(psi, parent, i, a), cfg)?);
    }
    Ok(out)
}

/// Re-prolong a family to order `n` with the same twist. Fields already of
/// order `>= n` are returned unchanged.
pub fn extend_set(ys: &[ProlongedField], n: usize, cfg: &EqualityConfig) -> Result<Vec<ProlongedField>> {
    if ys.iter().all(|y| y.n >= n) {
        return Ok(ys.to_vec());
    }
    let base: Vec<VectorField> = ys
        .iter()
        .map(|y| {
            let phi: Vec<Expr> = (0..y.ctx.p()).map(|a| y.psi[a][&MultiIndex::zero(y.ctx.q())].clone()).collect();
            VectorField::new(&y.ctx.unbounded(), y.xi.clone(), phi)
        })
        .collect::<Result<_>>()?;
    let twist = ys[0].twist.clone();
    if ys.iter().any(|y| y.twist != twist) {
        return Err(Error::InvalidInput("fields carry different twists".into()));
    }
    match &twist {
        TwistSpec::Standard => base.iter().map(|f| prolong_with(f, n, false, cfg)).collect(),
        TwistSpec::Lambda(l) => base.iter().map(|f| prolong_lambda(f, l, n)).collect(),
        TwistSpec::Mu(ls) => base.iter().map(|f| prolong_mu_with(f, ls, n, true, cfg)).collect(),
        TwistSpec::Sigma(s) => prolong_sigma_fields(&base, s, n),
        TwistSpec::Chi(l, s) => prolong_chi(&base, l, s, n),
    }
}
