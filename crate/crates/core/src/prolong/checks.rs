//! Compatibility conditions, the μ difference term and the commutator
//! characterizations of twisted prolongations.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{sum, Expr};
use crate::field::{prolonged_bracket, InvolutionSystem, VectorField};
use crate::jet::{JetContext, MultiIndex};
use crate::matrix::MatrixExpr;
use crate::oracle::{equal_all, equal_numeric, is_zero, EqualityConfig, OracleReport};

use super::{prolong_mu_with, prolong_sigma, prolong_with, ProlongedField, TwistSpec};

#[derive(Debug, Clone)]
pub struct McReport {
    pub holds: bool,
    /// `D_i Λ_j − D_j Λ_i + [Λ_i, Λ_j]` for each `i < j`.
    pub residuals: Vec<(usize, usize, MatrixExpr)>,
    pub report: OracleReport,
}

/// Zero-curvature check of a μ twist. Trivially true for one independent
/// variable.
pub fn check_maurer_cartan(ctx: &JetContext, lambdas: &[MatrixExpr], cfg: &EqualityConfig) -> Result<McReport> {
    let q = ctx.q();
    if lambdas.len() != q {
        return Err(Error::Dimension(format!("expected {} matrices, got {}", q, lambdas.len())));
    }
    let mut residuals = Vec::new();
    let mut report = OracleReport { equal: true, samples: 0, worst: None };
    if q == 1 {
        return Ok(McReport { holds: true, residuals, report });
    }
    let work = ctx.unbounded();
    for i in 0..q {
        for j in (i + 1)..q {
            let di_lj = lambdas[j].try_map(|e| work.total_derivative(e, i))?;
            let dj_li = lambdas[i].try_map(|e| work.total_derivative(e, j))?;
            let r = di_lj.sub(&dj_li)?.add(&lambdas[i].commutator(&lambdas[j])?)?;
            for (k, e) in r.entries().iter().enumerate() {
                let rep = is_zero(e, &cfg.reseeded((i * q + j) as u64 * 1000 + k as u64))?;
                report = report.merge(rep);
            }
            residuals.push((i, j, r));
        }
    }
    Ok(McReport { holds: report.equal, residuals, report })
}

#[derive(Debug, Clone)]
pub struct MuDifference {
    /// `F^a_J` for all `|J| <= n`.
    pub table: Vec<BTreeMap<MultiIndex, Expr>>,
    /// Comparison of the μ-prolonged table against standard plus `F`.
    pub report: OracleReport,
}

/// Difference between μ- and standard prolongation of a vertical field,
/// `F_{J,i} = (D_i + Λ_i) F_J + Λ_i D_J Q` with `F_0 = 0`.
pub fn mu_difference(qf: &VectorField, lambdas: &[MatrixExpr], n: usize, cfg: &EqualityConfig) -> Result<MuDifference> {
    if !qf.is_vertical() {
        return Err(Error::NonVertical);
    }
    let ctx = qf.ctx();
    let (q, p) = (ctx.q(), ctx.p());
    let work = ctx.unbounded();
    let phi = prolong_with(qf, n, false, cfg)?;
    let psi = prolong_mu_with(qf, lambdas, n, true, cfg)?;
    let mut table: Vec<BTreeMap<MultiIndex, Expr>> = (0..p)
        .map(|_| {
            let mut m = BTreeMap::new();
            m.insert(MultiIndex::zero(q), Expr::zero());
            m
        })
        .collect();
    for ord in 1..=n {
        for j in MultiIndex::all_of_order(q, ord) {
            let i = j.first_nonzero().unwrap();
            let parent = j.predecessor(i).unwrap();
            let vals: Vec<Expr> = (0..p)
                .map(|a| {
                    let mut terms = vec![work.total_derivative(&table[a][&parent], i)?];
                    for b in 0..p {
                        let l = lambdas[i].get(a, b);
                        if !l.is_zero() {
                            terms.push(l * (&table[b][&parent] + phi.psi(b, &parent)));
                        }
                    }
                    Ok(sum(terms))
                })
                .collect::<Result<_>>()?;
            for (a, v) in vals.into_iter().enumerate() {
                table[a].insert(j.clone(), v);
            }
        }
    }
    let mut lhs = Vec::new();
    let mut rhs = Vec::new();
    for j in MultiIndex::all_up_to(q, n) {
        for a in 0..p {
            lhs.push(psi.psi(a, &j).clone());
            rhs.push(phi.psi(a, &j) + &table[a][&j]);
        }
    }
    let report = equal_all(lhs.iter().zip(rhs.iter()), cfg)?;
    if !report.equal {
        return Err(Error::VerificationFailed("mu-prolongation differs from standard plus difference term".into()));
    }
    Ok(MuDifference { table, report })
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityResult {
    pub field: usize,
    pub identity: String,
    pub holds: bool,
    pub report: OracleReport,
}

/// Random polynomial test functions on `J^(n-1) M`.
pub(crate) fn test_functions(ctx: &JetContext, order: usize, count: usize, seed: u64) -> Vec<Expr> {
    let coords: Vec<Expr> = ctx.coordinates(order).iter().map(Expr::symbol).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7465_7374);
    (0..count)
        .map(|_| {
            let nterms = rng.random_range(2..=4);
            sum((0..nterms).map(|_| {
                let c = rng.random_range(-3i64..=3);
                let deg = rng.random_range(1..=2);
                let mut t = Expr::int(if c == 0 { 1 } else { c });
                for _ in 0..deg {
                    t = t * &coords[rng.random_range(0..coords.len())];
                }
                t
            }))
        })
        .collect()
}

/// Scalar multiple of the identity, if it is one.
pub(crate) fn scalar_part(m: &MatrixExpr, cfg: &EqualityConfig) -> Result<Option<Expr>> {
    if !m.is_square() || m.rows() == 0 {
        return Ok(None);
    }
    let d = m.get(0, 0).clone();
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            let e = m.get(i, j);
            let ok = if i == j { equal_numeric(e, &d, cfg)?.equal } else { is_zero(e, cfg)?.equal };
            if !ok {
                return Ok(None);
            }
        }
    }
    Ok(Some(d))
}

/// Check the commutator characterization `[Y, D_x]` of each prolonged
/// field on a basket of random functions.
pub fn commutator_identity_report(fields: &[ProlongedField], basket: usize, cfg: &EqualityConfig) -> Result<Vec<IdentityResult>> {
    if fields.is_empty() {
        return Ok(Vec::new());
    }
    let ctx = fields[0].ctx().clone();
    let n = fields.iter().map(|f| f.order()).min().unwrap();
    if n == 0 {
        return Err(Error::InvalidInput("prolongation order must be at least 1".into()));
    }
    let work = ctx.unbounded();
    let tests = test_functions(&ctx, n - 1, basket, cfg.seed);
    let q = ctx.q();
    let mut out = Vec::new();
    for (al, y) in fields.iter().enumerate() {
        let mut lhs = Vec::new();
        let mut rhs = Vec::new();
        let name = match y.twist() {
            TwistSpec::Standard | TwistSpec::Lambda(_) | TwistSpec::Mu(_) => {
                let lams: Vec<Expr> = match y.twist() {
                    TwistSpec::Standard => vec![Expr::zero(); q],
                    TwistSpec::Lambda(l) => vec![l.clone()],
                    TwistSpec::Mu(ms) => {
                        let mut v = Vec::new();
                        for m in ms {
                            match scalar_part(m, cfg)? {
                                Some(l) => v.push(l),
                                None => {
                                    return Err(Error::IdentityNotApplicable(
                                        "mu twist with a non-scalar matrix".into(),
                                    ))
                                }
                            }
                        }
                        v
                    }
                    _ => unreachable!(),
                };
                for f in &tests {
                    let yf = y.apply(f)?;
                    for i in 0..q {
                        let dif = work.total_derivative(f, i)?;
                        lhs.push(y.apply(&dif)? - work.total_derivative(&yf, i)?);
                        let mut terms = vec![&lams[i] * &yf];
                        for k in 0..q {
                            let coef = &lams[i] * &y.xi()[k] + work.total_derivative(&y.xi()[k], i)?;
                            terms.push(-(coef * work.total_derivative(f, k)?));
                        }
                        rhs.push(sum(terms));
                    }
                }
                "scalar-twist commutator"
            }
            TwistSpec::Sigma(s) => {
                if s.rows() != fields.len() {
                    return Err(Error::Dimension("sigma matrix size differs from the field set".into()));
                }
                for f in &tests {
                    let df = work.total_derivative(f, 0)?;
                    lhs.push(y.apply(&df)? - work.total_derivative(&y.apply(f)?, 0)?);
                    let mut terms = Vec::new();
                    let mut coef = vec![work.total_derivative(&y.xi()[0], 0)?];
                    for (be, yb) in fields.iter().enumerate() {
                        let sab = s.get(al, be);
                        if !sab.is_zero() {
                            terms.push(sab * yb.apply(f)?);
                            coef.push(sab * &yb.xi()[0]);
                        }
                    }
                    terms.push(-(sum(coef) * &df));
                    rhs.push(sum(terms));
                }
                "module commutator"
            }
            TwistSpec::Chi(l, s) => {
                let lam = scalar_part(l, cfg)?
                    .ok_or_else(|| Error::IdentityNotApplicable("chi twist with a non-scalar component matrix".into()))?;
                if s.rows() != fields.len() {
                    return Err(Error::Dimension("sigma matrix size differs from the field set".into()));
                }
                for f in &tests {
                    let df = work.total_derivative(f, 0)?;
                    lhs.push(y.apply(&df)? - work.total_derivative(&y.apply(f)?, 0)?);
                    let mut terms = vec![&lam * y.apply(f)?];
                    for (be, yb) in fields.iter().enumerate() {
                        let sab = s.get(al, be);
                        if !sab.is_zero() {
                            terms.push(sab * yb.apply(f)?);
                        }
                    }
                    rhs.push(sum(terms));
                }
                "combined commutator"
            }
        };
        let report = equal_all(lhs.iter().zip(rhs.iter()), &cfg.reseeded(al as u64))?;
        out.push(IdentityResult { field: al, identity: name.to_string(), holds: report.equal, report });
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct SigmaInvolutionReport {
    /// The uncontracted condition (sufficient).
    pub sufficient: bool,
    /// The condition contracted with the field components.
    pub contracted: bool,
    /// Whether the σ-prolonged fields satisfy the original relations.
    pub bracket_preserved: bool,
    pub commuting: bool,
    pub sufficient_report: OracleReport,
    pub contracted_report: OracleReport,
    pub bracket_report: OracleReport,
}

/// Conditions under which σ-prolonged fields keep the involution relations
/// of the underlying system. Both forms are reported without interpreting
/// one in terms of the other.
pub fn sigma_involution_condition(
    system: &InvolutionSystem,
    sigma: &MatrixExpr,
    n: usize,
    cfg: &EqualityConfig,
) -> Result<SigmaInvolutionReport> {
    let ys = prolong_sigma(system, sigma, n.max(1))?;
    let ctx = system.ctx().clone();
    let work = ctx.unbounded();
    let r = system.len();
    let f = |a: usize, b: usize, g: usize| system.structure(a, b, g);
    let mut cond = Vec::new();
    let mut contracted = Vec::new();
    for al in 0..r {
        for be in (al + 1)..r {
            let mut s_vec = Vec::with_capacity(r);
            for ga in 0..r {
                let mut terms = vec![
                    ys[al].apply(sigma.get(be, ga))?,
                    -ys[be].apply(sigma.get(al, ga))?,
                    work.total_derivative(f(al, be, ga), 0)?,
                ];
                for eta in 0..r {
                    terms.push(sigma.get(al, eta) * f(eta, be, ga));
                    terms.push(-(sigma.get(be, eta) * f(eta, al, ga)));
                    terms.push(-(f(al, be, eta) * sigma.get(eta, ga)));
                }
                s_vec.push(sum(terms));
            }
            for a in 0..ctx.p() {
                contracted.push(sum((0..r).map(|g| &s_vec[g] * &system.fields()[g].phi()[a])));
            }
            cond.extend(s_vec);
        }
    }
    let zeros = vec![Expr::zero(); cond.len().max(contracted.len())];
    let sufficient_report = equal_all(cond.iter().zip(zeros.iter()), cfg)?;
    let contracted_report = equal_all(contracted.iter().zip(zeros.iter()), &cfg.reseeded(7))?;

    let mut lhs = Vec::new();
    let mut rhs = Vec::new();
    for al in 0..r {
        for be in (al + 1)..r {
            let br = prolonged_bracket(&ys[al], &ys[be])?;
            let cs: Vec<Vec<Expr>> = ys.iter().map(|y| y.coefficients()).collect();
            for (k, b) in br.into_iter().enumerate() {
                lhs.push(b);
                rhs.push(sum((0..r).map(|g| f(al, be, g) * &cs[g][k])));
            }
        }
    }
    let bracket_report = equal_all(lhs.iter().zip(rhs.iter()), &cfg.reseeded(11))?;
    Ok(SigmaInvolutionReport {
        sufficient: sufficient_report.equal,
        contracted: contracted_report.equal,
        bracket_preserved: bracket_report.equal,
        commuting: system.is_commuting(),
        sufficient_report,
        contracted_report,
        bracket_report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maurer_cartan_examples() {
        let c = JetContext::new(2, 2, 2).unwrap();
        let cfg = EqualityConfig::default();
        let k = MatrixExpr::from_rows(vec![vec![Expr::int(1), Expr::int(2)], vec![Expr::int(3), Expr::int(4)]]).unwrap();
        assert!(check_maurer_cartan(&c, &[k.clone(), k], &cfg).unwrap().holds);
        let bad = [MatrixExpr::zeros(2, 2), MatrixExpr::scalar(2, &c.x(0))];
        let rep = check_maurer_cartan(&c, &bad, &cfg).unwrap();
        assert!(!rep.holds);
        assert_eq!(rep.residuals[0].2, MatrixExpr::identity(2));
        let o = JetContext::ode(2, 2).unwrap();
        assert!(check_maurer_cartan(&o, &[MatrixExpr::scalar(2, &o.u_k(0, 1))], &cfg).unwrap().holds);
    }

    #[test]
    fn difference_one_step() {
        let c = JetContext::ode(1, 2).unwrap();
        let cfg = EqualityConfig::default();
        let qf = VectorField::vertical(&c, vec![c.x(0) * c.u(0)]).unwrap();
        let lam = c.u(0) + 2;
        let d = mu_difference(&qf, &[MatrixExpr::scalar(1, &lam)], 2, &cfg).unwrap();
        assert!(d.table[0][&MultiIndex::ode(0)].is_zero());
        assert!(equal_numeric(&d.table[0][&MultiIndex::ode(1)], &(&lam * c.x(0) * c.u(0)), &cfg).unwrap().equal);
    }
}
