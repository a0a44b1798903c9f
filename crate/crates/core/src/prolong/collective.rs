//! Prolongations of sets of fields: σ mixes fields, χ mixes fields and
//! components.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::expr::{sum, Expr};
use crate::field::{InvolutionSystem, VectorField};
use crate::jet::MultiIndex;
use crate::matrix::MatrixExpr;

use super::{empty_table, require_ode, ProlongedField, TwistSpec};

fn check_set(fields: &[VectorField], m: &MatrixExpr, what: &str) -> Result<()> {
    let r = fields.len();
    if r == 0 {
        return Err(Error::InvalidInput(format!("{} needs at least one field", what)));
    }
    if m.rows() != r || m.cols() != r {
        return Err(Error::Dimension(format!("{} matrix must be {}x{}", what, r, r)));
    }
    let ctx = fields[0].ctx();
    if fields.iter().any(|f| f.ctx() != ctx) {
        return Err(Error::InvalidInput("fields live in different contexts".into()));
    }
    require_ode(ctx, what)
}

/// σ-prolongation of an involution system.
pub fn prolong_sigma(system: &InvolutionSystem, sigma: &MatrixExpr, n: usize) -> Result<Vec<ProlongedField>> {
    prolong_sigma_fields(system.fields(), sigma, n)
}

/// `ψ^a_{α,(k+1)} = D_x ψ^a_{α,(k)} − u^a_(k+1) D_x ξ_α + σ_α^β (ψ^a_{β,(k)} − u^a_(k+1) ξ_β)`.
/// The recursion itself does not need the fields to be in involution.
pub fn prolong_sigma_fields(fields: &[VectorField], sigma: &MatrixExpr, n: usize) -> Result<Vec<ProlongedField>> {
    check_set(fields, sigma, "sigma-prolongation")?;
    let ctx = fields[0].ctx();
    let twist = TwistSpec::Sigma(sigma.clone());
    twist.validate(ctx)?;
    let work = ctx.unbounded();
    let r = fields.len();
    let xis: Vec<&Expr> = fields.iter().map(|f| &f.xi()[0]).collect();
    let dxis: Vec<Expr> = xis.iter().map(|x| work.total_derivative(x, 0)).collect::<Result<_>>()?;
    let mut tables: Vec<Vec<BTreeMap<MultiIndex, Expr>>> = fields.iter().map(|f| empty_table(ctx, f.phi())).collect();
    for k in 0..n as u32 {
        let cur = MultiIndex::ode(k);
        let next = MultiIndex::ode(k + 1);
        let mut fresh: Vec<Vec<Expr>> = vec![Vec::with_capacity(ctx.p()); r];
        for al in 0..r {
            for a in 0..ctx.p() {
                let uk1 = work.u_k(a, k + 1);
                let mut terms = vec![work.total_derivative(&tables[al][a][&cur], 0)?, -(&uk1 * &dxis[al])];
                for be in 0..r {
                    let s = sigma.get(al, be);
                    if !s.is_zero() {
                        terms.push(s * (&tables[be][a][&cur] - &uk1 * xis[be]));
                    }
                }
                fresh[al].push(sum(terms));
            }
        }
        for (al, vals) in fresh.into_iter().enumerate() {
            for (a, v) in vals.into_iter().enumerate() {
                tables[al][a].insert(next.clone(), v);
            }
        }
    }
    Ok(fields
        .iter()
        .zip(tables)
        .map(|(f, t)| ProlongedField::from_parts(ctx, n, f.xi().to_vec(), t, twist.clone()))
        .collect())
}

/// χ-prolongation of vertical fields,
/// `Ψ^a_{α,(k+1)} = D_x Ψ^a_{α,(k)} + Λ^a_b Ψ^b_{α,(k)} + σ_α^β Ψ^a_{β,(k)}`.
pub fn prolong_chi(fields: &[VectorField], lambda: &MatrixExpr, sigma: &MatrixExpr, n: usize) -> Result<Vec<ProlongedField>> {
    check_set(fields, sigma, "chi-prolongation")?;
    let ctx = fields[0].ctx();
    let p = ctx.p();
    if lambda.rows() != p || lambda.cols() != p {
        return Err(Error::Dimension(format!("chi component matrix must be {}x{}", p, p)));
    }
    if fields.iter().any(|f| !f.is_vertical()) {
        return Err(Error::NonVertical);
    }
    let twist = TwistSpec::Chi(lambda.clone(), sigma.clone());
    twist.validate(ctx)?;
    let work = ctx.unbounded();
    let r = fields.len();
    let mut tables: Vec<Vec<BTreeMap<MultiIndex, Expr>>> = fields.iter().map(|f| empty_table(ctx, f.phi())).collect();
    for k in 0..n as u32 {
        let cur = MultiIndex::ode(k);
        let next = MultiIndex::ode(k + 1);
        let mut fresh: Vec<Vec<Expr>> = vec![Vec::with_capacity(p); r];
        for al in 0..r {
            for a in 0..p {
                let mut terms = vec![work.total_derivative(&tables[al][a][&cur], 0)?];
                for b in 0..p {
                    let l = lambda.get(a, b);
                    if !l.is_zero() {
                        terms.push(l * &tables[al][b][&cur]);
                    }
                }
                for be in 0..r {
                    let s = sigma.get(al, be);
                    if !s.is_zero() {
                        terms.push(s * &tables[be][a][&cur]);
                    }
                }
                fresh[al].push(sum(terms));
            }
        }
        for (al, vals) in fresh.into_iter().enumerate() {
            for (a, v) in vals.into_iter().enumerate() {
                tables[al][a].insert(next.clone(), v);
            }
        }
    }
    Ok(fields
        .iter()
        .zip(tables)
        .map(|(f, t)| ProlongedField::from_parts(ctx, n, f.xi().to_vec(), t, twist.clone()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::JetContext;

    #[test]
    fn sigma_one_step() {
        let c = JetContext::ode(2, 2).unwrap();
        let d1 = VectorField::new(&c, vec![Expr::zero()], vec![Expr::one(), Expr::zero()]).unwrap();
        let d2 = VectorField::new(&c, vec![Expr::zero()], vec![Expr::zero(), Expr::one()]).unwrap();
        let s = MatrixExpr::from_rows(vec![vec![Expr::zero(), Expr::one()], vec![Expr::zero(), Expr::zero()]]).unwrap();
        let ys = prolong_sigma_fields(&[d1, d2], &s, 1).unwrap();
        assert!(ys[0].psi_k(0, 1).is_zero());
        assert!(ys[0].psi_k(1, 1).is_one());
        assert!(ys[1].psi_k(0, 1).is_zero());
        assert!(ys[1].psi_k(1, 1).is_zero());
    }

    #[test]
    fn chi_requires_vertical() {
        let c = JetContext::ode(1, 2).unwrap();
        let dx = VectorField::new(&c, vec![Expr::one()], vec![Expr::zero()]).unwrap();
        let z = MatrixExpr::zeros(1, 1);
        assert!(matches!(prolong_chi(&[dx], &z, &z, 2), Err(Error::NonVertical)));
    }
}
