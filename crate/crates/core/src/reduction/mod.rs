//! Symmetry checks on solution manifolds, invariant chains and order
//! reduction of ODE systems.

mod invariants;
mod reduce;

use serde::Serialize;

use crate::calculus::substitute;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::field::{evolutionary_rep, VectorField};
use crate::jet::SolvedSystem;
use crate::oracle::{is_zero, EqualityConfig, OracleReport};
use crate::prolong::ProlongedField;

pub use invariants::{find_first_invariants, ibdp_next, ibdp_next_in, FirstInvariants, InvariantChain};
pub use reduce::{
    integrate_polynomial, reduce_adapted, reduce_by_invariants, reduce_by_invariants_with, AdaptedReduction,
    DependencyCertificate, InvariantReduction,
};

#[derive(Debug, Clone, Serialize)]
pub struct SymmetryVerdict {
    pub holds: bool,
    pub strong: bool,
    /// `Y(Δ^a)` per field and equation, restricted unless `strong`.
    #[serde(serialize_with = "crate::print::serialize_exprs")]
    pub residuals: Vec<Expr>,
    pub worst_residual: f64,
    pub report: OracleReport,
}

fn symmetry_verdict(system: &SolvedSystem, ys: &[ProlongedField], strong: bool, cfg: &EqualityConfig) -> Result<SymmetryVerdict> {
    if ys.is_empty() {
        return Err(Error::InvalidInput("no fields".into()));
    }
    let forms = system.residual_forms();
    let mut residuals = Vec::new();
    let mut report: Option<OracleReport> = None;
    for (k, y) in ys.iter().enumerate() {
        for (e, form) in forms.iter().enumerate() {
            let applied = y.apply(form)?;
            let res = if strong { applied } else { system.restrict(&applied)? };
            let r = is_zero(&res, &cfg.reseeded((k * forms.len() + e) as u64))?;
            report = Some(match report {
                None => r,
                Some(p) => p.merge(r),
            });
            residuals.push(res);
        }
    }
    let report = report.unwrap();
    Ok(SymmetryVerdict { holds: report.equal, strong, residuals, worst_residual: report.worst_diff(), report })
}

/// Tangency of each prolonged field to the solution manifold.
pub fn check_symmetry(system: &SolvedSystem, ys: &[ProlongedField], cfg: &EqualityConfig) -> Result<SymmetryVerdict> {
    symmetry_verdict(system, ys, false, cfg)
}

/// `Y(Δ) = 0` without restriction.
pub fn check_strong_symmetry(system: &SolvedSystem, ys: &[ProlongedField], cfg: &EqualityConfig) -> Result<SymmetryVerdict> {
    symmetry_verdict(system, ys, true, cfg)
}

#[derive(Debug, Clone, Serialize)]
pub struct InvariantSolutionVerdict {
    pub invariant: bool,
    pub solution: bool,
    #[serde(serialize_with = "crate::print::serialize_exprs")]
    pub characteristic_residuals: Vec<Expr>,
    #[serde(serialize_with = "crate::print::serialize_exprs")]
    pub equation_residuals: Vec<Expr>,
}

/// Whether the section `u = f(x)` is invariant under every field and
/// solves the system.
pub fn invariant_solution_check(
    system: &SolvedSystem,
    fields: &[VectorField],
    f: &[Expr],
    cfg: &EqualityConfig,
) -> Result<InvariantSolutionVerdict> {
    let ctx = system.ctx();
    let n = system.equations().iter().map(|e| e.lead.order()).max().unwrap_or(0);
    let bind = ctx.section_bindings(f, n.max(1))?;
    let mut characteristic_residuals = Vec::new();
    let mut invariant = true;
    for (k, x) in fields.iter().enumerate() {
        for (a, qa) in evolutionary_rep(x)?.phi().iter().enumerate() {
            let r = substitute(qa, &bind);
            invariant &= is_zero(&r, &cfg.reseeded((k * ctx.p() + a) as u64))?.equal;
            characteristic_residuals.push(r);
        }
    }
    let mut equation_residuals = Vec::new();
    let mut solution = true;
    for (e, form) in system.residual_forms().iter().enumerate() {
        let r = substitute(form, &bind);
        solution &= is_zero(&r, &cfg.reseeded(1000 + e as u64))?.equal;
        equation_residuals.push(r);
    }
    Ok(InvariantSolutionVerdict { invariant, solution, characteristic_residuals, equation_residuals })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::JetContext;
    use crate::prolong::{prolong, prolong_lambda};

    fn dx_du(c: &JetContext) -> (VectorField, VectorField) {
        (
            VectorField::new(c, vec![Expr::one()], vec![Expr::zero()]).unwrap(),
            VectorField::new(c, vec![Expr::zero()], vec![Expr::one()]).unwrap(),
        )
    }

    #[test]
    fn symmetry_examples() {
        let c = JetContext::ode(1, 2).unwrap();
        let cfg = EqualityConfig::default();
        let (dx, du) = dx_du(&c);
        let free = SolvedSystem::ode_uniform(c.clone(), vec![Expr::zero()]).unwrap();
        assert!(check_symmetry(&free, &[prolong(&du, 2).unwrap()], &cfg).unwrap().holds);
        let lin = SolvedSystem::ode_uniform(c.clone(), vec![c.u(0)]).unwrap();
        let v = check_symmetry(&lin, &[prolong_lambda(&du, &Expr::zero(), 2).unwrap()], &cfg).unwrap();
        assert!(!v.holds);
        assert_eq!(v.residuals[0], Expr::int(-1));
        let forced = SolvedSystem::ode_uniform(c.clone(), vec![c.x(0)]).unwrap();
        assert!(!check_strong_symmetry(&forced, &[prolong(&dx, 2).unwrap()], &cfg).unwrap().holds);
        let auto = SolvedSystem::ode_uniform(c.clone(), vec![c.u_k(0, 1)]).unwrap();
        assert!(check_strong_symmetry(&auto, &[prolong(&dx, 2).unwrap()], &cfg).unwrap().holds);
    }

    #[test]
    fn invariant_solutions() {
        let c = JetContext::ode(1, 2).unwrap();
        let cfg = EqualityConfig::default();
        let (dx, _) = dx_du(&c);
        let free = SolvedSystem::ode_uniform(c.clone(), vec![Expr::zero()]).unwrap();
        let v = invariant_solution_check(&free, &[dx.clone()], &[Expr::int(5)], &cfg).unwrap();
        assert!(v.invariant && v.solution);
        let v = invariant_solution_check(&free, &[dx.clone()], &[c.x(0)], &cfg).unwrap();
        assert!(!v.invariant && v.solution);
        assert_eq!(v.characteristic_residuals[0], Expr::int(-1));
        let lin = SolvedSystem::ode_uniform(c.clone(), vec![c.u(0)]).unwrap();
        let v = invariant_solution_check(&lin, &[dx], &[Expr::zero()], &cfg).unwrap();
        assert!(v.invariant && v.solution);
    }
}
