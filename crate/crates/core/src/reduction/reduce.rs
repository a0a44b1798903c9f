//! Order reduction: in adapted coordinates, and through an invariant chain.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::calculus::substitute;
use crate::error::{Error, Result};
use crate::eval::{eval_tracked, Point};
use crate::expr::{expand, sum, Expr, Kind, Symbol};
use crate::field::monomials;
use crate::jet::{Coord, Equation, MultiIndex, SolvedSystem};
use crate::linalg::{lstsq, rationalize};
use crate::oracle::{equal_numeric, is_zero, union_symbols, EqualityConfig, Sampler, GUARD};
use crate::prolong::extend_set;

use super::invariants::{jacobian_rank, InvariantChain};
use super::{check_symmetry, SymmetryVerdict};

#[derive(Debug, Clone)]
pub struct AdaptedReduction {
    /// The reduced system; `u^v` now names `w = v_x`.
    pub system: SolvedSystem,
    pub v: usize,
    /// `v = C + ∫ w dx`.
    pub quadrature: String,
}

impl AdaptedReduction {
    /// Recover `v` from a polynomial solution `w(x)` of the reduced system.
    pub fn reconstruct(&self, w: &Expr, constant: &Expr) -> Result<Expr> {
        let x = self.system.ctx().x_sym(0);
        let integral = integrate_polynomial(w, &x)
            .ok_or_else(|| Error::InvalidInput(format!("cannot integrate `{}` in closed form", w)))?;
        Ok(integral + constant)
    }
}

/// Antiderivative of a polynomial in `x` whose coefficients do not depend
/// on `x`; `None` for anything else.
pub fn integrate_polynomial(e: &Expr, x: &Symbol) -> Option<Expr> {
    let e = expand(e);
    let terms: Vec<Expr> = match e.kind() {
        Kind::Add(ts) => ts.clone(),
        _ => vec![e.clone()],
    };
    let mut out = Vec::with_capacity(terms.len());
    for t in terms {
        let factors: Vec<Expr> = match t.kind() {
            Kind::Mul(fs) => fs.clone(),
            _ => vec![t.clone()],
        };
        let mut k = BigRational::zero();
        let mut coeff = Vec::new();
        for f in factors {
            if !f.contains(x) {
                coeff.push(f);
                continue;
            }
            match f.kind() {
                Kind::Sym(_) => k += BigRational::one(),
                Kind::Pow(b, ex) if b.as_sym() == Some(x) => match ex.as_num() {
                    Some(r) if r.is_integer() => k += r,
                    _ => return None,
                },
                _ => return None,
            }
        }
        if k == -BigRational::one() {
            return None;
        }
        let k1 = Expr::num(k + BigRational::one());
        out.push(crate::expr::product(coeff) * Expr::symbol(x).pow(&k1) / k1);
    }
    Some(sum(out))
}

/// Reduce the order in `v` when the system involves `v` only through its
/// derivatives: `w_(k) = v_(k+1)`.
pub fn reduce_adapted(system: &SolvedSystem, v: usize, cfg: &EqualityConfig) -> Result<AdaptedReduction> {
    let ctx = system.ctx();
    if !system.is_ode() {
        return Err(Error::InvalidInput("adapted reduction needs an ODE system".into()));
    }
    if v >= ctx.p() {
        return Err(Error::InvalidInput(format!("no dependent variable with index {}", v + 1)));
    }
    let eq_v = system
        .equations()
        .iter()
        .find(|e| e.dep == v)
        .ok_or_else(|| Error::InvalidInput(format!("no equation for {}", ctx.u_base(v))))?;
    if eq_v.lead.order() < 2 {
        return Err(Error::InvalidInput("equation for the reduced variable must have order at least 2".into()));
    }
    let v0 = ctx.u_sym(v, &MultiIndex::ode(0));
    let mut top = 0;
    let mut rhs = Vec::new();
    for (k, eq) in system.equations().iter().enumerate() {
        let mut r = eq.rhs.clone();
        if r.contains(&v0) {
            let d = crate::calculus::diff(&r, &v0);
            if !is_zero(&d, &cfg.reseeded(k as u64))?.equal {
                return Err(Error::DependsOnV);
            }
            r = crate::calculus::substitute_one(&r, &v0, &Expr::zero());
        }
        for s in r.symbols() {
            if let Some(Coord::Dep(a, j)) = ctx.classify(s) {
                if a == v {
                    top = top.max(j.order());
                }
            }
        }
        rhs.push(r);
    }
    top = top.max(eq_v.lead.order());
    let rename: HashMap<Symbol, Expr> =
        (1..=top as u32).map(|k| (ctx.u_sym(v, &MultiIndex::ode(k)), ctx.u_k(v, k - 1))).collect();
    let equations: Vec<Equation> = system
        .equations()
        .iter()
        .zip(rhs)
        .map(|(eq, r)| {
            let lead = if eq.dep == v { MultiIndex::ode(eq.lead.order() as u32 - 1) } else { eq.lead.clone() };
            Equation { dep: eq.dep, lead, rhs: substitute(&r, &rename) }
        })
        .collect();
    let order = equations.iter().map(|e| e.lead.order()).max().unwrap_or(1);
    let reduced = SolvedSystem::new(ctx.with_order(order), equations)?;
    let name = ctx.u_base(v);
    Ok(AdaptedReduction {
        system: reduced,
        v,
        quadrature: format!("{} = C + integral of w dx, with w the reduced {}", name, name),
    })
}

/// Evidence that restricted top-level invariants depend functionally on
/// the lower chain members.
#[derive(Debug, Clone, Serialize)]
pub struct DependencyCertificate {
    pub chain_rank: usize,
    pub augmented_rank: Vec<usize>,
    pub dependent: bool,
    pub samples: usize,
}

impl std::fmt::Display for DependencyCertificate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let aug: Vec<String> = self.augmented_rank.iter().map(|r| r.to_string()).collect();
        write!(
            f,
            "chain rank {}, augmented ranks [{}], dependent = {}, {} samples",
            self.chain_rank,
            aug.join(", "),
            self.dependent,
            self.samples
        )
    }
}

#[derive(Debug, Clone)]
pub struct InvariantReduction {
    /// `z^a_(n-1) = P^a(y, z, …, z_(n-2))`, written with `x` for `y` and
    /// `u^a_(k)` for `z^a_(k)`.
    pub system: SolvedSystem,
    pub certificate: DependencyCertificate,
    pub symmetry: SymmetryVerdict,
    /// The auxiliary relations `y = η`, `z^a = ζ^a` needed for reconstruction.
    pub auxiliary: Vec<String>,
}

pub fn reduce_by_invariants(system: &SolvedSystem, chain: &InvariantChain, cfg: &EqualityConfig) -> Result<InvariantReduction> {
    reduce_by_invariants_with(system, chain, 3, cfg)
}

/// Rewrite the restricted top invariants in terms of the lower ones, trying
/// polynomial ansätze up to `degree`.
pub fn reduce_by_invariants_with(
    system: &SolvedSystem,
    chain: &InvariantChain,
    degree: usize,
    cfg: &EqualityConfig,
) -> Result<InvariantReduction> {
    let ctx = system.ctx().clone();
    if !system.is_ode() {
        return Err(Error::InvalidInput("reduction by invariants needs an ODE system".into()));
    }
    let p = ctx.p();
    let orders: Vec<usize> = system.equations().iter().map(|e| e.lead.order()).collect();
    let n = orders[0];
    if orders.len() != p || orders.iter().any(|&o| o != n) || n < 2 {
        return Err(Error::InvalidInput("expected p equations of a common order at least 2".into()));
    }
    if chain.width() != p {
        return Err(Error::InvalidInput(format!("chain has {} invariants, expected {}", chain.width(), p)));
    }
    let fields = extend_set(chain.fields(), n, cfg)?;
    let symmetry = check_symmetry(system, &fields, cfg)?;
    if !symmetry.holds {
        return Err(Error::SymmetryCheckFailed);
    }
    let mut chain = chain.clone();
    chain.extend_to(n, cfg)?;

    let tops: Vec<Expr> = (0..p).map(|a| system.restrict(chain.zeta(a, n - 1))).collect::<Result<_>>()?;
    let mut lower = vec![chain.eta().clone()];
    for k in 0..n - 1 {
        for a in 0..p {
            lower.push(chain.zeta(a, k).clone());
        }
    }
    for e in tops.iter().chain(&lower) {
        if ctx.order_of(e)? > n - 1 {
            return Err(Error::NotNormal);
        }
    }

    let coords: Vec<Expr> = ctx.coordinates(n - 1).iter().map(Expr::symbol).collect();
    let all: Vec<&Expr> = tops.iter().chain(&lower).collect();
    let mut symbols = union_symbols(&all);
    symbols.extend(coords.iter().map(|c| c.as_sym().unwrap().clone()));
    symbols.extend(ctx.params().iter().cloned());
    let mut sampler = Sampler::new(&cfg.reseeded(41), symbols);
    let npts = cfg.samples.max(40);
    let points: Vec<Point> = (0..npts).map(|_| sampler.draw_regular(&all)).collect::<Result<_>>()?;

    let jac_pts = &points[..points.len().min(5)];
    let chain_rank = jacobian_rank(&ctx, &lower, &coords, jac_pts)?;
    let mut augmented_rank = Vec::with_capacity(p);
    for t in &tops {
        let mut aug = lower.clone();
        aug.push(t.clone());
        augmented_rank.push(jacobian_rank(&ctx, &aug, &coords, jac_pts)?);
    }
    let certificate = DependencyCertificate {
        chain_rank,
        dependent: augmented_rank.iter().all(|&r| r == chain_rank),
        augmented_rank,
        samples: jac_pts.len(),
    };

    // placeholders: y ↦ x, z^a_(k) ↦ u^a_(k)
    let red_ctx = ctx.with_order(n - 1);
    let mut placeholders = vec![red_ctx.x(0)];
    for k in 0..n - 1 {
        for a in 0..p {
            placeholders.push(red_ctx.u_k(a, k as u32));
        }
    }
    let mut ansatz_vars = placeholders.clone();
    ansatz_vars.extend(ctx.params().iter().map(Expr::symbol));
    let back: HashMap<Symbol, Expr> =
        placeholders.iter().zip(&lower).map(|(ph, l)| (ph.as_sym().unwrap().clone(), l.clone())).collect();

    let lower_vals: Vec<Vec<f64>> =
        points.iter().map(|pt| lower.iter().map(|e| ev(e, pt)).collect::<Result<Vec<_>>>()).collect::<Result<_>>()?;
    let mut equations = Vec::with_capacity(p);
    for (a, top) in tops.iter().enumerate() {
        let mut found = None;
        for d in 0..=degree {
            let monos = monomials(&ansatz_vars, d);
            let mut mat = DMatrix::zeros(npts, monos.len());
            let mut rhs = DVector::zeros(npts);
            let mut ok = true;
            for (s, pt) in points.iter().enumerate() {
                let mut ppt: Point = placeholders
                    .iter()
                    .zip(&lower_vals[s])
                    .map(|(ph, v)| (ph.as_sym().unwrap().clone(), *v))
                    .collect();
                for prm in ctx.params() {
                    ppt.insert(prm.clone(), pt[prm]);
                }
                rhs[s] = ev(top, pt)?;
                for (j, m) in monos.iter().enumerate() {
                    match eval_tracked(m, &ppt, 0.0) {
                        Ok((v, _)) => mat[(s, j)] = v,
                        Err(_) => ok = false,
                    }
                }
            }
            if !ok {
                continue;
            }
            let (sol, res) = lstsq(&mat, &rhs);
            if res > 1e-7 * (1.0 + rhs.norm()) {
                continue;
            }
            let mut terms = Vec::new();
            for (j, m) in monos.iter().enumerate() {
                if sol[j].abs() < 1e-10 {
                    continue;
                }
                match rationalize(sol[j], 1000, 1e-7) {
                    Some(c) => terms.push(Expr::num(c) * m),
                    None => ok = false,
                }
            }
            if !ok {
                continue;
            }
            let candidate = sum(terms);
            if equal_numeric(&substitute(&candidate, &back), top, &cfg.reseeded(50 + a as u64))?.equal {
                found = Some(candidate);
                break;
            }
        }
        match found {
            Some(rhs) => equations.push(Equation { dep: a, lead: MultiIndex::ode((n - 1) as u32), rhs }),
            None => return Err(Error::NotExpressible { degree, certificate: certificate.to_string() }),
        }
    }
    let reduced = SolvedSystem::new(red_ctx.clone(), equations)?;
    let mut auxiliary = vec![format!("y = {}", chain.eta())];
    for a in 0..p {
        auxiliary.push(format!("z{} = {}", if p == 1 { String::new() } else { (a + 1).to_string() }, chain.zeta(a, 0)));
    }
    Ok(InvariantReduction { system: reduced, certificate, symmetry, auxiliary })
}

fn ev(e: &Expr, p: &Point) -> Result<f64> {
    eval_tracked(e, p, GUARD).map(|v| v.0).map_err(|_| Error::SingularOnBox)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::VectorField;
    use crate::jet::JetContext;
    use crate::prolong::{prolong, prolong_lambda};

    #[test]
    fn adapted_examples() {
        let c = JetContext::ode(1, 3).unwrap();
        let cfg = EqualityConfig::default();
        let s = SolvedSystem::ode(c.clone(), &[2], vec![c.u_k(0, 1).powi(2)]).unwrap();
        let r = reduce_adapted(&s, 0, &cfg).unwrap();
        assert_eq!(r.system.equations()[0].lead, MultiIndex::ode(1));
        assert_eq!(r.system.equations()[0].rhs, c.u(0).powi(2));
        let s = SolvedSystem::ode(c.clone(), &[3], vec![Expr::zero()]).unwrap();
        assert_eq!(reduce_adapted(&s, 0, &cfg).unwrap().system.equations()[0].lead, MultiIndex::ode(2));
        let s = SolvedSystem::ode(c.clone(), &[2], vec![c.u(0)]).unwrap();
        assert!(matches!(reduce_adapted(&s, 0, &cfg), Err(Error::DependsOnV)));
    }

    #[test]
    fn integrate() {
        let x = Symbol::new("x");
        let e = Expr::int(3) * Expr::sym("x").powi(2) + Expr::sym("a");
        let i = integrate_polynomial(&e, &x).unwrap();
        assert_eq!(i, Expr::sym("x").powi(3) + Expr::sym("a") * Expr::sym("x"));
        assert!(integrate_polynomial(&Expr::sym("x").recip(), &x).is_none());
    }

    #[test]
    fn lambda_reduction() {
        let c = JetContext::ode(1, 2).unwrap().with_params(&["c"]).unwrap();
        let cfg = EqualityConfig::default();
        let cs = Expr::sym("c");
        let z = c.u_k(0, 1) - &cs * c.u(0);
        let sys = SolvedSystem::ode_uniform(c.clone(), vec![&cs * c.u_k(0, 1) + z.powi(2)]).unwrap();
        let du = VectorField::new(&c, vec![Expr::zero()], vec![Expr::one()]).unwrap();
        let y = prolong_lambda(&du, &cs, 2).unwrap();
        let chain = InvariantChain::new(&[y], c.x(0), vec![z], &cfg).unwrap();
        let red = reduce_by_invariants(&sys, &chain, &cfg).unwrap();
        assert_eq!(red.system.equations()[0].rhs, c.u(0).powi(2));
        assert!(red.certificate.dependent);

        let free = SolvedSystem::ode_uniform(c.clone(), vec![Expr::zero()]).unwrap();
        let chain = InvariantChain::new(&[prolong(&du, 2).unwrap()], c.x(0), vec![c.u_k(0, 1)], &cfg).unwrap();
        assert!(reduce_by_invariants(&free, &chain, &cfg).unwrap().system.equations()[0].rhs.is_zero());
        let lin = SolvedSystem::ode_uniform(c.clone(), vec![c.u(0)]).unwrap();
        assert!(matches!(reduce_by_invariants(&lin, &chain, &cfg), Err(Error::SymmetryCheckFailed)));
    }
}
