mod common;

use std::collections::HashMap;

use common::{base_vars, Fuzz};
use proptest::prelude::*;
use twist_core::calculus::{diff, substitute};
use twist_core::eval::eval_numeric;
use twist_core::gauge::rescale_lambda;
use twist_core::jet::SolvedSystem;
use twist_core::oracle::is_zero;
use twist_core::prolong::{prolong, prolong_lambda, ProlongedField};
use twist_core::reduction::{check_symmetry, integrate_polynomial, reduce_adapted, InvariantChain};
use twist_core::{EqualityConfig, Expr, JetContext, VectorField};

fn solves(system: &SolvedSystem, section: &[Expr], cfg: &EqualityConfig) -> bool {
    let n = system.ctx().n();
    let bind = system.ctx().section_bindings(section, n).unwrap();
    system.residual_forms().iter().all(|r| is_zero(&substitute(r, &bind), cfg).unwrap().equal)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn scalar_rescaling_keeps_the_verdict(seed in any::<u64>()) {
        let mut fz = Fuzz::new(seed);
        let ctx = JetContext::ode(1, 2).unwrap();
        let cfg = EqualityConfig::with_seed(seed);
        let (x, u, u1) = (ctx.x(0), ctx.u(0), ctx.u_k(0, 1));
        let lam = Expr::int(fz.int(-2, 2));
        let rhs = if fz.coin() {
            &lam * &u1 + fz.poly(&[x.clone(), &u1 - &lam * &u], 2, 3)
        } else {
            fz.poly(&[x, u, u1], 2, 4)
        };
        let system = SolvedSystem::ode_uniform(ctx.clone(), vec![rhs]).unwrap();
        let du = VectorField::vertical(&ctx, vec![Expr::one()]).unwrap();
        let before = check_symmetry(&system, &[prolong_lambda(&du, &lam, 2).unwrap()], &cfg).unwrap();
        let gamma = fz.nowhere_zero(&base_vars(&ctx));
        let lam_bar = rescale_lambda(&ctx, &lam, &gamma).unwrap();
        let after = check_symmetry(&system, &[prolong_lambda(&du.scaled(&gamma), &lam_bar, 2).unwrap()], &cfg).unwrap();
        prop_assert_eq!(before.holds, after.holds);
    }

    #[test]
    fn module_mixing_keeps_symmetries(seed in any::<u64>()) {
        let mut fz = Fuzz::new(seed);
        let ctx = JetContext::ode(1, 2).unwrap();
        let cfg = EqualityConfig::with_seed(seed);
        let x = ctx.x(0);
        let system = SolvedSystem::ode_uniform(ctx.clone(), vec![fz.poly(std::slice::from_ref(&x), 3, 3)]).unwrap();
        let ys: Vec<ProlongedField> = [Expr::one(), x.clone()]
            .into_iter()
            .map(|c| prolong(&VectorField::vertical(&ctx, vec![c]).unwrap(), 2).unwrap())
            .collect();
        prop_assert!(check_symmetry(&system, &ys, &cfg).unwrap().holds);
        let gamma = fz.invertible(&base_vars(&ctx), 2);
        let mixed = ProlongedField::combine(&gamma, &ys).unwrap();
        prop_assert!(check_symmetry(&system, &mixed, &cfg).unwrap().holds);
    }

    /// `F(x, u' − λ(x) u)` is invariant under `∂_u` twisted by `λ`, and so is
    /// every derivative of it along the chain.
    #[test]
    fn chain_members_are_invariant(seed in any::<u64>()) {
        let mut fz = Fuzz::new(seed);
        let ctx = JetContext::ode(1, 4).unwrap();
        let cfg = EqualityConfig::with_seed(seed);
        let x = ctx.x(0);
        let lam = fz.poly(std::slice::from_ref(&x), 2, 2);
        let z = ctx.u_k(0, 1) - &lam * ctx.u(0);
        let zeta = fz.poly(&[x.clone(), z.powi(2)], 2, 3) + z;
        let du = VectorField::vertical(&ctx, vec![Expr::int(fz.nonzero(-2, 2))]).unwrap();
        let mut chain = InvariantChain::new(&[prolong_lambda(&du, &lam, 1).unwrap()], x, vec![zeta], &cfg).unwrap();
        chain.extend_to(3, &cfg).unwrap();
        let y = prolong_lambda(&du, &lam, 4).unwrap();
        for (k, member) in chain.zetas(0).iter().enumerate() {
            prop_assert!(is_zero(&y.apply(member).unwrap(), &cfg).unwrap().equal, "level {}: {}", k, member);
        }
    }

    /// `u'' = g(x)`: `w' = g`, so `w = ∫g + a` and `u = ∫w + b`.
    #[test]
    fn adapted_reduction_single(seed in any::<u64>()) {
        let mut fz = Fuzz::new(seed);
        let ctx = JetContext::ode(1, 2).unwrap();
        let cfg = EqualityConfig::with_seed(seed);
        let xs = ctx.x_sym(0);
        let g = fz.poly(&[ctx.x(0)], 3, 3);
        let system = SolvedSystem::ode_uniform(ctx.clone(), vec![g.clone()]).unwrap();
        let red = reduce_adapted(&system, 0, &cfg).unwrap();
        let w = integrate_polynomial(&g, &xs).unwrap() + fz.int(-5, 5);
        prop_assert!(solves(&red.system, std::slice::from_ref(&w), &cfg));
        let u = red.reconstruct(&w, &Expr::int(fz.int(-5, 5))).unwrap();
        prop_assert!(solves(&system, &[u], &cfg));
    }

    /// `u1'' = u2' + h(x)`, `u2'' = 0`, reduced in `u1`.
    #[test]
    fn adapted_reduction_coupled(seed in any::<u64>()) {
        let mut fz = Fuzz::new(seed);
        let ctx = JetContext::ode(2, 2).unwrap();
        let cfg = EqualityConfig::with_seed(seed);
        let x = ctx.x(0);
        let h = fz.poly(std::slice::from_ref(&x), 2, 3);
        let system = SolvedSystem::ode_uniform(ctx.clone(), vec![ctx.u_k(1, 1) + &h, Expr::zero()]).unwrap();
        let red = reduce_adapted(&system, 0, &cfg).unwrap();
        let (a, b) = (fz.int(-4, 4), fz.int(-4, 4));
        let u2 = &x * a + b;
        let w = &u2 + integrate_polynomial(&h, &ctx.x_sym(0)).unwrap() + fz.int(-4, 4);
        prop_assert!(solves(&red.system, &[w.clone(), u2.clone()], &cfg));
        let u1 = red.reconstruct(&w, &Expr::int(fz.int(-4, 4))).unwrap();
        prop_assert!(solves(&system, &[u1, u2], &cfg));
    }

    /// `u'' = u'^2` has the solutions `d − log(x + c)` and the symmetries
    /// `∂_x, ∂_u, x∂_x, e^u ∂_u, x e^u ∂_u`. Moving a solution along the
    /// characteristic of a combination leaves an `O(ε²)` residual.
    #[test]
    fn symmetries_move_solutions_to_solutions(seed in any::<u64>()) {
        let mut fz = Fuzz::new(seed);
        let ctx = JetContext::ode(1, 2).unwrap();
        let cfg = EqualityConfig::with_seed(seed);
        let (x, u) = (ctx.x(0), ctx.u(0));
        let xs = ctx.x_sym(0);
        let cs: Vec<i64> = (0..5).map(|_| fz.int(-2, 2)).collect();
        let xi = Expr::int(cs[0]) + &x * cs[2];
        let phi = Expr::int(cs[1]) + (Expr::int(cs[3]) + &x * cs[4]) * u.exp();
        let field = VectorField::new(&ctx, vec![xi.clone()], vec![phi.clone()]).unwrap();
        let system = SolvedSystem::ode_uniform(ctx.clone(), vec![ctx.u_k(0, 1).powi(2)]).unwrap();
        prop_assert!(check_symmetry(&system, &[prolong(&field, 2).unwrap()], &cfg).unwrap().holds);

        let f = Expr::int(fz.int(-3, 3)) - (&x + fz.int(4, 8)).log();
        prop_assert!(solves(&system, std::slice::from_ref(&f), &cfg));
        let mut at_f = HashMap::new();
        at_f.insert(ctx.u_sym(0, &twist_core::MultiIndex::ode(0)), f.clone());
        let q = substitute(&phi, &at_f) - substitute(&xi, &at_f) * diff(&f, &xs);
        // Halving ε must quarter the residual.
        let residual = |eps: Expr| {
            let d1 = diff(&(&f + eps * &q), &xs);
            diff(&d1, &xs) - d1.powi(2)
        };
        let (r1, r2) = (residual(Expr::rat(1, 10_000)), residual(Expr::rat(1, 20_000)));
        for k in 0..9 {
            let xv = -2.0 + 0.5 * k as f64;
            let point = HashMap::from([(xs.clone(), xv)]);
            let (a, b) = (eval_numeric(&r1, &point).unwrap(), eval_numeric(&r2, &point).unwrap());
            prop_assert!(a.abs() <= 1e-4, "residual {} at x = {}", a, xv);
            prop_assert!(a.abs() < 1e-11 || b.abs() <= 0.3 * a.abs(), "residuals {} and {} at x = {}", a, b, xv);
        }
    }
}
