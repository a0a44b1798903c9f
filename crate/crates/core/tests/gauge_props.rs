mod common;

use common::{base_vars, Fuzz};
use proptest::prelude::*;
use twist_core::error::Error;
use twist_core::gauge::{lambda_from_beta, mu_from_a, sigma_from_gamma, verify_gauge_lambda, verify_gauge_sigma, Direction};
use twist_core::jet::SolvedSystem;
use twist_core::oracle::is_zero;
use twist_core::prolong::{check_maurer_cartan, compare_tables, prolong, prolong_lambda, prolong_sigma_fields};
use twist_core::reduction::check_symmetry;
use twist_core::{EqualityConfig, Expr, JetContext, VectorField};

fn direction(fz: &mut Fuzz) -> Direction {
    if fz.coin() {
        Direction::Forward
    } else {
        Direction::Inverse
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn scalar_gauge_diagram_commutes(seed in any::<u64>(), p in 1usize..=2, n in 1usize..=3) {
        let mut fz = Fuzz::new(seed);
        let ctx = JetContext::ode(p, n).unwrap();
        let x = fz.field(&ctx, 2);
        let beta = fz.nowhere_zero(&base_vars(&ctx));
        let dir = direction(&mut fz);
        prop_assert!(verify_gauge_lambda(&x, &beta, n, dir, &EqualityConfig::with_seed(seed)).unwrap().holds);
    }

    #[test]
    fn pure_gauge_vector_twists_are_flat(seed in any::<u64>(), q in 1usize..=2) {
        let mut fz = Fuzz::new(seed);
        let ctx = JetContext::new(q, 2, 2).unwrap();
        let cfg = EqualityConfig::with_seed(seed);
        let a = fz.invertible(&base_vars(&ctx), 2);
        let dir = direction(&mut fz);
        let ls = mu_from_a(&ctx, &a, dir, &cfg).unwrap();
        prop_assert!(check_maurer_cartan(&ctx, &ls, &cfg).unwrap().holds);
    }

    /// With `X = γW` and `λ = −(D_x γ)/γ`, the λ-prolongation of `X` is
    /// `γ · W^(n)`. Reading the field as `γ⁻¹W` instead breaks the identity
    /// already at order zero, where it compares `γ⁻¹W` with `γW`.
    #[test]
    fn inverse_scalar_gauge(seed in any::<u64>(), p in 1usize..=2, n in 1usize..=3) {
        let mut fz = Fuzz::new(seed);
        let ctx = JetContext::ode(p, n).unwrap();
        let cfg = EqualityConfig::with_seed(seed);
        let w = fz.field(&ctx, 2);
        let gamma = fz.nowhere_zero(&base_vars(&ctx));
        let lam = -(ctx.with_order(n + 1).total_derivative(&gamma, 0).unwrap() / &gamma);
        prop_assert!(is_zero(&(&lam - lambda_from_beta(&ctx, &gamma, Direction::Inverse).unwrap()), &cfg).unwrap().equal);

        let target = prolong(&w, n).unwrap().scaled(&gamma);
        let ours = prolong_lambda(&w.scaled(&gamma), &lam, n).unwrap();
        prop_assert!(compare_tables(&ours, &target, &cfg).unwrap().equal);

        if !is_zero(&(gamma.powi(2) - 1), &cfg).unwrap().equal {
            let literal = prolong_lambda(&w.scaled(&gamma.recip()), &lam, n).unwrap();
            prop_assert!(!compare_tables(&literal, &target, &cfg).unwrap().equal);
        }
    }

    #[test]
    fn inverse_module_gauge(seed in any::<u64>(), r in 1usize..=3) {
        let mut fz = Fuzz::new(seed);
        let ctx = JetContext::ode(1 + (seed % 2) as usize, 2).unwrap();
        let fields: Vec<VectorField> = (0..r).map(|_| fz.field(&ctx, 2)).collect();
        let gamma = fz.invertible(&base_vars(&ctx), r);
        match verify_gauge_sigma(&fields, &gamma, 2, Direction::Inverse, &EqualityConfig::with_seed(seed)) {
            Ok(v) => prop_assert!(v.holds),
            Err(Error::RankDegenerate) => prop_assume!(false),
            Err(e) => prop_assert!(false, "{}", e),
        }
    }

    /// `u'' = F(x, u')` is invariant under `∂_u`; so is its transform by any
    /// scalar gauge, once the field is twisted with the inverse gauge.
    #[test]
    fn symmetry_survives_scalar_gauge(seed in any::<u64>()) {
        let mut fz = Fuzz::new(seed);
        let ctx = JetContext::ode(1, 2).unwrap();
        let cfg = EqualityConfig::with_seed(seed);
        let rhs = fz.poly(&[ctx.x(0), ctx.u_k(0, 1)], 2, 4);
        let system = SolvedSystem::ode_uniform(ctx.clone(), vec![rhs]).unwrap();
        let du = VectorField::vertical(&ctx, vec![Expr::one()]).unwrap();
        prop_assert!(check_symmetry(&system, &[prolong(&du, 2).unwrap()], &cfg).unwrap().holds);
        let gamma = fz.nowhere_zero(&base_vars(&ctx));
        let lam = lambda_from_beta(&ctx, &gamma, Direction::Inverse).unwrap();
        let y = prolong_lambda(&du.scaled(&gamma), &lam, 2).unwrap();
        prop_assert!(check_symmetry(&system, &[y], &cfg).unwrap().holds);
    }

    /// `u'' = g(x)` is invariant under `∂_u` and `x∂_u`; the module gauge
    /// keeps both twisted combinations symmetries.
    #[test]
    fn symmetry_survives_module_gauge(seed in any::<u64>()) {
        let mut fz = Fuzz::new(seed);
        let ctx = JetContext::ode(1, 2).unwrap();
        let cfg = EqualityConfig::with_seed(seed);
        let x = ctx.x(0);
        let system = SolvedSystem::ode_uniform(ctx.clone(), vec![fz.poly(std::slice::from_ref(&x), 3, 3)]).unwrap();
        let ws = vec![
            VectorField::vertical(&ctx, vec![Expr::one()]).unwrap(),
            VectorField::vertical(&ctx, vec![x.clone()]).unwrap(),
        ];
        let gamma = fz.invertible(&base_vars(&ctx), 2);
        let sigma = sigma_from_gamma(&ctx, &gamma, Direction::Inverse, &cfg).unwrap();
        let ys = prolong_sigma_fields(&VectorField::combine(&gamma, &ws).unwrap(), &sigma, 2).unwrap();
        prop_assert!(check_symmetry(&system, &ys, &cfg).unwrap().holds);
    }
}
