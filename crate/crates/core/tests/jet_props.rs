mod common;

use common::{jet_vars, Fuzz};
use proptest::prelude::*;
use twist_core::calculus::{diff, substitute};
use twist_core::oracle::{equal_numeric, is_zero};
use twist_core::{EqualityConfig, Expr, JetContext};

fn test_function(fz: &mut Fuzz, ctx: &JetContext, order: usize) -> Expr {
    let vars = jet_vars(ctx, order);
    if fz.coin() {
        fz.poly(&vars, 3, 5)
    } else {
        fz.poly(&vars, 2, 3) * fz.poly(&vars, 1, 2).sin() + fz.nowhere_zero(&vars)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn total_derivatives_commute(seed in any::<u64>(), p in 1usize..=2) {
        let mut fz = Fuzz::new(seed);
        let ctx = JetContext::new(2, p, 4).unwrap();
        let f = test_function(&mut fz, &ctx, 2);
        let d01 = ctx.total_derivative(&ctx.total_derivative(&f, 0).unwrap(), 1).unwrap();
        let d10 = ctx.total_derivative(&ctx.total_derivative(&f, 1).unwrap(), 0).unwrap();
        prop_assert!(equal_numeric(&d01, &d10, &EqualityConfig::with_seed(seed)).unwrap().equal);
    }

    #[test]
    fn total_derivative_is_a_derivation(seed in any::<u64>(), q in 1usize..=2) {
        let mut fz = Fuzz::new(seed);
        let ctx = JetContext::new(q, 2, 3).unwrap();
        let f = test_function(&mut fz, &ctx, 2);
        let g = test_function(&mut fz, &ctx, 2);
        let k = fz.int(-3, 3);
        let cfg = EqualityConfig::with_seed(seed);
        for i in 0..q {
            let d = |e: &Expr| ctx.total_derivative(e, i).unwrap();
            let leibniz = d(&(&f * &g)) - (d(&f) * &g + &f * d(&g));
            prop_assert!(is_zero(&leibniz, &cfg).unwrap().equal);
            let linear = d(&(&f + &g * k)) - (d(&f) + d(&g) * k);
            prop_assert!(is_zero(&linear, &cfg).unwrap().equal);
            prop_assert!(d(&Expr::int(k)).is_zero());
        }
    }

    #[test]
    fn restriction_to_sections_intertwines_derivatives(seed in any::<u64>(), q in 1usize..=2) {
        let mut fz = Fuzz::new(seed);
        let ctx = JetContext::new(q, 2, 3).unwrap();
        let xs: Vec<Expr> = (0..q).map(|i| ctx.x(i)).collect();
        let section: Vec<Expr> = (0..2).map(|_| fz.poly(&xs, 3, 4) + fz.poly(&xs, 1, 2).cos()).collect();
        let f = test_function(&mut fz, &ctx, 2);
        let bind = ctx.section_bindings(&section, 3).unwrap();
        let cfg = EqualityConfig::with_seed(seed);
        for i in 0..q {
            let lhs = substitute(&ctx.total_derivative(&f, i).unwrap(), &bind);
            let rhs = diff(&substitute(&f, &bind), &ctx.x_sym(i));
            prop_assert!(equal_numeric(&lhs, &rhs, &cfg).unwrap().equal);
        }
    }
}
