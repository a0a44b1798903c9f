mod common;

use common::{base_vars, jet_vars, Fuzz};
use proptest::prelude::*;
use twist_core::gauge::{mu_from_a, Direction};
use twist_core::oracle::equal_numeric;
use twist_core::prolong::{
    commutator_identity_report, compare_tables, mu_difference, prolong, prolong_lambda, prolong_mu, prolong_sigma_fields,
};
use twist_core::{EqualityConfig, Expr, JetContext, MatrixExpr, MultiIndex, VectorField};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn twists_degenerate_to_each_other(seed in any::<u64>(), p in 1usize..=2, n in 1usize..=3) {
        let mut fz = Fuzz::new(seed);
        let ctx = JetContext::ode(p, n).unwrap();
        let cfg = EqualityConfig::with_seed(seed);
        let x = fz.field(&ctx, 2);
        let lam = fz.poly(&jet_vars(&ctx, 1), 1, 2);
        let std = prolong(&x, n).unwrap();
        let scalar = prolong_lambda(&x, &lam, n).unwrap();
        prop_assert!(compare_tables(&prolong_lambda(&x, &Expr::zero(), n).unwrap(), &std, &cfg).unwrap().equal);
        prop_assert!(compare_tables(&prolong_mu(&x, &[MatrixExpr::zeros(p, p)], n, false).unwrap(), &std, &cfg).unwrap().equal);
        let mu = prolong_mu(&x, &[MatrixExpr::scalar(p, &lam)], n, false).unwrap();
        prop_assert!(compare_tables(&mu, &scalar, &cfg).unwrap().equal);
        let sigma = prolong_sigma_fields(std::slice::from_ref(&x), &MatrixExpr::scalar(1, &lam), n).unwrap();
        prop_assert!(compare_tables(&sigma[0], &scalar, &cfg).unwrap().equal);
    }

    #[test]
    fn standard_prolongation_is_path_independent(seed in any::<u64>(), p in 1usize..=2) {
        let mut fz = Fuzz::new(seed);
        let ctx = JetContext::new(2, p, 3).unwrap();
        let x = fz.lie_point(&ctx, 2);
        let y = prolong(&x, 3).unwrap();
        prop_assert!(y.path_check().unwrap().equal);
    }

    #[test]
    fn flat_mu_prolongation_is_path_independent(seed in any::<u64>()) {
        let mut fz = Fuzz::new(seed);
        let ctx = JetContext::new(2, 2, 2).unwrap();
        let cfg = EqualityConfig::with_seed(seed);
        let a = fz.invertible(&base_vars(&ctx), 2);
        let dir = if fz.coin() { Direction::Forward } else { Direction::Inverse };
        let ls = mu_from_a(&ctx, &a, dir, &cfg).unwrap();
        let y = prolong_mu(&fz.field(&ctx, 1), &ls, 2, false).unwrap();
        prop_assert!(y.path_check().unwrap().equal);
    }

    #[test]
    fn mu_difference_vanishes_with_the_characteristic(seed in any::<u64>()) {
        let mut fz = Fuzz::new(seed);
        let ctx = JetContext::ode(2, 3).unwrap();
        let cfg = EqualityConfig::with_seed(seed);
        let ls = vec![fz.matrix(&jet_vars(&ctx, 1), 2, 1)];
        let qf = fz.vertical(&ctx, 2);
        let d = mu_difference(&qf, &ls, 3, &cfg).unwrap();
        let psi = prolong_mu(&qf, &ls, 3, true).unwrap();
        let phi = prolong(&qf, 3).unwrap();
        for a in 0..2 {
            for k in 0..=3u32 {
                let j = MultiIndex::ode(k);
                prop_assert!(equal_numeric(psi.psi(a, &j), &(phi.psi(a, &j) + &d.table[a][&j]), &cfg).unwrap().equal);
            }
        }
        // The zero characteristic has zero difference at every order.
        let zero = VectorField::vertical(&ctx, vec![Expr::zero(), Expr::zero()]).unwrap();
        let dz = mu_difference(&zero, &ls, 3, &cfg).unwrap();
        prop_assert!(dz.table.iter().all(|col| col.values().all(|e| e.is_zero())));
    }

    #[test]
    fn module_twist_commutator_identity(seed in any::<u64>(), r in 1usize..=3, n in 1usize..=3) {
        let mut fz = Fuzz::new(seed);
        let ctx = JetContext::ode(1 + (seed % 2) as usize, n).unwrap();
        let fields: Vec<VectorField> = (0..r).map(|_| fz.field(&ctx, 2)).collect();
        let sigma = fz.matrix(&jet_vars(&ctx, 1), r, 1);
        let ys = prolong_sigma_fields(&fields, &sigma, n).unwrap();
        let results = commutator_identity_report(&ys, 6, &EqualityConfig::with_seed(seed)).unwrap();
        prop_assert!(results.iter().all(|r| r.holds));
    }
}
