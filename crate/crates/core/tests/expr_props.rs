mod common;

use std::collections::HashMap;

use common::{recanon, Fuzz};
use proptest::prelude::*;
use twist_core::calculus::diff;
use twist_core::error::Error;
use twist_core::eval::eval_numeric;
use twist_core::expr::{expand, simplify};
use twist_core::oracle::equal_numeric;
use twist_core::{EqualityConfig, Expr, Symbol};

fn vars() -> Vec<Expr> {
    ["x", "y", "z"].iter().map(|s| Expr::sym(s)).collect()
}

/// Central differences with step `h`, at order 2 and order 4.
fn stencils(e: &Expr, point: &HashMap<Symbol, f64>, v: &Symbol, h: f64) -> Option<(f64, f64)> {
    let at = |dx: f64| {
        let mut p = point.clone();
        *p.get_mut(v).unwrap() += dx;
        eval_numeric(e, &p).ok().filter(|f| f.is_finite())
    };
    let (m2, m1, p1, p2) = (at(-2.0 * h)?, at(-h)?, at(h)?, at(2.0 * h)?);
    let second = (p1 - m1) / (2.0 * h);
    let fourth = (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * h);
    Some((second, fourth))
}

fn oracle_result(r: twist_core::Result<twist_core::OracleReport>) -> Option<bool> {
    match r {
        Ok(rep) => Some(rep.equal),
        Err(Error::SingularOnBox) => None,
        Err(e) => panic!("oracle error: {}", e),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn derivative_matches_finite_differences(seed in any::<u64>()) {
        let mut fz = Fuzz::new(seed);
        let vs = vars();
        let e = fz.expr(&vs, 3);
        let v = fz.pick(&vs).as_sym().unwrap().clone();
        let d = diff(&e, &v);
        let mut checked = 0;
        for k in 0..20 {
            let point: HashMap<Symbol, f64> =
                vs.iter().map(|s| (s.as_sym().unwrap().clone(), fz.int(-150, 150) as f64 / 100.0 + k as f64 * 1e-3)).collect();
            let (Ok(fx), Ok(dx)) = (eval_numeric(&e, &point), eval_numeric(&d, &point)) else { continue };
            if !fx.is_finite() || !dx.is_finite() {
                continue;
            }
            let Some((s2, s4)) = stencils(&e, &point, &v, 1e-3) else { continue };
            let scale = 1.0f64.max(dx.abs()).max(fx.abs());
            // Points where the two stencils disagree sit near a singularity.
            if (s2 - s4).abs() > 1e-2 * scale {
                continue;
            }
            prop_assert!((s4 - dx).abs() <= 1e-5 * scale, "d/d{} of {} = {} gave {} vs {} at {:?}", v, e, d, dx, s4, point);
            checked += 1;
        }
        prop_assume!(checked > 0);
    }

    #[test]
    fn simplify_and_expand_preserve_values(seed in any::<u64>()) {
        let mut fz = Fuzz::new(seed);
        let e = fz.expr(&vars(), 3);
        let cfg = EqualityConfig::with_seed(seed);
        for (name, s) in [("simplify", simplify(&e)), ("expand", expand(&e))] {
            if let Some(eq) = oracle_result(equal_numeric(&e, &s, &cfg)) {
                prop_assert!(eq, "{} changed the value of {}: {}", name, e, s);
            }
        }
    }

    #[test]
    fn canonical_form_is_a_fixed_point(seed in any::<u64>()) {
        let mut fz = Fuzz::new(seed);
        let e = fz.expr(&vars(), 4);
        let once = recanon(&e);
        prop_assert_eq!(&once, &e);
        prop_assert_eq!(recanon(&once), once);
        let s = simplify(&e);
        prop_assert_eq!(simplify(&s), s);
    }

    #[test]
    fn equality_oracle_is_symmetric(seed in any::<u64>()) {
        let mut fz = Fuzz::new(seed);
        let vs = vars();
        let a = fz.expr(&vs, 3);
        let b = match fz.int(0, 2) {
            0 => expand(&a),
            1 => &a + fz.expr(&vs, 1),
            _ => fz.expr(&vs, 3),
        };
        let cfg = EqualityConfig::with_seed(seed);
        let ab = oracle_result(equal_numeric(&a, &b, &cfg));
        let ba = oracle_result(equal_numeric(&b, &a, &cfg));
        prop_assert_eq!(ab, ba, "{} vs {}", a, b);
    }
}
