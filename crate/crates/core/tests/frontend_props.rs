mod common;

use common::{jet_vars, recanon, Fuzz};
use proptest::prelude::*;
use twist_core::frontend::{line_col, parse_expression, parse_problem, run_problem};
use twist_core::JetContext;

const PROBLEM: &str = "\
[context]
q = 1
p = 1
n = 2
params = c

[fields]
U phi = 1
V xi = 1

[twist L]
kind = lambda
lambda = c

[equations]
u_[2] = c*u_[1] + (u_[1] - c*u)^2

[tasks]
prolong U twist=L n=2
check-symmetry U twist=L
check-symmetry V
invariants U twist=L
";

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn printed_expressions_reparse(seed in any::<u64>(), p in 1usize..=2) {
        let ctx = JetContext::ode(p, 3).unwrap().with_params(&["c", "k"]).unwrap();
        let mut fz = Fuzz::new(seed);
        let e = fz.expr(&jet_vars(&ctx, 3), 4);
        let text = e.to_string();
        let back = parse_expression(&text, &ctx);
        prop_assert!(back.is_ok(), "`{}`: {}", text, back.unwrap_err());
        prop_assert_eq!(back.unwrap(), recanon(&e));
    }

    #[test]
    fn diagnostics_point_into_the_source(seed in any::<u64>()) {
        let mut fz = Fuzz::new(seed);
        let mut src: Vec<char> = PROBLEM.chars().collect();
        for _ in 0..fz.int(1, 3) {
            let at = fz.int(0, src.len() as i64 - 1) as usize;
            if fz.coin() {
                src.remove(at);
            } else {
                src.insert(at, *fz.pick(&['(', ')', '=', '*', '[', ']', '#', 'z', '\n', ',']));
            }
        }
        let src: String = src.into_iter().collect();
        if let Err(d) = parse_problem(&src) {
            prop_assert!(d.offset <= src.len());
            prop_assert_eq!((d.line, d.col), line_col(&src, d.offset));
            prop_assert!(!d.message.is_empty());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn reports_are_byte_identical(seed in any::<u64>()) {
        let mut problem = parse_problem(PROBLEM).unwrap();
        problem.oracle.seed = seed;
        let a = run_problem(&problem);
        let b = run_problem(&parse_problem(PROBLEM).map(|mut p| { p.oracle.seed = seed; p }).unwrap());
        prop_assert_eq!(a.to_text(), b.to_text());
        prop_assert_eq!(a.to_json(), b.to_json());
        let seed_line = format!("seed: {}", seed);
        prop_assert!(a.to_text().contains(&seed_line));
    }
}
