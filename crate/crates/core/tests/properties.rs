use conformable_core::calculus::{
    i_alpha, scaled_residual, t_alpha_limit, t_alpha_reduction, DerivativeOptions,
};
use conformable_core::expr::{BinaryOp, Func, UnaryOp};
use conformable_core::fde::{solve_ivp, solve_span};
use conformable_core::structure::{abel_predict, build_fundamental_set};
use conformable_core::*;
use proptest::prelude::*;

fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        Just(Expr::Variable),
        (0.0f64..100.0).prop_map(Expr::Constant),
        (0u32..20).prop_map(|k| Expr::Constant(k as f64)),
    ];
    leaf.prop_recursive(5, 40, 2, |inner| {
        let func = prop_oneof![
            Just(Func::Sin),
            Just(Func::Cos),
            Just(Func::Tan),
            Just(Func::Exp),
            Just(Func::Ln),
            Just(Func::Sqrt),
            Just(Func::Abs),
        ];
        let op = prop_oneof![
            Just(BinaryOp::Add),
            Just(BinaryOp::Sub),
            Just(BinaryOp::Mul),
            Just(BinaryOp::Div),
            Just(BinaryOp::Pow),
        ];
        prop_oneof![
            inner
                .clone()
                .prop_map(|e| Expr::Unary(UnaryOp::Neg, Box::new(e))),
            (func, inner.clone()).prop_map(|(f, e)| Expr::Unary(UnaryOp::Func(f), Box::new(e))),
            (op, inner.clone(), inner).prop_map(|(o, a, b)| Expr::Binary(
                o,
                Box::new(a),
                Box::new(b)
            )),
        ]
    })
}

fn same_outcome(a: Result<f64>, b: Result<f64>) -> bool {
    match (a, b) {
        (Ok(x), Ok(y)) => x.to_bits() == y.to_bits(),
        (Err(_), Err(_)) => true,
        _ => false,
    }
}

proptest! {
    #[test]
    fn display_round_trips(e in arb_expr()) {
        let text = e.to_string();
        let back = Expr::parse(&text).unwrap();
        prop_assert_eq!(&back, &e, "{}", text);
    }

    #[test]
    fn reparsed_eval_is_bit_identical(e in arb_expr(), t in 0.01f64..20.0) {
        let back = Expr::parse(&e.to_string()).unwrap();
        prop_assert!(same_outcome(e.eval(t), back.eval(t)));
    }

    #[test]
    fn s_substitution_inverts(a in 0.05f64..=1.0, t in 1e-3f64..1e3) {
        let alpha = AlphaOrder::new(a).unwrap();
        let back = alpha.from_s(alpha.to_s(t));
        prop_assert!((back - t).abs() <= 1e-12 * t);
    }

    #[test]
    fn power_rule(a in 0.2f64..=1.0, k in -2.0f64..4.0, t in 0.5f64..8.0) {
        let alpha = AlphaOrder::new(a).unwrap();
        let f = RealFunction::from_fn(move |x| x.powf(k));
        let exact = k * t.powf(k - a);
        let lim = t_alpha_limit(&f, alpha, t, &DerivativeOptions::default()).unwrap();
        let red = t_alpha_reduction(&f, alpha, t).unwrap();
        prop_assert!(scaled_residual(lim, exact) <= 1e-6);
        prop_assert!(scaled_residual(red, exact) <= 1e-6);
    }

    #[test]
    fn derivative_is_linear(
        a in -5.0f64..5.0, b in -5.0f64..5.0, alpha in 0.2f64..=1.0, t in 0.5f64..5.0,
    ) {
        let alpha = AlphaOrder::new(alpha).unwrap();
        let f = RealFunction::parse("sin(t) + t^2").unwrap();
        let g = RealFunction::parse("exp(-t)").unwrap();
        let lhs = t_alpha_reduction(&f.linear_combination(a, &g, b), alpha, t).unwrap();
        let rhs = a * t_alpha_reduction(&f, alpha, t).unwrap()
            + b * t_alpha_reduction(&g, alpha, t).unwrap();
        prop_assert!(scaled_residual(lhs, rhs) <= 1e-6);
    }

    #[test]
    fn integral_of_constant(c in -10.0f64..10.0, alpha in 0.1f64..=1.0, a in 0.0f64..2.0, w in 0.0f64..5.0) {
        let alpha = AlphaOrder::new(alpha).unwrap();
        let t = a + w;
        let got = i_alpha(&RealFunction::constant(c), alpha, a, t).unwrap();
        let p = alpha.value();
        let exact = c * (t.powf(p) - a.powf(p)) / p;
        prop_assert!(scaled_residual(got, exact) <= 1e-9);
    }

    #[test]
    fn scaled_residual_is_symmetric(a in -1e6f64..1e6, b in -1e6f64..1e6) {
        prop_assert_eq!(scaled_residual(a, b), scaled_residual(b, a));
        prop_assert_eq!(scaled_residual(a, a), 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn first_order_matches_closed_form(
        alpha in 0.3f64..=1.0, c0 in -1.0f64..1.0, c1 in -0.5f64..0.5, y0 in -2.0f64..2.0,
    ) {
        let fde = SequentialFde::parse(alpha, &[&format!("{c0} + {c1}*t")], "0", (0.1, 10.0)).unwrap();
        let traj = solve_ivp(&fde, &InitialCondition::new(1.0, vec![y0]), 3.0, &SolveOptions::default()).unwrap();
        let a = alpha;
        for t in [1.3f64, 2.0, 2.7, 3.0] {
            let mu = c0 * (t.powf(a) - 1.0) / a + c1 * (t.powf(a + 1.0) - 1.0) / (a + 1.0);
            let exact = y0 * (-mu).exp();
            let got = traj.value_at(t).unwrap();
            prop_assert!((got - exact).abs() <= 1e-6 * (1.0 + exact.abs()), "t={} {} vs {}", t, got, exact);
        }
    }

    #[test]
    fn abel_holds_for_constant_coefficients(
        alpha in 0.3f64..=1.0, p0 in -1.0f64..1.0, p1 in -1.0f64..1.0, p2 in -1.0f64..1.0,
    ) {
        let fde = SequentialFde::parse(alpha, &[&p0.to_string(), &p1.to_string(), &p2.to_string()], "0", (0.1, 10.0)).unwrap();
        let set = build_fundamental_set(&fde, 2.0, (1.0, 4.0), &SolveOptions::default()).unwrap();
        for t in [1.0f64, 1.7, 3.2, 4.0] {
            let measured = set.wronskian_at(t).unwrap().det;
            let predicted = abel_predict(&fde, set.w_at_t0(), 2.0, t).unwrap();
            prop_assert!((measured - predicted).abs() <= 1e-6 * (1.0 + predicted.abs()));
            prop_assert!(measured > 0.0);
        }
    }

    #[test]
    fn trajectory_combination_is_pointwise(
        c1 in -3.0f64..3.0, c2 in -3.0f64..3.0, t in 1.0f64..4.0,
    ) {
        let fde = SequentialFde::parse(0.6, &["1 + 0.1*t", "0.3"], "0", (0.1, 10.0)).unwrap();
        let opts = SolveOptions::default();
        let y1 = solve_span(&fde, &InitialCondition::canonical(2.0, 2, 0), (1.0, 4.0), &opts).unwrap();
        let y2 = solve_span(&fde, &InitialCondition::canonical(2.0, 2, 1), (1.0, 4.0), &opts).unwrap();
        let combo = Trajectory::linear_combination(&[(c1, &y1), (c2, &y2)]).unwrap();
        let expected = c1 * y1.value_at(t).unwrap() + c2 * y2.value_at(t).unwrap();
        prop_assert!((combo.value_at(t).unwrap() - expected).abs() <= 1e-12 * (1.0 + expected.abs()));
    }
}
