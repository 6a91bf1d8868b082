use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use shift_periodic::cli::expr::{parse_expression, BinOp, Constant, Env, Expr, Func, Var};
use shift_periodic::cli::problem_file::{load_problem_str, COUPLED_EXAMPLE};
use shift_periodic::deltacalc::{mat_norm, vec_norm, Extension, GridFunction};
use shift_periodic::floquet::{peano_baker, theta, transition_matrix, MatrixFunction};
use shift_periodic::solver::{
    check_conditions, operator_b, operator_c, operator_h, ConditionOptions, PeriodicVectorFunction,
};
use shift_periodic::timescale::ShiftSystem;

fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0u32..1000, 0u32..4).prop_map(|(m, d)| Expr::Num(m as f64 / 10f64.powi(d as i32))),
        Just(Expr::Var(Var::T)),
        (0usize..3).prop_map(|k| Expr::Var(Var::X(k))),
        (0usize..3).prop_map(|k| Expr::Var(Var::U(k))),
        Just(Expr::Const(Constant::Pi)),
        Just(Expr::Const(Constant::E)),
    ];
    leaf.prop_recursive(4, 32, 2, |inner| {
        let op = prop_oneof![
            Just(BinOp::Add),
            Just(BinOp::Sub),
            Just(BinOp::Mul),
            Just(BinOp::Div),
            Just(BinOp::Pow)
        ];
        let unary = prop_oneof![
            Just(Func::Sin),
            Just(Func::Cos),
            Just(Func::Exp),
            Just(Func::Ln),
            Just(Func::Sqrt),
            Just(Func::Abs),
            Just(Func::Sign)
        ];
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
            (op, inner.clone(), inner.clone()).prop_map(|(o, a, b)| Expr::Bin(o, Box::new(a), Box::new(b))),
            (unary, inner.clone()).prop_map(|(f, a)| Expr::Call(f, vec![a])),
            (prop_oneof![Just(Func::Pow), Just(Func::IntPow)], inner.clone(), inner)
                .prop_map(|(f, a, b)| Expr::Call(f, vec![a, b])),
        ]
    })
}

proptest! {
    #[test]
    fn printed_expressions_parse_back(e in arb_expr()) {
        let printed = e.to_string();
        let parsed = parse_expression(&printed).unwrap();
        prop_assert_eq!(&parsed, &e);
        prop_assert_eq!(parsed.to_string(), printed);
    }

    #[test]
    fn parse_print_parse_is_stable(e in arb_expr(), spaces in 0usize..3) {
        let src = e.to_string().replace(' ', &" ".repeat(spaces));
        let once = parse_expression(&src).unwrap();
        let twice = parse_expression(&once.to_string()).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn evaluation_is_deterministic(e in arb_expr(), t in 0.5f64..4.0) {
        let env = Env { t, x: &[0.3, -1.2, 2.0], u: &[1.5, 0.1, -0.7] };
        let a = e.eval(&env).map_err(|err| err.message);
        let b = e.eval(&env).map_err(|err| err.message);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn theta_on_integers_is_elapsed_time(t0 in -30i64..30, k in 0i64..200) {
        let sys = ShiftSystem::integers(t0);
        prop_assert_eq!(theta(&sys, (t0 + 1) as f64, (t0 + k) as f64).unwrap(), k as f64);
    }

    #[test]
    fn shifts_invert_on_geometric_scale(i in 0i32..10, j in -20i32..20) {
        let sys = ShiftSystem::geometric(3.0).unwrap();
        let (s, t) = (3f64.powi(i), 3f64.powi(j));
        let forward = sys.shift_plus(s, t).unwrap();
        prop_assert_eq!(sys.shift_minus(s, forward).unwrap(), t);
        prop_assert_eq!(sys.sigma(forward).unwrap(), sys.shift_plus(s, sys.sigma(t).unwrap()).unwrap());
    }

    #[test]
    fn transition_agrees_with_peano_baker(
        entries in proptest::collection::vec(-0.5f64..0.5, 8),
        steps in 1i32..8,
        start in -3i32..3,
    ) {
        let sys = ShiftSystem::geometric(2.0).unwrap();
        let c1 = DMatrix::from_row_slice(2, 2, &entries[..4]);
        let c2 = DMatrix::from_row_slice(2, 2, &entries[4..]);
        let a = MatrixFunction::new(&sys, 2, move |t| (&c1 + &c2 * t.ln().cos()) / t);
        let t0 = 2f64.powi(start);
        let t = 2f64.powi(start + steps);
        let tm = transition_matrix(&a, t, t0).unwrap();
        let pb = peano_baker(&a, t, t0, steps as usize).unwrap();
        prop_assert!(mat_norm(&(tm - pb)) <= 1e-12);
    }

    #[test]
    fn delta_periodic_transition_is_shift_invariant(
        entries in proptest::collection::vec(-0.5f64..0.5, 3),
        t_idx in 0usize..3,
    ) {
        let sys = ShiftSystem::power(2.0).unwrap();
        let window = sys.window(8.0).unwrap();
        let values = window.iter().zip(&entries).map(|(&t, &v)| DMatrix::from_element(1, 1, v / t)).collect();
        let g = GridFunction::from_window(&sys, 8.0, values, Extension::DeltaPeriodic).unwrap();
        let a = MatrixFunction::from_grid(g, 1);
        let t = window[t_idx];
        let lhs = transition_matrix(&a, sys.shift_plus(8.0, t).unwrap(), 8.0).unwrap();
        let rhs = transition_matrix(&a, t, 1.0).unwrap();
        prop_assert!(mat_norm(&(lhs - rhs)) <= 1e-12);
    }

    #[test]
    fn periodic_functions_repeat(vals in proptest::collection::vec(-5.0f64..5.0, 3), k in -6i64..6, i in 0usize..3) {
        let sys = ShiftSystem::power(2.0).unwrap();
        let x = PeriodicVectorFunction::from_values(
            &sys,
            8.0,
            vals.iter().map(|&v| DVector::from_element(1, v)).collect(),
        ).unwrap();
        let t = x.window_points()[i];
        let shifted = sys.iterate_shift(8.0, t, k).unwrap();
        prop_assert_eq!(x.evaluate(shifted).unwrap(), x.evaluate(t).unwrap());
    }

    #[test]
    fn operators_respect_their_bounds(seed in any::<u64>()) {
        let lp = load_problem_str(COUPLED_EXAMPLE).unwrap();
        let p = &lp.problem;
        let rep = check_conditions(p, None, &ConditionOptions::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, y) = (p.random_state(&mut rng, 1.0), p.random_state(&mut rng, 1.0));
        let d = x.distance(&y);
        let bd = operator_b(p, &x).unwrap().distance(&operator_b(p, &y).unwrap());
        prop_assert!(bd <= rep.e1 * d + 1e-15);
        let hd = operator_h(p, &x).unwrap().distance(&operator_h(p, &y).unwrap());
        prop_assert!(hd <= rep.contraction_constant * d + 1e-12);
        // |Cx| ≤ r·w·max |A(u)Q(u, x(δ₋(s,u))) + G(u, x(u), x(δ₋(s,u)))|
        let sys = p.system();
        let mut sup = 0.0f64;
        let end = sys.shift_plus(p.period(), *p.window().last().unwrap()).unwrap();
        for u in sys.scale().points_in(sys.t0(), end).unwrap() {
            if u >= end { break; }
            let xu = x.evaluate(u).unwrap();
            let xd = x.evaluate(sys.shift_minus(p.delay(), u).unwrap()).unwrap();
            let f = p.a().eval(u).unwrap() * p.q(u, &xd).unwrap() + p.g(u, &xu, &xd).unwrap();
            sup = sup.max(vec_norm(&f));
        }
        let cx = operator_c(p, &x).unwrap().norm();
        prop_assert!(cx <= rep.r * rep.window_length * sup * (1.0 + 1e-12));
    }
}
