use super::*;
use proptest::prelude::*;
use rand::Rng;
use rand::SeedableRng;

const FRIEDMAN: &str = "10*sin(pi*x1*x2) + 20*(x3-0.5)**2 + 10*x4 + 5*x5";

fn xnames(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}

#[test]
fn parses_gravitation_shape() {
    let e = parse_expression("m1*m2/r**2", &["m1", "m2", "r"]).unwrap();
    let expected = Expr::binary(
        BinaryOp::Div,
        Expr::binary(
            BinaryOp::Mul,
            Expr::variable(0, "m1"),
            Expr::variable(1, "m2"),
        ),
        Expr::binary(BinaryOp::Pow, Expr::variable(2, "r"), Expr::Constant(2.0)),
    );
    assert_eq!(e, expected);
}

#[test]
fn parses_friedman_with_arity_five() {
    let e = parse_expression(FRIEDMAN, &xnames(5)).unwrap();
    assert_eq!(e.arity(), 5);
}

#[test]
fn reports_syntax_error_position() {
    let err = parse_expression("x1 +", &["x1"]).unwrap_err();
    match err {
        ParseError::Syntax { position, .. } => assert_eq!(position, 4),
        other => panic!("expected syntax error, got {other:?}"),
    }
}

#[test]
fn rejects_unknown_identifier() {
    let err = parse_expression("x1 + bogus", &["x1"]).unwrap_err();
    match err {
        ParseError::UnknownIdentifier { name, position } => {
            assert_eq!(name, "bogus");
            assert_eq!(position, 5);
        }
        other => panic!("expected unknown identifier, got {other:?}"),
    }
}

#[test]
fn pow_binds_tighter_than_unary_minus() {
    let e = parse_expression("-x1**2", &["x1"]).unwrap();
    assert_eq!(e.eval(&[3.0]), Some(-9.0));
    // And pow is right-associative.
    let e = parse_expression("2**3**2", &["x1"]).unwrap();
    assert_eq!(e.eval(&[0.0]), Some(512.0));
}

#[test]
fn negative_literals_fold() {
    let e = parse_expression("-2", &[] as &[&str]).unwrap();
    assert_eq!(e, Expr::Constant(-2.0));
    let e = parse_expression("-2**2", &[] as &[&str]).unwrap();
    assert_eq!(e.eval(&[]), Some(-4.0));
}

#[test]
fn accepts_scientific_notation_and_pi() {
    let e = parse_expression("6.6743e-11 * m1", &["m1"]).unwrap();
    assert_eq!(e.eval(&[2.0]), Some(2.0 * 6.6743e-11));
    let e = parse_expression("cos(pi)", &[] as &[&str]).unwrap();
    assert_eq!(e.eval(&[]), Some(-1.0));
}

#[test]
fn eval_basics() {
    let e = parse_expression("x1+x2", &xnames(2)).unwrap();
    assert_eq!(e.eval(&[1.0, 2.0]), Some(3.0));
}

#[test]
fn eval_domain_violations_are_undefined() {
    let log = parse_expression("log(x1)", &["x1"]).unwrap();
    assert_eq!(log.eval(&[-1.0]), None);
    assert_eq!(log.eval(&[0.0]), None);

    let div = parse_expression("x1 / x2", &xnames(2)).unwrap();
    assert_eq!(div.eval(&[1.0, 0.0]), None);

    let sqrt = parse_expression("sqrt(x1)", &["x1"]).unwrap();
    assert_eq!(sqrt.eval(&[-4.0]), None);

    // Non-finite intermediates do not cancel back to "defined".
    let hidden = parse_expression("1 / exp(x1)", &["x1"]).unwrap();
    assert_eq!(hidden.eval(&[1000.0]), None);

    // Non-integer exponent on a negative base.
    let pow = parse_expression("x1 ** 0.5", &["x1"]).unwrap();
    assert_eq!(pow.eval(&[-2.0]), None);
    // Integer exponent on a negative base is exact.
    let pow = parse_expression("x1 ** 3", &["x1"]).unwrap();
    assert_eq!(pow.eval(&[-2.0]), Some(-8.0));
}

#[test]
fn eval_friedman_at_half() {
    // 10*sin(pi/4) + 0 + 5 + 2.5, evaluated by hand.
    let expected = 10.0 * std::f64::consts::FRAC_PI_4.sin() + 5.0 + 2.5;
    assert!((expected - 14.571_067_811_865_476).abs() < 1e-12);
    let e = parse_expression(FRIEDMAN, &xnames(5)).unwrap();
    let got = e.eval(&[0.5; 5]).unwrap();
    assert!((got - expected).abs() < 1e-12);
}

#[test]
fn simplify_identities() {
    let e = parse_expression("(x1*1)+0", &["x1"]).unwrap();
    assert_eq!(e.simplify(), Expr::var(0));

    let e = parse_expression("2*3*x1", &["x1"]).unwrap();
    assert_eq!(
        e.simplify(),
        Expr::binary(BinaryOp::Mul, Expr::Constant(6.0), Expr::var(0))
    );

    let e = parse_expression("x1 - x1", &["x1"]).unwrap();
    assert_eq!(e.simplify(), Expr::Constant(0.0));

    let e = parse_expression("x1**1", &["x1"]).unwrap();
    assert_eq!(e.simplify(), Expr::var(0));

    let e = parse_expression("-(-x1)", &["x1"]).unwrap();
    assert_eq!(e.simplify(), Expr::var(0));
}

#[test]
fn simplify_division_guard_is_recorded_and_sound() {
    let e = parse_expression("x1/x1", &["x1"]).unwrap();
    let (s, notes) = simplify_with_notes(&e);
    assert_eq!(s, Expr::Constant(1.0));
    assert!(notes.iter().any(|n| n.rule.starts_with("x/x")));

    // Equivalence oracle: 1000 seeded nonzero points.
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let mut x: f64 = rng.gen_range(-100.0..100.0);
        if x == 0.0 {
            x = 1.0;
        }
        let orig = e.eval(&[x]).unwrap();
        let simp = s.eval(&[x]).unwrap();
        assert!((orig - simp).abs() <= 1e-12 * (1.0 + orig.abs()));
    }
}

#[test]
fn complexity_counts_after_simplification() {
    assert_eq!(Expr::var(0).complexity(), 1);
    let e = parse_expression("x1 + 2*x2", &xnames(2)).unwrap();
    assert_eq!(e.complexity(), 5);
    let e = parse_expression("(x1*1)+0", &["x1"]).unwrap();
    assert_eq!(e.complexity(), 1);
}

#[test]
fn variables_used_ignores_eliminated_variables() {
    let e = parse_expression("x1 + x3", &xnames(3)).unwrap();
    assert_eq!(
        e.variables_used().into_iter().collect::<Vec<_>>(),
        vec![0, 2]
    );

    let e = parse_expression("x1 + 0*x2", &xnames(2)).unwrap();
    assert_eq!(
        e.variables_used().into_iter().collect::<Vec<_>>(),
        vec![0]
    );

    let e = parse_expression(FRIEDMAN, &xnames(5)).unwrap();
    assert_eq!(
        e.variables_used().into_iter().collect::<Vec<_>>(),
        vec![0, 1, 2, 3, 4]
    );
}

#[test]
fn parsing_is_deterministic() {
    let a = parse_expression(FRIEDMAN, &xnames(5)).unwrap();
    let b = parse_expression(FRIEDMAN, &xnames(5)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.to_text(), b.to_text());
}

#[test]
fn equation_spec_round_trips_through_csv() {
    let specs = vec![
        EquationSpec::from_text("gravity", "m1*m2/r**2", vec![(1.0, 2.0), (1.0, 2.0), (0.5, 2.0)])
            .unwrap(),
        EquationSpec::from_text("friedman", FRIEDMAN, vec![(0.0, 1.0); 5]).unwrap(),
    ];
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("equations.csv");
    EquationSpec::write_csv(&specs, &path).unwrap();
    let back = EquationSpec::read_csv(&path).unwrap();
    assert_eq!(back.len(), 2);
    assert_eq!(back[0].name(), "gravity");
    assert_eq!(back[0].variables(), &["m1", "m2", "r"]);
    assert_eq!(back[1].p0(), 5);
    assert_eq!(back[1].expr(), specs[1].expr());
}

#[test]
fn equation_spec_validates() {
    // a_j >= b_j
    assert!(EquationSpec::from_text("bad", "x1", vec![(2.0, 1.0)]).is_err());
    // Declared variable count disagrees with the expression.
    assert!(EquationSpec::from_text("bad", "m1*m2", vec![(0.0, 1.0)]).is_err());
    // Unused declared variable.
    assert!(EquationSpec::new(
        "bad",
        "x1",
        vec!["x1".into(), "x2".into()],
        vec![(0.0, 1.0), (0.0, 1.0)]
    )
    .is_err());
}

// --- Property suite ---------------------------------------------------------

fn leaf_strategy() -> impl Strategy<Value = Expr> {
    prop_oneof![
        3 => (0usize..3).prop_map(Expr::var),
        1 => prop_oneof![
            Just(0.0f64),
            Just(1.0),
            Just(-1.0),
            Just(2.0),
            Just(0.5),
            (-3.0f64..3.0),
        ]
        .prop_map(Expr::Constant),
    ]
}

fn expr_strategy() -> impl Strategy<Value = Expr> {
    leaf_strategy().prop_recursive(4, 64, 8, |inner| {
        prop_oneof![
            (any::<u8>(), inner.clone()).prop_map(|(op, c)| {
                let ops = [
                    UnaryOp::Neg,
                    UnaryOp::Exp,
                    UnaryOp::Log,
                    UnaryOp::Sqrt,
                    UnaryOp::Sin,
                    UnaryOp::Cos,
                    UnaryOp::Tan,
                    UnaryOp::Asin,
                    UnaryOp::Acos,
                    UnaryOp::Atan,
                    UnaryOp::Tanh,
                    UnaryOp::Abs,
                    UnaryOp::Square,
                ];
                Expr::unary(ops[op as usize % ops.len()], c)
            }),
            (any::<u8>(), inner.clone(), inner).prop_map(|(op, l, r)| {
                let ops = [
                    BinaryOp::Add,
                    BinaryOp::Sub,
                    BinaryOp::Mul,
                    BinaryOp::Div,
                    BinaryOp::Pow,
                ];
                Expr::binary(ops[op as usize % ops.len()], l, r)
            }),
        ]
    })
}

proptest! {
    #[test]
    fn round_trip_parse_print(e in expr_strategy()) {
        let text = e.to_text();
        let names = xnames(3);
        let parsed = parse_expression(&text, &names)
            .unwrap_or_else(|err| panic!("`{text}` failed to re-parse: {err}"));
        prop_assert_eq!(parsed, e);
    }

    #[test]
    fn simplify_is_sound_on_defined_points(e in expr_strategy(), seed in any::<u64>()) {
        let s = e.simplify();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut checked = 0;
        for _ in 0..200 {
            let row: Vec<f64> = (0..3).map(|_| rng.gen_range(-3.0..3.0)).collect();
            if let Some(orig) = e.eval(&row) {
                checked += 1;
                let simp = s
                    .eval(&row)
                    .expect("simplified expression undefined where original is defined");
                prop_assert!(
                    (orig - simp).abs() <= 1e-12 * (1.0 + orig.abs()),
                    "orig {orig} vs simplified {simp} for {e}"
                );
            }
        }
        let _ = checked;
    }

    #[test]
    fn simplify_never_grows(e in expr_strategy()) {
        prop_assert!(e.simplify().node_count() <= e.node_count());
    }

    #[test]
    fn complexity_of_simplified_not_larger(e in expr_strategy()) {
        prop_assert!(e.simplify().complexity() <= e.complexity());
    }
}
