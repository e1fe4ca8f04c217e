//! Evaluator/typechecker agreement and the registered primitive
//! semantics the refinement layer depends on.

use num_rational::BigRational;
use num_traits::ToPrimitive;
use proptest::prelude::*;

use rlam::semantics::{
    default_registry, eval, eval_closed_real, eval_exact, GEnv, GValue, SemEnv,
};
use rlam::syntax::{parse_term, rat, rat_int, rat_to_f64};
use rlam::testgen::{GenConfig, TermGen};
use rlam::typing::typecheck;
use rlam::{SimpleType, Term};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// Well-typed terms evaluate to values of the same shape as their
    /// type (no stuck projections, applications, or guards).
    #[test]
    fn evaluation_preserves_type_shape(seed: u64) {
        let reg = default_registry();
        let cfg = GenConfig { allow_if: true, ..GenConfig::differentiable() };
        let mut gen = TermGen::new(seed, cfg);
        let ctx = gen.context();
        let t = gen.ground_term(&ctx);
        let ty = typecheck(&ctx, &t, &reg).expect("generated terms are well typed");

        for k in 0..3 {
            let mut env = SemEnv::new();
            for (i, (name, _)) in ctx.bindings.iter().enumerate() {
                env.insert(name.clone(), GValue::Real((i + k) as f64 * 0.5 - 1.0));
            }
            let v = eval(&env, &t, &reg).expect("well-typed terms evaluate");
            prop_assert!(ty.admits(&v), "value shape does not match type {:?}", ty);
        }
    }

    /// The f64 evaluator tracks the exact rational evaluator on the ring
    /// fragment (same term, same rational inputs).
    #[test]
    fn f64_tracks_exact_on_ring_terms(seed: u64) {
        let reg = default_registry();
        let mut gen = TermGen::new(seed, GenConfig::ring());
        let ctx = gen.context();
        let t = gen.ground_term(&ctx);

        let mut exact_env: GEnv<BigRational> = GEnv::new();
        let mut f64_env = SemEnv::new();
        for (i, (name, _)) in ctx.bindings.iter().enumerate() {
            let q = rat(i as i64 - 1, 2);
            f64_env.insert(name.clone(), GValue::Real(rat_to_f64(&q)));
            exact_env.insert(name.clone(), GValue::Real(q));
        }
        let approx = match eval(&f64_env, &t, &reg).unwrap() {
            GValue::Real(x) => x,
            _ => unreachable!("ground term"),
        };
        let exact = match eval_exact(&exact_env, &t).unwrap() {
            GValue::Real(q) => q,
            _ => unreachable!("ground term"),
        };
        let exact_f = exact.to_f64().unwrap();
        let tol = 1e-9 * exact_f.abs().max(1.0);
        prop_assert!(
            (approx - exact_f).abs() <= tol,
            "f64 {} drifted from exact {}",
            approx,
            exact_f
        );
    }
}

#[test]
fn guards_branch_on_one_and_zero() {
    let reg = default_registry();
    let cases = [
        ("if x < 0 then 1 else 2", -1.0, 1.0),
        ("if x < 0 then 1 else 2", 0.0, 2.0),
        ("if x < 0 then 1 else 2", 1.0, 2.0),
        ("if x <= 0 then 1 else 2", 0.0, 1.0),
        ("if x <= 0 then 1 else 2", 0.5, 2.0),
        ("if x = 0 then 1 else 2", 0.0, 1.0),
        ("if x = 0 then 1 else 2", -0.25, 2.0),
        ("if x > 0 then 1 else 2", 0.0, 2.0),
        ("if x >= 0 then 1 else 2", 0.0, 1.0),
    ];
    for (src, x, want) in cases {
        let t = parse_term(src, &reg).unwrap();
        let mut env = SemEnv::new();
        env.insert("x".into(), GValue::Real(x));
        match eval(&env, &t, &reg).unwrap() {
            GValue::Real(got) => assert_eq!(got, want, "{} at x = {}", src, x),
            _ => panic!("ground term"),
        }
    }
}

#[test]
fn piecewise_primitives_match_closed_forms() {
    let reg = default_registry();
    let points = [-2.5, -1.0, -0.5, 0.0, 0.25, 1.0, 3.0];
    for &x in &points {
        for &y in &points {
            let run = |src: &str| {
                let t = parse_term(src, &reg).unwrap();
                let mut env = SemEnv::new();
                env.insert("x".into(), GValue::Real(x));
                env.insert("y".into(), GValue::Real(y));
                match eval(&env, &t, &reg).unwrap() {
                    GValue::Real(v) => v,
                    _ => panic!("ground term"),
                }
            };
            assert_eq!(run("min(x, y)"), x.min(y));
            assert_eq!(run("max(x, y)"), x.max(y));
            let ramp = if x < 0.0 { -x } else { x + 1.0 };
            assert_eq!(run("jump_ramp(x)"), ramp);
        }
    }
}

#[test]
fn beta_projection_and_closure_reduction() {
    let reg = default_registry();
    let cases = [
        ("(\\x:R. x + 1)(2)", 3.0),
        ("(\\x:R, y:R. x * y)(3, 4)", 12.0),
        ("fst (1, 2) + snd (1, 2)", 3.0),
        ("(\\f:R -> R. f(f(2)))(\\x:R. x * x)", 16.0),
        ("(\\p:R * R. fst p + snd p)((5, 7))", 12.0),
    ];
    for (src, want) in cases {
        let t = parse_term(src, &reg).unwrap();
        assert_eq!(eval_closed_real(&t, &reg).unwrap(), want, "{}", src);
    }
}

#[test]
fn multi_parameter_lambda_takes_a_tuple() {
    // f(a, b) and f((a, b)) are the same application once parsed.
    let reg = default_registry();
    let spread = parse_term("(\\x:R, y:R. x - y)(10, 4)", &reg).unwrap();
    let tupled = parse_term("(\\x:R, y:R. x - y)((10, 4))", &reg).unwrap();
    assert_eq!(eval_closed_real(&spread, &reg).unwrap(), 6.0);
    assert_eq!(eval_closed_real(&tupled, &reg).unwrap(), 6.0);

    let ty = typecheck(&Default::default(), &parse_term("\\x:R, y:R. x - y", &reg).unwrap(), &reg)
        .unwrap();
    assert_eq!(ty, SimpleType::arrow(SimpleType::prod(SimpleType::Real, SimpleType::Real), SimpleType::Real));
}

#[test]
fn exact_evaluation_rejects_transcendentals() {
    let reg = default_registry();
    let t = parse_term("sin(1)", &reg).unwrap();
    assert!(eval_exact(&GEnv::new(), &t).is_err());
    let u = Term::prim("mul", vec![Term::Lit(rat_int(3)), Term::Lit(rat(1, 3))]);
    match eval_exact(&GEnv::new(), &u).unwrap() {
        GValue::Real(q) => assert_eq!(q, rat_int(1)),
        _ => panic!("ground term"),
    }
}

#[test]
fn ill_typed_terms_are_refused() {
    let reg = default_registry();
    let bad = [
        "x",                       // unbound
        "(1, 2) + 3",              // pair where a real is needed
        "fst 1",                   // projection from a real
        "(\\x:R. x)(1, 2)",        // arity mismatch
        "(\\f:R -> R. f)(1)",      // argument type mismatch
        "if (\\x:R. x) then 1 else 2",
    ];
    for src in bad {
        let t = parse_term(src, &reg).unwrap();
        assert!(
            typecheck(&Default::default(), &t, &reg).is_err(),
            "`{}` should not typecheck",
            src
        );
    }
}
