//! The dual-number transformation: typing, agreement with finite
//! differences, and the closed forms it must reproduce.

use proptest::prelude::*;
use rand::Rng;

use rlam::autodiff::{ad_ctx, ad_term, ad_type, derive, grad_at, AdError, DualNaming};
use rlam::oracles::{grad_fd, FD_STEP};
use rlam::semantics::{default_registry, denote_first_order, eval, GValue, SemEnv};
use rlam::syntax::{parse_term, SimpleType, Term, TypingContext};
use rlam::testgen::{GenConfig, TermGen};
use rlam::typing::typecheck;

fn small_type(rng: &mut impl Rng, depth: u32) -> SimpleType {
    if depth == 0 || rng.gen_bool(0.5) {
        return SimpleType::Real;
    }
    let a = small_type(rng, depth - 1);
    let b = small_type(rng, depth - 1);
    if rng.gen_bool(0.5) {
        SimpleType::prod(a, b)
    } else {
        SimpleType::arrow(a, b)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    /// If `ctx |- t : ty` then the transformed term types at the
    /// transformed type under the renamed dual context, at any type.
    #[test]
    fn transformation_preserves_typing(seed: u64) {
        let reg = default_registry();
        let mut gen = TermGen::new(seed, GenConfig::differentiable());
        let ctx = gen.context();
        let ty = small_type(gen.rng(), 2);
        let t = gen.term_of(&ctx, &ty);
        prop_assert_eq!(&typecheck(&ctx, &t, &reg).unwrap(), &ty);

        let naming = DualNaming::for_term(&t, &ctx);
        let dt = ad_term(&t, &naming, &reg).expect("conditional-free by construction");
        let dctx = ad_ctx(&ctx, &naming);
        let dty = typecheck(&dctx, &dt, &reg).expect("transformed term is well typed");
        prop_assert_eq!(dty, ad_type(&ty));
    }

    /// Gradients from the transformation agree with central finite
    /// differences wherever both are tame.
    #[test]
    fn gradient_matches_finite_differences(seed: u64) {
        let reg = default_registry();
        let mut gen = TermGen::new(seed, GenConfig::differentiable());
        let ctx = gen.context();
        let t = gen.ground_term(&ctx);
        let f = denote_first_order(&ctx, &t, &reg).unwrap();

        for k in 0..4 {
            let point: Vec<f64> = (0..ctx.len())
                .map(|i| ((seed >> (4 * i)) & 0xf) as f64 / 8.0 - 1.0 + 0.1 * k as f64)
                .collect();
            let v = f(&point).unwrap();
            let ad = grad_at(&ctx, &t, &point, &reg).unwrap();
            // FD is only a trustworthy oracle where value and slope
            // stay moderate.
            if !v.is_finite() || v.abs() > 1e6 || ad.iter().any(|g| g.abs() > 1e6) {
                continue;
            }
            let fd = grad_fd(&ctx, &t, &point, FD_STEP, &reg).unwrap();
            for (i, (a, n)) in ad.iter().zip(&fd).enumerate() {
                let tol = 1e-4f64.max(1e-5 * a.abs());
                prop_assert!(
                    (a - n).abs() <= tol,
                    "d/d{} at {:?}: ad {} vs fd {}",
                    i, point, a, n
                );
            }
        }
    }
}

#[test]
fn product_rule_gives_the_other_factor() {
    let reg = default_registry();
    let t = parse_term("x * y", &reg).unwrap();
    let dx = derive(&t, "x", &reg).unwrap();
    let mut env = SemEnv::new();
    for x in [-2.0, -0.5, 0.0, 1.0, 3.25] {
        for y in [-1.0, 0.0, 0.5, 2.0] {
            env.insert("x".into(), GValue::Real(x));
            env.insert("y".into(), GValue::Real(y));
            match eval(&env, &dx, &reg).unwrap() {
                GValue::Real(v) => assert_eq!(v, y, "d(x*y)/dx at ({}, {})", x, y),
                _ => panic!("ground derivative"),
            }
        }
    }
}

#[test]
fn chain_rule_matches_closed_forms() {
    let reg = default_registry();
    let cases: [(&str, fn(f64) -> f64); 5] = [
        ("sin(x * x)", |x| (x * x).cos() * 2.0 * x),
        ("cos(sin(x))", |x| -(x.sin()).sin() * x.cos()),
        ("x * x * x", |x| 3.0 * x * x),
        ("sin(x) * cos(x)", |x| x.cos() * x.cos() - x.sin() * x.sin()),
        ("-(x * sin(x))", |x| -(x.sin() + x * x.cos())),
    ];
    let ctx = TypingContext::of(vec![("x".into(), SimpleType::Real)]);
    for (src, want) in cases {
        let t = parse_term(src, &reg).unwrap();
        for i in -8..=8 {
            let x = i as f64 / 4.0;
            let g = grad_at(&ctx, &t, &[x], &reg).unwrap();
            assert!(
                (g[0] - want(x)).abs() <= 1e-12 * want(x).abs().max(1.0),
                "{} at {}: got {}, want {}",
                src, x, g[0], want(x)
            );
        }
    }
}

#[test]
fn higher_order_programs_differentiate() {
    // The transformation is homomorphic on lambdas and applications, so
    // a higher-order composition differentiates like its beta-normal
    // form: twice(square) at x has derivative 4x^3.
    let reg = default_registry();
    let t = parse_term("(\\f:R -> R. \\y:R. f(f(y)))(\\z:R. z * z)(x)", &reg).unwrap();
    let ctx = TypingContext::of(vec![("x".into(), SimpleType::Real)]);
    for i in -6..=6 {
        let x = i as f64 / 2.0;
        let g = grad_at(&ctx, &t, &[x], &reg).unwrap();
        let want = 4.0 * x * x * x;
        assert!((g[0] - want).abs() <= 1e-9 * want.abs().max(1.0), "at {}: {} vs {}", x, g[0], want);
    }
}

#[test]
fn conditionals_are_rejected() {
    let reg = default_registry();
    let t = parse_term("if x < 0 then -x else x", &reg).unwrap();
    let naming = DualNaming::for_term(&t, &TypingContext::new());
    assert_eq!(ad_term(&t, &naming, &reg).unwrap_err(), AdError::Conditional);
    assert_eq!(derive(&t, "x", &reg).unwrap_err(), AdError::Conditional);
}

#[test]
fn primitives_without_derivatives_are_rejected() {
    let reg = default_registry();
    for src in ["min(x, y)", "jump_ramp(x)"] {
        let t = parse_term(src, &reg).unwrap();
        match derive(&t, "x", &reg) {
            Err(AdError::NotDifferentiable(_)) => {}
            other => panic!("`{}` should not differentiate, got {:?}", src, other),
        }
    }
}

#[test]
fn dual_renaming_avoids_capture() {
    // A program that already uses `dx` must not have its tangent
    // variable collide with it.
    let reg = default_registry();
    let t = parse_term("x * dx", &reg).unwrap();
    let ctx = TypingContext::of(vec![
        ("x".into(), SimpleType::Real),
        ("dx".into(), SimpleType::Real),
    ]);
    let g = grad_at(&ctx, &t, &[3.0, 5.0], &reg).unwrap();
    assert_eq!(g, vec![5.0, 3.0]);
}

#[test]
fn grad_at_checks_point_arity() {
    let reg = default_registry();
    let ctx = TypingContext::of(vec![("x".into(), SimpleType::Real)]);
    let t = Term::var("x");
    assert!(grad_at(&ctx, &t, &[1.0, 2.0], &reg).is_err());
}
