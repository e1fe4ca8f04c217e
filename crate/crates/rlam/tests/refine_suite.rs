//! The local-continuity refinement checker: corpus programs against
//! their frozen verdicts, plus rule-level behavior the corpus does not
//! isolate.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rlam::continuity::{
    refine_check, truth_domain_member, Assignment, CheckConfig, Formula, RefContext, RefType,
    Verdict,
};
use rlam::semantics::default_registry;
use rlam::syntax::{parse_formula, parse_reftype, parse_source_file, parse_term, pretty_rational};

fn render(v: &Verdict) -> String {
    match v {
        Verdict::Accepted { derivation } => format!("Accepted\n{}", derivation),
        Verdict::Rejected { rule, message, witness } => {
            let mut text = format!("Rejected [{}]: {}", rule, message);
            if let Some(w) = witness {
                let parts: Vec<String> =
                    w.iter().map(|(k, v)| format!("{} = {}", k, pretty_rational(v))).collect();
                let _ = write!(text, "\n  at {}", parts.join(", "));
            }
            text
        }
        Verdict::Unknown { reason } => format!("Unknown: {}", reason),
    }
}

fn check_corpus_file(name: &str) -> String {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus");
    let reg = default_registry();
    let src = fs::read_to_string(root.join(name)).unwrap();
    let sf = parse_source_file(&src, &reg).unwrap();
    let binds = sf
        .vars
        .iter()
        .map(|v| (v.name.clone(), v.refined.clone().expect("corpus vars carry refinements")))
        .collect();
    let ctx = RefContext::of(binds).unwrap();
    let domain = sf.domain.clone().unwrap_or(Formula::Top);
    let target = sf.target.clone().expect("corpus judgment files carry a target");
    let verdict = refine_check(
        &ctx,
        &domain,
        sf.image.as_ref(),
        &sf.term,
        &target,
        &reg,
        &CheckConfig::default(),
    )
    .unwrap();
    format!("{}\n", render(&verdict))
}

#[test]
fn corpus_verdicts_match_frozen_goldens() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus");
    for name in ["display1", "display2", "fig_a", "fig_b", "nested_if", "fmin"] {
        let got = check_corpus_file(&format!("{}.rlam", name));
        let want =
            fs::read_to_string(root.join("expected").join(format!("{}.check.txt", name))).unwrap();
        assert_eq!(got, want, "verdict drifted for corpus/{}.rlam", name);
    }
}

fn ground_ctx(pairs: &[(&str, &str)]) -> RefContext {
    RefContext::of(
        pairs.iter().map(|(x, a)| (x.to_string(), RefType::ground(*a))).collect(),
    )
    .unwrap()
}

#[test]
fn variable_rule_is_an_entailment_check() {
    let reg = default_registry();
    let cfg = CheckConfig::default();
    let ctx = ground_ctx(&[("x", "a")]);
    let term = parse_term("x", &reg).unwrap();
    let target = parse_reftype("{g in R}", &reg).unwrap();

    let dom = parse_formula("a >= 1", &reg).unwrap();
    let img = parse_formula("g >= 0", &reg).unwrap();
    let v = refine_check(&ctx, &dom, Some(&img), &term, &target, &reg, &cfg).unwrap();
    assert!(v.is_accepted(), "a >= 1 supports image g >= 0: {}", v);

    let weak = parse_formula("a >= -1", &reg).unwrap();
    let img1 = parse_formula("g >= 1", &reg).unwrap();
    match refine_check(&ctx, &weak, Some(&img1), &term, &target, &reg, &cfg).unwrap() {
        Verdict::Rejected { rule, witness: Some(w), .. } => {
            assert_eq!(rule, "var-F");
            // The witness lies in the domain but escapes the image.
            let escape = Formula::and(weak.clone(), Formula::not(img1.rename("g", "a")));
            assert_eq!(truth_domain_member(&escape, &w, &reg), Ok(true));
        }
        other => panic!("expected a var-F rejection with witness, got {}", other),
    }
}

#[test]
fn literal_rule_completes_the_image() {
    let reg = default_registry();
    let cfg = CheckConfig::default();
    let ctx = RefContext::new();
    let target = parse_reftype("{g in R}", &reg).unwrap();
    let one = parse_term("1", &reg).unwrap();

    let ok = parse_formula("g >= 1", &reg).unwrap();
    let v = refine_check(&ctx, &Formula::Top, Some(&ok), &one, &target, &reg, &cfg).unwrap();
    assert!(v.is_accepted(), "{}", v);

    let bad = parse_formula("g >= 2", &reg).unwrap();
    let v = refine_check(&ctx, &Formula::Top, Some(&bad), &one, &target, &reg, &cfg).unwrap();
    assert!(matches!(v, Verdict::Rejected { .. }), "1 cannot promise g >= 2: {}", v);
}

#[test]
fn higher_order_variables_need_alpha_equal_types() {
    let reg = default_registry();
    let cfg = CheckConfig::default();
    let declared = parse_reftype("({a in R}) ->{a >= 0, g >= 1} {g in R}", &reg).unwrap();
    let ctx = RefContext::of(vec![("f".to_string(), declared)]).unwrap();
    let term = parse_term("f", &reg).unwrap();

    let renamed = parse_reftype("({u in R}) ->{u >= 0, w >= 1} {w in R}", &reg).unwrap();
    let v = refine_check(&ctx, &Formula::Top, None, &term, &renamed, &reg, &cfg).unwrap();
    assert!(v.is_accepted(), "alpha-renaming must not matter: {}", v);

    let stronger = parse_reftype("({a in R}) ->{a >= 1, g >= 1} {g in R}", &reg).unwrap();
    let v = refine_check(&ctx, &Formula::Top, None, &term, &stronger, &reg, &cfg).unwrap();
    match v {
        Verdict::Rejected { rule, .. } => assert_eq!(rule, "var-H"),
        other => panic!("structurally different arrow should be refused, got {}", other),
    }
}

#[test]
fn image_strengthening_at_results_is_caught() {
    // jump_ramp promises g >= 1 on a >= 0; demanding g >= 2 instead has
    // to fail, while the promised bound goes through.
    let reg = default_registry();
    let cfg = CheckConfig::default();
    let ctx = ground_ctx(&[("x", "a")]);
    let term = parse_term("jump_ramp(x)", &reg).unwrap();
    let target = parse_reftype("{g in R}", &reg).unwrap();
    let dom = parse_formula("a >= 0", &reg).unwrap();

    let promised = parse_formula("g >= 1", &reg).unwrap();
    let v = refine_check(&ctx, &dom, Some(&promised), &term, &target, &reg, &cfg).unwrap();
    assert!(v.is_accepted(), "{}", v);

    let demanded = parse_formula("g >= 2", &reg).unwrap();
    let v = refine_check(&ctx, &dom, Some(&demanded), &term, &target, &reg, &cfg).unwrap();
    assert!(!v.is_accepted(), "g >= 2 exceeds what jump_ramp promises: {}", v);
}

#[test]
fn products_are_outside_the_refinement_fragment() {
    let reg = default_registry();
    let cfg = CheckConfig::default();
    let ctx = ground_ctx(&[("x", "a")]);
    let term = parse_term("fst ((x, x))", &reg).unwrap();
    let target = parse_reftype("{g in R}", &reg).unwrap();
    let v =
        refine_check(&ctx, &Formula::Top, Some(&Formula::Top), &term, &target, &reg, &cfg).unwrap();
    assert!(matches!(v, Verdict::Unknown { .. }), "pairs have no refinement rule: {}", v);
}

#[test]
fn nonlinear_side_conditions_never_accept() {
    let reg = default_registry();
    let cfg = CheckConfig::default();
    let ctx = ground_ctx(&[("x", "a")]);
    let target = parse_reftype("{g in R}", &reg).unwrap();

    // The guard argument x * x only gets the trivial image, so no
    // continuity fact covers it. Conservative rejection is fine; silent
    // acceptance would not be.
    let term = parse_term("if x * x < 0 then 1 else 0", &reg).unwrap();
    let v =
        refine_check(&ctx, &Formula::Top, Some(&Formula::Top), &term, &target, &reg, &cfg).unwrap();
    assert!(!v.is_accepted(), "opaque guard argument must not be accepted: {}", v);

    // A nonlinear entailment that happens to be valid cannot be decided
    // either way and must surface as Unknown.
    let dom = parse_formula("a * a <= 1", &reg).unwrap();
    let img = parse_formula("g * g <= 1", &reg).unwrap();
    let x = parse_term("x", &reg).unwrap();
    let v = refine_check(&ctx, &dom, Some(&img), &x, &target, &reg, &cfg).unwrap();
    assert!(matches!(v, Verdict::Unknown { .. }), "nonlinear entailment must not decide: {}", v);
}

#[test]
fn annotations_override_synthesized_branch_domains() {
    // Forcing the then-branch to be checked on the whole domain breaks
    // the fig_b-style acceptance: on a >= 0 the then-branch constant 1
    // no longer matches the else branch at the boundary.
    let reg = default_registry();
    let cfg = CheckConfig::default();
    let ctx = ground_ctx(&[("x", "a")]);
    let target = parse_reftype("{g in R}", &reg).unwrap();

    let plain = parse_term("if x < 0 then 1 else x + 1", &reg).unwrap();
    let v =
        refine_check(&ctx, &Formula::Top, Some(&Formula::Top), &plain, &target, &reg, &cfg).unwrap();
    assert!(v.is_accepted(), "{}", v);

    let pinned =
        parse_term("if x < 0 { then: a < 0, else: a > 0 } then 1 else x + 1", &reg).unwrap();
    let v =
        refine_check(&ctx, &Formula::Top, Some(&Formula::Top), &pinned, &target, &reg, &cfg).unwrap();
    assert!(
        !v.is_accepted(),
        "shrunken else-domain leaves the boundary uncovered: {}",
        v
    );
}

#[test]
fn rejection_witnesses_satisfy_the_domain() {
    let reg = default_registry();
    let cfg = CheckConfig::default();
    let ctx = ground_ctx(&[("x", "a")]);
    let target = parse_reftype("{g in R}", &reg).unwrap();
    let dom = parse_formula("a >= -2 /\\ a <= 2", &reg).unwrap();
    let term = parse_term("if x < 0 then -x else x + 1", &reg).unwrap();
    match refine_check(&ctx, &dom, Some(&Formula::Top), &term, &target, &reg, &cfg).unwrap() {
        Verdict::Rejected { witness: Some(w), .. } => {
            assert_eq!(truth_domain_member(&dom, &w, &reg), Ok(true));
            assert_eq!(w.len(), 1);
        }
        other => panic!("the absolute-value jump must be rejected with a witness, got {}", other),
    }
}

#[test]
fn unrefined_context_variables_are_reported() {
    let reg = default_registry();
    let src = "@var x : R\n@target {g in R}\nx\n";
    let sf = parse_source_file(src, &reg).unwrap();
    assert!(sf.vars[0].refined.is_none());
    assert!(sf.target.is_some());
}

#[test]
fn duplicate_logical_names_are_malformed() {
    assert!(RefContext::of(vec![
        ("x".to_string(), RefType::ground("a")),
        ("y".to_string(), RefType::ground("a")),
    ])
    .is_err());

    let _ = Assignment::new();
}
