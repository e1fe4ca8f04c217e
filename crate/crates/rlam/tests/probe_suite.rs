//! The numeric continuity probe: quiet on continuous functions, loud at
//! genuine jumps, and honest about domain restrictions.

use rlam::continuity::Formula;
use rlam::oracles::{judgment_probe, probe_continuity_at, ContinuityVerdict, PointVerdict, ProbeConfig};
use rlam::semantics::default_registry;
use rlam::syntax::{parse_formula, parse_term, SimpleType, TypingContext};

fn ground_ctx(names: &[&str]) -> TypingContext {
    TypingContext::of(names.iter().map(|n| (n.to_string(), SimpleType::Real)).collect())
}

#[test]
fn continuous_kinks_stay_quiet() {
    let cfg = ProbeConfig::default();
    let everywhere = |_: &[f64]| true;
    let cases: [(&str, fn(&[f64]) -> Option<f64>); 3] = [
        ("abs", |p| Some(p[0].abs())),
        ("relu", |p| Some(p[0].max(0.0))),
        ("saw", |p| Some((p[0] - p[0].round()).abs())),
    ];
    for (name, f) in cases {
        for x in [-1.0, -0.5, 0.0, 0.5, 1.0] {
            assert_eq!(
                probe_continuity_at(&f, &everywhere, &[x], &cfg),
                PointVerdict::Continuous,
                "{} at {}",
                name,
                x
            );
        }
    }
}

#[test]
fn a_jump_is_flagged_exactly_at_its_boundary() {
    let cfg = ProbeConfig::default();
    let everywhere = |_: &[f64]| true;
    let step = |p: &[f64]| Some(if p[0] < 0.0 { 0.0 } else { 1.0 });

    match probe_continuity_at(&step, &everywhere, &[0.0], &cfg) {
        PointVerdict::Suspect { here, near, probe } => {
            assert_eq!(here, 1.0);
            assert_eq!(near, 0.0);
            assert!(probe[0] < 0.0 && probe[0] > -1e-6, "probe point {:?}", probe);
        }
        other => panic!("the step must be suspect at 0, got {:?}", other),
    }
    // Away from the boundary the same function is locally constant.
    for x in [-0.75, 0.5, 2.0] {
        assert_eq!(probe_continuity_at(&step, &everywhere, &[x], &cfg), PointVerdict::Continuous);
    }
}

#[test]
fn domain_restriction_masks_the_jump() {
    // The step is discontinuous at 0 on the whole line, but restricted
    // to x >= 0 it is constant: the probe must respect the restriction.
    let cfg = ProbeConfig::default();
    let step = |p: &[f64]| Some(if p[0] < 0.0 { 0.0 } else { 1.0 });
    let right_half = |p: &[f64]| p[0] >= 0.0;
    assert_eq!(probe_continuity_at(&step, &right_half, &[0.0], &cfg), PointVerdict::Continuous);

    let outside = |p: &[f64]| p[0] >= 1.0;
    assert_eq!(probe_continuity_at(&step, &outside, &[0.0], &cfg), PointVerdict::Unusable);
}

#[test]
fn unusable_points_are_reported() {
    let cfg = ProbeConfig::default();
    let everywhere = |_: &[f64]| true;
    let partial = |p: &[f64]| if p[0] == 0.0 { None } else { Some(1.0 / p[0]) };
    assert_eq!(probe_continuity_at(&partial, &everywhere, &[0.0], &cfg), PointVerdict::Unusable);
    let infinite = |p: &[f64]| Some(1.0 / p[0]);
    assert_eq!(probe_continuity_at(&infinite, &everywhere, &[0.0], &cfg), PointVerdict::Unusable);
}

#[test]
fn accepted_judgments_probe_clean() {
    let reg = default_registry();
    let cfg = ProbeConfig::default();
    let vars = vec!["a".to_string(), "b".to_string()];

    // min over the closed quadrant, image g >= 0 (the display2 corpus
    // judgment).
    let ctx = ground_ctx(&["x", "y"]);
    let t = parse_term("min(x, y)", &reg).unwrap();
    let domain = parse_formula("a >= 0 /\\ b >= 0", &reg).unwrap();
    let image = parse_formula("g >= 0", &reg).unwrap();
    let v = judgment_probe(&ctx, &vars, &t, &domain, Some(("g", &image)), &reg, &cfg, 60).unwrap();
    assert!(v.is_clean(), "{:?}", v);

    // jump_ramp over min: continuous on the quadrant with image g >= 1.
    let t = parse_term("jump_ramp(min(x, y))", &reg).unwrap();
    let image = parse_formula("g >= 1", &reg).unwrap();
    let v = judgment_probe(&ctx, &vars, &t, &domain, Some(("g", &image)), &reg, &cfg, 60).unwrap();
    assert!(v.is_clean(), "{:?}", v);
}

#[test]
fn image_violations_are_detected_before_probing() {
    let reg = default_registry();
    let cfg = ProbeConfig::default();
    let ctx = ground_ctx(&["x"]);
    let vars = vec!["a".to_string()];
    let t = parse_term("x + 1", &reg).unwrap();
    let domain = parse_formula("a >= 0", &reg).unwrap();
    let image = parse_formula("g <= 0", &reg).unwrap();
    match judgment_probe(&ctx, &vars, &t, &domain, Some(("g", &image)), &reg, &cfg, 40).unwrap() {
        ContinuityVerdict::ImageViolation { point, value } => {
            assert!(point[0] >= 0.0);
            assert!(value > 0.0);
        }
        other => panic!("x + 1 cannot satisfy g <= 0, got {:?}", other),
    }
}

#[test]
fn sampling_finds_the_rejected_jump() {
    // The program behind the rejected corpus judgment: the domain
    // includes the boundary, so enough samples expose the jump.
    let reg = default_registry();
    let cfg = ProbeConfig::default();
    let ctx = ground_ctx(&["x"]);
    let vars = vec!["a".to_string()];
    let t = parse_term("if x < 0 then -x else x + 1", &reg).unwrap();
    let domain = parse_formula("a >= -1 /\\ a <= 1", &reg).unwrap();
    match judgment_probe(&ctx, &vars, &t, &domain, None, &reg, &cfg, 80).unwrap() {
        ContinuityVerdict::SuspectDiscontinuity { point, here, near, .. } => {
            assert!((point[0]).abs() <= 1.0);
            assert!((here - near).abs() > 0.5, "jump of about 1 expected, got {} vs {}", here, near);
        }
        other => panic!("the jump at 0 should surface, got {:?}", other),
    }
}

#[test]
fn empty_domains_are_inconclusive() {
    let reg = default_registry();
    let cfg = ProbeConfig::default();
    let ctx = ground_ctx(&["x"]);
    let vars = vec!["a".to_string()];
    let t = parse_term("x", &reg).unwrap();
    let empty = Formula::and(
        parse_formula("a < 0", &reg).unwrap(),
        parse_formula("~(a < 0)", &reg).unwrap(),
    );
    match judgment_probe(&ctx, &vars, &t, &empty, None, &reg, &cfg, 20).unwrap() {
        ContinuityVerdict::Inconclusive(_) => {}
        other => panic!("nothing to sample, got {:?}", other),
    }
}

#[test]
fn probe_tolerance_is_configurable() {
    // A hairline crack below tol passes; raising sensitivity catches it.
    let crack = |p: &[f64]| Some(if p[0] < 0.0 { 0.0 } else { 1e-4 });
    let everywhere = |_: &[f64]| true;
    let lax = ProbeConfig { tol: 1e-3, ..ProbeConfig::default() };
    assert_eq!(probe_continuity_at(&crack, &everywhere, &[0.0], &lax), PointVerdict::Continuous);
    let sharp = ProbeConfig { tol: 1e-5, ..ProbeConfig::default() };
    assert!(matches!(
        probe_continuity_at(&crack, &everywhere, &[0.0], &sharp),
        PointVerdict::Suspect { .. }
    ));
}
