//! Acceptance gate. One test per shipping criterion; each prints a
//! single pass line (visible with --nocapture) and enforces its runtime
//! budget. Tolerances are pinned here, not configurable.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use num_rational::BigRational;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rlam::autodiff::{ad_ctx, ad_term, ad_type, derive, grad_at, DualNaming};
use rlam::continuity::{
    entails, refine_check, truth_domain_member, truth_domain_member_f64, CheckConfig, Entailment3,
    Formula, RefContext, RefType, Verdict,
};
use rlam::oracles::{
    grad_fd, judgment_probe, poly_normalize, probe_continuity_at, PointVerdict, ProbeConfig,
};
use rlam::semantics::{
    default_registry, denote_first_order, eval, eval_exact, GEnv, GValue, PrimRegistry, SemEnv,
};
use rlam::syntax::{
    parse_source_file, parse_term, pretty_rational, SimpleType, SourceFile, Term, TypingContext,
};
use rlam::testgen::{linear_formula, GenConfig, TermGen, DEFAULT_SEED};
use rlam::typing::typecheck;

fn corpus_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn load_corpus(name: &str, reg: &PrimRegistry) -> SourceFile {
    let path = corpus_root().join(name);
    let src = fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {}", path.display(), e));
    parse_source_file(&src, reg).unwrap_or_else(|e| panic!("{}: {}", path.display(), e))
}

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

#[test]
fn criterion_1_ad_typing_closure() {
    let start = Instant::now();
    let reg = default_registry();
    let cfg = GenConfig { max_depth: 6, ground_vars: 4, ..GenConfig::differentiable() };
    let mut gen = TermGen::new(DEFAULT_SEED, cfg);
    let total = 1000;
    for _ in 0..total {
        let ctx = gen.context();
        let ty = small_type(gen.rng(), 2);
        let t = gen.term_of(&ctx, &ty);
        assert_eq!(typecheck(&ctx, &t, &reg).unwrap(), ty);
        let naming = DualNaming::for_term(&t, &ctx);
        let dt = ad_term(&t, &naming, &reg).unwrap();
        let dty = typecheck(&ad_ctx(&ctx, &naming), &dt, &reg)
            .unwrap_or_else(|e| panic!("transformed term ill-typed: {}\n{}", e, t));
        assert_eq!(dty, ad_type(&ty), "for {}", t);
    }
    let dt = start.elapsed();
    assert!(dt < Duration::from_secs(10), "took {:.2?}", dt);
    println!("criterion 1: pass ({} terms, {:.2?})", total, dt);
}

#[test]
fn criterion_2_gradients_match_finite_differences() {
    let start = Instant::now();
    let reg = default_registry();
    let h = 1e-6;

    // The fixed members of the corpus; the generator fills it up to 50.
    let two_vars = TypingContext::of(vec![
        ("x".to_string(), SimpleType::Real),
        ("y".to_string(), SimpleType::Real),
    ]);
    let mut corpus: Vec<(TypingContext, Term)> = vec![
        (two_vars.clone(), parse_term("sin(x) + cos(y)", &reg).unwrap()),
        (two_vars, parse_term("x * y", &reg).unwrap()),
    ];
    let mut gen = TermGen::new(DEFAULT_SEED, GenConfig::smooth_first_order());
    let mut prng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED ^ 0x9E37);
    let mut points: Vec<Vec<Vec<f64>>> = Vec::new();
    let mut fills = 0usize;
    while corpus.len() < 50 || points.len() < corpus.len() {
        let (ctx, t) = if points.len() < corpus.len() {
            corpus[points.len()].clone()
        } else {
            let ctx = gen.context();
            let t = gen.ground_term(&ctx);
            (ctx, t)
        };
        let pts: Vec<Vec<f64>> = (0..20)
            .map(|_| (0..ctx.len()).map(|_| prng.gen_range(-1.0..=1.0)).collect())
            .collect();
        // Keep only terms the finite-difference oracle can vouch for:
        // moderate values and slopes at every sample point.
        let f = denote_first_order(&ctx, &t, &reg).unwrap();
        let tame = pts.iter().all(|p| {
            let v = match f(p) {
                Ok(v) => v,
                Err(_) => return false,
            };
            let g = match grad_at(&ctx, &t, p, &reg) {
                Ok(g) => g,
                Err(_) => return false,
            };
            v.is_finite() && v.abs() <= 1e4 && g.iter().all(|x| x.is_finite() && x.abs() <= 1e4)
        });
        if points.len() < corpus.len() {
            assert!(tame, "fixed corpus member must be tame");
            points.push(pts);
        } else if tame {
            corpus.push((ctx, t));
            points.push(pts);
        } else {
            fills += 1;
            assert!(fills < 10_000, "generator cannot fill the smooth corpus");
        }
    }

    let mut checked = 0usize;
    for ((ctx, t), pts) in corpus.iter().zip(&points) {
        for p in pts {
            let ad = grad_at(ctx, t, p, &reg).unwrap();
            let fd = grad_fd(ctx, t, p, h, &reg).unwrap();
            for (a, n) in ad.iter().zip(&fd) {
                let tol = (1e-5 * a.abs()).max(1e-4);
                assert!(
                    (a - n).abs() <= tol,
                    "{} at {:?}: ad {} vs fd {} (tol {})",
                    t, p, a, n, tol
                );
                checked += 1;
            }
        }
    }
    let dt = start.elapsed();
    assert!(dt < Duration::from_secs(30), "took {:.2?}", dt);
    println!(
        "criterion 2: pass ({} terms x 20 points, {} partials, {:.2?})",
        corpus.len(),
        checked,
        dt
    );
}

#[test]
fn criterion_3_product_derivative_exactness() {
    let reg = default_registry();
    let t = parse_term("x * y", &reg).unwrap();
    let dx = derive(&t, "x", &reg).unwrap();

    let mut env = SemEnv::new();
    let mut grid_points = 0usize;
    for i in 0..10 {
        for j in 0..10 {
            let x = i as f64 * 0.5 - 2.25;
            let y = j as f64 * 0.5 - 2.25;
            env.insert("x".into(), GValue::Real(x));
            env.insert("y".into(), GValue::Real(y));
            let got = match eval(&env, &dx, &reg).unwrap() {
                GValue::Real(v) => v,
                _ => panic!("ground derivative"),
            };
            assert_eq!(got.to_bits(), y.to_bits(), "derivative at ({}, {})", x, y);
            grid_points += 1;
        }
    }
    assert_eq!(grid_points, 100);

    let ctx = TypingContext::of(vec![
        ("x".to_string(), SimpleType::Real),
        ("y".to_string(), SimpleType::Real),
    ]);
    let g = grad_at(&ctx, &t, &[2.0, 3.0], &reg).unwrap();
    assert_eq!(g, vec![3.0, 2.0]);
    println!("criterion 3: pass (100 grid points bit-exact, gradient (3, 2))");
}

#[test]
fn criterion_4_polynomial_containment() {
    let start = Instant::now();
    let reg = default_registry();
    let mut gen = TermGen::new(DEFAULT_SEED, GenConfig::ring());
    let mut prng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED ^ 0x51F5);
    let total = 1000;
    for _ in 0..total {
        let ctx = gen.context();
        let t = gen.ground_term(&ctx);
        let (p, names) = poly_normalize(&ctx, &t, &reg)
            .unwrap_or_else(|e| panic!("normalization failed for {}: {}", t, e));
        for _ in 0..20 {
            let point: Vec<BigRational> = (0..names.len())
                .map(|_| {
                    BigRational::new(
                        prng.gen_range(-8i64..=8).into(),
                        prng.gen_range(1i64..=4).into(),
                    )
                })
                .collect();
            let mut env: GEnv<BigRational> = GEnv::new();
            for (n, q) in names.iter().zip(&point) {
                env.insert(n.clone(), GValue::Real(q.clone()));
            }
            let direct = match eval_exact(&env, &t).unwrap() {
                GValue::Real(q) => q,
                _ => unreachable!("ground term"),
            };
            assert_eq!(p.eval(&point), direct, "for {} at {:?}", t, point);
        }
    }

    // The mandatory higher-order fixture: self-composition of squaring.
    let ctx = TypingContext::of(vec![("x".to_string(), SimpleType::Real)]);
    let fixture = parse_term("(\\f:R -> R. \\y:R. f(f(y)))(\\z:R. z * z)(x)", &reg).unwrap();
    let (p, names) = poly_normalize(&ctx, &fixture, &reg).unwrap();
    assert_eq!(p.to_string_with(&names), "x^4");

    let dt = start.elapsed();
    assert!(dt < Duration::from_secs(30), "took {:.2?}", dt);
    println!("criterion 4: pass ({} terms x 20 points, x^4 fixture, {:.2?})", total, dt);
}

fn render_verdict(v: &Verdict) -> String {
    use std::fmt::Write as _;
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

fn corpus_judgment(sf: &SourceFile) -> (RefContext, Formula, Option<Formula>, RefType) {
    let binds = sf
        .vars
        .iter()
        .map(|v| (v.name.clone(), v.refined.clone().expect("corpus vars carry refinements")))
        .collect();
    let ctx = RefContext::of(binds).unwrap();
    let domain = sf.domain.clone().unwrap_or(Formula::Top);
    let target = sf.target.clone().expect("corpus judgment files carry a target");
    (ctx, domain, sf.image.clone(), target)
}

#[test]
fn criterion_5_refinement_corpus_goldens() {
    let reg = default_registry();
    let cfg = CheckConfig::default();
    let names = ["display1", "display2", "fig_a", "fig_b", "nested_if", "fmin"];
    for name in names {
        let sf = load_corpus(&format!("{}.rlam", name), &reg);
        let (ctx, domain, image, target) = corpus_judgment(&sf);
        let verdict =
            refine_check(&ctx, &domain, image.as_ref(), &sf.term, &target, &reg, &cfg).unwrap();
        let got = format!("{}\n", render_verdict(&verdict));
        let want = fs::read_to_string(
            corpus_root().join("expected").join(format!("{}.check.txt", name)),
        )
        .unwrap();
        assert_eq!(got, want, "golden drift for {}", name);
    }

    // The rejection must pin the boundary witness at zero.
    let sf = load_corpus("fig_a.rlam", &reg);
    let (ctx, domain, image, target) = corpus_judgment(&sf);
    match refine_check(&ctx, &domain, image.as_ref(), &sf.term, &target, &reg, &cfg).unwrap() {
        Verdict::Rejected { witness: Some(w), .. } => {
            assert_eq!(w.get("a"), Some(&BigRational::from_integer(0.into())));
        }
        other => panic!("fig_a must be rejected with a witness, got {}", other),
    }
    println!("criterion 5: pass ({}/{} goldens byte-identical)", names.len(), names.len());
}

/// The probeable reading of a corpus judgment: a ground context, one
/// logical variable per coordinate, and domain/image formulas. Arrow
/// targets are opened by moving the lambda binders into the context.
fn probeable(sf: &SourceFile) -> (TypingContext, Vec<String>, Term, Formula, Option<(String, Formula)>) {
    match sf.target.as_ref().expect("corpus judgment files carry a target") {
        RefType::Ground { var } => {
            let ctx = TypingContext::of(
                sf.vars.iter().map(|v| (v.name.clone(), SimpleType::Real)).collect(),
            );
            let vars = sf
                .vars
                .iter()
                .map(|v| match v.refined.as_ref().unwrap() {
                    RefType::Ground { var } => var.clone(),
                    other => panic!("ground judgment with higher-order var {}", other),
                })
                .collect();
            let domain = sf.domain.clone().unwrap_or(Formula::Top);
            let image = sf.image.clone().map(|f| (var.clone(), f));
            (ctx, vars, sf.term.clone(), domain, image)
        }
        RefType::Arrow(ar) => {
            let Term::Lam(binders, body) = &sf.term else {
                panic!("arrow judgment over a non-lambda term");
            };
            let ctx = TypingContext::of(
                binders.iter().map(|b| (b.name.clone(), SimpleType::Real)).collect(),
            );
            let vars = ar
                .params
                .iter()
                .map(|p| match p {
                    RefType::Ground { var } => var.clone(),
                    other => panic!("cannot probe higher-order parameter {}", other),
                })
                .collect();
            let image = match (ar.image.clone(), ar.result.as_ref()) {
                (Some(f), RefType::Ground { var }) => Some((var.clone(), f)),
                _ => None,
            };
            (ctx, vars, (**body).clone(), ar.domain.clone(), image)
        }
    }
}

#[test]
fn criterion_6_accepted_judgments_probe_clean() {
    let start = Instant::now();
    let reg = default_registry();
    let accepted = ["display1", "display2", "fmin", "fig_b", "nested_if"];
    for name in accepted {
        let sf = load_corpus(&format!("{}.rlam", name), &reg);
        let (ctx, vars, term, domain, image) = probeable(&sf);
        let image_ref = image.as_ref().map(|(v, f)| (v.as_str(), f));

        // 50 independently seeded probe runs, none may find a jump.
        for seed in 0..50u64 {
            let cfg = ProbeConfig { seed, ..ProbeConfig::default() };
            let v = judgment_probe(&ctx, &vars, &term, &domain, image_ref, &reg, &cfg, 6).unwrap();
            assert!(v.is_clean(), "{} (seed {}): {:?}", name, seed, v);
        }

        // One broad pass for image membership at 200 sampled points.
        let cfg = ProbeConfig::default();
        let v = judgment_probe(&ctx, &vars, &term, &domain, image_ref, &reg, &cfg, 200).unwrap();
        assert!(v.is_clean(), "{} (broad): {:?}", name, v);
    }
    let dt = start.elapsed();
    assert!(dt < Duration::from_secs(60), "took {:.2?}", dt);
    println!(
        "criterion 6: pass ({} judgments x 50 seeds + 200-point image sweep, {:.2?})",
        accepted.len(),
        dt
    );
}

/// Exhaustive refuter on a dyadic grid over [-4, 4]^n; every f64
/// comparison on generated formulas is exact at these points.
fn grid_counterexample(
    psi: &Formula,
    phi: &Formula,
    vars: &[String],
    reg: &PrimRegistry,
) -> Option<BTreeMap<String, f64>> {
    let step = match vars.len() {
        0 | 1 => 0.125,
        2 => 0.25,
        _ => 0.5,
    };
    let mut axis = Vec::new();
    let mut x = -4.0;
    while x <= 4.0 {
        axis.push(x);
        x += step;
    }
    let n = vars.len();
    let mut idx = vec![0usize; n];
    loop {
        let point: BTreeMap<String, f64> =
            vars.iter().zip(&idx).map(|(v, i)| (v.clone(), axis[*i])).collect();
        if truth_domain_member_f64(psi, &point, reg).unwrap()
            && !truth_domain_member_f64(phi, &point, reg).unwrap()
        {
            return Some(point);
        }
        let mut k = 0;
        loop {
            if k == n {
                return None;
            }
            idx[k] += 1;
            if idx[k] < axis.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

#[test]
fn criterion_7_entailment_grid_agreement() {
    let start = Instant::now();
    let reg = default_registry();
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    let names = ["a".to_string(), "b".to_string(), "c".to_string()];
    let total = 10_000;
    let mut valids = 0usize;
    let mut invalids = 0usize;
    for round in 0..total {
        let vars = &names[..rng.gen_range(1..=3)];
        let psi = linear_formula(&mut rng, vars, 2);
        // Weakenings guarantee a healthy share of Valid verdicts to
        // stress the unsoundness check, not just the witness check.
        let (psi, phi) = match round % 4 {
            0 => {
                let extra = linear_formula(&mut rng, vars, 1);
                (Formula::and(psi.clone(), extra), psi)
            }
            1 => {
                let extra = linear_formula(&mut rng, vars, 1);
                (psi.clone(), Formula::or(psi, extra))
            }
            _ => (psi, linear_formula(&mut rng, vars, 2)),
        };
        match entails(&psi, &phi, &reg) {
            Entailment3::Valid => {
                valids += 1;
                if let Some(p) = grid_counterexample(&psi, &phi, vars, &reg) {
                    panic!("unsound Valid: {} |= {} refuted at {:?}", psi, phi, p);
                }
            }
            Entailment3::Invalid(w) => {
                invalids += 1;
                let bad = Formula::and(psi.clone(), Formula::not(phi.clone()));
                assert_eq!(
                    truth_domain_member(&bad, &w, &reg),
                    Ok(true),
                    "witness {:?} fails to refute {} |= {}",
                    w,
                    psi,
                    phi
                );
            }
            Entailment3::Unknown(reason) => {
                panic!("linear implication undecided ({}): {} |= {}", reason, psi, phi);
            }
        }
    }
    let dt = start.elapsed();
    assert!(dt < Duration::from_secs(60), "took {:.2?}", dt);
    assert!(valids >= 2000, "only {} Valids in {} implications", valids, total);
    println!(
        "criterion 7: pass ({} implications: {} valid, {} invalid, {:.2?})",
        total, valids, invalids, dt
    );
}

#[test]
fn criterion_8_branch_boundary_fixtures() {
    let reg = default_registry();
    let cfg = ProbeConfig::default();
    let ctx = TypingContext::of(vec![("x".to_string(), SimpleType::Real)]);
    let everywhere = |_: &[f64]| true;

    // Three conditionals whose guard regions cover the line, whose
    // branches are continuous, and whose branch values agree on the
    // shared boundary; each must probe continuous at that boundary.
    let continuous: [(&str, &[f64]); 3] = [
        ("if x < 0 then 1 else x + 1", &[0.0, -0.5, 0.5]),
        ("if x > 0 then 0 else (if x = 4 then 1 else 0)", &[0.0, 4.0, -1.0, 2.0]),
        ("if x <= 0 then 0 else x", &[0.0, -1.0, 1.0]),
    ];
    for (src, pts) in continuous {
        let t = parse_term(src, &reg).unwrap();
        let raw = denote_first_order(&ctx, &t, &reg).unwrap();
        let f = move |p: &[f64]| raw(p).ok().filter(|v| v.is_finite());
        for &x in pts {
            assert_eq!(
                probe_continuity_at(&f, &everywhere, &[x], &cfg),
                PointVerdict::Continuous,
                "{} at {}",
                src,
                x
            );
        }
    }

    // Identical guard structure, but the branch values disagree at the
    // boundary point 0: the probe must flag exactly that point.
    let t = parse_term("if x < 0 then 0 else 1", &reg).unwrap();
    let raw = denote_first_order(&ctx, &t, &reg).unwrap();
    let f = move |p: &[f64]| raw(p).ok().filter(|v| v.is_finite());
    match probe_continuity_at(&f, &everywhere, &[0.0], &cfg) {
        PointVerdict::Suspect { here, near, .. } => {
            assert_eq!(here, 1.0);
            assert_eq!(near, 0.0);
        }
        other => panic!("the violating fixture must be suspect at 0, got {:?}", other),
    }
    println!("criterion 8: pass (3 continuous fixtures, 1 flagged jump)");
}
