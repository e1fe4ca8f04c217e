//! Sampled contextual-equivalence probe.
//!
//! The conditional rule requires the two branches to coincide on the
//! boundary region where the guard's continuity formula fails. Deciding
//! contextual equivalence is out of reach, so we probe it: sample the
//! boundary, close both branches with the sampled reals (and canonical
//! instantiations for higher-order context variables), evaluate, and
//! compare. A disagreement is a sound rejection witness; agreement on all
//! samples is evidence, not proof.

use super::entail::{entails, sample_region};
use super::formula::{Assignment, Formula};
use super::reftype::RefContext;
use crate::semantics::{eval_closed_real, PrimRegistry};
use crate::syntax::{rat, rat_int, substitute, Binder, SimpleType, Term};

#[derive(Debug, Clone)]
pub struct EquivConfig {
    /// Boundary points to try.
    pub samples: usize,
    pub seed: u64,
    /// Absolute tolerance on ground comparisons.
    pub tol: f64,
    /// Compare higher-order branches by applying them to canonical
    /// arguments; when false, fall back to syntactic alpha-equivalence.
    pub semantic_ho: bool,
}

impl Default for EquivConfig {
    fn default() -> EquivConfig {
        EquivConfig { samples: 48, seed: 0xC0FF_EE, tol: 1e-9, semantic_ho: true }
    }
}

#[derive(Debug, Clone)]
pub enum EquivVerdict {
    /// All evaluated probes agreed.
    Equiv { samples: usize },
    /// A boundary point where the branches disagree.
    NotEquiv { point: Assignment, lhs: Option<f64>, rhs: Option<f64> },
    Unknown(String),
}

/// Probes contextual equivalence of `s` and `p` (both of erased type `ty`
/// under `ctx`) on the truth domain of `boundary`.
pub fn ctx_equiv_probe(
    ctx: &RefContext,
    boundary: &Formula,
    s: &Term,
    p: &Term,
    ty: &SimpleType,
    reg: &PrimRegistry,
    cfg: &EquivConfig,
) -> EquivVerdict {
    if entails(boundary, &Formula::bottom(), reg).is_valid() {
        return EquivVerdict::Equiv { samples: 0 };
    }

    let grounds = ctx.ground_bindings();
    let mut vars: Vec<String> = grounds.iter().map(|(_, a)| a.clone()).collect();
    for v in boundary.vars() {
        if !vars.contains(&v) {
            vars.push(v);
        }
    }
    let points = sample_region(boundary, &vars, cfg.samples, cfg.seed, reg);
    if points.is_empty() {
        return EquivVerdict::Unknown(
            "could not sample the boundary region (nonempty for all we know)".into(),
        );
    }

    let higher = ctx.higher_bindings();
    let mut ho_combos: Vec<Vec<(String, Term)>> = vec![Vec::new()];
    for (name, rt) in &higher {
        let pool = canonical_terms(&rt.erase(), 4);
        let mut next = Vec::new();
        for combo in &ho_combos {
            for inst in &pool {
                if next.len() >= 8 {
                    break;
                }
                let mut c = combo.clone();
                c.push((name.clone(), inst.clone()));
                next.push(c);
            }
        }
        ho_combos = next;
    }

    let mut usable = 0usize;
    for sigma in &points {
        for combo in &ho_combos {
            let close = |t: &Term| -> Term {
                let mut out = t.clone();
                for (x, alpha) in &grounds {
                    if let Some(v) = sigma.get(alpha) {
                        out = substitute(&out, x, &Term::Lit(v.clone()));
                    }
                }
                for (x, inst) in combo {
                    out = substitute(&out, x, inst);
                }
                out
            };
            let cs = close(s);
            let cp = close(p);
            match compare_closed(&cs, &cp, ty, reg, cfg) {
                Compared::Agree => usable += 1,
                Compared::Disagree { lhs, rhs } => {
                    return EquivVerdict::NotEquiv { point: sigma.clone(), lhs, rhs }
                }
                Compared::Unusable => {}
            }
        }
    }
    if usable == 0 {
        EquivVerdict::Unknown("no boundary sample evaluated to a finite comparison".into())
    } else {
        EquivVerdict::Equiv { samples: usable }
    }
}

enum Compared {
    Agree,
    Disagree { lhs: Option<f64>, rhs: Option<f64> },
    Unusable,
}

fn compare_closed(
    s: &Term,
    p: &Term,
    ty: &SimpleType,
    reg: &PrimRegistry,
    cfg: &EquivConfig,
) -> Compared {
    match ty {
        SimpleType::Real => match (eval_closed_real(s, reg), eval_closed_real(p, reg)) {
            (Ok(a), Ok(b)) => {
                if !a.is_finite() || !b.is_finite() {
                    Compared::Unusable
                } else if (a - b).abs() <= cfg.tol {
                    Compared::Agree
                } else {
                    Compared::Disagree { lhs: Some(a), rhs: Some(b) }
                }
            }
            _ => Compared::Unusable,
        },
        SimpleType::Arrow(dom, cod) => {
            if !cfg.semantic_ho {
                return if crate::syntax::alpha_equiv(s, p) {
                    Compared::Agree
                } else {
                    Compared::Disagree { lhs: None, rhs: None }
                };
            }
            let mut any = false;
            for arg in canonical_terms(dom, 3) {
                let sa = Term::app(s.clone(), vec![arg.clone()]);
                let pa = Term::app(p.clone(), vec![arg]);
                match compare_closed(&sa, &pa, cod, reg, cfg) {
                    Compared::Agree => any = true,
                    d @ Compared::Disagree { .. } => return d,
                    Compared::Unusable => {}
                }
            }
            if any {
                Compared::Agree
            } else {
                Compared::Unusable
            }
        }
        SimpleType::Prod(a, b) => {
            let fs = Term::proj(crate::syntax::ProjIndex::Fst, s.clone());
            let fp = Term::proj(crate::syntax::ProjIndex::Fst, p.clone());
            match compare_closed(&fs, &fp, a, reg, cfg) {
                Compared::Agree => {}
                other => return other,
            }
            let ss = Term::proj(crate::syntax::ProjIndex::Snd, s.clone());
            let sp = Term::proj(crate::syntax::ProjIndex::Snd, p.clone());
            compare_closed(&ss, &sp, b, reg, cfg)
        }
    }
}

/// Small pool of closed canonical inhabitants of a simple type, used to
/// instantiate higher-order context variables and probe higher-order
/// results.
pub fn canonical_terms(ty: &SimpleType, budget: usize) -> Vec<Term> {
    let mut out = Vec::new();
    match ty {
        SimpleType::Real => {
            for r in [rat_int(0), rat_int(1), rat_int(-1), rat(1, 2), rat_int(2)] {
                out.push(Term::Lit(r));
            }
        }
        SimpleType::Prod(a, b) => {
            let left = canonical_terms(a, budget);
            let right = canonical_terms(b, budget);
            for (i, l) in left.iter().enumerate() {
                let r = &right[i % right.len()];
                out.push(Term::pair(l.clone(), r.clone()));
            }
        }
        SimpleType::Arrow(dom, cod) => {
            if **dom == **cod {
                let parts = dom.tuple_parts();
                let binders: Vec<Binder> = parts
                    .iter()
                    .enumerate()
                    .map(|(i, t)| Binder::new(format!("c{}", i), (*t).clone()))
                    .collect();
                let body = Term::tuple(
                    (0..parts.len()).map(|i| Term::var(format!("c{}", i))).collect(),
                );
                out.push(Term::lam(binders, body));
            }
            if **dom == SimpleType::Real && **cod == SimpleType::Real {
                out.push(Term::lam(
                    vec![Binder::new("c0", SimpleType::Real)],
                    Term::prim("mul", vec![Term::var("c0"), Term::var("c0")]),
                ));
                out.push(Term::lam(
                    vec![Binder::new("c0", SimpleType::Real)],
                    Term::prim("neg", vec![Term::var("c0")]),
                ));
            }
            let parts = dom.tuple_parts();
            let binders: Vec<Binder> = parts
                .iter()
                .enumerate()
                .map(|(i, t)| Binder::new(format!("c{}", i), (*t).clone()))
                .collect();
            for c in canonical_terms(cod, budget.saturating_sub(1).max(1)) {
                out.push(Term::lam(binders.clone(), c));
            }
        }
    }
    out.truncate(budget.max(1));
    out
}
