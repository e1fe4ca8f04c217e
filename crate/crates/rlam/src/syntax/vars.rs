use super::ast::Term;
use std::collections::BTreeSet;

/// Deterministic fresh-name supply: `base'1`, `base'2`, ... The counter is
/// global to one supply, so every name it hands out within a run is new.
#[derive(Debug, Default)]
pub struct FreshNames {
    counter: u64,
}

impl FreshNames {
    pub fn new() -> FreshNames {
        FreshNames::default()
    }

    /// Next name derived from `base`, skipping anything in `avoid`.
    pub fn fresh(&mut self, base: &str, avoid: &BTreeSet<String>) -> String {
        let stem = base.split('\'').next().unwrap_or(base);
        loop {
            self.counter += 1;
            let candidate = format!("{}'{}", stem, self.counter);
            if !avoid.contains(&candidate) {
                return candidate;
            }
        }
    }
}

/// Free variables of a term.
pub fn free_vars(t: &Term) -> BTreeSet<String> {
    fn go(t: &Term, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match t {
            Term::Var(x) => {
                if !bound.iter().any(|b| b == x) {
                    out.insert(x.clone());
                }
            }
            Term::Lit(_) => {}
            Term::PrimApp(_, args) => args.iter().for_each(|a| go(a, bound, out)),
            Term::Lam(binders, body) => {
                let n = bound.len();
                bound.extend(binders.iter().map(|b| b.name.clone()));
                go(body, bound, out);
                bound.truncate(n);
            }
            Term::App(f, args) => {
                go(f, bound, out);
                args.iter().for_each(|a| go(a, bound, out));
            }
            Term::Pair(a, b) => {
                go(a, bound, out);
                go(b, bound, out);
            }
            Term::Proj(_, t) => go(t, bound, out),
            Term::If { guard, then_branch, else_branch, .. } => {
                go(guard, bound, out);
                go(then_branch, bound, out);
                go(else_branch, bound, out);
            }
        }
    }
    let mut out = BTreeSet::new();
    go(t, &mut Vec::new(), &mut out);
    out
}

/// Every name that occurs as a lambda parameter anywhere in the term.
pub fn binder_names(t: &Term) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    fn go(t: &Term, out: &mut BTreeSet<String>) {
        match t {
            Term::Var(_) | Term::Lit(_) => {}
            Term::PrimApp(_, args) => args.iter().for_each(|a| go(a, out)),
            Term::Lam(binders, body) => {
                out.extend(binders.iter().map(|b| b.name.clone()));
                go(body, out);
            }
            Term::App(f, args) => {
                go(f, out);
                args.iter().for_each(|a| go(a, out));
            }
            Term::Pair(a, b) => {
                go(a, out);
                go(b, out);
            }
            Term::Proj(_, t) => go(t, out),
            Term::If { guard, then_branch, else_branch, .. } => {
                go(guard, out);
                go(then_branch, out);
                go(else_branch, out);
            }
        }
    }
    go(t, &mut out);
    out
}

/// Capture-avoiding substitution of `s` for free occurrences of `x` in `t`.
/// Binders that would capture a free variable of `s` are renamed with a
/// fresh primed name first.
pub fn substitute(t: &Term, x: &str, s: &Term) -> Term {
    let fv_s = free_vars(s);
    let mut fresh = FreshNames::new();
    subst_go(t, x, s, &fv_s, &mut fresh)
}

fn subst_go(
    t: &Term,
    x: &str,
    s: &Term,
    fv_s: &BTreeSet<String>,
    fresh: &mut FreshNames,
) -> Term {
    match t {
        Term::Var(y) => {
            if y == x {
                s.clone()
            } else {
                t.clone()
            }
        }
        Term::Lit(_) => t.clone(),
        Term::PrimApp(f, args) => Term::PrimApp(
            f.clone(),
            args.iter().map(|a| subst_go(a, x, s, fv_s, fresh)).collect(),
        ),
        Term::Lam(binders, body) => {
            if binders.iter().any(|b| b.name == x) {
                // x is shadowed; substitution stops here.
                return t.clone();
            }
            let mut binders = binders.clone();
            let mut body = body.as_ref().clone();
            for b in binders.iter_mut() {
                if fv_s.contains(&b.name) {
                    let mut avoid: BTreeSet<String> = free_vars(&body);
                    avoid.extend(fv_s.iter().cloned());
                    avoid.insert(x.to_string());
                    avoid.extend(binder_names(&body));
                    let renamed = fresh.fresh(&b.name, &avoid);
                    body = rename_free(&body, &b.name, &renamed);
                    b.name = renamed;
                }
            }
            Term::Lam(binders, Box::new(subst_go(&body, x, s, fv_s, fresh)))
        }
        Term::App(f, args) => Term::App(
            Box::new(subst_go(f, x, s, fv_s, fresh)),
            args.iter().map(|a| subst_go(a, x, s, fv_s, fresh)).collect(),
        ),
        Term::Pair(a, b) => Term::Pair(
            Box::new(subst_go(a, x, s, fv_s, fresh)),
            Box::new(subst_go(b, x, s, fv_s, fresh)),
        ),
        Term::Proj(ix, t) => Term::Proj(*ix, Box::new(subst_go(t, x, s, fv_s, fresh))),
        Term::If { guard, then_branch, else_branch, ann } => Term::If {
            guard: Box::new(subst_go(guard, x, s, fv_s, fresh)),
            then_branch: Box::new(subst_go(then_branch, x, s, fv_s, fresh)),
            else_branch: Box::new(subst_go(else_branch, x, s, fv_s, fresh)),
            ann: ann.clone(),
        },
    }
}

/// Renames free occurrences of `from` to `to` (no capture checks; callers
/// guarantee `to` is fresh).
pub(crate) fn rename_free(t: &Term, from: &str, to: &str) -> Term {
    match t {
        Term::Var(y) if y == from => Term::Var(to.to_string()),
        Term::Var(_) | Term::Lit(_) => t.clone(),
        Term::PrimApp(f, args) => Term::PrimApp(
            f.clone(),
            args.iter().map(|a| rename_free(a, from, to)).collect(),
        ),
        Term::Lam(binders, body) => {
            if binders.iter().any(|b| b.name == from) {
                t.clone()
            } else {
                Term::Lam(binders.clone(), Box::new(rename_free(body, from, to)))
            }
        }
        Term::App(f, args) => Term::App(
            Box::new(rename_free(f, from, to)),
            args.iter().map(|a| rename_free(a, from, to)).collect(),
        ),
        Term::Pair(a, b) => {
            Term::Pair(Box::new(rename_free(a, from, to)), Box::new(rename_free(b, from, to)))
        }
        Term::Proj(ix, t) => Term::Proj(*ix, Box::new(rename_free(t, from, to))),
        Term::If { guard, then_branch, else_branch, ann } => Term::If {
            guard: Box::new(rename_free(guard, from, to)),
            then_branch: Box::new(rename_free(then_branch, from, to)),
            else_branch: Box::new(rename_free(else_branch, from, to)),
            ann: ann.clone(),
        },
    }
}

/// Alpha-freshening: renames binders so that every bound name is unique and
/// distinct from every free name. Leaves already-unique names alone, so the
/// pass is idempotent.
pub fn freshen(t: &Term) -> Term {
    let mut used = free_vars(t);
    let mut fresh = FreshNames::new();
    fn go(
        t: &Term,
        used: &mut BTreeSet<String>,
        fresh: &mut FreshNames,
    ) -> Term {
        match t {
            Term::Var(_) | Term::Lit(_) => t.clone(),
            Term::PrimApp(f, args) => Term::PrimApp(
                f.clone(),
                args.iter().map(|a| go(a, used, fresh)).collect(),
            ),
            Term::Lam(binders, body) => {
                let mut binders = binders.clone();
                let mut body = body.as_ref().clone();
                for b in binders.iter_mut() {
                    if used.contains(&b.name) {
                        let renamed = fresh.fresh(&b.name, used);
                        body = rename_free(&body, &b.name, &renamed);
                        used.insert(renamed.clone());
                        b.name = renamed;
                    } else {
                        used.insert(b.name.clone());
                    }
                }
                Term::Lam(binders, Box::new(go(&body, used, fresh)))
            }
            Term::App(f, args) => Term::App(
                Box::new(go(f, used, fresh)),
                args.iter().map(|a| go(a, used, fresh)).collect(),
            ),
            Term::Pair(a, b) => {
                Term::Pair(Box::new(go(a, used, fresh)), Box::new(go(b, used, fresh)))
            }
            Term::Proj(ix, t) => Term::Proj(*ix, Box::new(go(t, used, fresh))),
            Term::If { guard, then_branch, else_branch, ann } => Term::If {
                guard: Box::new(go(guard, used, fresh)),
                then_branch: Box::new(go(then_branch, used, fresh)),
                else_branch: Box::new(go(else_branch, used, fresh)),
                ann: ann.clone(),
            },
        }
    }
    go(t, &mut used, &mut fresh)
}

/// Alpha-equivalence. Binder annotations and conditional annotations must
/// match structurally; bound names may differ.
pub fn alpha_equiv(a: &Term, b: &Term) -> bool {
    fn go(a: &Term, b: &Term, env: &mut Vec<(String, String)>) -> bool {
        match (a, b) {
            (Term::Var(x), Term::Var(y)) => {
                match env.iter().rev().find(|(l, r)| l == x || r == y) {
                    Some((l, r)) => l == x && r == y,
                    None => x == y,
                }
            }
            (Term::Lit(p), Term::Lit(q)) => p == q,
            (Term::PrimApp(f, fa), Term::PrimApp(g, ga)) => {
                f == g && fa.len() == ga.len() && fa.iter().zip(ga).all(|(x, y)| go(x, y, env))
            }
            (Term::Lam(bx, tx), Term::Lam(by, ty)) => {
                if bx.len() != by.len() {
                    return false;
                }
                if bx.iter().zip(by).any(|(p, q)| p.ty != q.ty) {
                    return false;
                }
                let n = env.len();
                env.extend(bx.iter().zip(by).map(|(p, q)| (p.name.clone(), q.name.clone())));
                let ok = go(tx, ty, env);
                env.truncate(n);
                ok
            }
            (Term::App(f, fa), Term::App(g, ga)) => {
                go(f, g, env)
                    && fa.len() == ga.len()
                    && fa.iter().zip(ga).all(|(x, y)| go(x, y, env))
            }
            (Term::Pair(x1, x2), Term::Pair(y1, y2)) => go(x1, y1, env) && go(x2, y2, env),
            (Term::Proj(i, x), Term::Proj(j, y)) => i == j && go(x, y, env),
            (
                Term::If { guard: g1, then_branch: t1, else_branch: e1, ann: a1 },
                Term::If { guard: g2, then_branch: t2, else_branch: e2, ann: a2 },
            ) => a1 == a2 && go(g1, g2, env) && go(t1, t2, env) && go(e1, e2, env),
            _ => false,
        }
    }
    go(a, b, &mut Vec::new())
}
