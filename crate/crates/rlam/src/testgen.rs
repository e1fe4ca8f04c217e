//! Deterministic generators for random well-typed terms and formulas.
//!
//! Tests and the validation suites need streams of typable terms with a
//! known context; proptest's shrinking is not useful for those suites
//! (the properties quantify over evaluation points too), so these are
//! plain seeded generators.

use crate::continuity::{FExpr, Formula};
use crate::syntax::{rat, Binder, SimpleType, Term, TypingContext};
use num_rational::BigRational;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const DEFAULT_SEED: u64 = 0xC0FF_EE;

#[derive(Debug, Clone)]
pub struct GenConfig {
    pub max_depth: usize,
    /// Ground context variables drawn from `x, y, z, ...`.
    pub ground_vars: usize,
    /// Primitives used for ground applications.
    pub prims: Vec<(String, usize)>,
    pub allow_if: bool,
    /// Allow beta-redexes, higher-order functions, pairs and projections.
    pub allow_ho: bool,
}

impl GenConfig {
    /// Everywhere-differentiable primitives; conditionals excluded.
    pub fn differentiable() -> GenConfig {
        GenConfig {
            max_depth: 5,
            ground_vars: 3,
            prims: named(&[("add", 2), ("sub", 2), ("mul", 2), ("neg", 1), ("sin", 1), ("cos", 1)]),
            allow_if: false,
            allow_ho: true,
        }
    }

    /// Like `differentiable`, but first-order only (for finite-difference
    /// comparisons).
    pub fn smooth_first_order() -> GenConfig {
        GenConfig { allow_ho: false, ..GenConfig::differentiable() }
    }

    /// The ring fragment (normalizes to polynomials).
    pub fn ring() -> GenConfig {
        GenConfig {
            max_depth: 5,
            ground_vars: 3,
            prims: named(&[("add", 2), ("sub", 2), ("mul", 2), ("neg", 1)]),
            allow_if: false,
            allow_ho: true,
        }
    }
}

fn named(ps: &[(&str, usize)]) -> Vec<(String, usize)> {
    ps.iter().map(|(n, a)| (n.to_string(), *a)).collect()
}

pub struct TermGen {
    rng: ChaCha8Rng,
    cfg: GenConfig,
    counter: u64,
}

impl TermGen {
    pub fn new(seed: u64, cfg: GenConfig) -> TermGen {
        TermGen { rng: ChaCha8Rng::seed_from_u64(seed), cfg, counter: 0 }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// A ground context with 1..=ground_vars variables.
    pub fn context(&mut self) -> TypingContext {
        let names = ["x", "y", "z", "w", "u", "v"];
        let k = self.rng.gen_range(1..=self.cfg.ground_vars.clamp(1, names.len()));
        TypingContext::of(
            names[..k].iter().map(|n| (n.to_string(), SimpleType::Real)).collect(),
        )
    }

    pub fn literal(&mut self) -> Term {
        let numer = self.rng.gen_range(-8i64..=8);
        let denom = *[1i64, 2, 4].get(self.rng.gen_range(0..3)).unwrap();
        Term::Lit(rat(numer, denom))
    }

    fn fresh_name(&mut self) -> String {
        self.counter += 1;
        format!("v{}", self.counter)
    }

    /// A term of type R under `ctx`.
    pub fn ground_term(&mut self, ctx: &TypingContext) -> Term {
        self.term_of(ctx, &SimpleType::Real)
    }

    /// A term of type `ty` under `ctx`.
    pub fn term_of(&mut self, ctx: &TypingContext, ty: &SimpleType) -> Term {
        let mut scope: Vec<(String, SimpleType)> = ctx.bindings.clone();
        let depth = self.cfg.max_depth;
        self.gen(&mut scope, ty, depth)
    }

    fn pick_var(&mut self, scope: &[(String, SimpleType)], ty: &SimpleType) -> Option<Term> {
        let matching: Vec<&String> =
            scope.iter().filter(|(_, t)| t == ty).map(|(n, _)| n).collect();
        if matching.is_empty() {
            return None;
        }
        let i = self.rng.gen_range(0..matching.len());
        Some(Term::var(matching[i].clone()))
    }

    fn gen(
        &mut self,
        scope: &mut Vec<(String, SimpleType)>,
        ty: &SimpleType,
        depth: usize,
    ) -> Term {
        match ty {
            SimpleType::Prod(a, b) => {
                let left = self.gen(scope, a, depth.saturating_sub(1));
                let right = self.gen(scope, b, depth.saturating_sub(1));
                Term::pair(left, right)
            }
            SimpleType::Arrow(dom, cod) => {
                if depth > 0 && self.rng.gen_bool(0.2) {
                    if let Some(v) = self.pick_var(scope, ty) {
                        return v;
                    }
                }
                let parts = dom.tuple_parts();
                let binders: Vec<Binder> = parts
                    .iter()
                    .map(|p| Binder::new(self.fresh_name(), (*p).clone()))
                    .collect();
                let base = scope.len();
                for (b, p) in binders.iter().zip(&parts) {
                    scope.push((b.name.clone(), (*p).clone()));
                }
                let body = self.gen(scope, cod, depth.saturating_sub(1));
                scope.truncate(base);
                Term::lam(binders, body)
            }
            SimpleType::Real => self.gen_real(scope, depth),
        }
    }

    fn gen_real(&mut self, scope: &mut Vec<(String, SimpleType)>, depth: usize) -> Term {
        if depth == 0 {
            if self.rng.gen_bool(0.6) {
                if let Some(v) = self.pick_var(scope, &SimpleType::Real) {
                    return v;
                }
            }
            return self.literal();
        }
        let mut weights: Vec<(u32, u8)> = vec![(1, 0), (2, 1), (6, 2)];
        if self.cfg.allow_ho {
            weights.push((2, 3));
            weights.push((1, 4));
            weights.push((1, 5));
        }
        if self.cfg.allow_if {
            weights.push((2, 6));
        }
        let total: u32 = weights.iter().map(|(w, _)| w).sum();
        let mut roll = self.rng.gen_range(0..total);
        let mut choice = 2u8;
        for (w, c) in weights {
            if roll < w {
                choice = c;
                break;
            }
            roll -= w;
        }
        match choice {
            0 => self.literal(),
            1 => self
                .pick_var(scope, &SimpleType::Real)
                .unwrap_or_else(|| self.literal()),
            2 => {
                let i = self.rng.gen_range(0..self.cfg.prims.len());
                let (name, arity) = self.cfg.prims[i].clone();
                let args =
                    (0..arity).map(|_| self.gen_real(scope, depth - 1)).collect();
                Term::prim(name, args)
            }
            3 => {
                // beta-redex with one or two ground parameters
                let n = self.rng.gen_range(1..=2);
                let binders: Vec<Binder> = (0..n)
                    .map(|_| Binder::new(self.fresh_name(), SimpleType::Real))
                    .collect();
                let args: Vec<Term> =
                    (0..n).map(|_| self.gen_real(scope, depth - 1)).collect();
                let base = scope.len();
                for b in &binders {
                    scope.push((b.name.clone(), SimpleType::Real));
                }
                let body = self.gen_real(scope, depth - 1);
                scope.truncate(base);
                Term::app(Term::lam(binders, body), args)
            }
            4 => {
                // higher-order: (\f. f applied) (\v. body)
                let fname = self.fresh_name();
                let fun_ty = SimpleType::arrow(SimpleType::Real, SimpleType::Real);
                let base = scope.len();
                scope.push((fname.clone(), fun_ty.clone()));
                let inner_arg = self.gen_real(scope, depth - 1);
                scope.truncate(base);
                let caller = Term::lam(
                    vec![Binder::new(fname.clone(), fun_ty)],
                    Term::app(Term::var(fname), vec![inner_arg]),
                );
                let vname = self.fresh_name();
                let base = scope.len();
                scope.push((vname.clone(), SimpleType::Real));
                let body = self.gen_real(scope, depth - 1);
                scope.truncate(base);
                let callee = Term::lam(vec![Binder::new(vname, SimpleType::Real)], body);
                Term::app(caller, vec![callee])
            }
            5 => {
                let ix = if self.rng.gen_bool(0.5) {
                    crate::syntax::ProjIndex::Fst
                } else {
                    crate::syntax::ProjIndex::Snd
                };
                let a = self.gen_real(scope, depth - 1);
                let b = self.gen_real(scope, depth - 1);
                Term::proj(ix, Term::pair(a, b))
            }
            _ => {
                let cmp = ["lt", "le", "eq"][self.rng.gen_range(0..3)];
                let guard = Term::prim(
                    cmp,
                    vec![self.gen_real(scope, depth - 1), self.gen_real(scope, depth - 1)],
                );
                let s = self.gen_real(scope, depth - 1);
                let p = self.gen_real(scope, depth - 1);
                Term::ite(guard, s, p)
            }
        }
    }
}

/// A random linear formula over `vars` (atoms compare affine
/// combinations with small integer coefficients).
pub fn linear_formula(rng: &mut ChaCha8Rng, vars: &[String], depth: usize) -> Formula {
    if depth == 0 || rng.gen_bool(0.35) {
        let affine = |rng: &mut ChaCha8Rng| {
            let mut e = FExpr::Const(BigRational::from_integer(
                rng.gen_range(-4i64..=4).into(),
            ));
            for v in vars {
                let c = rng.gen_range(-3i64..=3);
                if c != 0 {
                    e = FExpr::add(
                        e,
                        FExpr::mul(
                            FExpr::Const(BigRational::from_integer(c.into())),
                            FExpr::var(v.clone()),
                        ),
                    );
                }
            }
            e
        };
        let a = affine(rng);
        let b = affine(rng);
        return match rng.gen_range(0..4) {
            0 => Formula::leq(a, b),
            1 => Formula::lt(a, b),
            2 => Formula::eq(a, b),
            _ => Formula::geq(a, b),
        };
    }
    match rng.gen_range(0..4) {
        0 => Formula::and(
            linear_formula(rng, vars, depth - 1),
            linear_formula(rng, vars, depth - 1),
        ),
        1 => Formula::or(
            linear_formula(rng, vars, depth - 1),
            linear_formula(rng, vars, depth - 1),
        ),
        2 => Formula::not(linear_formula(rng, vars, depth - 1)),
        _ => Formula::implies(
            linear_formula(rng, vars, depth - 1),
            linear_formula(rng, vars, depth - 1),
        ),
    }
}
