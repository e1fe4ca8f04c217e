//! The simple type system.
//!
//! Multi-parameter lambdas take the right-nested product of their parameter
//! types as domain; applications tuple their arguments the same way, so
//! `f(a, b)` and `f((a, b))` typecheck identically.

use crate::semantics::PrimRegistry;
use crate::syntax::{SimpleType, Term, TypingContext};

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum TypeError {
    #[error("unbound variable `{0}`")]
    UnboundVar(String),
    #[error("lambda parameter `{0}` has no type annotation")]
    MissingAnnotation(String),
    #[error("unknown primitive `{0}`")]
    UnknownPrim(String),
    #[error("primitive `{0}` applied to {1} arguments, expects {2}")]
    PrimArity(String, usize, usize),
    #[error("argument of `{prim}` has type {got}, expected R")]
    PrimArgNotReal { prim: String, got: String },
    #[error("applied a term of non-function type {0}")]
    NotAFunction(String),
    #[error("application argument mismatch: function domain {expected}, arguments {got}")]
    ArgMismatch { expected: String, got: String },
    #[error("projection from non-product type {0}")]
    NotAProduct(String),
    #[error("conditional guard has type {0}, expected R")]
    GuardNotReal(String),
    #[error("conditional branches disagree: {then_ty} vs {else_ty}")]
    BranchMismatch { then_ty: String, else_ty: String },
    #[error("context entry `{name}` has type {ty}, expected R")]
    NotFirstOrder { name: String, ty: String },
    #[error("first-order term has result type {0}, expected R")]
    ResultNotReal(String),
}

fn show(t: &SimpleType) -> String {
    crate::syntax::pretty_type(t)
}

/// Infers the simple type of `t` under `ctx`. Lambda parameters must carry
/// annotations.
pub fn typecheck(
    ctx: &TypingContext,
    t: &Term,
    reg: &PrimRegistry,
) -> Result<SimpleType, TypeError> {
    match t {
        Term::Var(x) => ctx
            .lookup(x)
            .cloned()
            .ok_or_else(|| TypeError::UnboundVar(x.clone())),
        Term::Lit(_) => Ok(SimpleType::Real),
        Term::PrimApp(f, args) => {
            let p = reg.get(f).ok_or_else(|| TypeError::UnknownPrim(f.clone()))?;
            if p.arity != args.len() {
                return Err(TypeError::PrimArity(f.clone(), args.len(), p.arity));
            }
            for a in args {
                let ty = typecheck(ctx, a, reg)?;
                if ty != SimpleType::Real {
                    return Err(TypeError::PrimArgNotReal { prim: f.clone(), got: show(&ty) });
                }
            }
            Ok(SimpleType::Real)
        }
        Term::Lam(binders, body) => {
            let mut inner = ctx.clone();
            let mut doms = Vec::with_capacity(binders.len());
            for b in binders {
                let ty = b
                    .ty
                    .clone()
                    .ok_or_else(|| TypeError::MissingAnnotation(b.name.clone()))?;
                inner = inner.extended(b.name.clone(), ty.clone());
                doms.push(ty);
            }
            let cod = typecheck(&inner, body, reg)?;
            Ok(SimpleType::arrow(SimpleType::tuple(doms), cod))
        }
        Term::App(f, args) => {
            let fty = typecheck(ctx, f, reg)?;
            let (dom, cod) = match fty {
                SimpleType::Arrow(d, c) => (*d, *c),
                other => return Err(TypeError::NotAFunction(show(&other))),
            };
            let arg_tys: Vec<SimpleType> = args
                .iter()
                .map(|a| typecheck(ctx, a, reg))
                .collect::<Result<_, _>>()?;
            let got = SimpleType::tuple(arg_tys);
            if got != dom {
                return Err(TypeError::ArgMismatch { expected: show(&dom), got: show(&got) });
            }
            Ok(cod)
        }
        Term::Pair(a, b) => Ok(SimpleType::prod(
            typecheck(ctx, a, reg)?,
            typecheck(ctx, b, reg)?,
        )),
        Term::Proj(ix, t) => match typecheck(ctx, t, reg)? {
            SimpleType::Prod(a, b) => Ok(match ix {
                crate::syntax::ProjIndex::Fst => *a,
                crate::syntax::ProjIndex::Snd => *b,
            }),
            other => Err(TypeError::NotAProduct(show(&other))),
        },
        Term::If { guard, then_branch, else_branch, .. } => {
            let gty = typecheck(ctx, guard, reg)?;
            if gty != SimpleType::Real {
                return Err(TypeError::GuardNotReal(show(&gty)));
            }
            let tt = typecheck(ctx, then_branch, reg)?;
            let et = typecheck(ctx, else_branch, reg)?;
            if tt != et {
                return Err(TypeError::BranchMismatch { then_ty: show(&tt), else_ty: show(&et) });
            }
            Ok(tt)
        }
    }
}

/// Whether `ty` conforms to the restricted shape the refinement system
/// handles: `R`, or arrows whose flattened argument tuple lists
/// higher-order restricted arguments first and reals last, with a
/// restricted result.
pub fn check_restricted(ty: &SimpleType) -> bool {
    fn is_restricted(ty: &SimpleType) -> bool {
        matches!(ty, SimpleType::Real) || is_restricted_arrow(ty)
    }
    fn is_restricted_arrow(ty: &SimpleType) -> bool {
        let SimpleType::Arrow(dom, cod) = ty else {
            return false;
        };
        let parts = dom.tuple_parts();
        let mut seen_real = false;
        for p in &parts {
            match p {
                SimpleType::Real => seen_real = true,
                _ if seen_real => return false,
                _ if is_restricted_arrow(p) => {}
                _ => return false,
            }
        }
        is_restricted(cod)
    }
    is_restricted(ty)
}

/// Checks that `ctx` binds only reals and `t : R`; returns the arity.
pub fn check_first_order(
    ctx: &TypingContext,
    t: &Term,
    reg: &PrimRegistry,
) -> Result<usize, TypeError> {
    for (name, ty) in &ctx.bindings {
        if *ty != SimpleType::Real {
            return Err(TypeError::NotFirstOrder { name: name.clone(), ty: show(ty) });
        }
    }
    let ty = typecheck(ctx, t, reg)?;
    if ty != SimpleType::Real {
        return Err(TypeError::ResultNotReal(show(&ty)));
    }
    Ok(ctx.len())
}

/// Fills missing lambda-parameter annotations in `t` from the simple type
/// `ty` the term is being checked against. Used by the refinement checker,
/// where the target type determines every binder type.
pub fn annotate_binders(t: &Term, ty: &SimpleType) -> Term {
    match (t, ty) {
        (Term::Lam(binders, body), SimpleType::Arrow(dom, cod)) => {
            let parts = dom.tuple_parts();
            if parts.len() != binders.len() {
                return t.clone();
            }
            let binders = binders
                .iter()
                .zip(&parts)
                .map(|(b, p)| crate::syntax::Binder {
                    name: b.name.clone(),
                    ty: Some(b.ty.clone().unwrap_or_else(|| (*p).clone())),
                })
                .collect();
            Term::Lam(binders, Box::new(annotate_binders(body, cod)))
        }
        (Term::If { guard, then_branch, else_branch, ann }, _) => Term::If {
            guard: guard.clone(),
            then_branch: Box::new(annotate_binders(then_branch, ty)),
            else_branch: Box::new(annotate_binders(else_branch, ty)),
            ann: ann.clone(),
        },
        _ => t.clone(),
    }
}
