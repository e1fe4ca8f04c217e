//! Forward-mode automatic differentiation as a source-to-source
//! transformation.
//!
//! Reals become dual pairs `R * R` (value, tangent). Variables are
//! renamed to their dual counterparts, literals pair up with a zero
//! tangent, and a primitive application becomes a pair of the primitive
//! applied to the values together with the chain-rule sum over its
//! registered partial derivatives. The transformation is homomorphic on
//! lambdas, applications, pairs and projections, and deliberately
//! rejects conditionals: the restricted fragment it is proved correct
//! for has none.

use crate::semantics::{EvalError, GValue, PrimRegistry, SemEnv};
use crate::syntax::{
    binder_names, free_vars, rat_int, substitute, Binder, ProjIndex, SimpleType, Term,
    TypingContext,
};
use crate::typing::{check_first_order, TypeError};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum AdError {
    #[error("conditionals cannot be differentiated; guard the program instead")]
    Conditional,
    #[error("primitive `{0}` has no registered derivatives")]
    NotDifferentiable(String),
    #[error("unknown primitive `{0}`")]
    UnknownPrim(String),
}

/// `D` on simple types: the ground type becomes a dual pair.
pub fn ad_type(ty: &SimpleType) -> SimpleType {
    match ty {
        SimpleType::Real => SimpleType::prod(SimpleType::Real, SimpleType::Real),
        SimpleType::Prod(a, b) => SimpleType::prod(ad_type(a), ad_type(b)),
        SimpleType::Arrow(a, b) => SimpleType::arrow(ad_type(a), ad_type(b)),
    }
}

/// Injective renaming of term variables to their dual names.
///
/// Prefixes names with `d` and primes away collisions with every name
/// appearing in the term (or supplied context), so substituting the
/// renamed variables can never capture.
#[derive(Debug, Clone)]
pub struct DualNaming {
    map: BTreeMap<String, String>,
}

impl DualNaming {
    pub fn for_term(t: &Term, ctx: &TypingContext) -> DualNaming {
        let mut names: BTreeSet<String> = free_vars(t);
        names.extend(binder_names(t));
        for (n, _) in &ctx.bindings {
            names.insert(n.clone());
        }
        let mut taken = names.clone();
        let mut map = BTreeMap::new();
        for name in &names {
            let mut dual = format!("d{}", name);
            while taken.contains(&dual) {
                dual.push('\'');
            }
            taken.insert(dual.clone());
            map.insert(name.clone(), dual);
        }
        DualNaming { map }
    }

    pub fn dual(&self, name: &str) -> String {
        self.map.get(name).cloned().unwrap_or_else(|| format!("d{}", name))
    }
}

/// `D` on contexts: every binding is renamed and its type transformed.
pub fn ad_ctx(ctx: &TypingContext, naming: &DualNaming) -> TypingContext {
    TypingContext::of(
        ctx.bindings
            .iter()
            .map(|(n, ty)| (naming.dual(n), ad_type(ty)))
            .collect(),
    )
}

fn fst(t: Term) -> Term {
    Term::proj(ProjIndex::Fst, t)
}

fn snd(t: Term) -> Term {
    Term::proj(ProjIndex::Snd, t)
}

/// The dual-number transformation.
pub fn ad_term(t: &Term, naming: &DualNaming, reg: &PrimRegistry) -> Result<Term, AdError> {
    Ok(match t {
        Term::Var(x) => Term::var(naming.dual(x)),
        Term::Lit(r) => Term::pair(Term::Lit(r.clone()), Term::Lit(rat_int(0))),
        Term::PrimApp(f, args) => {
            let prim = reg.get(f).ok_or_else(|| AdError::UnknownPrim(f.clone()))?;
            let partials = prim
                .derivatives
                .as_ref()
                .ok_or_else(|| AdError::NotDifferentiable(f.clone()))?;
            let duals: Vec<Term> = args
                .iter()
                .map(|a| ad_term(a, naming, reg))
                .collect::<Result<_, _>>()?;
            let values: Vec<Term> = duals.iter().cloned().map(fst).collect();
            let mut tangent: Option<Term> = None;
            for (i, dname) in partials.iter().enumerate() {
                let weight = Term::prim(dname.clone(), values.clone());
                let summand = Term::prim("mul", vec![weight, snd(duals[i].clone())]);
                tangent = Some(match tangent {
                    None => summand,
                    Some(acc) => Term::prim("add", vec![acc, summand]),
                });
            }
            Term::pair(
                Term::prim(f.clone(), values),
                tangent.unwrap_or_else(|| Term::Lit(rat_int(0))),
            )
        }
        Term::Lam(binders, body) => Term::lam(
            binders
                .iter()
                .map(|b| Binder {
                    name: naming.dual(&b.name),
                    ty: b.ty.as_ref().map(ad_type),
                })
                .collect(),
            ad_term(body, naming, reg)?,
        ),
        Term::App(fun, args) => Term::app(
            ad_term(fun, naming, reg)?,
            args.iter().map(|a| ad_term(a, naming, reg)).collect::<Result<_, _>>()?,
        ),
        Term::Pair(a, b) => {
            Term::pair(ad_term(a, naming, reg)?, ad_term(b, naming, reg)?)
        }
        Term::Proj(ix, inner) => Term::proj(*ix, ad_term(inner, naming, reg)?),
        Term::If { .. } => return Err(AdError::Conditional),
    })
}

/// The dual value seeding differentiation with respect to `wrt`: the
/// variable paired with tangent 1 for `wrt` itself, 0 for the rest.
fn dual_seed(name: &str, wrt: &str) -> Term {
    let tangent = if name == wrt { 1 } else { 0 };
    Term::pair(Term::var(name), Term::Lit(rat_int(tangent)))
}

/// The partial derivative of `t` with respect to its free variable `wrt`,
/// as a term over the same free variables.
///
/// `t` must be of ground type with ground free variables (the caller can
/// enforce this with the first-order typing check).
pub fn derive(t: &Term, wrt: &str, reg: &PrimRegistry) -> Result<Term, AdError> {
    let naming = DualNaming::for_term(t, &TypingContext::new());
    let transformed = ad_term(t, &naming, reg)?;
    let mut out = transformed;
    for x in free_vars(t) {
        out = substitute(&out, &naming.dual(&x), &dual_seed(&x, wrt));
    }
    Ok(snd(out))
}

#[derive(Debug, thiserror::Error)]
pub enum GradError {
    #[error(transparent)]
    Ad(#[from] AdError),
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("point has {got} coordinates, context has {want} variables")]
    PointArity { got: usize, want: usize },
}

/// The gradient of `t : R` (under an all-ground `ctx`) at `point`,
/// computed by differentiating with respect to each context variable in
/// order and evaluating.
pub fn grad_at(
    ctx: &TypingContext,
    t: &Term,
    point: &[f64],
    reg: &PrimRegistry,
) -> Result<Vec<f64>, GradError> {
    let arity = check_first_order(ctx, t, reg)?;
    if point.len() != arity {
        return Err(GradError::PointArity { got: point.len(), want: arity });
    }
    let mut env = SemEnv::new();
    for ((n, _), v) in ctx.bindings.iter().zip(point) {
        env.insert(n.clone(), GValue::Real(*v));
    }
    let mut out = Vec::with_capacity(arity);
    for (name, _) in &ctx.bindings {
        let dt = derive(t, name, reg)?;
        match crate::semantics::eval(&env, &dt, reg)? {
            GValue::Real(x) => out.push(x),
            _ => unreachable!("derivative of a ground term is ground"),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::default_registry;
    use crate::syntax::parse_term;

    #[test]
    fn types_transform_structurally() {
        let r = SimpleType::Real;
        let dual = SimpleType::prod(r.clone(), r.clone());
        assert_eq!(ad_type(&r), dual);
        let f = SimpleType::arrow(SimpleType::prod(r.clone(), r.clone()), r.clone());
        assert_eq!(
            ad_type(&f),
            SimpleType::arrow(SimpleType::prod(dual.clone(), dual.clone()), dual)
        );
    }

    #[test]
    fn dual_names_prime_past_collisions() {
        let reg = default_registry();
        let t = parse_term("x * dx", &reg).unwrap();
        let naming = DualNaming::for_term(&t, &TypingContext::new());
        assert_eq!(naming.dual("x"), "dx'");
        assert_eq!(naming.dual("dx"), "ddx");
    }

    #[test]
    fn literals_carry_zero_tangents() {
        let reg = default_registry();
        let t = parse_term("2", &reg).unwrap();
        let naming = DualNaming::for_term(&t, &TypingContext::new());
        let dt = ad_term(&t, &naming, &reg).unwrap();
        assert_eq!(dt, Term::pair(Term::Lit(rat_int(2)), Term::Lit(rat_int(0))));
    }
}
