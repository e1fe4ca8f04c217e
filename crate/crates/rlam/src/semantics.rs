//! Call-by-value evaluation and the primitive-operator registry.
//!
//! The registry is the single place where primitive real operators live.
//! Each entry carries the things the rest of the toolkit needs to reason
//! about the operator: a total evaluator on doubles, the names of its
//! partial derivatives (for the dual-number transformation), continuity
//! facts (domain/image formula pairs for the refinement checker), and for
//! {0,1}-valued comparison operators the guard facts the conditional rule
//! consumes.
//!
//! Evaluation itself is generic in the scalar carrier: the same structural
//! recursion runs on doubles, on exact rationals, and on polynomials.

use crate::continuity::{FExpr, Formula};
use crate::syntax::{rat_to_f64, SimpleType, Term, TypingContext};
use num_rational::BigRational;
use num_traits::Zero;
use std::collections::BTreeMap;
use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;

/// Guard facts for a {0,1}-valued primitive: where it returns 0, where it
/// returns 1, and a domain on which it is continuous.
#[derive(Debug, Clone)]
pub struct GuardFacts {
    pub zero_set: Formula,
    pub one_set: Formula,
    pub continuity: Formula,
}

/// A continuity fact: the primitive is (sequentially) continuous on the
/// truth domain of `domain`, and maps it into the truth domain of `image`.
/// `domain` is over `a1..an`, `image` over `b`.
#[derive(Debug, Clone)]
pub struct ContinuityFact {
    pub domain: Formula,
    pub image: Formula,
}

/// A primitive operator.
pub struct PrimFn {
    pub name: String,
    pub arity: usize,
    /// Total evaluator; must accept every point of R^arity.
    pub eval: Rc<dyn Fn(&[f64]) -> f64>,
    /// Names of the partial-derivative primitives, one per argument, when
    /// the operator is differentiable everywhere.
    pub derivatives: Option<Vec<String>>,
    pub continuity: Vec<ContinuityFact>,
    pub guard: Option<GuardFacts>,
}

impl fmt::Debug for PrimFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PrimFn")
            .field("name", &self.name)
            .field("arity", &self.arity)
            .field("derivatives", &self.derivatives)
            .finish()
    }
}

/// The formal logical variable for argument `i` (1-based) in fact formulas.
pub fn fact_arg(i: usize) -> String {
    format!("a{}", i)
}

/// The formal logical variable for the result in fact image formulas.
pub const FACT_RESULT: &str = "b";

/// Errors raised by the registry.
#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum RegistryError {
    #[error("unknown primitive `{0}`")]
    Unknown(String),
    #[error("derivative `{d}` of `{f}` is not registered")]
    MissingDerivative { f: String, d: String },
    #[error("primitive `{f}` lists {n} derivatives for arity {arity}")]
    DerivativeCount { f: String, n: usize, arity: usize },
    #[error("alias `{0}` collides with an existing primitive")]
    AliasCollision(String),
    #[error("alias manifest is not a flat object of strings: {0}")]
    BadManifest(String),
}

/// The operator registry.
#[derive(Clone)]
pub struct PrimRegistry {
    prims: BTreeMap<String, Rc<PrimFn>>,
}

impl fmt::Debug for PrimRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PrimRegistry({:?})", self.prims.keys().collect::<Vec<_>>())
    }
}

impl PrimRegistry {
    pub fn empty() -> PrimRegistry {
        PrimRegistry { prims: BTreeMap::new() }
    }

    pub fn get(&self, name: &str) -> Option<&PrimFn> {
        self.prims.get(name).map(|p| p.as_ref())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.prims.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.prims.keys().map(|s| s.as_str())
    }

    pub fn insert(&mut self, prim: PrimFn) {
        self.prims.insert(prim.name.clone(), Rc::new(prim));
    }

    /// Checks that every derivative reference resolves and has the same
    /// arity as the operator it differentiates.
    pub fn validate(&self) -> Result<(), RegistryError> {
        for p in self.prims.values() {
            if let Some(ds) = &p.derivatives {
                if ds.len() != p.arity {
                    return Err(RegistryError::DerivativeCount {
                        f: p.name.clone(),
                        n: ds.len(),
                        arity: p.arity,
                    });
                }
                for d in ds {
                    match self.get(d) {
                        None => {
                            return Err(RegistryError::MissingDerivative {
                                f: p.name.clone(),
                                d: d.clone(),
                            })
                        }
                        Some(dp) if dp.arity != p.arity => {
                            return Err(RegistryError::MissingDerivative {
                                f: p.name.clone(),
                                d: d.clone(),
                            })
                        }
                        Some(_) => {}
                    }
                }
            }
        }
        Ok(())
    }

    /// Adds alias names from a JSON manifest of the shape
    /// `{"alias": "existing"}`. Aliases share the target's semantics; they
    /// cannot introduce new operators.
    pub fn add_aliases_json(&mut self, manifest: &str) -> Result<(), RegistryError> {
        let value: serde_json::Value = serde_json::from_str(manifest)
            .map_err(|e| RegistryError::BadManifest(e.to_string()))?;
        let obj = value
            .as_object()
            .ok_or_else(|| RegistryError::BadManifest("expected an object".into()))?;
        for (alias, target) in obj {
            let target = target
                .as_str()
                .ok_or_else(|| RegistryError::BadManifest(format!("value for `{}`", alias)))?;
            if self.contains(alias) {
                return Err(RegistryError::AliasCollision(alias.clone()));
            }
            let existing = self
                .prims
                .get(target)
                .cloned()
                .ok_or_else(|| RegistryError::Unknown(target.to_string()))?;
            self.prims.insert(alias.clone(), existing);
        }
        Ok(())
    }
}

fn top() -> Formula {
    Formula::Top
}

fn a(i: usize) -> FExpr {
    FExpr::var(fact_arg(i))
}

fn res() -> FExpr {
    FExpr::var(FACT_RESULT)
}

fn fact(domain: Formula, image: Formula) -> ContinuityFact {
    ContinuityFact { domain, image }
}

struct PrimSpec {
    name: &'static str,
    arity: usize,
    eval: fn(&[f64]) -> f64,
    derivatives: Option<&'static [&'static str]>,
    continuity: fn() -> Vec<ContinuityFact>,
    guard: fn() -> Option<GuardFacts>,
}

fn no_guard() -> Option<GuardFacts> {
    None
}

/// The default registry. Beyond the arithmetic, trig, and comparison
/// operators it contains the constant/projection helpers the dual-number
/// transformation uses as partial derivatives, and two piecewise operators
/// exercised by the continuity corpus:
///
/// * `jump_ramp(a) = -a` for `a < 0`, `a + 1` otherwise (discontinuous at
///   0, continuous on each side);
/// * `div1m(w, a) = w / (1 - a)` for `a < 1`, `0` otherwise (a total
///   division-like operator).
pub fn default_registry() -> PrimRegistry {
    const SPECS: &[PrimSpec] = &[
        PrimSpec {
            name: "add",
            arity: 2,
            eval: |x| x[0] + x[1],
            derivatives: Some(&["one2", "one2"]),
            continuity: || {
                vec![
                    fact(top(), top()),
                    fact(
                        Formula::and(Formula::geq(a(1), FExpr::int(0)), Formula::geq(a(2), FExpr::int(0))),
                        Formula::geq(res(), FExpr::int(0)),
                    ),
                ]
            },
            guard: no_guard,
        },
        PrimSpec {
            name: "sub",
            arity: 2,
            eval: |x| x[0] - x[1],
            derivatives: Some(&["one2", "neg_one2"]),
            continuity: || vec![fact(top(), top())],
            guard: no_guard,
        },
        PrimSpec {
            name: "mul",
            arity: 2,
            eval: |x| x[0] * x[1],
            derivatives: Some(&["arg2", "arg1"]),
            continuity: || {
                vec![
                    fact(top(), top()),
                    fact(
                        Formula::and(Formula::geq(a(1), FExpr::int(0)), Formula::geq(a(2), FExpr::int(0))),
                        Formula::geq(res(), FExpr::int(0)),
                    ),
                ]
            },
            guard: no_guard,
        },
        PrimSpec {
            name: "neg",
            arity: 1,
            eval: |x| -x[0],
            derivatives: Some(&["neg_one1"]),
            continuity: || {
                vec![
                    fact(top(), top()),
                    fact(Formula::geq(a(1), FExpr::int(0)), Formula::leq(res(), FExpr::int(0))),
                    fact(Formula::leq(a(1), FExpr::int(0)), Formula::geq(res(), FExpr::int(0))),
                ]
            },
            guard: no_guard,
        },
        PrimSpec {
            name: "sin",
            arity: 1,
            eval: |x| x[0].sin(),
            derivatives: Some(&["cos"]),
            continuity: || {
                vec![fact(
                    top(),
                    Formula::and(
                        Formula::geq(res(), FExpr::int(-1)),
                        Formula::leq(res(), FExpr::int(1)),
                    ),
                )]
            },
            guard: no_guard,
        },
        PrimSpec {
            name: "cos",
            arity: 1,
            eval: |x| x[0].cos(),
            derivatives: Some(&["neg_sin"]),
            continuity: || {
                vec![fact(
                    top(),
                    Formula::and(
                        Formula::geq(res(), FExpr::int(-1)),
                        Formula::leq(res(), FExpr::int(1)),
                    ),
                )]
            },
            guard: no_guard,
        },
        PrimSpec {
            name: "neg_sin",
            arity: 1,
            eval: |x| -x[0].sin(),
            derivatives: Some(&["neg_cos"]),
            continuity: || vec![fact(top(), top())],
            guard: no_guard,
        },
        PrimSpec {
            name: "neg_cos",
            arity: 1,
            eval: |x| -x[0].cos(),
            derivatives: Some(&["sin"]),
            continuity: || vec![fact(top(), top())],
            guard: no_guard,
        },
        PrimSpec {
            name: "min",
            arity: 2,
            eval: |x| x[0].min(x[1]),
            derivatives: None,
            continuity: || {
                vec![
                    fact(top(), top()),
                    fact(
                        Formula::and(Formula::geq(a(1), FExpr::int(0)), Formula::geq(a(2), FExpr::int(0))),
                        Formula::geq(res(), FExpr::int(0)),
                    ),
                    fact(
                        Formula::and(Formula::leq(a(1), FExpr::int(0)), Formula::leq(a(2), FExpr::int(0))),
                        Formula::leq(res(), FExpr::int(0)),
                    ),
                ]
            },
            guard: no_guard,
        },
        PrimSpec {
            name: "max",
            arity: 2,
            eval: |x| x[0].max(x[1]),
            derivatives: None,
            continuity: || {
                vec![
                    fact(top(), top()),
                    fact(
                        Formula::and(Formula::geq(a(1), FExpr::int(0)), Formula::geq(a(2), FExpr::int(0))),
                        Formula::geq(res(), FExpr::int(0)),
                    ),
                ]
            },
            guard: no_guard,
        },
        PrimSpec {
            name: "lt",
            arity: 2,
            eval: |x| {
                if x[0] < x[1] {
                    1.0
                } else {
                    0.0
                }
            },
            derivatives: None,
            continuity: || guard_continuity(guard_lt()),
            guard: || Some(guard_lt()),
        },
        PrimSpec {
            name: "le",
            arity: 2,
            eval: |x| {
                if x[0] <= x[1] {
                    1.0
                } else {
                    0.0
                }
            },
            derivatives: None,
            continuity: || guard_continuity(guard_le()),
            guard: || Some(guard_le()),
        },
        PrimSpec {
            name: "eq",
            arity: 2,
            eval: |x| {
                if x[0] == x[1] {
                    1.0
                } else {
                    0.0
                }
            },
            derivatives: None,
            continuity: || guard_continuity(guard_eq()),
            guard: || Some(guard_eq()),
        },
        // Constant and projection helpers used as registered derivatives.
        PrimSpec {
            name: "one2",
            arity: 2,
            eval: |_| 1.0,
            derivatives: Some(&["zero2", "zero2"]),
            continuity: || vec![fact(top(), Formula::eq(res(), FExpr::int(1)))],
            guard: no_guard,
        },
        PrimSpec {
            name: "neg_one2",
            arity: 2,
            eval: |_| -1.0,
            derivatives: Some(&["zero2", "zero2"]),
            continuity: || vec![fact(top(), Formula::eq(res(), FExpr::int(-1)))],
            guard: no_guard,
        },
        PrimSpec {
            name: "zero2",
            arity: 2,
            eval: |_| 0.0,
            derivatives: Some(&["zero2", "zero2"]),
            continuity: || vec![fact(top(), Formula::eq(res(), FExpr::int(0)))],
            guard: no_guard,
        },
        PrimSpec {
            name: "arg1",
            arity: 2,
            eval: |x| x[0],
            derivatives: Some(&["one2", "zero2"]),
            continuity: || vec![fact(top(), top())],
            guard: no_guard,
        },
        PrimSpec {
            name: "arg2",
            arity: 2,
            eval: |x| x[1],
            derivatives: Some(&["zero2", "one2"]),
            continuity: || vec![fact(top(), top())],
            guard: no_guard,
        },
        PrimSpec {
            name: "neg_one1",
            arity: 1,
            eval: |_| -1.0,
            derivatives: Some(&["zero1"]),
            continuity: || vec![fact(top(), Formula::eq(res(), FExpr::int(-1)))],
            guard: no_guard,
        },
        PrimSpec {
            name: "zero1",
            arity: 1,
            eval: |_| 0.0,
            derivatives: Some(&["zero1"]),
            continuity: || vec![fact(top(), Formula::eq(res(), FExpr::int(0)))],
            guard: no_guard,
        },
        // Piecewise operators for the continuity corpus.
        PrimSpec {
            name: "jump_ramp",
            arity: 1,
            eval: |x| {
                if x[0] < 0.0 {
                    -x[0]
                } else {
                    x[0] + 1.0
                }
            },
            derivatives: None,
            continuity: || {
                vec![
                    fact(Formula::geq(a(1), FExpr::int(0)), Formula::geq(res(), FExpr::int(1))),
                    fact(Formula::lt(a(1), FExpr::int(0)), Formula::gt(res(), FExpr::int(0))),
                ]
            },
            guard: no_guard,
        },
        PrimSpec {
            name: "div1m",
            arity: 2,
            eval: |x| {
                if x[1] < 1.0 {
                    x[0] / (1.0 - x[1])
                } else {
                    0.0
                }
            },
            derivatives: None,
            continuity: || {
                vec![
                    fact(Formula::lt(a(2), FExpr::int(1)), top()),
                    fact(Formula::gt(a(2), FExpr::int(1)), Formula::eq(res(), FExpr::int(0))),
                ]
            },
            guard: no_guard,
        },
    ];

    let mut reg = PrimRegistry::empty();
    for s in SPECS {
        reg.insert(PrimFn {
            name: s.name.to_string(),
            arity: s.arity,
            eval: Rc::new(s.eval),
            derivatives: s.derivatives.map(|ds| ds.iter().map(|d| d.to_string()).collect()),
            continuity: (s.continuity)(),
            guard: (s.guard)(),
        });
    }
    reg.validate().expect("default registry is closed under derivatives");
    reg
}

fn guard_lt() -> GuardFacts {
    GuardFacts {
        zero_set: Formula::geq(a(1), a(2)),
        one_set: Formula::lt(a(1), a(2)),
        continuity: Formula::not(Formula::eq(a(1), a(2))),
    }
}

fn guard_le() -> GuardFacts {
    GuardFacts {
        zero_set: Formula::gt(a(1), a(2)),
        one_set: Formula::leq(a(1), a(2)),
        continuity: Formula::not(Formula::eq(a(1), a(2))),
    }
}

fn guard_eq() -> GuardFacts {
    GuardFacts {
        zero_set: Formula::not(Formula::eq(a(1), a(2))),
        one_set: Formula::eq(a(1), a(2)),
        continuity: Formula::not(Formula::eq(a(1), a(2))),
    }
}

/// Continuity facts induced by guard facts: the operator is constant (0 or
/// 1) on its zero and one sets, and {0,1}-valued on its continuity domain.
fn guard_continuity(g: GuardFacts) -> Vec<ContinuityFact> {
    vec![
        fact(g.one_set, Formula::eq(res(), FExpr::int(1))),
        fact(g.zero_set, Formula::eq(res(), FExpr::int(0))),
        fact(
            g.continuity,
            Formula::or(
                Formula::eq(res(), FExpr::int(0)),
                Formula::eq(res(), FExpr::int(1)),
            ),
        ),
    ]
}

/// Evaluation errors.
#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    UnboundVar(String),
    #[error("unknown primitive `{0}`")]
    UnknownPrim(String),
    #[error("primitive `{0}` applied to {1} arguments, expects {2}")]
    PrimArity(String, usize, usize),
    #[error("expected a real value in {0}")]
    NotReal(&'static str),
    #[error("expected a pair in {0}")]
    NotPair(&'static str),
    #[error("expected a function in application position")]
    NotFunction,
    #[error("function expects {expected} arguments, got {got}")]
    ArgCount { expected: usize, got: usize },
    #[error("{0} is not supported in this interpretation")]
    Unsupported(&'static str),
}

/// Values over a scalar carrier `S`.
#[derive(Clone)]
pub enum GValue<S> {
    Real(S),
    Pair(Box<GValue<S>>, Box<GValue<S>>),
    Fun(Rc<dyn Fn(GValue<S>) -> Result<GValue<S>, EvalError>>),
}

impl<S: fmt::Debug> fmt::Debug for GValue<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GValue::Real(x) => write!(f, "Real({:?})", x),
            GValue::Pair(a, b) => write!(f, "Pair({:?}, {:?})", a, b),
            GValue::Fun(_) => write!(f, "Fun(..)"),
        }
    }
}

impl<S> GValue<S> {
    pub fn as_real(&self) -> Result<&S, EvalError> {
        match self {
            GValue::Real(x) => Ok(x),
            _ => Err(EvalError::NotReal("value")),
        }
    }

    /// Packs a nonempty argument list into a right-nested tuple value.
    pub fn tuple(mut vals: Vec<GValue<S>>) -> GValue<S> {
        assert!(!vals.is_empty());
        let mut acc = vals.pop().unwrap();
        while let Some(v) = vals.pop() {
            acc = GValue::Pair(Box::new(v), Box::new(acc));
        }
        acc
    }

    /// Unpacks a right-nested tuple into `n` components.
    pub fn untuple(self, n: usize) -> Result<Vec<GValue<S>>, EvalError> {
        let mut out = Vec::with_capacity(n);
        let mut cur = self;
        for _ in 0..n.saturating_sub(1) {
            match cur {
                GValue::Pair(a, b) => {
                    out.push(*a);
                    cur = *b;
                }
                _ => return Err(EvalError::NotPair("argument tuple")),
            }
        }
        out.push(cur);
        Ok(out)
    }
}

/// How a scalar carrier interprets literals, primitives, and guards.
pub trait Interp<S: Clone + 'static>: Clone + 'static {
    fn literal(&self, r: &BigRational) -> Result<S, EvalError>;
    fn prim(&self, name: &str, args: &[S]) -> Result<S, EvalError>;
    /// Whether a guard value selects the else-branch (is zero).
    fn guard_is_zero(&self, s: &S) -> Result<bool, EvalError>;
}

/// The standard double-precision interpretation backed by a registry.
#[derive(Clone)]
pub struct F64Interp {
    pub registry: Rc<PrimRegistry>,
}

impl Interp<f64> for F64Interp {
    fn literal(&self, r: &BigRational) -> Result<f64, EvalError> {
        Ok(rat_to_f64(r))
    }

    fn prim(&self, name: &str, args: &[f64]) -> Result<f64, EvalError> {
        let p = self
            .registry
            .get(name)
            .ok_or_else(|| EvalError::UnknownPrim(name.to_string()))?;
        if p.arity != args.len() {
            return Err(EvalError::PrimArity(name.to_string(), args.len(), p.arity));
        }
        Ok((p.eval)(args))
    }

    fn guard_is_zero(&self, s: &f64) -> Result<bool, EvalError> {
        Ok(*s == 0.0)
    }
}

/// Exact interpretation over rationals. Supports the ring operations and
/// exact comparisons; transcendental primitives are rejected.
#[derive(Clone)]
pub struct ExactInterp;

impl Interp<BigRational> for ExactInterp {
    fn literal(&self, r: &BigRational) -> Result<BigRational, EvalError> {
        Ok(r.clone())
    }

    fn prim(&self, name: &str, args: &[BigRational]) -> Result<BigRational, EvalError> {
        let bool_rat = |b: bool| {
            if b {
                BigRational::from_integer(1.into())
            } else {
                BigRational::zero()
            }
        };
        match (name, args) {
            ("add", [a, b]) => Ok(a + b),
            ("sub", [a, b]) => Ok(a - b),
            ("mul", [a, b]) => Ok(a * b),
            ("neg", [a]) => Ok(-a),
            ("min", [a, b]) => Ok(a.min(b).clone()),
            ("max", [a, b]) => Ok(a.max(b).clone()),
            ("lt", [a, b]) => Ok(bool_rat(a < b)),
            ("le", [a, b]) => Ok(bool_rat(a <= b)),
            ("eq", [a, b]) => Ok(bool_rat(a == b)),
            ("one2", [_, _]) => Ok(BigRational::from_integer(1.into())),
            ("neg_one2", [_, _]) => Ok(BigRational::from_integer((-1).into())),
            ("zero2", [_, _]) => Ok(BigRational::zero()),
            ("arg1", [a, _]) => Ok(a.clone()),
            ("arg2", [_, b]) => Ok(b.clone()),
            ("neg_one1", [_]) => Ok(BigRational::from_integer((-1).into())),
            ("zero1", [_]) => Ok(BigRational::zero()),
            _ => Err(EvalError::Unsupported("non-rational primitive")),
        }
    }

    fn guard_is_zero(&self, s: &BigRational) -> Result<bool, EvalError> {
        Ok(s.is_zero())
    }
}

/// Environments map variables to values.
pub type GEnv<S> = HashMap<String, GValue<S>>;

/// The `f64` value type most callers use.
pub type Value = GValue<f64>;
pub type SemEnv = GEnv<f64>;

/// Generic call-by-value evaluator.
pub fn eval_generic<S: Clone + 'static, I: Interp<S>>(
    env: &GEnv<S>,
    t: &Term,
    interp: &I,
) -> Result<GValue<S>, EvalError> {
    match t {
        Term::Var(x) => env
            .get(x)
            .cloned()
            .ok_or_else(|| EvalError::UnboundVar(x.clone())),
        Term::Lit(r) => Ok(GValue::Real(interp.literal(r)?)),
        Term::PrimApp(f, args) => {
            let mut vals = Vec::with_capacity(args.len());
            for a in args {
                vals.push(eval_generic(env, a, interp)?.as_real()?.clone());
            }
            Ok(GValue::Real(interp.prim(f, &vals)?))
        }
        Term::Lam(binders, body) => {
            let env = env.clone();
            let binders = binders.clone();
            let body = body.as_ref().clone();
            let interp = interp.clone();
            Ok(GValue::Fun(Rc::new(move |arg| {
                let parts = arg.untuple(binders.len())?;
                let mut inner = env.clone();
                for (b, v) in binders.iter().zip(parts) {
                    inner.insert(b.name.clone(), v);
                }
                eval_generic(&inner, &body, &interp)
            })))
        }
        Term::App(f, args) => {
            let fv = eval_generic(env, f, interp)?;
            let mut vals = Vec::with_capacity(args.len());
            for a in args {
                vals.push(eval_generic(env, a, interp)?);
            }
            match fv {
                GValue::Fun(f) => f(GValue::tuple(vals)),
                _ => Err(EvalError::NotFunction),
            }
        }
        Term::Pair(a, b) => Ok(GValue::Pair(
            Box::new(eval_generic(env, a, interp)?),
            Box::new(eval_generic(env, b, interp)?),
        )),
        Term::Proj(ix, t) => match eval_generic(env, t, interp)? {
            GValue::Pair(a, b) => Ok(match ix {
                crate::syntax::ProjIndex::Fst => *a,
                crate::syntax::ProjIndex::Snd => *b,
            }),
            _ => Err(EvalError::NotPair("projection")),
        },
        Term::If { guard, then_branch, else_branch, .. } => {
            let g = eval_generic(env, guard, interp)?;
            let g = g.as_real()?;
            if interp.guard_is_zero(g)? {
                eval_generic(env, else_branch, interp)
            } else {
                eval_generic(env, then_branch, interp)
            }
        }
    }
}

/// Evaluates under the double-precision interpretation.
pub fn eval(env: &SemEnv, t: &Term, reg: &PrimRegistry) -> Result<Value, EvalError> {
    let interp = F64Interp { registry: Rc::new(reg.clone()) };
    eval_generic(env, t, &interp)
}

/// Evaluates exactly over rationals; fails on transcendental primitives.
pub fn eval_exact(
    env: &GEnv<BigRational>,
    t: &Term,
) -> Result<GValue<BigRational>, EvalError> {
    eval_generic(env, t, &ExactInterp)
}

/// Interprets a first-order term (all context entries of type `R`, result
/// `R`) as a function on doubles. The context order fixes the argument
/// order.
pub fn denote_first_order(
    ctx: &TypingContext,
    t: &Term,
    reg: &PrimRegistry,
) -> Result<Rc<dyn Fn(&[f64]) -> Result<f64, EvalError>>, crate::typing::TypeError> {
    crate::typing::check_first_order(ctx, t, reg)?;
    let names: Vec<String> = ctx.bindings.iter().map(|(n, _)| n.clone()).collect();
    let t = t.clone();
    let interp = F64Interp { registry: Rc::new(reg.clone()) };
    Ok(Rc::new(move |args: &[f64]| {
        let mut env = SemEnv::new();
        for (n, v) in names.iter().zip(args) {
            env.insert(n.clone(), GValue::Real(*v));
        }
        match eval_generic(&env, &t, &interp)? {
            GValue::Real(x) => Ok(x),
            _ => Err(EvalError::NotReal("first-order result")),
        }
    }))
}

/// Convenience: evaluates a closed term of type `R`.
pub fn eval_closed_real(t: &Term, reg: &PrimRegistry) -> Result<f64, EvalError> {
    match eval(&SemEnv::new(), t, reg)? {
        GValue::Real(x) => Ok(x),
        _ => Err(EvalError::NotReal("closed term")),
    }
}

/// Checks `t : R` under `ctx` and returns its value at `point`.
pub fn eval_at_point(
    ctx: &TypingContext,
    t: &Term,
    point: &[f64],
    reg: &PrimRegistry,
) -> Result<f64, EvalError> {
    let mut env = SemEnv::new();
    for ((n, _), v) in ctx.bindings.iter().zip(point) {
        env.insert(n.clone(), GValue::Real(*v));
    }
    match eval(&env, t, reg)? {
        GValue::Real(x) => Ok(x),
        _ => Err(EvalError::NotReal("term at point")),
    }
}

impl SimpleType {
    /// Whether a value has the shape this type prescribes.
    pub fn admits<S: Clone>(&self, v: &GValue<S>) -> bool {
        match (self, v) {
            (SimpleType::Real, GValue::Real(_)) => true,
            (SimpleType::Prod(a, b), GValue::Pair(x, y)) => a.admits(x) && b.admits(y),
            (SimpleType::Arrow(_, _), GValue::Fun(_)) => true,
            _ => false,
        }
    }
}
