//! Quantifier-free formulas over real-valued expressions.
//!
//! The core connectives are top, `e <= e'`, conjunction, and negation;
//! strict order, equality, disjunction, and implication are derived forms.
//! Expressions mention logical variables, rational constants, and registry
//! primitives, so guard regions like `sin(a) <= 0` are expressible even
//! though only the linear fragment is decided exactly.

use crate::semantics::PrimRegistry;
use crate::syntax::rat_to_f64;
use num_rational::BigRational;
use num_traits::Zero;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Logical expressions appearing inside formulas.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FExpr {
    Var(String),
    Const(BigRational),
    App(String, Vec<FExpr>),
}

impl FExpr {
    pub fn var(name: impl Into<String>) -> FExpr {
        FExpr::Var(name.into())
    }

    pub fn int(n: i64) -> FExpr {
        FExpr::Const(crate::syntax::rat_int(n))
    }

    pub fn add(a: FExpr, b: FExpr) -> FExpr {
        FExpr::App("add".into(), vec![a, b])
    }

    pub fn sub(a: FExpr, b: FExpr) -> FExpr {
        FExpr::App("sub".into(), vec![a, b])
    }

    pub fn mul(a: FExpr, b: FExpr) -> FExpr {
        FExpr::App("mul".into(), vec![a, b])
    }

    pub fn neg(a: FExpr) -> FExpr {
        FExpr::App("neg".into(), vec![a])
    }

    pub fn vars(&self, out: &mut BTreeSet<String>) {
        match self {
            FExpr::Var(v) => {
                out.insert(v.clone());
            }
            FExpr::Const(_) => {}
            FExpr::App(_, args) => args.iter().for_each(|a| a.vars(out)),
        }
    }

    /// Substitutes expressions for variables.
    pub fn subst(&self, map: &BTreeMap<String, FExpr>) -> FExpr {
        match self {
            FExpr::Var(v) => map.get(v).cloned().unwrap_or_else(|| self.clone()),
            FExpr::Const(_) => self.clone(),
            FExpr::App(f, args) => {
                FExpr::App(f.clone(), args.iter().map(|a| a.subst(map)).collect())
            }
        }
    }
}

/// Formulas. `Top` is truth; everything else is built from non-strict
/// comparisons with conjunction and negation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Top,
    Leq(FExpr, FExpr),
    And(Box<Formula>, Box<Formula>),
    Not(Box<Formula>),
}

impl Formula {
    pub fn leq(a: FExpr, b: FExpr) -> Formula {
        Formula::Leq(a, b)
    }

    /// `a < b`, encoded as the negation of `b <= a`.
    pub fn lt(a: FExpr, b: FExpr) -> Formula {
        Formula::Not(Box::new(Formula::Leq(b, a)))
    }

    pub fn geq(a: FExpr, b: FExpr) -> Formula {
        Formula::Leq(b, a)
    }

    pub fn gt(a: FExpr, b: FExpr) -> Formula {
        Formula::lt(b, a)
    }

    /// `a = b`, encoded as `a <= b /\ b <= a`.
    pub fn eq(a: FExpr, b: FExpr) -> Formula {
        Formula::and(Formula::Leq(a.clone(), b.clone()), Formula::Leq(b, a))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn not(a: Formula) -> Formula {
        match a {
            // Collapsing double negations keeps synthesized formulas and
            // their rendering small; classically nothing is lost.
            Formula::Not(inner) => *inner,
            other => Formula::Not(Box::new(other)),
        }
    }

    /// `a \/ b`, encoded as `~(~a /\ ~b)`.
    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::not(Formula::and(Formula::not(a), Formula::not(b)))
    }

    /// `a => b`, encoded as `~(a /\ ~b)`.
    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::not(Formula::and(a, Formula::not(b)))
    }

    /// The canonical unsatisfiable formula.
    pub fn bottom() -> Formula {
        Formula::not(Formula::Top)
    }

    /// Conjunction of a list, `Top` when empty.
    pub fn conj(parts: Vec<Formula>) -> Formula {
        let mut it = parts.into_iter();
        match it.next() {
            None => Formula::Top,
            Some(first) => it.fold(first, Formula::and),
        }
    }

    /// Disjunction of a list, bottom when empty.
    pub fn disj(parts: Vec<Formula>) -> Formula {
        let mut it = parts.into_iter();
        match it.next() {
            None => Formula::bottom(),
            Some(first) => it.fold(first, Formula::or),
        }
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Top => {}
            Formula::Leq(a, b) => {
                a.vars(out);
                b.vars(out);
            }
            Formula::And(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Formula::Not(a) => a.collect_vars(out),
        }
    }

    /// Substitutes expressions for logical variables.
    pub fn subst(&self, map: &BTreeMap<String, FExpr>) -> Formula {
        match self {
            Formula::Top => Formula::Top,
            Formula::Leq(a, b) => Formula::Leq(a.subst(map), b.subst(map)),
            Formula::And(a, b) => Formula::and(a.subst(map), b.subst(map)),
            Formula::Not(a) => Formula::not(a.subst(map)),
        }
    }

    /// Renames a single variable.
    pub fn rename(&self, from: &str, to: &str) -> Formula {
        let mut map = BTreeMap::new();
        map.insert(from.to_string(), FExpr::var(to));
        self.subst(&map)
    }
}

/// A finite map from logical variables to exact rationals.
pub type Assignment = BTreeMap<String, BigRational>;

/// Errors from truth-domain evaluation.
#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum FormulaError {
    #[error("unbound logical variable `{0}`")]
    UnboundVar(String),
    #[error("unknown primitive `{0}` in formula")]
    UnknownPrim(String),
    #[error("primitive `{0}` applied to {1} arguments, expects {2}")]
    Arity(String, usize, usize),
}

/// Exact-or-float value used while evaluating formula expressions: exact
/// rationals as long as only field operations occur, doubles as soon as a
/// transcendental primitive is applied.
enum Scalar {
    Exact(BigRational),
    Approx(f64),
}

impl Scalar {
    fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(r) => rat_to_f64(r),
            Scalar::Approx(x) => *x,
        }
    }
}

fn eval_fexpr(
    e: &FExpr,
    sigma: &Assignment,
    reg: &PrimRegistry,
) -> Result<Scalar, FormulaError> {
    match e {
        FExpr::Var(v) => sigma
            .get(v)
            .map(|r| Scalar::Exact(r.clone()))
            .ok_or_else(|| FormulaError::UnboundVar(v.clone())),
        FExpr::Const(r) => Ok(Scalar::Exact(r.clone())),
        FExpr::App(f, args) => {
            let vals = args
                .iter()
                .map(|a| eval_fexpr(a, sigma, reg))
                .collect::<Result<Vec<_>, _>>()?;
            let exact: Option<Vec<&BigRational>> = vals
                .iter()
                .map(|v| match v {
                    Scalar::Exact(r) => Some(r),
                    Scalar::Approx(_) => None,
                })
                .collect();
            if let Some(exact) = exact {
                // Keep exactness through the ring operations.
                match (f.as_str(), exact.as_slice()) {
                    ("add", [a, b]) => return Ok(Scalar::Exact(*a + *b)),
                    ("sub", [a, b]) => return Ok(Scalar::Exact(*a - *b)),
                    ("mul", [a, b]) => return Ok(Scalar::Exact(*a * *b)),
                    ("neg", [a]) => return Ok(Scalar::Exact(-*a)),
                    ("min", [a, b]) => {
                        return Ok(Scalar::Exact((*a).min(*b).clone()));
                    }
                    ("max", [a, b]) => {
                        return Ok(Scalar::Exact((*a).max(*b).clone()));
                    }
                    _ => {}
                }
            }
            let prim = reg.get(f).ok_or_else(|| FormulaError::UnknownPrim(f.clone()))?;
            if prim.arity != vals.len() {
                return Err(FormulaError::Arity(f.clone(), vals.len(), prim.arity));
            }
            let xs: Vec<f64> = vals.iter().map(Scalar::to_f64).collect();
            Ok(Scalar::Approx((prim.eval)(&xs)))
        }
    }
}

/// Decides whether `sigma` lies in the truth domain of `phi`. Comparisons
/// between exact values are decided exactly; once a transcendental
/// primitive appears the comparison falls back to doubles.
pub fn truth_domain_member(
    phi: &Formula,
    sigma: &Assignment,
    reg: &PrimRegistry,
) -> Result<bool, FormulaError> {
    match phi {
        Formula::Top => Ok(true),
        Formula::Leq(a, b) => {
            let va = eval_fexpr(a, sigma, reg)?;
            let vb = eval_fexpr(b, sigma, reg)?;
            Ok(match (va, vb) {
                (Scalar::Exact(x), Scalar::Exact(y)) => x <= y,
                (x, y) => x.to_f64() <= y.to_f64(),
            })
        }
        Formula::And(a, b) => {
            Ok(truth_domain_member(a, sigma, reg)? && truth_domain_member(b, sigma, reg)?)
        }
        Formula::Not(a) => Ok(!truth_domain_member(a, sigma, reg)?),
    }
}

/// Double-precision membership test used by the sampling probes.
pub fn truth_domain_member_f64(
    phi: &Formula,
    point: &BTreeMap<String, f64>,
    reg: &PrimRegistry,
) -> Result<bool, FormulaError> {
    fn eval(e: &FExpr, point: &BTreeMap<String, f64>, reg: &PrimRegistry) -> Result<f64, FormulaError> {
        match e {
            FExpr::Var(v) => point
                .get(v)
                .copied()
                .ok_or_else(|| FormulaError::UnboundVar(v.clone())),
            FExpr::Const(r) => Ok(rat_to_f64(r)),
            FExpr::App(f, args) => {
                let xs = args
                    .iter()
                    .map(|a| eval(a, point, reg))
                    .collect::<Result<Vec<_>, _>>()?;
                let prim = reg.get(f).ok_or_else(|| FormulaError::UnknownPrim(f.clone()))?;
                if prim.arity != xs.len() {
                    return Err(FormulaError::Arity(f.clone(), xs.len(), prim.arity));
                }
                Ok((prim.eval)(&xs))
            }
        }
    }
    match phi {
        Formula::Top => Ok(true),
        Formula::Leq(a, b) => Ok(eval(a, point, reg)? <= eval(b, point, reg)?),
        Formula::And(a, b) => Ok(truth_domain_member_f64(a, point, reg)?
            && truth_domain_member_f64(b, point, reg)?),
        Formula::Not(a) => Ok(!truth_domain_member_f64(a, point, reg)?),
    }
}

// Display: re-sugars the encodings the constructors produce, so formulas
// print the way they are written (`a < b`, `a = b`, `p \/ q`).

fn is_zero_const(e: &FExpr) -> bool {
    matches!(e, FExpr::Const(r) if r.is_zero())
}

impl fmt::Display for FExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

impl FExpr {
    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
        match self {
            FExpr::Var(v) => write!(f, "{}", v),
            FExpr::Const(r) => write!(f, "{}", crate::syntax::pretty_rational(r)),
            FExpr::App(op, args) => match (op.as_str(), args.as_slice()) {
                ("add", [a, b]) => {
                    if prec > 1 {
                        write!(f, "(")?;
                    }
                    a.fmt_prec(f, 1)?;
                    write!(f, " + ")?;
                    b.fmt_prec(f, 2)?;
                    if prec > 1 {
                        write!(f, ")")?;
                    }
                    Ok(())
                }
                ("sub", [a, b]) => {
                    if prec > 1 {
                        write!(f, "(")?;
                    }
                    a.fmt_prec(f, 1)?;
                    write!(f, " - ")?;
                    b.fmt_prec(f, 2)?;
                    if prec > 1 {
                        write!(f, ")")?;
                    }
                    Ok(())
                }
                ("mul", [a, b]) => {
                    if prec > 2 {
                        write!(f, "(")?;
                    }
                    a.fmt_prec(f, 2)?;
                    write!(f, " * ")?;
                    b.fmt_prec(f, 3)?;
                    if prec > 2 {
                        write!(f, ")")?;
                    }
                    Ok(())
                }
                ("neg", [a]) => {
                    write!(f, "-")?;
                    a.fmt_prec(f, 3)
                }
                _ => {
                    write!(f, "{}(", op)?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            write!(f, ", ")?;
                        }
                        a.fmt_prec(f, 0)?;
                    }
                    write!(f, ")")
                }
            },
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

impl Formula {
    /// Precedences: 0 implies, 1 or, 2 and, 3 atom/negation.
    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
        // Recognize derived forms first.
        if let Some((a, b)) = self.as_eq() {
            if prec > 3 {
                return write!(f, "({} = {})", a, b);
            }
            return write!(f, "{} = {}", a, b);
        }
        if let Formula::Not(inner) = self {
            if let Formula::Leq(a, b) = inner.as_ref() {
                // ~(a <= b) is b < a.
                return write!(f, "{} < {}", b, a);
            }
            if let Some((a, b)) = self.as_or() {
                if prec > 1 {
                    write!(f, "(")?;
                }
                a.fmt_prec(f, 2)?;
                write!(f, " \\/ ")?;
                b.fmt_prec(f, 1)?;
                if prec > 1 {
                    write!(f, ")")?;
                }
                return Ok(());
            }
        }
        match self {
            Formula::Top => write!(f, "T"),
            Formula::Leq(a, b) => {
                if is_zero_const(a) {
                    // 0 <= b reads better as b >= 0.
                    write!(f, "{} >= 0", b)
                } else {
                    write!(f, "{} <= {}", a, b)
                }
            }
            Formula::And(a, b) => {
                if prec > 2 {
                    write!(f, "(")?;
                }
                a.fmt_prec(f, 3)?;
                write!(f, " /\\ ")?;
                b.fmt_prec(f, 2)?;
                if prec > 2 {
                    write!(f, ")")?;
                }
                Ok(())
            }
            Formula::Not(a) => {
                write!(f, "~")?;
                a.fmt_prec(f, 4)
            }
        }
    }

    fn as_eq(&self) -> Option<(&FExpr, &FExpr)> {
        if let Formula::And(l, r) = self {
            if let (Formula::Leq(a1, b1), Formula::Leq(b2, a2)) = (l.as_ref(), r.as_ref()) {
                if a1 == a2 && b1 == b2 {
                    return Some((a1, b1));
                }
            }
        }
        None
    }

    fn as_or(&self) -> Option<(&Formula, &Formula)> {
        if let Formula::Not(inner) = self {
            if let Formula::And(l, r) = inner.as_ref() {
                if let (Formula::Not(a), Formula::Not(b)) = (l.as_ref(), r.as_ref()) {
                    return Some((a.as_ref(), b.as_ref()));
                }
            }
        }
        None
    }
}
