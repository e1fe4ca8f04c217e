//! Linear normal forms for formulas.
//!
//! A formula is compiled to negation normal form whose literals are strict
//! or non-strict linear comparisons (when the expressions linearize) or
//! opaque nonlinear atoms, then distributed into disjunctive normal form.
//! The DNF feeds the Fourier-Motzkin satisfiability core.

use super::formula::{FExpr, Formula};
use num_rational::BigRational;
use num_traits::Zero;
use std::collections::BTreeMap;

/// A linear combination `sum(coeffs[v] * v) + constant`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinComb {
    pub coeffs: BTreeMap<String, BigRational>,
    pub constant: BigRational,
}

impl LinComb {
    pub fn constant(c: BigRational) -> LinComb {
        LinComb { coeffs: BTreeMap::new(), constant: c }
    }

    pub fn var(v: &str) -> LinComb {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(v.to_string(), BigRational::from_integer(1.into()));
        LinComb { coeffs, constant: BigRational::zero() }
    }

    pub fn add(&self, other: &LinComb) -> LinComb {
        let mut coeffs = self.coeffs.clone();
        for (v, c) in &other.coeffs {
            let e = coeffs.entry(v.clone()).or_insert_with(BigRational::zero);
            *e += c;
        }
        coeffs.retain(|_, c| !c.is_zero());
        LinComb { coeffs, constant: &self.constant + &other.constant }
    }

    pub fn neg(&self) -> LinComb {
        LinComb {
            coeffs: self.coeffs.iter().map(|(v, c)| (v.clone(), -c)).collect(),
            constant: -&self.constant,
        }
    }

    pub fn sub(&self, other: &LinComb) -> LinComb {
        self.add(&other.neg())
    }

    pub fn scale(&self, k: &BigRational) -> LinComb {
        if k.is_zero() {
            return LinComb::constant(BigRational::zero());
        }
        LinComb {
            coeffs: self.coeffs.iter().map(|(v, c)| (v.clone(), c * k)).collect(),
            constant: &self.constant * k,
        }
    }

    pub fn mul(&self, other: &LinComb) -> Option<LinComb> {
        if self.coeffs.is_empty() {
            Some(other.scale(&self.constant))
        } else if other.coeffs.is_empty() {
            Some(self.scale(&other.constant))
        } else {
            None
        }
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn eval(&self, sigma: &BTreeMap<String, BigRational>) -> Option<BigRational> {
        let mut acc = self.constant.clone();
        for (v, c) in &self.coeffs {
            acc += c * sigma.get(v)?;
        }
        Some(acc)
    }

    pub fn eval_f64(&self, point: &BTreeMap<String, f64>) -> Option<f64> {
        let mut acc = crate::syntax::rat_to_f64(&self.constant);
        for (v, c) in &self.coeffs {
            acc += crate::syntax::rat_to_f64(c) * point.get(v)?;
        }
        Some(acc)
    }
}

/// Linearizes a formula expression. `add`, `sub`, `neg` are always linear;
/// `mul` only when one side is constant. Anything else returns `None`.
pub fn linearize(e: &FExpr) -> Option<LinComb> {
    match e {
        FExpr::Var(v) => Some(LinComb::var(v)),
        FExpr::Const(c) => Some(LinComb::constant(c.clone())),
        FExpr::App(f, args) => match (f.as_str(), args.as_slice()) {
            ("add", [a, b]) => Some(linearize(a)?.add(&linearize(b)?)),
            ("sub", [a, b]) => Some(linearize(a)?.sub(&linearize(b)?)),
            ("neg", [a]) => Some(linearize(a)?.neg()),
            ("mul", [a, b]) => linearize(a)?.mul(&linearize(b)?),
            _ => None,
        },
    }
}

/// A single constraint `lhs <= 0` or `lhs < 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub lhs: LinComb,
    pub strict: bool,
}

impl Constraint {
    /// Evaluates the constraint at an exact point (None when a variable is
    /// missing).
    pub fn holds(&self, sigma: &BTreeMap<String, BigRational>) -> Option<bool> {
        let v = self.lhs.eval(sigma)?;
        Some(if self.strict { v < BigRational::zero() } else { v <= BigRational::zero() })
    }
}

/// A literal of the negation normal form.
#[derive(Debug, Clone)]
pub enum Literal {
    /// `lhs <= 0` / `lhs < 0`.
    Linear(Constraint),
    /// A comparison whose sides did not linearize. `negated` flips it.
    Opaque { formula: Formula },
    /// Trivially false (from `~T`).
    False,
}

/// One DNF disjunct: a conjunction of literals.
#[derive(Debug, Clone, Default)]
pub struct Conjunct {
    pub linear: Vec<Constraint>,
    pub opaque: Vec<Formula>,
    pub trivially_false: bool,
}

impl Conjunct {
    pub fn is_purely_linear(&self) -> bool {
        self.opaque.is_empty()
    }
}

/// Cap on the number of disjuncts produced; beyond this the conversion
/// reports failure and the entailment engine answers Unknown.
pub const DNF_LIMIT: usize = 4096;

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum DnfError {
    #[error("formula exceeds the DNF size limit ({0} disjuncts)")]
    TooLarge(usize),
}

/// Converts a formula to DNF over linear/opaque literals. `negate` builds
/// the DNF of the negation.
pub fn to_dnf(phi: &Formula, negate: bool) -> Result<Vec<Conjunct>, DnfError> {
    let lits = nnf(phi, negate);
    let disjuncts = distribute(&lits)?;
    Ok(disjuncts
        .into_iter()
        .filter_map(|lits| {
            let mut c = Conjunct::default();
            for l in lits {
                match l {
                    Literal::Linear(k) => c.linear.push(k),
                    Literal::Opaque { formula } => c.opaque.push(formula),
                    Literal::False => c.trivially_false = true,
                }
            }
            if c.trivially_false {
                None
            } else {
                Some(c)
            }
        })
        .collect())
}

/// NNF tree with literals at the leaves.
enum Nnf {
    Lit(Literal),
    True,
    And(Vec<Nnf>),
    Or(Vec<Nnf>),
}

fn nnf(phi: &Formula, negate: bool) -> Nnf {
    match phi {
        Formula::Top => {
            if negate {
                Nnf::Lit(Literal::False)
            } else {
                Nnf::True
            }
        }
        Formula::Leq(a, b) => {
            let lit = match (linearize(a), linearize(b)) {
                (Some(la), Some(lb)) => {
                    if negate {
                        // ~(a <= b)  is  b - a < 0
                        Literal::Linear(Constraint { lhs: lb.sub(&la), strict: true })
                    } else {
                        // a <= b  is  a - b <= 0
                        Literal::Linear(Constraint { lhs: la.sub(&lb), strict: false })
                    }
                }
                _ => {
                    let f = Formula::Leq(a.clone(), b.clone());
                    Literal::Opaque {
                        formula: if negate { Formula::not(f) } else { f },
                    }
                }
            };
            Nnf::Lit(lit)
        }
        Formula::And(a, b) => {
            let l = nnf(a, negate);
            let r = nnf(b, negate);
            if negate {
                Nnf::Or(vec![l, r])
            } else {
                Nnf::And(vec![l, r])
            }
        }
        Formula::Not(a) => nnf(a, !negate),
    }
}

fn distribute(n: &Nnf) -> Result<Vec<Vec<Literal>>, DnfError> {
    match n {
        Nnf::Lit(l) => Ok(vec![vec![l.clone()]]),
        Nnf::True => Ok(vec![vec![]]),
        Nnf::Or(parts) => {
            let mut out = Vec::new();
            for p in parts {
                out.extend(distribute(p)?);
                if out.len() > DNF_LIMIT {
                    return Err(DnfError::TooLarge(out.len()));
                }
            }
            Ok(out)
        }
        Nnf::And(parts) => {
            let mut acc: Vec<Vec<Literal>> = vec![vec![]];
            for p in parts {
                let rhs = distribute(p)?;
                let mut next = Vec::with_capacity(acc.len() * rhs.len());
                for a in &acc {
                    for b in &rhs {
                        let mut row = a.clone();
                        row.extend(b.iter().cloned());
                        next.push(row);
                        if next.len() > DNF_LIMIT {
                            return Err(DnfError::TooLarge(next.len()));
                        }
                    }
                }
                acc = next;
            }
            Ok(acc)
        }
    }
}

/// Rebuilds a readable formula from a conjunction of constraints: terms
/// with positive coefficients stay left, the rest move right.
pub fn constraints_to_formula(cs: &[Constraint]) -> Formula {
    if cs.is_empty() {
        return Formula::Top;
    }
    Formula::conj(cs.iter().map(constraint_to_formula).collect())
}

pub fn constraint_to_formula(c: &Constraint) -> Formula {
    let mut left = Vec::new();
    let mut right = Vec::new();
    for (v, coef) in &c.lhs.coeffs {
        if coef > &BigRational::zero() {
            left.push(scaled_var(v, coef));
        } else {
            right.push(scaled_var(v, &-coef));
        }
    }
    let k = &c.lhs.constant;
    if k > &BigRational::zero() {
        left.push(FExpr::Const(k.clone()));
    } else if k < &BigRational::zero() {
        right.push(FExpr::Const(-k));
    }
    let lhs = sum(left);
    let rhs = sum(right);
    if c.strict {
        Formula::lt(lhs, rhs)
    } else {
        Formula::leq(lhs, rhs)
    }
}

fn scaled_var(v: &str, coef: &BigRational) -> FExpr {
    if coef == &BigRational::from_integer(1.into()) {
        FExpr::var(v)
    } else {
        FExpr::mul(FExpr::Const(coef.clone()), FExpr::var(v))
    }
}

fn sum(parts: Vec<FExpr>) -> FExpr {
    let mut it = parts.into_iter();
    match it.next() {
        None => FExpr::int(0),
        Some(first) => it.fold(first, FExpr::add),
    }
}
