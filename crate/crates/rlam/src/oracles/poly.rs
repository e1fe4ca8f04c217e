//! Exact multivariate polynomials and normalization of the ring fragment.
//!
//! Terms built from literals, variables, the ring operators, and the
//! constant/projection helper primitives normalize to a canonical sparse
//! polynomial with rational coefficients. Since the representation is
//! canonical (no zero coefficients, fixed monomial order), structural
//! equality is semantic equality, which makes this an exact oracle for
//! the evaluator and for derivatives of polynomial terms.

use crate::semantics::{eval_generic, EvalError, GEnv, GValue, Interp, PrimRegistry};
use crate::syntax::{binder_names, free_vars, rat_to_f64, SimpleType, Term, TypingContext};
use crate::typing::{typecheck, TypeError};
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::collections::BTreeMap;
use std::fmt;

/// A polynomial in `arity` variables. Keys are exponent vectors of length
/// `arity`; zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polynomial {
    arity: usize,
    coeffs: BTreeMap<Vec<u32>, BigRational>,
}

impl Polynomial {
    pub fn zero(arity: usize) -> Polynomial {
        Polynomial { arity, coeffs: BTreeMap::new() }
    }

    pub fn constant(arity: usize, r: BigRational) -> Polynomial {
        let mut p = Polynomial::zero(arity);
        if !r.is_zero() {
            p.coeffs.insert(vec![0; arity], r);
        }
        p
    }

    pub fn var(arity: usize, i: usize) -> Polynomial {
        assert!(i < arity, "variable index out of range");
        let mut exps = vec![0; arity];
        exps[i] = 1;
        let mut p = Polynomial::zero(arity);
        p.coeffs.insert(exps, BigRational::one());
        p
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn constant_value(&self) -> Option<BigRational> {
        if self.coeffs.is_empty() {
            return Some(BigRational::zero());
        }
        if self.coeffs.len() == 1 {
            if let Some(c) = self.coeffs.get(&vec![0; self.arity]) {
                return Some(c.clone());
            }
        }
        None
    }

    pub fn total_degree(&self) -> u32 {
        self.coeffs.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &BigRational)> {
        self.coeffs.iter()
    }

    fn assert_compatible(&self, other: &Polynomial) {
        assert_eq!(self.arity, other.arity, "polynomial arity mismatch");
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        self.assert_compatible(other);
        let mut out = self.clone();
        for (e, c) in &other.coeffs {
            let entry = out.coeffs.entry(e.clone()).or_insert_with(BigRational::zero);
            *entry += c;
            if entry.is_zero() {
                out.coeffs.remove(e);
            }
        }
        out
    }

    pub fn neg(&self) -> Polynomial {
        Polynomial {
            arity: self.arity,
            coeffs: self.coeffs.iter().map(|(e, c)| (e.clone(), -c.clone())).collect(),
        }
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        self.assert_compatible(other);
        let mut out = Polynomial::zero(self.arity);
        for (ea, ca) in &self.coeffs {
            for (eb, cb) in &other.coeffs {
                let exps: Vec<u32> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                let c = ca * cb;
                let entry =
                    out.coeffs.entry(exps.clone()).or_insert_with(BigRational::zero);
                *entry += c;
                if entry.is_zero() {
                    out.coeffs.remove(&exps);
                }
            }
        }
        out
    }

    pub fn eval(&self, point: &[BigRational]) -> BigRational {
        assert_eq!(point.len(), self.arity, "evaluation point arity mismatch");
        let mut acc = BigRational::zero();
        for (exps, c) in &self.coeffs {
            let mut m = c.clone();
            for (x, e) in point.iter().zip(exps) {
                for _ in 0..*e {
                    m *= x;
                }
            }
            acc += m;
        }
        acc
    }

    pub fn eval_f64(&self, point: &[f64]) -> f64 {
        assert_eq!(point.len(), self.arity, "evaluation point arity mismatch");
        let mut acc = 0.0;
        for (exps, c) in &self.coeffs {
            let mut m = rat_to_f64(c);
            for (x, e) in point.iter().zip(exps) {
                m *= x.powi(*e as i32);
            }
            acc += m;
        }
        acc
    }

    pub fn to_string_with(&self, names: &[String]) -> String {
        assert_eq!(names.len(), self.arity, "name list arity mismatch");
        if self.coeffs.is_empty() {
            return "0".to_string();
        }
        let mut parts = Vec::new();
        for (exps, c) in &self.coeffs {
            let mut factors = Vec::new();
            if !c.is_one() || exps.iter().all(|e| *e == 0) {
                factors.push(crate::syntax::pretty_rational(c));
            }
            for (name, e) in names.iter().zip(exps) {
                match e {
                    0 => {}
                    1 => factors.push(name.clone()),
                    _ => factors.push(format!("{}^{}", name, e)),
                }
            }
            parts.push(factors.join("*"));
        }
        parts.join(" + ")
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = (0..self.arity).map(|i| format!("x{}", i)).collect();
        write!(f, "{}", self.to_string_with(&names))
    }
}

/// Interprets the ring fragment with polynomials as the scalar carrier.
#[derive(Clone)]
pub struct PolyInterp {
    pub arity: usize,
}

impl Interp<Polynomial> for PolyInterp {
    fn literal(&self, r: &BigRational) -> Result<Polynomial, EvalError> {
        Ok(Polynomial::constant(self.arity, r.clone()))
    }

    fn prim(&self, name: &str, args: &[Polynomial]) -> Result<Polynomial, EvalError> {
        let int = |n: i64| Polynomial::constant(self.arity, BigRational::from_integer(n.into()));
        match (name, args) {
            ("add", [a, b]) => Ok(a.add(b)),
            ("sub", [a, b]) => Ok(a.sub(b)),
            ("mul", [a, b]) => Ok(a.mul(b)),
            ("neg", [a]) => Ok(a.neg()),
            ("arg1", [a, _]) => Ok(a.clone()),
            ("arg2", [_, b]) => Ok(b.clone()),
            ("one2", [_, _]) => Ok(int(1)),
            ("neg_one2", [_, _]) => Ok(int(-1)),
            ("zero2", [_, _]) => Ok(int(0)),
            ("neg_one1", [_]) => Ok(int(-1)),
            ("zero1", [_]) => Ok(int(0)),
            _ => Err(EvalError::Unsupported("a non-polynomial primitive")),
        }
    }

    fn guard_is_zero(&self, s: &Polynomial) -> Result<bool, EvalError> {
        match s.constant_value() {
            Some(c) => Ok(c.is_zero()),
            None => Err(EvalError::Unsupported("a symbolic conditional guard")),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PolyError {
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("context variable `{0}` is not ground")]
    NonGroundContext(String),
    #[error("term normalizes to a non-scalar value")]
    NotScalar,
}

/// Normalizes a ring-fragment term to a polynomial over the context
/// variables followed by the variables introduced to saturate a function
/// type. Returns the polynomial and the variable names in index order.
pub fn poly_normalize(
    ctx: &TypingContext,
    t: &Term,
    reg: &PrimRegistry,
) -> Result<(Polynomial, Vec<String>), PolyError> {
    for (n, ty) in &ctx.bindings {
        if *ty != SimpleType::Real {
            return Err(PolyError::NonGroundContext(n.clone()));
        }
    }
    let mut ty = typecheck(ctx, t, reg)?;
    let mut term = t.clone();
    let mut names: Vec<String> = ctx.bindings.iter().map(|(n, _)| n.clone()).collect();
    let mut taken = free_vars(&term);
    taken.extend(binder_names(&term));
    taken.extend(names.iter().cloned());
    let mut next = 0usize;
    while let SimpleType::Arrow(dom, cod) = ty {
        let mut args = Vec::new();
        for part in dom.tuple_parts() {
            if *part != SimpleType::Real {
                return Err(PolyError::NotScalar);
            }
            let name = loop {
                let cand = format!("x{}", next);
                next += 1;
                if !taken.contains(&cand) {
                    break cand;
                }
            };
            taken.insert(name.clone());
            names.push(name.clone());
            args.push(Term::var(name));
        }
        term = Term::app(term, args);
        ty = *cod;
    }
    if ty != SimpleType::Real {
        return Err(PolyError::NotScalar);
    }
    let arity = names.len();
    let interp = PolyInterp { arity };
    let mut env: GEnv<Polynomial> = GEnv::new();
    for (i, n) in names.iter().enumerate() {
        env.insert(n.clone(), GValue::Real(Polynomial::var(arity, i)));
    }
    match eval_generic(&env, &term, &interp)? {
        GValue::Real(p) => Ok((p, names)),
        _ => Err(PolyError::NotScalar),
    }
}
