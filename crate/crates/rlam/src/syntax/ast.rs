use crate::continuity::Formula;
use num_rational::BigRational;

/// Simple types: reals, binary products, and function spaces.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SimpleType {
    Real,
    Prod(Box<SimpleType>, Box<SimpleType>),
    Arrow(Box<SimpleType>, Box<SimpleType>),
}

impl SimpleType {
    pub fn prod(a: SimpleType, b: SimpleType) -> SimpleType {
        SimpleType::Prod(Box::new(a), Box::new(b))
    }

    pub fn arrow(a: SimpleType, b: SimpleType) -> SimpleType {
        SimpleType::Arrow(Box::new(a), Box::new(b))
    }

    /// Right-nested product of a nonempty list; a single type is itself.
    pub fn tuple(mut parts: Vec<SimpleType>) -> SimpleType {
        assert!(!parts.is_empty(), "empty tuple type");
        let mut acc = parts.pop().unwrap();
        while let Some(t) = parts.pop() {
            acc = SimpleType::prod(t, acc);
        }
        acc
    }

    /// Flattens a right-nested product into its component list.
    pub fn tuple_parts(&self) -> Vec<&SimpleType> {
        let mut parts = Vec::new();
        let mut cur = self;
        while let SimpleType::Prod(a, b) = cur {
            parts.push(a.as_ref());
            cur = b.as_ref();
        }
        parts.push(cur);
        parts
    }
}

/// Which component a projection extracts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProjIndex {
    Fst,
    Snd,
}

/// A lambda parameter. The type annotation is optional in source; the
/// simple typechecker demands it, the refinement checker can fill it in
/// from the target type.
#[derive(Debug, Clone, PartialEq)]
pub struct Binder {
    pub name: String,
    pub ty: Option<SimpleType>,
}

impl Binder {
    pub fn new(name: impl Into<String>, ty: SimpleType) -> Binder {
        Binder { name: name.into(), ty: Some(ty) }
    }

    pub fn untyped(name: impl Into<String>) -> Binder {
        Binder { name: name.into(), ty: None }
    }
}

/// Optional continuity annotation on a conditional: the five formulas the
/// refinement rule for `if` consumes. Any subset may be given; the checker
/// synthesizes the rest when it can.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IfAnnotation {
    /// Domain on which the guard is continuous.
    pub guard: Option<Formula>,
    /// Region where the guard is known to evaluate to 0.
    pub zero: Option<Formula>,
    /// Region where the guard is known to evaluate to 1.
    pub one: Option<Formula>,
    /// Domain on which the then-branch must be continuous.
    pub then_dom: Option<Formula>,
    /// Domain on which the else-branch must be continuous.
    pub else_dom: Option<Formula>,
}

impl IfAnnotation {
    pub fn is_empty(&self) -> bool {
        self.guard.is_none()
            && self.zero.is_none()
            && self.one.is_none()
            && self.then_dom.is_none()
            && self.else_dom.is_none()
    }
}

/// Terms. Lambdas and applications carry argument lists; a multi-parameter
/// lambda has the product of its parameter types as domain, so `f(a, b)`
/// and `f((a, b))` agree.
#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    Var(String),
    Lit(BigRational),
    /// Fully applied primitive operator from the registry.
    PrimApp(String, Vec<Term>),
    Lam(Vec<Binder>, Box<Term>),
    App(Box<Term>, Vec<Term>),
    Pair(Box<Term>, Box<Term>),
    Proj(ProjIndex, Box<Term>),
    If {
        guard: Box<Term>,
        then_branch: Box<Term>,
        else_branch: Box<Term>,
        ann: Option<IfAnnotation>,
    },
}

impl Term {
    pub fn var(name: impl Into<String>) -> Term {
        Term::Var(name.into())
    }

    pub fn lit_int(n: i64) -> Term {
        Term::Lit(crate::syntax::rat_int(n))
    }

    pub fn prim(name: impl Into<String>, args: Vec<Term>) -> Term {
        Term::PrimApp(name.into(), args)
    }

    pub fn lam(binders: Vec<Binder>, body: Term) -> Term {
        Term::Lam(binders, Box::new(body))
    }

    pub fn app(fun: Term, args: Vec<Term>) -> Term {
        Term::App(Box::new(fun), args)
    }

    pub fn pair(a: Term, b: Term) -> Term {
        Term::Pair(Box::new(a), Box::new(b))
    }

    /// Right-nested tuple; panics on an empty list.
    pub fn tuple(mut parts: Vec<Term>) -> Term {
        assert!(!parts.is_empty(), "empty tuple");
        let mut out = parts.pop().unwrap();
        while let Some(t) = parts.pop() {
            out = Term::pair(t, out);
        }
        out
    }

    pub fn proj(ix: ProjIndex, t: Term) -> Term {
        Term::Proj(ix, Box::new(t))
    }

    pub fn ite(guard: Term, then_branch: Term, else_branch: Term) -> Term {
        Term::If {
            guard: Box::new(guard),
            then_branch: Box::new(then_branch),
            else_branch: Box::new(else_branch),
            ann: None,
        }
    }
}

/// An ordered typing context. Later bindings shadow earlier ones.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TypingContext {
    pub bindings: Vec<(String, SimpleType)>,
}

impl TypingContext {
    pub fn new() -> TypingContext {
        TypingContext::default()
    }

    pub fn of(bindings: Vec<(String, SimpleType)>) -> TypingContext {
        TypingContext { bindings }
    }

    pub fn lookup(&self, name: &str) -> Option<&SimpleType> {
        self.bindings.iter().rev().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn extended(&self, name: impl Into<String>, ty: SimpleType) -> TypingContext {
        let mut out = self.clone();
        out.bindings.push((name.into(), ty));
        out
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }
}
