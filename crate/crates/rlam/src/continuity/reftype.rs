//! Refinement types for the continuity fragment.
//!
//! Ground types `{a in R}` name a logical variable. Arrow types take a
//! nonempty parameter list (higher-order parameters first, ground ones
//! last), a domain formula over the ground parameters' logical variables,
//! and, when the result is ground, an image formula over the result
//! variable. Erasure tuples the parameter list into a product domain.

use super::formula::Formula;
use crate::syntax::SimpleType;
use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum RefType {
    /// `{var in R}`
    Ground { var: String },
    Arrow(ArrowRef),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArrowRef {
    pub params: Vec<RefType>,
    /// Domain formula over the ground parameters' logical variables.
    pub domain: Formula,
    /// Image formula over the result variable; present iff the result is
    /// ground.
    pub image: Option<Formula>,
    pub result: Box<RefType>,
}

impl RefType {
    pub fn ground(var: impl Into<String>) -> RefType {
        RefType::Ground { var: var.into() }
    }

    /// Builds an arrow, enforcing the structural invariants:
    /// * at least one parameter, higher-order parameters before ground;
    /// * ground parameter variables pairwise distinct;
    /// * domain mentions only ground parameter variables;
    /// * image present iff the result is ground, over the result variable.
    pub fn arrow(
        params: Vec<RefType>,
        domain: Formula,
        image: Option<Formula>,
        result: RefType,
    ) -> Result<RefType, String> {
        if params.is_empty() {
            return Err("arrow refinement type needs at least one parameter".into());
        }
        let mut seen_ground = false;
        let mut ground_vars: BTreeSet<String> = BTreeSet::new();
        for p in &params {
            match p {
                RefType::Ground { var } => {
                    seen_ground = true;
                    if !ground_vars.insert(var.clone()) {
                        return Err(format!("duplicate logical variable `{}` in parameters", var));
                    }
                }
                RefType::Arrow(_) => {
                    if seen_ground {
                        return Err(
                            "higher-order parameters must precede ground parameters".into()
                        );
                    }
                }
            }
        }
        for v in domain.vars() {
            if !ground_vars.contains(&v) {
                return Err(format!(
                    "domain formula mentions `{}`, which is not a ground parameter",
                    v
                ));
            }
        }
        match (&image, &result) {
            (Some(img), RefType::Ground { var }) => {
                for v in img.vars() {
                    if &v != var {
                        return Err(format!(
                            "image formula mentions `{}`, expected only `{}`",
                            v, var
                        ));
                    }
                }
            }
            (None, RefType::Ground { .. }) => {
                return Err("ground result requires an image formula (use `T`)".into())
            }
            (Some(_), RefType::Arrow(_)) => {
                return Err("higher-order result takes no image formula".into())
            }
            (None, RefType::Arrow(_)) => {}
        }
        Ok(RefType::Arrow(ArrowRef { params, domain, image, result: Box::new(result) }))
    }

    pub fn is_ground(&self) -> bool {
        matches!(self, RefType::Ground { .. })
    }

    /// The underlying simple type.
    pub fn erase(&self) -> SimpleType {
        match self {
            RefType::Ground { .. } => SimpleType::Real,
            RefType::Arrow(a) => {
                let parts: Vec<SimpleType> = a.params.iter().map(RefType::erase).collect();
                SimpleType::arrow(SimpleType::tuple(parts), a.result.erase())
            }
        }
    }

    /// Logical variables bound by this type (parameter and result
    /// variables of arrows; the variable itself for ground types).
    fn own_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            RefType::Ground { var } => {
                out.insert(var.clone());
            }
            RefType::Arrow(a) => {
                for p in &a.params {
                    p.own_vars(out);
                }
                a.result.own_vars(out);
            }
        }
    }

    /// Renames every logical variable through `map` (missing entries stay).
    fn rename_all(&self, map: &BTreeMap<String, String>) -> RefType {
        match self {
            RefType::Ground { var } => RefType::Ground {
                var: map.get(var).cloned().unwrap_or_else(|| var.clone()),
            },
            RefType::Arrow(a) => {
                let fmap: BTreeMap<String, super::formula::FExpr> = map
                    .iter()
                    .map(|(k, v)| (k.clone(), super::formula::FExpr::var(v.clone())))
                    .collect();
                RefType::Arrow(ArrowRef {
                    params: a.params.iter().map(|p| p.rename_all(map)).collect(),
                    domain: a.domain.subst(&fmap),
                    image: a.image.as_ref().map(|i| i.subst(&fmap)),
                    result: Box::new(a.result.rename_all(map)),
                })
            }
        }
    }

    /// Renames this type's logical variables away from `avoid`, appending
    /// primes. Used when an arrow is opened against a context that already
    /// uses some of its names.
    pub fn freshen_against(&self, avoid: &BTreeSet<String>) -> RefType {
        let mut own = BTreeSet::new();
        self.own_vars(&mut own);
        let mut map = BTreeMap::new();
        let mut taken: BTreeSet<String> = avoid.clone();
        taken.extend(own.iter().cloned());
        for v in own {
            if avoid.contains(&v) {
                let mut i = 1;
                loop {
                    let cand = format!("{}'{}", v, i);
                    if !taken.contains(&cand) {
                        taken.insert(cand.clone());
                        map.insert(v, cand);
                        break;
                    }
                    i += 1;
                }
            }
        }
        if map.is_empty() {
            self.clone()
        } else {
            self.rename_all(&map)
        }
    }

    /// Structural equality up to renaming of logical variables.
    pub fn alpha_eq(&self, other: &RefType) -> bool {
        fn go(a: &RefType, b: &RefType, map: &mut BTreeMap<String, String>) -> bool {
            match (a, b) {
                (RefType::Ground { var: x }, RefType::Ground { var: y }) => {
                    match map.get(x) {
                        Some(mapped) => mapped == y,
                        None => {
                            if map.values().any(|v| v == y) {
                                return false;
                            }
                            map.insert(x.clone(), y.clone());
                            true
                        }
                    }
                }
                (RefType::Arrow(p), RefType::Arrow(q)) => {
                    if p.params.len() != q.params.len() {
                        return false;
                    }
                    for (x, y) in p.params.iter().zip(&q.params) {
                        if !go(x, y, map) {
                            return false;
                        }
                    }
                    if !go(&p.result, &q.result, map) {
                        return false;
                    }
                    let rename = |f: &Formula, map: &BTreeMap<String, String>| {
                        let fmap: BTreeMap<String, super::formula::FExpr> = map
                            .iter()
                            .map(|(k, v)| {
                                (k.clone(), super::formula::FExpr::var(v.clone()))
                            })
                            .collect();
                        f.subst(&fmap)
                    };
                    if rename(&p.domain, map) != q.domain {
                        return false;
                    }
                    match (&p.image, &q.image) {
                        (None, None) => true,
                        (Some(i), Some(j)) => rename(i, map) == *j,
                        _ => false,
                    }
                }
                _ => false,
            }
        }
        go(self, other, &mut BTreeMap::new())
    }
}

impl fmt::Display for RefType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RefType::Ground { var } => write!(f, "{{{} in R}}", var),
            RefType::Arrow(a) => {
                if a.params.len() == 1 {
                    write!(f, "{}", a.params[0])?;
                } else {
                    write!(f, "(")?;
                    for (i, p) in a.params.iter().enumerate() {
                        if i > 0 {
                            write!(f, ", ")?;
                        }
                        write!(f, "{}", p)?;
                    }
                    write!(f, ")")?;
                }
                write!(f, " ->{{{}", a.domain)?;
                if let Some(img) = &a.image {
                    write!(f, ", {}", img)?;
                }
                write!(f, "}} {}", a.result)
            }
        }
    }
}

/// A refinement typing context. Order matters for reporting; lookups use
/// the name.
#[derive(Debug, Clone, Default)]
pub struct RefContext {
    pub bindings: Vec<(String, RefType)>,
}

impl RefContext {
    pub fn new() -> RefContext {
        RefContext::default()
    }

    pub fn of(bindings: Vec<(String, RefType)>) -> Result<RefContext, String> {
        let ctx = RefContext { bindings };
        ctx.validate()?;
        Ok(ctx)
    }

    pub fn validate(&self) -> Result<(), String> {
        let mut names = BTreeSet::new();
        let mut logical = BTreeSet::new();
        for (n, t) in &self.bindings {
            if !names.insert(n.clone()) {
                return Err(format!("duplicate context variable `{}`", n));
            }
            if let RefType::Ground { var } = t {
                if !logical.insert(var.clone()) {
                    return Err(format!("duplicate logical variable `{}` in context", var));
                }
            }
        }
        Ok(())
    }

    pub fn lookup(&self, name: &str) -> Option<&RefType> {
        self.bindings.iter().rev().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    /// Ground bindings in order: (term variable, logical variable).
    pub fn ground_bindings(&self) -> Vec<(String, String)> {
        self.bindings
            .iter()
            .filter_map(|(n, t)| match t {
                RefType::Ground { var } => Some((n.clone(), var.clone())),
                RefType::Arrow(_) => None,
            })
            .collect()
    }

    /// Higher-order bindings in order.
    pub fn higher_bindings(&self) -> Vec<(String, &RefType)> {
        self.bindings
            .iter()
            .filter(|(_, t)| !t.is_ground())
            .map(|(n, t)| (n.clone(), t))
            .collect()
    }

    /// All logical variables of ground bindings.
    pub fn logical_vars(&self) -> BTreeSet<String> {
        self.ground_bindings().into_iter().map(|(_, v)| v).collect()
    }

    /// The erased simple-typing context.
    pub fn erase(&self) -> crate::syntax::TypingContext {
        crate::syntax::TypingContext::of(
            self.bindings.iter().map(|(n, t)| (n.clone(), t.erase())).collect(),
        )
    }

    pub fn extended(&self, name: impl Into<String>, ty: RefType) -> RefContext {
        let mut out = self.clone();
        out.bindings.push((name.into(), ty));
        out
    }
}

/// A refinement judgment: `ctx |-^{domain(, image)} term : target`.
#[derive(Debug, Clone)]
pub struct RefJudgment {
    pub ctx: RefContext,
    pub domain: Formula,
    /// Present iff `target` is ground.
    pub image: Option<Formula>,
    pub term: crate::syntax::Term,
    pub target: RefType,
}

impl fmt::Display for RefJudgment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (n, t)) in self.ctx.bindings.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{} : {}", n, t)?;
        }
        if !self.ctx.bindings.is_empty() {
            write!(f, " ")?;
        }
        write!(f, "|-{{{}", self.domain)?;
        if let Some(img) = &self.image {
            write!(f, ", {}", img)?;
        }
        write!(f, "}} {} : {}", self.term, self.target)
    }
}
