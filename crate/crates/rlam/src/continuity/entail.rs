//! Three-valued entailment over formulas.
//!
//! The linear fragment is decided exactly: the implication's negation goes
//! to DNF and each disjunct runs through Fourier-Motzkin elimination over
//! exact rationals, tracking strictness. Satisfiable disjuncts yield a
//! rational witness by back-substitution (picking interval midpoints, so
//! open intervals give honest interior points). Disjuncts with nonlinear
//! atoms fall back to sampling: a refutation gives Invalid with a checked
//! witness, otherwise the verdict is Unknown - never a false Valid.

use super::formula::{truth_domain_member_f64, Assignment, Formula};
use super::linear::{to_dnf, Constraint, LinComb};
use crate::semantics::PrimRegistry;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};

/// Verdict of an entailment query.
#[derive(Debug, Clone, PartialEq)]
pub enum Entailment3 {
    Valid,
    /// The implication fails at this assignment.
    Invalid(Assignment),
    /// Could not be decided (nonlinear atoms, or a size blowup).
    Unknown(String),
}

impl Entailment3 {
    pub fn is_valid(&self) -> bool {
        matches!(self, Entailment3::Valid)
    }
}

const FM_CONSTRAINT_LIMIT: usize = 100_000;

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
#[error("Fourier-Motzkin blowup: {0} constraints")]
pub struct FmOverflow(usize);

/// One elimination stage: the variable removed and the constraint system
/// it was removed from.
struct Stage {
    var: String,
    system: Vec<Constraint>,
}

fn constraint_key(c: &Constraint) -> String {
    // Scale so the first nonzero coefficient (or the constant) is +/-1,
    // giving a canonical representative for deduplication.
    let scale = c
        .lhs
        .coeffs
        .values()
        .next()
        .cloned()
        .unwrap_or_else(|| c.lhs.constant.clone());
    let scaled = if scale.is_zero() {
        c.lhs.clone()
    } else {
        let inv = BigRational::one() / scale.abs();
        c.lhs.scale(&inv)
    };
    format!("{:?}|{:?}|{}", scaled.coeffs, scaled.constant, c.strict)
}

/// Eliminates `var` from `system`, combining each lower bound with each
/// upper bound.
fn eliminate(var: &str, system: &[Constraint]) -> Result<Vec<Constraint>, FmOverflow> {
    let mut lowers: Vec<(LinComb, bool)> = Vec::new(); // var >= expr
    let mut uppers: Vec<(LinComb, bool)> = Vec::new(); // var <= expr
    let mut rest: Vec<Constraint> = Vec::new();
    for c in system {
        match c.lhs.coeffs.get(var) {
            None => rest.push(c.clone()),
            Some(coef) => {
                // c.lhs = coef*var + r  (<|<=) 0  =>  var (<|<=) -r/coef  (coef>0)
                //                                  or var (>|>=) -r/coef  (coef<0)
                let mut r = c.lhs.clone();
                r.coeffs.remove(var);
                let bound = r.scale(&(-BigRational::one() / coef));
                if coef > &BigRational::zero() {
                    uppers.push((bound, c.strict));
                } else {
                    lowers.push((bound, c.strict));
                }
            }
        }
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for c in rest {
        if seen.insert(constraint_key(&c)) {
            out.push(c);
        }
    }
    for (lb, ls) in &lowers {
        for (ub, us) in &uppers {
            // lb <= var <= ub requires lb - ub <= 0 (strict if either is).
            let c = Constraint { lhs: lb.sub(ub), strict: *ls || *us };
            if seen.insert(constraint_key(&c)) {
                out.push(c);
            }
            if out.len() > FM_CONSTRAINT_LIMIT {
                return Err(FmOverflow(out.len()));
            }
        }
    }
    Ok(out)
}

/// Splits ground (variable-free) constraints out of a system, failing fast
/// when one is violated.
fn check_ground(system: Vec<Constraint>) -> Option<Vec<Constraint>> {
    let mut keep = Vec::new();
    for c in system {
        if c.lhs.is_constant() {
            let v = &c.lhs.constant;
            let ok = if c.strict { v < &BigRational::zero() } else { v <= &BigRational::zero() };
            if !ok {
                return None;
            }
        } else {
            keep.push(c);
        }
    }
    Some(keep)
}

/// How back-substitution picks a point inside each feasible interval.
enum Pick<'a> {
    Midpoint,
    Random(&'a mut ChaCha8Rng),
}

/// Decides satisfiability of a conjunction of linear constraints. On
/// success returns a witness (exact rationals).
pub fn linear_sat(constraints: &[Constraint]) -> Result<Option<Assignment>, FmOverflow> {
    linear_sat_with(constraints, &mut Pick::Midpoint)
}

fn linear_sat_with(
    constraints: &[Constraint],
    pick: &mut Pick,
) -> Result<Option<Assignment>, FmOverflow> {
    let mut vars: BTreeSet<String> = BTreeSet::new();
    for c in constraints {
        vars.extend(c.lhs.coeffs.keys().cloned());
    }
    let mut system = match check_ground(constraints.to_vec()) {
        None => return Ok(None),
        Some(s) => s,
    };
    let mut stages: Vec<Stage> = Vec::new();
    for v in &vars {
        stages.push(Stage { var: v.clone(), system: system.clone() });
        system = eliminate(v, &system)?;
        system = match check_ground(system) {
            None => return Ok(None),
            Some(s) => s,
        };
    }
    debug_assert!(system.is_empty());
    // Feasible: back-substitute in reverse elimination order.
    let mut sigma = Assignment::new();
    for stage in stages.iter().rev() {
        let value = pick_value(&stage.var, &stage.system, &sigma, pick);
        sigma.insert(stage.var.clone(), value);
    }
    Ok(Some(sigma))
}

fn pick_value(var: &str, system: &[Constraint], sigma: &Assignment, pick: &mut Pick) -> BigRational {
    let mut lower: Option<(BigRational, bool)> = None; // (bound, strict)
    let mut upper: Option<(BigRational, bool)> = None;
    for c in system {
        let Some(coef) = c.lhs.coeffs.get(var) else {
            continue;
        };
        let mut r = c.lhs.clone();
        r.coeffs.remove(var);
        let rest = r
            .eval(sigma)
            .expect("back-substitution sees only already-assigned variables");
        let bound = -rest / coef;
        if coef > &BigRational::zero() {
            // var (<|<=) bound
            let tighter = match &upper {
                None => true,
                Some((u, us)) => bound < *u || (bound == *u && c.strict && !us),
            };
            if tighter {
                upper = Some((bound, c.strict));
            }
        } else {
            let tighter = match &lower {
                None => true,
                Some((l, ls)) => bound > *l || (bound == *l && c.strict && !ls),
            };
            if tighter {
                lower = Some((bound, c.strict));
            }
        }
    }
    let one = BigRational::one();
    match (lower, upper) {
        (None, None) => match pick {
            Pick::Midpoint => BigRational::zero(),
            Pick::Random(rng) => BigRational::from_integer(rng.gen_range(-6..=6).into()),
        },
        (Some((l, strict)), None) => {
            let off = match pick {
                Pick::Midpoint => one,
                Pick::Random(rng) => BigRational::new(rng.gen_range(1..=12).into(), 2.into()),
            };
            if strict {
                &l + off
            } else {
                match pick {
                    Pick::Midpoint => l,
                    Pick::Random(_) => &l + off,
                }
            }
        }
        (None, Some((u, strict))) => {
            let off = match pick {
                Pick::Midpoint => one,
                Pick::Random(rng) => BigRational::new(rng.gen_range(1..=12).into(), 2.into()),
            };
            if strict {
                &u - off
            } else {
                match pick {
                    Pick::Midpoint => u,
                    Pick::Random(_) => &u - off,
                }
            }
        }
        (Some((l, ls)), Some((u, us))) => {
            if l == u {
                // FM guarantees the interval is nonempty, so neither side
                // can be strict here.
                debug_assert!(!ls && !us);
                l
            } else {
                match pick {
                    Pick::Midpoint => (&l + &u) / BigRational::from_integer(2.into()),
                    Pick::Random(rng) => {
                        let k = rng.gen_range(1..=15);
                        &l + (&u - &l) * BigRational::new(k.into(), 16.into())
                    }
                }
            }
        }
    }
}

/// Completes a witness with zeros for variables the constraints do not
/// mention.
fn complete(mut sigma: Assignment, vars: &BTreeSet<String>) -> Assignment {
    for v in vars {
        sigma.entry(v.clone()).or_insert_with(BigRational::zero);
    }
    sigma
}

fn formula_vars(parts: &[&Formula]) -> BTreeSet<String> {
    let mut vars = BTreeSet::new();
    for p in parts {
        vars.extend(p.vars());
    }
    vars
}

/// Does `psi` entail `phi`? Checks unsatisfiability of `psi /\ ~phi`.
pub fn entails(psi: &Formula, phi: &Formula, reg: &PrimRegistry) -> Entailment3 {
    if matches!(phi, Formula::Top) {
        return Entailment3::Valid;
    }
    let vars = formula_vars(&[psi, phi]);
    let negated = Formula::and(psi.clone(), Formula::not(phi.clone()));
    let dnf = match to_dnf(&negated, false) {
        Ok(d) => d,
        Err(e) => return Entailment3::Unknown(e.to_string()),
    };
    let mut needs_sampling = false;
    for conjunct in &dnf {
        match linear_sat(&conjunct.linear) {
            Err(e) => return Entailment3::Unknown(e.to_string()),
            Ok(None) => continue,
            Ok(Some(witness)) => {
                if conjunct.is_purely_linear() {
                    return Entailment3::Invalid(complete(witness, &vars));
                }
                // The linear part is satisfiable but opaque atoms remain;
                // only sampling can refute this disjunct.
                needs_sampling = true;
            }
        }
    }
    if !needs_sampling {
        return Entailment3::Valid;
    }
    match sample_satisfying(&negated, &vars, reg, 0xC0FFEE) {
        Some(witness) => Entailment3::Invalid(witness),
        None => Entailment3::Unknown(
            "nonlinear atoms; sampling found no counterexample".to_string(),
        ),
    }
}

/// Searches for a point satisfying `phi`: a coarse grid for up to two
/// variables, then seeded random sampling. Returns exact rationals (grid
/// points and dyadic randoms convert exactly).
fn sample_satisfying(
    phi: &Formula,
    vars: &BTreeSet<String>,
    reg: &PrimRegistry,
    seed: u64,
) -> Option<Assignment> {
    let names: Vec<&String> = vars.iter().collect();
    let check = |sigma: &Assignment| -> bool {
        let point: BTreeMap<String, f64> = sigma
            .iter()
            .map(|(k, v)| (k.clone(), crate::syntax::rat_to_f64(v)))
            .collect();
        truth_domain_member_f64(phi, &point, reg).unwrap_or(false)
    };
    if names.is_empty() {
        let sigma = Assignment::new();
        return check(&sigma).then_some(sigma);
    }
    // Grid over [-10, 10] with step 1/10 for small dimensions.
    if names.len() <= 2 {
        let steps: Vec<BigRational> =
            (-100..=100).map(|i| BigRational::new(i.into(), 10.into())).collect();
        if names.len() == 1 {
            for v in &steps {
                let mut sigma = Assignment::new();
                sigma.insert(names[0].clone(), v.clone());
                if check(&sigma) {
                    return Some(sigma);
                }
            }
        } else {
            for v0 in &steps {
                for v1 in &steps {
                    let mut sigma = Assignment::new();
                    sigma.insert(names[0].clone(), v0.clone());
                    sigma.insert(names[1].clone(), v1.clone());
                    if check(&sigma) {
                        return Some(sigma);
                    }
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..4000 {
        let mut sigma = Assignment::new();
        for name in &names {
            // Dyadic rationals in [-10, 10] keep the witness exact.
            let numer: i64 = rng.gen_range(-10 * 64..=10 * 64);
            sigma.insert((*name).clone(), BigRational::new(numer.into(), 64.into()));
        }
        if check(&sigma) {
            return Some(sigma);
        }
    }
    None
}

/// Projects `theta` onto a single variable: the result mentions only
/// `keep` (renamed to `out_name`) and over-approximates the set of values
/// `keep` takes inside `theta`. Nonlinear atoms are dropped (a sound
/// weakening); an unsatisfiable formula projects to the empty region.
pub fn project_onto(theta: &Formula, keep: &str, out_name: &str) -> Option<Formula> {
    let dnf = to_dnf(theta, false).ok()?;
    let mut parts: Vec<Formula> = Vec::new();
    for conjunct in dnf {
        // Dropping opaque atoms only widens the projection.
        let mut system = match check_ground(conjunct.linear) {
            None => continue, // infeasible disjunct contributes nothing
            Some(s) => s,
        };
        let others: BTreeSet<String> = system
            .iter()
            .flat_map(|c| c.lhs.coeffs.keys().cloned())
            .filter(|v| v != keep)
            .collect();
        let mut dead = false;
        for v in &others {
            let next = eliminate(v, &system).ok()?;
            match check_ground(next) {
                None => {
                    dead = true;
                    break;
                }
                Some(s) => system = s,
            }
        }
        if dead {
            continue;
        }
        // What remains constrains only `keep`. Check one-variable
        // feasibility before emitting.
        match linear_sat(&system) {
            Err(_) => return None,
            Ok(None) => continue,
            Ok(Some(_)) => {}
        }
        if system.is_empty() {
            // Unconstrained disjunct: the projection is everything.
            return Some(Formula::Top);
        }
        let renamed: Vec<Constraint> = system
            .into_iter()
            .map(|mut c| {
                if let Some(coef) = c.lhs.coeffs.remove(keep) {
                    c.lhs.coeffs.insert(out_name.to_string(), coef);
                }
                c
            })
            .collect();
        parts.push(super::linear::constraints_to_formula(&renamed));
    }
    if parts.is_empty() {
        return Some(Formula::bottom());
    }
    Some(Formula::disj(parts))
}

/// Samples up to `want` assignments from the truth domain of `phi` over
/// `vars`: exact solutions of each linear disjunct (midpoint plus
/// randomized back-substitutions, which solve active equalities exactly),
/// then rejection sampling for regions with interior or nonlinear atoms.
pub fn sample_region(
    phi: &Formula,
    vars: &[String],
    want: usize,
    seed: u64,
    reg: &PrimRegistry,
) -> Vec<Assignment> {
    let var_set: BTreeSet<String> = vars.iter().cloned().collect();
    let mut out: Vec<Assignment> = Vec::new();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let push = |sigma: Assignment, out: &mut Vec<Assignment>, seen: &mut BTreeSet<String>| {
        let key = format!("{:?}", sigma);
        if seen.insert(key) {
            out.push(sigma);
        }
    };
    let exact_ok = |sigma: &Assignment| -> bool {
        super::formula::truth_domain_member(phi, sigma, reg).unwrap_or(false)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if let Ok(dnf) = to_dnf(phi, false) {
        for conjunct in &dnf {
            if out.len() >= want {
                break;
            }
            if !conjunct.is_purely_linear() {
                continue;
            }
            if let Ok(Some(sigma)) = linear_sat(&conjunct.linear) {
                let sigma = complete(sigma, &var_set);
                if exact_ok(&sigma) {
                    push(sigma, &mut out, &mut seen);
                }
            }
            for _ in 0..(want / dnf.len().max(1) + 2) {
                if out.len() >= want {
                    break;
                }
                let mut pick = Pick::Random(&mut rng);
                if let Ok(Some(sigma)) = linear_sat_with(&conjunct.linear, &mut pick) {
                    let sigma = complete(sigma, &var_set);
                    if exact_ok(&sigma) {
                        push(sigma, &mut out, &mut seen);
                    }
                }
            }
        }
    }
    // Rejection sampling tops up the pool (and is the only source when the
    // formula has nonlinear atoms).
    let member_f64 = |sigma: &Assignment| -> bool {
        let point: BTreeMap<String, f64> = sigma
            .iter()
            .map(|(k, v)| (k.clone(), crate::syntax::rat_to_f64(v)))
            .collect();
        truth_domain_member_f64(phi, &point, reg).unwrap_or(false)
    };
    let mut budget = 200 * want.max(1);
    while out.len() < want && budget > 0 {
        budget -= 1;
        let mut sigma = Assignment::new();
        for v in vars {
            let numer: i64 = rng.gen_range(-8 * 16..=8 * 16);
            sigma.insert(v.clone(), BigRational::new(numer.into(), 16.into()));
        }
        if member_f64(&sigma) {
            push(sigma, &mut out, &mut seen);
        }
    }
    out
}
