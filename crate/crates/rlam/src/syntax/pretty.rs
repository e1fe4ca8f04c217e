//! Precedence-aware printing. `parse(pretty(t))` is alpha-equivalent to
//! `t` (equal, when bound names are already unique).

use super::ast::{IfAnnotation, ProjIndex, SimpleType, Term};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Renders a rational: as a decimal when the denominator divides a power
/// of ten (`1.5`, `6.0`), as `p/q` otherwise.
pub fn pretty_rational(r: &BigRational) -> String {
    if r.is_negative() {
        return format!("-{}", pretty_rational(&-r));
    }
    let numer = r.numer();
    let denom = r.denom();
    if denom.is_one() {
        return format!("{}.0", numer);
    }
    // Count factors of 2 and 5 in the denominator.
    let mut d = denom.clone();
    let mut twos = 0u32;
    let mut fives = 0u32;
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    while (&d % &two).is_zero() {
        d /= &two;
        twos += 1;
    }
    while (&d % &five).is_zero() {
        d /= &five;
        fives += 1;
    }
    if !d.is_one() {
        return format!("{}/{}", numer, denom);
    }
    let k = twos.max(fives);
    let scale = BigInt::from(10).pow(k);
    let scaled = (numer * &scale) / denom;
    let digits = scaled.to_string();
    let k = k as usize;
    if digits.len() <= k {
        let mut frac = String::new();
        for _ in 0..(k - digits.len()) {
            frac.push('0');
        }
        frac.push_str(&digits);
        format!("0.{}", frac)
    } else {
        let split = digits.len() - k;
        format!("{}.{}", &digits[..split], &digits[split..])
    }
}

/// Renders an `f64` the way term literals print, so evaluator output and
/// source literals look alike.
pub fn pretty_f64(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e15 {
        format!("{:.1}", x)
    } else {
        format!("{}", x)
    }
}

pub fn pretty_type(t: &SimpleType) -> String {
    fn go(t: &SimpleType, prec: u8, out: &mut String) {
        match t {
            SimpleType::Real => out.push('R'),
            SimpleType::Prod(a, b) => {
                let wrap = prec > 1;
                if wrap {
                    out.push('(');
                }
                go(a, 2, out);
                out.push_str(" * ");
                go(b, 1, out);
                if wrap {
                    out.push(')');
                }
            }
            SimpleType::Arrow(a, b) => {
                let wrap = prec > 0;
                if wrap {
                    out.push('(');
                }
                go(a, 1, out);
                out.push_str(" -> ");
                go(b, 0, out);
                if wrap {
                    out.push(')');
                }
            }
        }
    }
    let mut out = String::new();
    go(t, 0, &mut out);
    out
}

fn pretty_annotation(ann: &IfAnnotation, out: &mut String) {
    let mut parts: Vec<String> = Vec::new();
    let slots: [(&str, &Option<crate::continuity::Formula>); 5] = [
        ("guard", &ann.guard),
        ("zero", &ann.zero),
        ("one", &ann.one),
        ("then", &ann.then_dom),
        ("else", &ann.else_dom),
    ];
    for (key, slot) in slots {
        if let Some(f) = slot {
            parts.push(format!("{}: {}", key, f));
        }
    }
    out.push('{');
    out.push_str(&parts.join(", "));
    out.push('}');
}

/// Term precedences, loosest to tightest:
/// 0 lambda/if, 1 comparison, 2 additive, 3 multiplicative, 4 unary,
/// 5 application.
pub fn pretty(t: &Term) -> String {
    let mut out = String::new();
    go(t, 0, &mut out);
    out
}

fn starts_with_minus(t: &Term) -> bool {
    match t {
        Term::Lit(r) => r.is_negative(),
        Term::PrimApp(f, _) => f == "neg",
        _ => false,
    }
}

fn go(t: &Term, prec: u8, out: &mut String) {
    match t {
        Term::Var(x) => out.push_str(x),
        Term::Lit(r) => {
            let s = pretty_rational(r);
            // A leading minus at unary position is fine; deeper positions
            // get parens from the caller via precedence.
            out.push_str(&s);
        }
        Term::PrimApp(f, args) => match (f.as_str(), args.as_slice()) {
            ("add", [a, b]) => infix(a, " + ", b, 2, 2, 3, prec, out),
            ("sub", [a, b]) => infix(a, " - ", b, 2, 2, 3, prec, out),
            ("mul", [a, b]) => infix(a, " * ", b, 3, 3, 4, prec, out),
            ("lt", [a, b]) => infix(a, " < ", b, 1, 2, 2, prec, out),
            ("le", [a, b]) => infix(a, " <= ", b, 1, 2, 2, prec, out),
            ("eq", [a, b]) => infix(a, " = ", b, 1, 2, 2, prec, out),
            ("neg", [a]) => {
                let wrap = prec > 4;
                if wrap {
                    out.push('(');
                }
                out.push('-');
                if starts_with_minus(a) {
                    out.push('(');
                    go(a, 0, out);
                    out.push(')');
                } else {
                    go(a, 4, out);
                }
                if wrap {
                    out.push(')');
                }
            }
            _ => {
                out.push_str(f);
                out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    go(a, 0, out);
                }
                out.push(')');
            }
        },
        Term::Lam(binders, body) => {
            let wrap = prec > 0;
            if wrap {
                out.push('(');
            }
            out.push('\\');
            for (i, b) in binders.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push_str(&b.name);
                if let Some(ty) = &b.ty {
                    out.push(':');
                    out.push_str(&pretty_type(ty));
                }
            }
            out.push_str(". ");
            go(body, 0, out);
            if wrap {
                out.push(')');
            }
        }
        Term::App(fun, args) => {
            let wrap = prec > 5;
            if wrap {
                out.push('(');
            }
            go(fun, 5, out);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                go(a, 0, out);
            }
            out.push(')');
            if wrap {
                out.push(')');
            }
        }
        Term::Pair(_, _) => {
            // Flatten right-nested pairs into tuple syntax.
            out.push('(');
            let mut cur = t;
            let mut first = true;
            while let Term::Pair(a, b) = cur {
                if !first {
                    out.push_str(", ");
                }
                go(a, 0, out);
                first = false;
                cur = b;
            }
            out.push_str(", ");
            go(cur, 0, out);
            out.push(')');
        }
        Term::Proj(ix, inner) => {
            let wrap = prec > 4;
            if wrap {
                out.push('(');
            }
            out.push_str(match ix {
                ProjIndex::Fst => "fst ",
                ProjIndex::Snd => "snd ",
            });
            go(inner, 5, out);
            if wrap {
                out.push(')');
            }
        }
        Term::If { guard, then_branch, else_branch, ann } => {
            let wrap = prec > 0;
            if wrap {
                out.push('(');
            }
            out.push_str("if ");
            go(guard, 1, out);
            if let Some(ann) = ann {
                if !ann.is_empty() {
                    out.push(' ');
                    pretty_annotation(ann, out);
                }
            }
            out.push_str(" then ");
            go(then_branch, 0, out);
            out.push_str(" else ");
            go(else_branch, 0, out);
            if wrap {
                out.push(')');
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn infix(
    a: &Term,
    op: &str,
    b: &Term,
    level: u8,
    left: u8,
    right: u8,
    prec: u8,
    out: &mut String,
) {
    let wrap = prec > level;
    if wrap {
        out.push('(');
    }
    go(a, left, out);
    out.push_str(op);
    go(b, right, out);
    if wrap {
        out.push(')');
    }
}

impl std::fmt::Display for Term {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", pretty(self))
    }
}

impl std::fmt::Display for SimpleType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", pretty_type(self))
    }
}
