//! Abstract syntax, concrete syntax, and the alpha-conversion toolbox.
//!
//! Terms are the usual simply typed lambda calculus extended with real
//! literals, fully applied primitive operators, pairs/projections, and a
//! `if .. then .. else` conditional that may carry continuity annotations.
//! Numerals are exact rationals; nothing in the syntax layer rounds.

mod ast;
mod parser;
mod pretty;
mod vars;

pub use ast::{Binder, IfAnnotation, ProjIndex, SimpleType, Term, TypingContext};
pub use parser::{
    parse_formula, parse_reftype, parse_simple_type, parse_source_file, parse_term, ParseError,
    SourceFile, VarPragma,
};
pub use pretty::{pretty, pretty_f64, pretty_rational, pretty_type};
pub use vars::{alpha_equiv, binder_names, free_vars, freshen, substitute, FreshNames};

use num_rational::BigRational;

/// Builds the rational `n/1`.
pub fn rat_int(n: i64) -> BigRational {
    BigRational::from_integer(n.into())
}

/// Builds the rational `p/q`. Panics when `q == 0`.
pub fn rat(p: i64, q: i64) -> BigRational {
    BigRational::new(p.into(), q.into())
}

/// Rounds a rational to the nearest `f64`.
pub fn rat_to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or_else(|| {
        // Fall back to a quotient of lossy conversions for extreme values.
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}
