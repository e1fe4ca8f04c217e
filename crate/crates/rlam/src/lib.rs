//! A compiler-style toolkit for a simply typed lambda calculus over the
//! reals, with primitive real operators drawn from a runtime registry.
//!
//! The crate has three jobs:
//!
//! * run programs (a call-by-value evaluator over `f64`, plus exact and
//!   polynomial re-interpretations of the same syntax),
//! * differentiate programs (a forward-mode source-to-source dual-number
//!   transformation, validated against finite differences),
//! * certify continuity of programs with conditionals (a refinement type
//!   checker whose side conditions are discharged by a rational
//!   Fourier-Motzkin entailment engine and sampling probes).

pub mod autodiff;
pub mod continuity;
pub mod oracles;
pub mod semantics;
pub mod syntax;
pub mod testgen;
pub mod typing;

pub use syntax::{Binder, IfAnnotation, ProjIndex, SimpleType, Term, TypingContext};
