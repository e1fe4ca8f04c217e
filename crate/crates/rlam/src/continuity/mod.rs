//! Local-continuity refinement checking.
//!
//! `formula` defines the quantifier-free constraint language, `linear` its
//! linear fragment, and `entail` a sound entailment oracle (Fourier-Motzkin
//! with a sampling refuter for nonlinear atoms). `reftype` defines the
//! refinement types and contexts, `check` the syntax-directed checker, and
//! `equiv` the sampled contextual-equivalence probe used by the conditional
//! rule's boundary side condition.

pub mod check;
pub mod entail;
pub mod equiv;
pub mod formula;
pub mod linear;
pub mod reftype;

pub use check::{refine_check, CheckConfig, Derivation, RefineError, Verdict};
pub use entail::{entails, project_onto, sample_region, Entailment3};
pub use equiv::{ctx_equiv_probe, EquivConfig, EquivVerdict};
pub use formula::{
    truth_domain_member, truth_domain_member_f64, Assignment, FExpr, Formula, FormulaError,
};
pub use linear::{linearize, to_dnf, Conjunct, Constraint, DnfError, LinComb};
pub use reftype::{ArrowRef, RefContext, RefJudgment, RefType};
