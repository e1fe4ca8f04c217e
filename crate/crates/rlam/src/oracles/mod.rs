//! Independent numeric oracles the rest of the toolkit is validated
//! against: central finite differences for derivatives, exact polynomial
//! normal forms for the ring fragment, and a shrinking-radius continuity
//! probe for refinement verdicts.

pub mod continuity_probe;
pub mod finite_diff;
pub mod poly;

pub use continuity_probe::{
    judgment_probe, probe_continuity_at, ContinuityVerdict, PointVerdict, ProbeConfig,
};
pub use finite_diff::{central_diff, grad_fd, FdError, FD_STEP};
pub use poly::{poly_normalize, PolyError, PolyInterp, Polynomial};
