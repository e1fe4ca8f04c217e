//! Central finite differences, the numeric oracle for derivatives.

use crate::semantics::{denote_first_order, EvalError, PrimRegistry};
use crate::syntax::{Term, TypingContext};
use crate::typing::TypeError;

/// Default step. Central differences have error O(h^2) + O(eps/h); this
/// balances both far above the comparison tolerances used in tests.
pub const FD_STEP: f64 = 1e-5;

/// (f(x+h) - f(x-h)) / 2h.
pub fn central_diff(
    f: &dyn Fn(f64) -> Result<f64, EvalError>,
    x: f64,
    h: f64,
) -> Result<f64, EvalError> {
    Ok((f(x + h)? - f(x - h)?) / (2.0 * h))
}

#[derive(Debug, thiserror::Error)]
pub enum FdError {
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("point has {got} coordinates, context has {want} variables")]
    PointArity { got: usize, want: usize },
}

/// Finite-difference gradient of `t : R` under an all-ground context.
pub fn grad_fd(
    ctx: &TypingContext,
    t: &Term,
    point: &[f64],
    h: f64,
    reg: &PrimRegistry,
) -> Result<Vec<f64>, FdError> {
    let f = denote_first_order(ctx, t, reg)?;
    if point.len() != ctx.len() {
        return Err(FdError::PointArity { got: point.len(), want: ctx.len() });
    }
    let mut out = Vec::with_capacity(point.len());
    for i in 0..point.len() {
        let mut hi = point.to_vec();
        let mut lo = point.to_vec();
        hi[i] += h;
        lo[i] -= h;
        out.push((f(&hi)? - f(&lo)?) / (2.0 * h));
    }
    Ok(out)
}
