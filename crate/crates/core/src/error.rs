use thiserror::Error;

/// Failures raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite input in {0}")]
    NonFinite(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("singular Newton Jacobian (|2 - trace| = {0:e}), orbit is close to parabolic")]
    SingularJacobian(f64),
    #[error("no stable island: {0}")]
    NoIsland(&'static str),
    #[error("island region touches the boundary of the classification grid")]
    GridTooCoarse,
    #[error("separatrix tracing left the neighbourhood of the resonance chain")]
    ManifoldEscape,
    #[error("monodromy trace {0} lies outside (-2, 2)")]
    TraceOutOfDomain(f64),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("input matrix is not unitary (max deviation {0:e})")]
    NonUnitaryInput(f64),
    #[error("eigendecomposition did not converge")]
    EigenFailure,
    #[error("operation requires gamma_plus == gamma_minus")]
    NotSymmetric,
    #[error("state has negligible weight on one of the islands")]
    Indeterminate,
    #[error("perturbative chain is degenerate at step k = {k}")]
    PoleAtDegeneracy { k: usize },
    #[error("two-resonance coupling not applicable: first excited rung lies outside the outer resonance")]
    InvalidRegime,
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn ensure_finite(values: &[f64], what: &'static str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}
