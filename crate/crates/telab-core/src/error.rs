use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("undefined for Λ = 0")]
    ZeroMatrix,

    #[error("oracle under-resolved: {0} samples, need at least 100")]
    OracleUnderResolved(usize),

    #[error("quadrature did not converge: requested {requested:e}, achieved {achieved:e}")]
    QuadratureNoConvergence { requested: f64, achieved: f64 },

    #[error("point ({0}, {1}) lies outside the user grid bounding box")]
    OutsideGrid(f64, f64),

    #[error("inadmissible triple (ι, κ, λ): violated {0}")]
    InadmissibleTriple(String),

    #[error("PDE criterion violated: max residual {max_residual:e} at ({y1}, {y2})")]
    PdeCriterionViolated { max_residual: f64, y1: f64, y2: f64 },

    #[error("field identity check failed: {0}")]
    FieldIdentity(String),

    #[error("γ̇₂ vanishes on edge {0} of the polyline")]
    HorizontalEdge(usize),

    #[error("cross-tie mass integral diverges; partial sums {0:?}")]
    CrossTieDivergence(Vec<f64>),

    #[error("no construction upper bound defined for symmetric curve pairs")]
    NoUpperBound,

    #[error("curve endpoints do not match: not in Γ₀ ∪ Γ₁")]
    BadCurveEndpoints,

    #[error("segment must be vertical (a₁⁻ = a₁⁺); rotate coordinates so that ν = (1, 0)")]
    NotVertical,

    #[error("exponent p = {0} is not admissible; the L^p problem requires p > 2")]
    BadExponent(f64),

    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
