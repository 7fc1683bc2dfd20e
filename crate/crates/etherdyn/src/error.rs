use thiserror::Error;

/// Errors surfaced by the geometric operations.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("matrix is numerically singular (condition estimate {cond:.3e})")]
    SingularForm { cond: f64 },

    #[error("point {point:?} left the chart domain of model `{model}`")]
    DomainExit { model: String, point: Vec<f64> },

    #[error("integrator step underflow at t = {t:.6e}; worst point {point:?}")]
    StepUnderflow { t: f64, point: Vec<f64> },

    #[error("integrator produced a non-finite state at t = {t:.6e}")]
    NonFiniteState { t: f64 },

    #[error("integrator exceeded {max_steps} steps")]
    TooManySteps { max_steps: usize },

    #[error("Newton iteration did not converge after {iters} iterations (|F| = {residual:.3e})")]
    NewtonDiverged { iters: usize, residual: f64 },

    #[error("path endpoints do not match: gap {gap:.3e}")]
    EndpointMismatch { gap: f64 },

    #[error("model `{0}` is not flat")]
    NotFlat(String),

    #[error("model `{0}` provides no closed-form reflections")]
    NoReflections(String),

    #[error("jet order {0} not supported (max 3)")]
    JetOrder(usize),

    #[error("model `{model}` definition inconsistent: {what} (residual {residual:.3e})")]
    ModelDefinition {
        model: String,
        what: String,
        residual: f64,
    },

    #[error("slope fit failed: residuals not monotone in the sweep")]
    SlopeFit,

    #[error("membrane quadrature did not stabilize (last delta {delta:.3e})")]
    MembraneMesh { delta: f64 },

    #[error("{0}")]
    Invalid(String),
}
