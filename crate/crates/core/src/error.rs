use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degree distribution is empty")]
    EmptyInput,

    #[error("degree and count must be positive, got degree {degree} with count {count}")]
    NonPositiveEntry { degree: u64, count: u64 },

    #[error("degree {0} appears more than once")]
    DuplicateDegree(u64),

    #[error("all nodes have degree 1; the epidemic threshold is undefined")]
    DegenerateDistribution,

    #[error("invalid rate {name} = {value}")]
    InvalidRate { name: &'static str, value: f64 },

    #[error("expected {expected} values, one per degree class, got {got}")]
    ClassCountMismatch { expected: usize, got: usize },

    #[error("class {class}: {infected} infected exceeds class size {size} (or is negative)")]
    CountExceedsClass { class: usize, infected: f64, size: u64 },

    #[error("susceptible stub count {s_s} is exhausted; the closure is undefined")]
    SusceptibleStubsExhausted { s_s: f64 },

    #[error("{what} = {value} lies outside [{lo}, {hi}]")]
    OutOfDomain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("invalid integration config: {0}")]
    InvalidConfig(String),

    #[error("step cap of {steps} steps exceeded at t = {t}")]
    StepCapExceeded { steps: usize, t: f64 },

    #[error("step size {h} underflowed at t = {t}")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("tau = {tau} does not exceed the threshold {tau_c}; no admissible endemic state")]
    BelowThreshold { tau: f64, tau_c: f64 },

    #[error("no sign change of f(U) - 1 on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    BracketFailure { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("eigenvalue iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("bound variant {variant} does not apply to this distribution")]
    VariantNotApplicable { variant: &'static str },

    #[error("p_x has no root in (0, 1) for x = {x}")]
    RootNotBracketed { x: f64 },

    #[error("matrix must be square and non-empty, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
}
