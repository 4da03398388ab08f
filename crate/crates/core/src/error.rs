//! Error type shared by every module of the core crate.

use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: &'static str },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not a valid density matrix: {reason} (deviation {deviation:e})")]
    InvalidDensityMatrix { reason: &'static str, deviation: f64 },

    #[error("index {index} out of range for {n_levels} Fock levels")]
    LevelOutOfRange { index: usize, n_levels: usize },

    #[error("step size underflow at t = {t:e} s (h = {h:e} s)")]
    StepUnderflow { t: f64, h: f64 },

    #[error("step budget of {max_steps} exhausted at t = {t:e} s")]
    StepBudgetExhausted { t: f64, max_steps: usize },

    #[error("positivity violated at t = {t:e} s: minimum eigenvalue {min_eigenvalue:e}")]
    PositivityViolation { t: f64, min_eigenvalue: f64 },

    #[error("trace drifted at t = {t:e} s: |tr R - 1| = {trace_error:e}")]
    TraceDrift { t: f64, trace_error: f64 },

    #[error("non-finite value encountered at t = {t:e} s")]
    NonFinite { t: f64 },

    #[error("overdamped regime (kappa <= gamma_a / 4); use the analytically continued evaluation")]
    Overdamped,

    #[error("critically damped (kappa == gamma_a / 4): exchange frequency vanishes")]
    CriticalDamping,

    #[error("analytic result has imaginary residue {residue:e}")]
    ComplexResidue { residue: f64 },

    #[error("blue-sideband probability {p_blue:e} below floor {floor:e}")]
    BlueBelowFloor { p_blue: f64, floor: f64 },

    #[error("sideband ratio {ratio} >= 1: measurement saturated")]
    Saturated { ratio: f64 },

    #[error("no blue-sideband excitations recorded: insufficient data")]
    InsufficientData,

    #[error("stage-I transfer {transfer:e} below floor {floor:e}: inversion ill-conditioned")]
    IllConditioned { transfer: f64, floor: f64 },

    #[error("linear system is singular")]
    Singular,
}
