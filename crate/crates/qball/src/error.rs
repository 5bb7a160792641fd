//! Error types shared across the crate.

use thiserror::Error;

/// Which existence bound a frequency violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    Lower,
    Upper,
}

impl std::fmt::Display for Bound {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Bound::Lower => write!(f, "lower"),
            Bound::Upper => write!(f, "upper"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("omega = {omega} outside existence range ({lo:.6}, {hi:.6}); {bound} bound violated")]
    OmegaOutOfRange {
        omega: f64,
        lo: f64,
        hi: f64,
        bound: Bound,
    },

    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("quadrature did not converge: achieved {achieved:.3e}, requested {requested:.3e}")]
    QuadratureNoConvergence { achieved: f64, requested: f64 },

    #[error("no over/undershoot bracket found for f(0) in ({lo}, {hi})")]
    BracketNotFound { lo: f64, hi: f64 },

    #[error("shooting did not converge after {iterations} iterations")]
    ShootingNoConvergence { iterations: usize },

    #[error("field blow-up at t = {t}: max |value| = {max_abs:.3e}")]
    Blowup { t: f64, max_abs: f64 },

    #[error("no q-ball present: total |charge| {total:.3e} below floor {floor:.3e}")]
    NoQballPresent { total: f64, floor: f64 },

    #[error("scatter outcome undecided at t = {t_end}; extend the run")]
    Undecided { t_end: f64 },

    #[error("inconsistent bisection bracket: u = {u_lo} -> {lo_outcome}, u = {u_hi} -> {hi_outcome}")]
    InconsistentBracket {
        u_lo: f64,
        lo_outcome: String,
        u_hi: f64,
        hi_outcome: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("corrupt checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// CLI exit code: 1 for configuration problems, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Json(_) | Error::Io(_) | Error::InvalidParameter { .. } => 1,
            _ => 2,
        }
    }
}
