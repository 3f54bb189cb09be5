use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Evaluation too close to a zero of the wavefunction for `∇Ψ/Ψ` to be reliable.
    #[error("node singularity at ({x}, {y}, t={t}): |psi| = {psi_abs:e}")]
    NodeSingularity { x: f64, y: f64, t: f64, psi_abs: f64 },

    /// Both time-dependent weights of the nodal elimination vanish.
    #[error("degenerate time t={t}: nodal equations reduce to identities")]
    DegenerateTime { t: f64 },

    #[error("node {id} lost at t={t}")]
    LostNode { id: usize, t: f64 },

    /// The adaptive controller shrank the step below its floor; carries the last good state.
    #[error("step size underflow at t={t}, last good state ({x}, {y})")]
    StepFailure { t: f64, x: f64, y: f64 },

    #[error("no X-point found around node {node_id} at t={t}")]
    NoXPointFound { node_id: usize, t: f64 },

    /// A closed-form reconstruction hit a vanishing denominator.
    #[error("degenerate state: {0}")]
    DegenerateState(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
