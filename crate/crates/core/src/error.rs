use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested resonance has no orbit at these parameters.
    #[error("no {kind} resonance {first}:{q} at omega = {omega}")]
    NoResonance {
        kind: &'static str,
        first: u32,
        q: u32,
        omega: f64,
    },

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("step size underflow at tau = {tau} (h = {step:e})")]
    StepUnderflow { tau: f64, step: f64 },

    #[error("trajectory blew up at tau = {tau}: |v| = {v:e}")]
    Blowup { tau: f64, v: f64 },

    #[error("{0} did not converge")]
    NoConvergence(&'static str),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of a numerical method, as opposed to invalid input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::StepUnderflow { .. } | Error::Blowup { .. } | Error::NoConvergence(_)
        )
    }
}
