use thiserror::Error;

use crate::expr::{EvalError, ParseError};
use crate::jets::JetError;
use crate::metric::MetricFileError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    MetricFile(#[from] MetricFileError),
    #[error("degenerate {which} at ({0}, {1})", point[0], point[1])]
    Degenerate { which: &'static str, point: [f64; 2] },
    #[error("gradient of ln|det h| vanishes at ({0}, {1}); invariant frame undefined", point[0], point[1])]
    NullGradient { point: [f64; 2] },
    #[error("h11 vanishes at ({0}, {1}); apply a constant GL2 change of Killing basis so the first generator is non-null", point[0], point[1])]
    NullKillingLeader { point: [f64; 2] },
    #[error("block signature is not Lorentzian (Q_gamma = {q_gamma} > 0)")]
    NonLorentzian { q_gamma: f64 },
    #[error("sign of det h changes across the sample domain; split the domain at the degeneracy")]
    SignSplit,
    #[error("not generic: {0}")]
    NotGeneric(String),
    #[error("no functionally independent invariant pair on the sampled domain")]
    NoIndependentPair,
    #[error("domain too small: {valid} valid samples, need at least {needed}")]
    DomainTooSmall { valid: usize, needed: usize },
    #[error("chart inversion did not converge near ({0}, {1})", target[0], target[1])]
    NoConvergence { target: [f64; 2] },
    #[error("chart inversion left the sample domain at ({0}, {1})", point[0], point[1])]
    LeftDomain { point: [f64; 2] },
    #[error("signature file: {0}")]
    SignatureFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
