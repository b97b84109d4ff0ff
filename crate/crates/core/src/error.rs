use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("force constants violate phonon stability (kappa1={kappa1}, kappa2={kappa2}): need kappa1 > 0 and kappa1 + 4*kappa2 > 0")]
    Unstable { kappa1: f64, kappa2: f64 },

    #[error("{0}")]
    Domain(String),

    #[error("near-singular {what} at xi={xi:.6}: eigenvalue {eigenvalue:e} below threshold {threshold:e}")]
    Singular {
        what: &'static str,
        xi: f64,
        eigenvalue: f64,
        threshold: f64,
    },

    #[error("interlacing violated at xi={xi:.6}: {detail}")]
    Interlacing { xi: f64, detail: String },

    #[error("degenerate stationary point; estimate invalid (|omega''(pi)| = {0:e})")]
    DegenerateStationaryPoint(f64),

    #[error("too few usable samples for a decay fit: {usable} < {required} ({excluded} nonpositive excluded)")]
    TooFewSamples {
        usable: usize,
        required: usize,
        excluded: usize,
    },

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
