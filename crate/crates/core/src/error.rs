use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("arclength {s} outside path domain [{lo}, {hi}]")]
    Domain { s: f64, lo: f64, hi: f64 },

    #[error("hypothesis H1 violated: d*kappa_max = {0} must be < 1")]
    H1Violated(f64),

    #[error("initialization failed: {0}")]
    Init(String),

    #[error("integration blew up at t = {t}: state component `{component}` is not finite")]
    Blowup { t: f64, component: String },

    #[error("certification failure: {0}")]
    Certification(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
