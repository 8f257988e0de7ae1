use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("time {t} outside foliation range [{t_min}, {t_max}]")]
    TimeOutOfRange { t: f64, t_min: f64, t_max: f64 },

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("radius {delta} too large: balls self-overlap around the leaf (cut-off {cutoff})")]
    SelfOverlap { delta: f64, cutoff: f64 },

    #[error("non-hyperbolic flux: d_u f^t = {value} <= 0 at u = {u}, t = {t}, x = {x}")]
    NonHyperbolic { u: f64, t: f64, x: f64, value: f64 },

    #[error("entropy is not convex (second difference {0:e})")]
    NonConvexEntropy(f64),

    #[error("fluxes differ at u = 0 by {0:e}; re-base both so that f(0) = f~(0)")]
    FluxesNotRebased(f64),

    #[error("viscosity function is decreasing near u = {0}")]
    DecreasingViscosity(f64),

    #[error("CFL violation: {0}")]
    Cfl(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("mismatched inputs: {0}")]
    Mismatch(String),

    #[error("missing input: {0}")]
    Missing(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown preset: {0}")]
    UnknownPreset(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("scenario '{scenario}': {source}")]
    Scenario {
        scenario: String,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numerical(_) | Error::Cfl(_) | Error::NonHyperbolic { .. } => 3,
            Error::Scenario { source, .. } => source.exit_code(),
            _ => 2,
        }
    }

    pub fn in_scenario(self, scenario: &str) -> Error {
        Error::Scenario {
            scenario: scenario.to_string(),
            source: Box::new(self),
        }
    }
}
