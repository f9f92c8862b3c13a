use thiserror::Error;

/// Errors surfaced by model construction, integration and the verification
/// operations. Blow-up of a Riccati solution is *not* an error (it is a
/// reported outcome); everything here is a genuine failure of a precondition
/// or of the numerics.
#[derive(Debug, Error)]
pub enum Error {
    #[error("config parse error: {0}")]
    ConfigParse(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("pinching violation: k({r}) = {k} outside [{lo}, {hi}]")]
    PinchingViolation { r: f64, k: f64, lo: f64, hi: f64 },

    #[error("integration failure at t = {t}: {reason}")]
    IntegrationFailure { t: f64, reason: String },

    #[error("out of horizon: r = {r} not in [0, {r_max}]")]
    OutOfHorizon { r: f64, r_max: f64 },

    #[error("nonconvex boundary: second fundamental form {value} at theta = {theta}")]
    NonconvexBoundary { theta: f64, value: f64 },

    #[error("no valid sandwich shift certifies on this horizon (r_max = {r_max})")]
    NoValidR { r_max: f64 },

    #[error("case inapplicable: {0}")]
    CaseInapplicable(String),

    #[error("out of chart: angular separation {separation} exceeds chart radius {radius}")]
    OutOfChart { separation: f64, radius: f64 },

    #[error("shooting failed to bracket a connecting geodesic")]
    NoBracket,

    #[error("geodesic segment left the domain (clamped at r = {r})")]
    ClampedSegment { r: f64 },

    #[error("geodesic failed to reach r = {r_target} (trapped or horizon too short)")]
    TrappedGeodesic { r_target: f64 },

    #[error("foot point solve did not converge at theta = {theta}")]
    FootPointFailure { theta: f64 },

    #[error("double buffer infeasible: {0}")]
    Infeasible(String),

    #[error("geodesic is not untrapped (r_dot never became positive)")]
    NotUntrapped,

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::ConfigParse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
