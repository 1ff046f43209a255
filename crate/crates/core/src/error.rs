use thiserror::Error;

/// Failure modes shared by every stage of the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Validation(String),

    #[error("far-field state is not supersonic (Mach {mach:.6})")]
    NotSupersonic { mach: f64 },

    #[error("far-field normal velocity must be negative, got {0}")]
    WrongSign(f64),

    #[error("velocity {0} is outside the admissible range u < 0")]
    Domain(f64),

    #[error("no stationary profile: the flux vanishes at u = {root} between the boundary value and the far field")]
    NoStationaryProfile { root: f64 },

    #[error("profile integration left the admissible interval at x1 = {x1}")]
    Diverged { x1: f64 },

    #[error("point outside the domain: {0}")]
    OutsideDomain(String),

    #[error("resolution too coarse: {0}")]
    ResolutionTooCoarse(String),

    #[error("outflow condition violated: min u_b.n = {margin}")]
    OutflowViolated { margin: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("compatibility matrix is singular")]
    SingularA,

    #[error("time step {dt} exceeds the stability bound {limit} at t = {t}")]
    CflViolation { t: f64, dt: f64, limit: f64 },

    #[error("density lost positivity (min {min_rho}) at t = {t}")]
    PositivityLost { t: f64, min_rho: f64 },

    #[error("non-finite value encountered at t = {t}")]
    NonFinite { t: f64 },

    #[error("not converging: translation gap {gap:e} stalled at t = {t}")]
    NotConverging { t: f64, gap: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("distance stays below the noise floor; trajectory is at the fixed point")]
    AtFixedPoint,

    #[error("configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
