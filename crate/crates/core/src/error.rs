use thiserror::Error;

/// Errors raised by lattice construction, measure evaluation and optimization.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimension {n}: expected at least {min}")]
    InvalidDimension { n: usize, min: usize },

    #[error("invalid distortion {0}: must be positive and finite")]
    InvalidDelta(f64),

    #[error("distortion {delta} outside the supported range {range}")]
    DeltaOutOfRange { delta: f64, range: &'static str },

    #[error("invalid radius {0}: must be finite and non-negative")]
    InvalidRadius(f64),

    #[error("ratio is undefined at r = 0")]
    UndefinedRatio,

    #[error("no closed form for dimension {0}; an oracle budget is required")]
    UnsupportedExact(usize),

    #[error("omega = {omega} is outside the domain of the {measure} constraint")]
    OmegaDomain { omega: f64, measure: &'static str },

    #[error("(delta = {delta}, r = {r}) lies outside every derivative branch")]
    OutOfBranch { delta: f64, r: f64 },

    #[error("plane normal has length {0}, expected a unit vector")]
    NonUnitNormal(f64),

    #[error("point has {got} coordinates, lattice has dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty or invalid range [{lo}, {hi}]")]
    EmptyRange { lo: f64, hi: f64 },

    #[error("quality difference has {0} sign changes on the scanned omega interval, expected exactly one")]
    SignChanges(usize),

    #[error("Voronoi cell construction failed at delta = {0}")]
    DegenerateCell(f64),

    #[error("sample count must be at least 1")]
    InvalidSamples,

    #[error("at least one plane is required")]
    EmptyPlaneSet,

    #[error("unknown {kind} '{value}'")]
    Parse { kind: &'static str, value: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_radius(r: f64) -> Result<()> {
    if r.is_finite() && r >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidRadius(r))
    }
}
