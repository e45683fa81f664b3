use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// No observation has positive kernel weight at `x` for bandwidth `h`.
    EmptyNeighborhood { x: f64, h: f64 },
    /// Latency requested where the estimated uncured probability vanishes.
    CuredSlice { x: f64, b: f64, uncured: f64 },
    /// A local log-likelihood argument outside its domain.
    Domain(&'static str),
    /// Covariates carry no spread (or not enough neighbours) for a pilot rule.
    DegenerateCovariate,
    /// Curvature of the incidence vanishes, so the AMSE-optimal bandwidth is unbounded.
    DegenerateCurvature { x: f64, mu: f64 },
    /// Adaptive quadrature did not reach its tolerance.
    QuadratureFailure { estimate: f64, error: f64 },
    /// Bandwidth smoothing needs at least 11 grid points.
    GridTooSmall { points: usize },
    /// Invalid argument (non-positive bandwidth, empty input, bad config ...).
    InvalidInput(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::EmptyNeighborhood { x, h } => {
                write!(f, "no observations within bandwidth {h} of x = {x}")
            }
            Error::CuredSlice { x, b, uncured } => write!(
                f,
                "latency undefined at x = {x} with b = {b}: estimated uncured probability {uncured}"
            ),
            Error::Domain(what) => write!(f, "domain error: {what}"),
            Error::DegenerateCovariate => write!(f, "degenerate covariate distribution"),
            Error::DegenerateCurvature { x, mu } => write!(
                f,
                "incidence curvature vanishes at x = {x} (mu = {mu}); optimal bandwidth unbounded"
            ),
            Error::QuadratureFailure { estimate, error } => write!(
                f,
                "quadrature failed to converge (estimate {estimate}, error {error})"
            ),
            Error::GridTooSmall { points } => {
                write!(f, "bandwidth smoothing needs at least 11 grid points, got {points}")
            }
            Error::InvalidInput(what) => write!(f, "invalid input: {what}"),
        }
    }
}

impl core::error::Error for Error {}
