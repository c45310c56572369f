use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Failures raised by the numerical core.
///
/// Variants split into precondition violations ([`Error::is_validation`]) and
/// numerical failures discovered while computing.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter broke its documented rule.
    InvalidParameter {
        name: &'static str,
        rule: &'static str,
        value: f64,
    },
    /// Time outside the range where a closed form is defined.
    OutsideValidity { what: &'static str, tau: f64 },
    /// The wave integration left (0, 1) or stalled before reaching v = 1/2.
    ShootingFailed { reason: &'static str, x: f64 },
    /// A tail window held too few samples for a fit.
    InsufficientTail { side: &'static str, samples: usize },
    /// Radial profile reached zero before the requested radius.
    BlowDown { r: f64 },
    /// A bracketed root search found no sign change.
    NoSignChange { what: &'static str, tau: f64 },
    /// Crossing points exist but are not ordered y < x < z.
    CrossingsUnordered { tau: f64, y: f64, x: f64, z: f64 },
    /// Newton iteration did not reach tolerance.
    NewtonDiverged {
        tau: f64,
        residual: f64,
        iterations: usize,
    },
    /// An iterate stayed non-positive after damping.
    NonPositive { tau: f64, index: usize },
    /// The maximum sits on the boundary of the grid.
    BoundaryMaximum { index: usize },
    /// Two fields live on different grids.
    GridMismatch,
    /// A co-moving window leaves the computational domain.
    WindowOutsideDomain { speed: f64, tau: f64 },
    /// Not enough data for a fit or a gap table.
    InsufficientData { what: &'static str, samples: usize },
    /// A quadrature tail failed to decay.
    NonIntegrableTail { side: &'static str, tau: f64 },
    /// Barrier parameters failed validation even after tightening the horizon.
    BarrierValidation { tau_bar0: f64, residual: f64 },
    /// A run inside an experiment failed; `index` identifies it within its sweep.
    InRun {
        index: usize,
        source: alloc::boxed::Box<Error>,
    },
}

impl Error {
    /// True for precondition violations; false for numerical failures.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::InvalidParameter { .. }
            | Error::OutsideValidity { .. }
            | Error::GridMismatch
            | Error::WindowOutsideDomain { .. } => true,
            Error::InRun { source, .. } => source.is_validation(),
            _ => false,
        }
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::OutsideValidity { .. } => "outside_validity",
            Error::ShootingFailed { .. } => "shooting_failed",
            Error::InsufficientTail { .. } => "insufficient_tail",
            Error::BlowDown { .. } => "blow_down",
            Error::NoSignChange { .. } => "no_sign_change",
            Error::CrossingsUnordered { .. } => "crossings_unordered",
            Error::NewtonDiverged { .. } => "newton_diverged",
            Error::NonPositive { .. } => "non_positive",
            Error::BoundaryMaximum { .. } => "boundary_maximum",
            Error::GridMismatch => "grid_mismatch",
            Error::WindowOutsideDomain { .. } => "window_outside_domain",
            Error::InsufficientData { .. } => "insufficient_data",
            Error::NonIntegrableTail { .. } => "non_integrable_tail",
            Error::BarrierValidation { .. } => "barrier_validation",
            Error::InRun { source, .. } => source.kind(),
        }
    }

    pub(crate) fn param(name: &'static str, rule: &'static str, value: f64) -> Self {
        Error::InvalidParameter { name, rule, value }
    }

    pub(crate) fn in_run(index: usize, source: Error) -> Self {
        Error::InRun {
            index,
            source: alloc::boxed::Box::new(source),
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter { name, rule, value } => {
                write!(f, "{name} = {value} violates `{rule}`")
            }
            Error::OutsideValidity { what, tau } => {
                write!(f, "{what} is undefined at tau = {tau}")
            }
            Error::ShootingFailed { reason, x } => {
                write!(f, "wave shooting failed at x = {x}: {reason}")
            }
            Error::InsufficientTail { side, samples } => {
                write!(
                    f,
                    "{side} tail window has {samples} samples, need at least 10"
                )
            }
            Error::BlowDown { r } => write!(f, "radial profile reached zero at r = {r}"),
            Error::NoSignChange { what, tau } => {
                write!(f, "no sign change bracketing {what} at tau = {tau}")
            }
            Error::CrossingsUnordered { tau, y, x, z } => {
                write!(
                    f,
                    "crossings at tau = {tau} not ordered: y = {y}, x = {x}, z = {z}"
                )
            }
            Error::NewtonDiverged {
                tau,
                residual,
                iterations,
            } => write!(
                f,
                "Newton stalled at tau = {tau}: residual {residual:e} after {iterations} iterations"
            ),
            Error::NonPositive { tau, index } => {
                write!(f, "non-positive value at node {index}, tau = {tau}")
            }
            Error::BoundaryMaximum { index } => {
                write!(f, "maximum at boundary node {index}; enlarge the domain")
            }
            Error::GridMismatch => f.write_str("fields live on different grids"),
            Error::WindowOutsideDomain { speed, tau } => {
                write!(
                    f,
                    "co-moving window for c = {speed} leaves the domain at tau = {tau}"
                )
            }
            Error::InsufficientData { what, samples } => {
                write!(f, "{what}: only {samples} samples")
            }
            Error::NonIntegrableTail { side, tau } => {
                write!(f, "{side} integrand tail does not decay at tau = {tau}")
            }
            Error::BarrierValidation { tau_bar0, residual } => write!(
                f,
                "barrier validation failed down to tau_bar0 = {tau_bar0}: residual {residual:e}"
            ),
            Error::InRun { index, source } => write!(f, "run {index}: {source}"),
        }
    }
}

impl core::error::Error for Error {}
