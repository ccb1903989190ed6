use core::fmt;

/// Failure modes shared by every analysis stage.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Integration interval has zero length.
    EmptyInterval,
    /// Step-size control could not meet the tolerance above the minimum step.
    StepFailure {
        t: f64,
        h: f64,
    },
    /// A state component left the finite range.
    NonFiniteState {
        t: f64,
    },
    /// The vector field is singular at the queried point.
    SingularModel {
        t: f64,
        reason: &'static str,
    },
    /// State or matrix dimension does not match the model.
    DimensionMismatch {
        expected: usize,
        found: usize,
    },
    /// An input value violated a documented precondition.
    InvalidArgument(&'static str),
    NotHurwitz {
        abscissa: f64,
    },
    NotPositiveDefinite,
    NumericallySingular,
    /// Eigenvalue iteration did not converge.
    EigenFailure,
    /// The Lyapunov function is not decreasing even on the smallest ring.
    NoValidLevel,
    /// Steady-state angle equation has no solution, `|gamma| >= 1`.
    NoEquilibrium {
        gamma: f64,
    },
    SelfIntersecting,
    RefinementBudgetExceeded {
        samples: usize,
    },
    EmptyTrajectory,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::EmptyInterval => write!(f, "integration interval is empty"),
            Error::StepFailure { t, h } => {
                write!(f, "step size control failed at t = {t} (h = {h:e})")
            }
            Error::NonFiniteState { t } => write!(f, "state became non-finite at t = {t}"),
            Error::SingularModel { t, reason } => {
                write!(f, "model is singular at t = {t}: {reason}")
            }
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::InvalidArgument(what) => write!(f, "invalid argument: {what}"),
            Error::NotHurwitz { abscissa } => {
                write!(f, "matrix is not Hurwitz (max Re(lambda) = {abscissa})")
            }
            Error::NotPositiveDefinite => write!(f, "matrix is not positive definite"),
            Error::NumericallySingular => write!(f, "linear system is numerically singular"),
            Error::EigenFailure => write!(f, "eigenvalue iteration did not converge"),
            Error::NoValidLevel => {
                write!(
                    f,
                    "Lyapunov derivative is non-negative on the smallest level ring"
                )
            }
            Error::NoEquilibrium { gamma } => {
                write!(f, "no equilibrium exists (|gamma| = {} >= 1)", gamma.abs())
            }
            Error::SelfIntersecting => write!(f, "polygon is self-intersecting"),
            Error::RefinementBudgetExceeded { samples } => {
                write!(
                    f,
                    "boundary refinement budget exhausted after {samples} samples"
                )
            }
            Error::EmptyTrajectory => write!(f, "trajectory has no samples"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
