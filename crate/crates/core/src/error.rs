use thiserror::Error;

#[derive(Clone, Copy, Debug, Error, PartialEq)]
pub enum Error {
    #[error("point is not a finite nonzero vector")]
    InvalidPoint,
    #[error("tangent vectors are based at different points")]
    BaseMismatch,
    #[error("matrix is not orthogonal")]
    NotOrthogonal,
    #[error("rotation reverses orientation")]
    NotProper,
    #[error("covector vanishes where a nonzero covector is required")]
    ZeroCovector,
    #[error("state lies outside the domain |p| >= {threshold}")]
    OutsideDomain { threshold: f64 },
    #[error("state lies outside the domain |p| < {radius}")]
    BeyondRadius { radius: f64 },
    #[error("level set leaves the domain |p| < {radius}")]
    LevelEscapes { radius: f64 },
    #[error("state is within {margin:e} of the domain boundary")]
    NearBoundary { margin: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("state is degenerate in both charts")]
    ChartDegenerate,
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("trajectory approached the zero section at t = {t}")]
    ZeroSection { t: f64 },
    #[error("step budget exhausted at t = {t}")]
    StepBudget { t: f64 },
    #[error("no section crossing within time budget {budget}")]
    NoCrossing { budget: f64 },
    #[error("state is off the level set (defect {defect:e})")]
    OffLevel { defect: f64 },
    #[error("no level crossing along the fibre ray")]
    NoRayCrossing,
    #[error("linear system is singular")]
    Singular,
    #[error("state is off the ellipsoid (defect {defect:e})")]
    OffEllipsoid { defect: f64 },
}
