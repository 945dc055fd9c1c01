use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("model is singular at the critical time (x = 0 with alpha = {alpha} <= 0)")]
    SingularAtCritical { alpha: f64 },
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("malformed row at line {0}")]
    MalformedRow(usize),
    #[error("non-positive price at line {0}")]
    NonPositivePrice(usize),
    #[error("duplicate date at line {0}")]
    DuplicateDate(usize),
    #[error("empty series")]
    EmptySeries,
    #[error("invalid date {year:04}-{month:02}-{day:02}")]
    InvalidDate { year: i32, month: u32, day: u32 },
    #[error("invalid series: {0}")]
    InvalidSeries(String),
    #[error("invalid window [{start}, {end}]")]
    InvalidWindow { start: f64, end: f64 },

    #[error("basis is rank deficient (condition number {condition:.3e})")]
    RankDeficient { condition: f64 },
    #[error("data point at t = {t} is not on the configured side of t_crit = {t_crit}")]
    SideViolation { t: f64, t_crit: f64 },
    #[error("insufficient data: {have} points, need at least {need}")]
    InsufficientData { have: usize, need: usize },
    #[error("no valid grid point (all candidates rank deficient or side violating)")]
    NoValidGridPoint,
    #[error("invalid fit configuration: {0}")]
    InvalidConfig(String),

    #[error("oscillation amplitude is zero, extrema are undefined")]
    ZeroOscillation,
    #[error("range [{from}, {to}] is not on one side of t_crit = {t_crit}")]
    RangeCrossesCritical { from: f64, to: f64, t_crit: f64 },
    #[error("extrema times must be strictly monotone and at least two")]
    NotMonotone,
    #[error(
        "inconsistent extrema spacing: residual {residual:.3e} exceeds tolerance {tolerance:.3e}"
    )]
    InconsistentSpacing { residual: f64, tolerance: f64 },
    #[error("model output {price} at t = {t} is not a positive price")]
    NonPositiveModel { t: f64, price: f64 },
    #[error("short window is not a suffix of the long window")]
    NotSuffix,

    #[error("generated price {price} at t = {t} is not positive")]
    NonPositiveGenerated { t: f64, price: f64 },
    #[error("invalid synthesis configuration: {0}")]
    InvalidSynthConfig(String),
}

impl Error {
    /// True for errors caused by a malformed request rather than by the data
    /// or the numerics. Front ends map these to a usage failure.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidParams(_)
                | Error::InvalidWindow { .. }
                | Error::InvalidConfig(_)
                | Error::NotSuffix
                | Error::InvalidSynthConfig(_)
                | Error::InvalidDate { .. }
        )
    }
}
