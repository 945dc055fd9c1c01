//! Log-periodic power-law (LPPL) modelling of speculative price dynamics.
//!
//! The crate fits
//!
//! ```text
//! p(t) = p_crit + x^alpha * (a_env + c_cos * cos(omega ln x) + d_sin * sin(omega ln x))
//! x    = |t - t_crit|,   omega = 2 pi / ln(lambda)
//! ```
//!
//! to daily price series, with the preferred scaling factor `lambda` fixed
//! (default 2) or scanned on a small grid. The four coefficients that enter
//! linearly are profiled out by a QR least-squares solve; `(t_crit, alpha)` is
//! searched on a grid that is then shrunk around the incumbent.
//!
//! Modules:
//! - [`model`]: parameter types and pure evaluation.
//! - [`ingest`]: `date,price` CSV parsing and the fractional-year time axis.
//! - [`fit`]: profiled least squares and the grid/refinement search.
//! - [`forecast`]: oscillation extrema, critical time from extrema,
//!   extrapolation and two-tier super-bubble detection.
//! - [`synth`]: seeded synthetic series, the oracle behind the recovery tests.
//!
//! With the default `parallel` feature the grid search runs on rayon; without
//! it every [`Execution`] mode runs sequentially. Results are bit-identical
//! either way.

// `!(x > 0.0)` is used on purpose: it rejects NaN along with the rest.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fit;
pub mod forecast;
pub mod ingest;
mod lstsq;
pub mod model;
mod par;
pub mod synth;

pub use error::{Error, Result};
pub use fit::{
    fit_lppl, fit_lppl_with, residuals, solve_linear, FitConfig, FitResult, GridSpec, LambdaMode,
    LinearSolution, TracePoint, Window,
};
pub use forecast::{
    detect_superbubble, detect_superbubble_with, estimate_tc_from_extrema, extrapolate,
    extrema_times, ExtremaKind, ExtremaSequence, SuperBubbleReport, SuperBubbleThresholds,
};
pub use ingest::{
    date_to_fractional_year, fractional_year_to_date, parse_csv, slice_window, PricePoint,
    PriceSeries,
};
pub use model::{
    distance_to_critical, evaluate_model, evaluate_pi, to_amplitude_phase, ModelParams, Side,
};
pub use par::Execution;
pub use synth::{generate, SuperBubbleOverlay, SynthConfig};
