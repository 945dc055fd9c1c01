//! Flag definitions.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lppl_core::ingest::parse_iso_date;

/// Parses an ISO date (`2008-07-11`) or a fractional year (`2008.53`).
pub fn parse_time(s: &str) -> Result<f64, String> {
    if let Some(t) = parse_iso_date(s) {
        return Ok(t);
    }
    match s.parse::<f64>() {
        Ok(t) if t.is_finite() => Ok(t),
        _ => Err(format!(
            "`{s}` is neither an ISO date nor a fractional year"
        )),
    }
}

fn parse_lambdas(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}")))
        .collect()
}

#[derive(Debug, Parser)]
#[command(
    name = "lppl",
    version,
    about = "Log-periodic power-law bubble fitting"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the model to a price series.
    Fit(FitArgs),
    /// Tabulate oscillation extrema of a fitted or given model.
    Extrema(ExtremaArgs),
    /// Compare a long window with its final stretch.
    Superbubble(SuperBubbleArgs),
    /// Generate a synthetic price series.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SideArg {
    Pre,
    Post,
}

/// Search-grid flags. Unset bounds default to the data window.
#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Preferred scaling ratio; a comma-separated list searches over it.
    #[arg(long, value_parser = parse_lambdas, default_value = "2")]
    pub lambda: ::std::vec::Vec<f64>,
    #[arg(long, value_parser = parse_time, allow_negative_numbers = true)]
    pub tc_min: Option<f64>,
    #[arg(long, value_parser = parse_time, allow_negative_numbers = true)]
    pub tc_max: Option<f64>,
    /// Critical-time grid step in years.
    #[arg(long, allow_negative_numbers = true)]
    pub tc_step: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha_max: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha_step: Option<f64>,
    #[arg(long)]
    pub refine_rounds: Option<u32>,
    #[arg(long)]
    pub min_points: Option<usize>,
    /// Fit log prices instead of prices.
    #[arg(long)]
    pub log_price: bool,
    /// Run the grid on a single thread.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// CSV with header `date,price`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_parser = parse_time, allow_negative_numbers = true)]
    pub window_start: Option<f64>,
    #[arg(long, value_parser = parse_time, allow_negative_numbers = true)]
    pub window_end: Option<f64>,
    #[arg(long, value_enum, default_value = "pre")]
    pub side: SideArg,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Output directory for report.json, curve.csv, trace.csv and manifest.json.
    #[arg(long, default_value = "lppl-fit")]
    pub out: PathBuf,
}

/// Model parameters given on the command line.
#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, value_parser = parse_time, allow_negative_numbers = true)]
    pub t_crit: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub p_crit: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub a_env: Option<f64>,
    /// Oscillation amplitude B.
    #[arg(long, allow_negative_numbers = true)]
    pub amplitude: Option<f64>,
    /// Oscillation phase phi in radians.
    #[arg(long, allow_negative_numbers = true)]
    pub phase: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct ExtremaArgs {
    /// Take the model from a fit report instead of flags.
    #[arg(long, conflicts_with_all = ["t_crit", "amplitude", "phase"])]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_parser = parse_time, allow_negative_numbers = true)]
    pub from: f64,
    #[arg(long, value_parser = parse_time, allow_negative_numbers = true)]
    pub to: f64,
    /// CSV output path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SuperBubbleArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Start of the long window; defaults to the first observation.
    #[arg(long, value_parser = parse_time, allow_negative_numbers = true)]
    pub long_start: Option<f64>,
    #[arg(long, value_parser = parse_time, allow_negative_numbers = true)]
    pub short_start: f64,
    /// Common end of both windows; defaults to the last observation.
    #[arg(long, value_parser = parse_time, allow_negative_numbers = true)]
    pub window_end: Option<f64>,
    /// Overrides `--window-end` for the long window.
    #[arg(long, value_parser = parse_time, allow_negative_numbers = true)]
    pub long_end: Option<f64>,
    /// Overrides `--window-end` for the short window.
    #[arg(long, value_parser = parse_time, allow_negative_numbers = true)]
    pub short_end: Option<f64>,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub min_gap: f64,
    #[arg(long, default_value_t = 0.05, allow_negative_numbers = true)]
    pub max_rel_rmse: f64,
    #[arg(long, default_value_t = 1.25, allow_negative_numbers = true)]
    pub min_sse_ratio: f64,
    #[command(flatten)]
    pub grid: GridArgs,
    /// JSON output path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, value_parser = parse_time, default_value = "2010.75", allow_negative_numbers = true)]
    pub t_crit: f64,
    #[arg(long, default_value_t = 0.6, allow_negative_numbers = true)]
    pub alpha: f64,
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    pub lambda: f64,
    #[arg(long, default_value_t = 250.0, allow_negative_numbers = true)]
    pub p_crit: f64,
    #[arg(long, default_value_t = -50.0, allow_negative_numbers = true)]
    pub a_env: f64,
    #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
    pub amplitude: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub phase: f64,
    #[arg(long, value_enum, default_value = "pre")]
    pub side: SideArg,
    /// Noise standard deviation relative to the mean clean price.
    #[arg(long, default_value_t = 0.01, allow_negative_numbers = true)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_parser = parse_time, default_value = "1999.5", allow_negative_numbers = true)]
    pub from: f64,
    #[arg(long, value_parser = parse_time, default_value = "2008.4", allow_negative_numbers = true)]
    pub to: f64,
    /// Sampling step in days.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub step_days: f64,
    #[command(flatten)]
    pub overlay: OverlayArgs,
    /// CSV output path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Optional second bubble switched on at `--overlay-ramp-start`.
#[derive(Debug, Clone, Args)]
pub struct OverlayArgs {
    #[arg(long, value_parser = parse_time, requires = "overlay_ramp_start")]
    pub overlay_t_crit: Option<f64>,
    #[arg(long, value_parser = parse_time, requires = "overlay_t_crit")]
    pub overlay_ramp_start: Option<f64>,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub overlay_alpha: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub overlay_p_crit: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub overlay_a_env: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub overlay_amplitude: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub overlay_phase: f64,
}
