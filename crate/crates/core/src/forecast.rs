//! Forward-looking structure derived from fitted parameters.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_lppl_with, FitConfig, FitResult, GridSpec, LambdaMode};
use crate::ingest::{PricePoint, PriceSeries};
use crate::model::{evaluate_model, to_amplitude_phase, ModelParams, Side};
use crate::par::Execution;

/// Extrema closer than one day to the critical time are not enumerated.
pub const MIN_EXTREMA_DISTANCE: f64 = 1.0 / 365.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExtremaKind {
    Maxima,
    Minima,
}

/// Same-kind turning points of the oscillation, in increasing time order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremaSequence {
    pub kind: ExtremaKind,
    pub times: Vec<f64>,
    pub t_crit: f64,
    pub lambda: f64,
}

impl ExtremaSequence {
    pub fn distances(&self) -> Vec<f64> {
        self.times.iter().map(|t| (t - self.t_crit).abs()).collect()
    }

    pub fn side(&self) -> Side {
        match self.times.first() {
            Some(&t) if t > self.t_crit => Side::PostCritical,
            _ => Side::PreCritical,
        }
    }
}

/// Times in `[t_from, t_to]` where the oscillation phase `omega ln x - phi`
/// is a multiple of `pi`: even multiples are maxima of the cosine factor,
/// odd multiples minima. The range must lie on one side of `t_crit`.
pub fn extrema_times(
    params: &ModelParams,
    t_from: f64,
    t_to: f64,
) -> Result<(ExtremaSequence, ExtremaSequence)> {
    params.validate()?;
    let (b, phi) = to_amplitude_phase(params);
    if b == 0.0 {
        return Err(Error::ZeroOscillation);
    }
    let tc = params.t_crit;
    let crosses = || Error::RangeCrossesCritical {
        from: t_from,
        to: t_to,
        t_crit: tc,
    };
    if !(t_from <= t_to) {
        return Err(crosses());
    }
    let side = if t_to <= tc {
        Side::PreCritical
    } else if t_from >= tc {
        Side::PostCritical
    } else {
        return Err(crosses());
    };
    let (near, far) = match side {
        Side::PreCritical => (tc - t_to, tc - t_from),
        Side::PostCritical => (t_from - tc, t_to - tc),
    };
    let x_lo = near.max(MIN_EXTREMA_DISTANCE);
    let x_hi = far;

    let omega = params.omega();
    let mut maxima = Vec::new();
    let mut minima = Vec::new();
    if x_lo <= x_hi {
        let slack = 1e-12;
        let k_lo = ((omega * x_lo.ln() - phi) / PI).floor() as i64 - 1;
        let k_hi = ((omega * x_hi.ln() - phi) / PI).ceil() as i64 + 1;
        for k in k_lo..=k_hi {
            let x = ((k as f64 * PI + phi) / omega).exp();
            if x < x_lo * (1.0 - slack) || x > x_hi * (1.0 + slack) {
                continue;
            }
            let t = side.time_at(tc, x);
            if k.rem_euclid(2) == 0 {
                maxima.push(t);
            } else {
                minima.push(t);
            }
        }
    }
    for v in [&mut maxima, &mut minima] {
        v.sort_by(f64::total_cmp);
    }
    let seq = |kind, times| ExtremaSequence {
        kind,
        times,
        t_crit: tc,
        lambda: params.lambda,
    };
    Ok((
        seq(ExtremaKind::Maxima, maxima),
        seq(ExtremaKind::Minima, minima),
    ))
}

/// Critical time implied by consecutive same-kind extrema.
///
/// Each consecutive pair gives `t_crit` in closed form (pre-critical:
/// `(lambda t_{n+1} - t_n) / (lambda - 1)`). The estimate is the
/// least-squares value over pairs, i.e. their mean, and the consistency
/// residual is the rms deviation of the pairwise values from it. With a
/// `tolerance`, a larger residual is an error.
pub fn estimate_tc_from_extrema(
    times: &[f64],
    lambda: f64,
    side: Side,
    tolerance: Option<f64>,
) -> Result<(f64, f64)> {
    if !(lambda > 1.0) || !lambda.is_finite() {
        return Err(Error::InvalidParams(format!(
            "lambda must exceed 1, got {lambda}"
        )));
    }
    if times.len() < 2 || times.iter().any(|t| !t.is_finite()) {
        return Err(Error::NotMonotone);
    }
    let mut ts = times.to_vec();
    if ts.windows(2).all(|w| w[0] > w[1]) {
        ts.reverse();
    }
    if !ts.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::NotMonotone);
    }
    let implied: Vec<f64> = ts
        .windows(2)
        .map(|w| match side {
            Side::PreCritical => (lambda * w[1] - w[0]) / (lambda - 1.0),
            Side::PostCritical => (lambda * w[0] - w[1]) / (lambda - 1.0),
        })
        .collect();
    let n = implied.len() as f64;
    let t_crit = implied.iter().sum::<f64>() / n;
    let residual = (implied.iter().map(|v| (v - t_crit).powi(2)).sum::<f64>() / n).sqrt();
    if let Some(tol) = tolerance {
        if residual > tol {
            return Err(Error::InconsistentSpacing {
                residual,
                tolerance: tol,
            });
        }
    }
    Ok((t_crit, residual))
}

/// Samples the model on `t_from, t_from + step, ...` up to `t_to`.
pub fn extrapolate(params: &ModelParams, t_from: f64, t_to: f64, step: f64) -> Result<PriceSeries> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::InvalidConfig(
            "extrapolation step must be positive".into(),
        ));
    }
    if !(t_from <= t_to) {
        return Err(Error::InvalidWindow {
            start: t_from,
            end: t_to,
        });
    }
    let n = ((t_to - t_from) / step * (1.0 + 1e-12)).floor() as usize;
    let points = (0..=n)
        .map(|i| {
            let t = t_from + i as f64 * step;
            let price = evaluate_model(params, t)?;
            if !(price > 0.0) {
                return Err(Error::NonPositiveModel { t, price });
            }
            Ok(PricePoint { t, price })
        })
        .collect::<Result<Vec<_>>>()?;
    PriceSeries::new(points, "model extrapolation")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuperBubbleThresholds {
    /// Minimum lead of the long-window critical time over the short one.
    pub min_gap_years: f64,
    /// Maximum short-window rmse relative to its mean price.
    pub max_rel_rmse: f64,
    /// Minimum ratio of the short-window sse with `t_crit` pinned to the
    /// long-window value over the free short-window sse.
    pub min_sse_ratio: f64,
}

impl Default for SuperBubbleThresholds {
    fn default() -> Self {
        Self {
            min_gap_years: 0.5,
            max_rel_rmse: 0.05,
            min_sse_ratio: 1.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperBubbleReport {
    pub long_fit: FitResult,
    pub short_fit: FitResult,
    pub is_superbubble: bool,
    /// `t_crit(long) - t_crit(short)`.
    pub gap_years: f64,
    pub short_rel_rmse: f64,
    /// Short-window sse with `t_crit` pinned to the long fit, over the free
    /// short-window sse. Near 1 when the short window is just a piece of the
    /// long bubble.
    pub sse_ratio: f64,
    pub thresholds: SuperBubbleThresholds,
}

pub fn detect_superbubble(
    series: &PriceSeries,
    long_config: &FitConfig,
    short_config: &FitConfig,
    thresholds: SuperBubbleThresholds,
) -> Result<SuperBubbleReport> {
    detect_superbubble_with(
        series,
        long_config,
        short_config,
        thresholds,
        Execution::default(),
    )
}

/// Fits a long window and a suffix of it. A super-bubble is reported when
/// all of the following hold:
/// - the short window's critical time precedes the long one by at least
///   `min_gap_years`;
/// - neither fit is degenerate;
/// - the short fit's relative rmse is at most `max_rel_rmse`;
/// - the short window rejects the long critical time: refitting it with
///   `t_crit` pinned to the long value raises its sse by `min_sse_ratio`.
///
/// Without the last check a short window cut from a single bubble, whose
/// critical time it cannot resolve, is routinely flagged under noise.
pub fn detect_superbubble_with(
    series: &PriceSeries,
    long_config: &FitConfig,
    short_config: &FitConfig,
    thresholds: SuperBubbleThresholds,
    exec: Execution,
) -> Result<SuperBubbleReport> {
    if long_config.side != Side::PreCritical || short_config.side != Side::PreCritical {
        return Err(Error::InvalidConfig(
            "super-bubble detection needs pre-critical configs".into(),
        ));
    }
    let long_data = long_config.select(series)?;
    let short_data = short_config.select(series)?;
    if short_data.last_t() != long_data.last_t() || short_data.first_t() <= long_data.first_t() {
        return Err(Error::NotSuffix);
    }

    let (long_fit, short_fit) = exec.join(
        || fit_lppl_with(series, long_config, exec),
        || fit_lppl_with(series, short_config, exec),
    );
    let (long_fit, short_fit) = (long_fit?, short_fit?);

    let gap_years = long_fit.params.t_crit - short_fit.params.t_crit;
    let short_rel_rmse = if short_config.fit_log_price {
        short_fit.rmse
    } else {
        short_fit.rmse / short_data.mean_price()
    };

    let long_tc = long_fit.params.t_crit;
    let pinned_config = FitConfig {
        tc_grid: GridSpec::new(long_tc, long_tc, short_config.tc_grid.step),
        lambda_mode: LambdaMode::Fixed(long_fit.params.lambda),
        ..short_config.clone()
    };
    let sse_ratio = match fit_lppl_with(series, &pinned_config, exec) {
        Ok(pinned) if short_fit.sse > 0.0 => pinned.sse / short_fit.sse,
        Ok(pinned) if pinned.sse == 0.0 => 1.0,
        _ => f64::INFINITY,
    };

    let is_superbubble = gap_years >= thresholds.min_gap_years
        && !long_fit.degenerate
        && !short_fit.degenerate
        && short_rel_rmse <= thresholds.max_rel_rmse
        && sse_ratio >= thresholds.min_sse_ratio;
    Ok(SuperBubbleReport {
        long_fit,
        short_fit,
        is_superbubble,
        gap_years,
        short_rel_rmse,
        sse_ratio,
        thresholds,
    })
}
