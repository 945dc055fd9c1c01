//! Profiled least-squares fitting.
//!
//! For fixed `(t_crit, alpha, lambda)` the model is linear in
//! `(p_crit, a_env, c_cos, d_sin)` over the basis
//! `{1, x^alpha, x^alpha cos(omega ln x), x^alpha sin(omega ln x)}`, which
//! [`solve_linear`] solves by thin Householder QR. [`fit_lppl`] scans
//! `(t_crit, alpha)` on a regular grid for each `lambda`, then refines the
//! incumbent on a 5x5 local grid whose steps halve every round.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{slice_window, PriceSeries};
use crate::lstsq;
use crate::model::{evaluate_model, omega_for, to_amplitude_phase, ModelParams, Side};
use crate::par::Execution;

/// Basis condition numbers above this are treated as rank deficient.
pub const CONDITION_LIMIT: f64 = 1e10;

/// Bounds every alpha grid must stay within.
pub const ALPHA_BOUNDS: (f64, f64) = (0.05, 1.5);

const DAY: f64 = 1.0 / 365.0;

/// Inclusive regular grid `lo, lo + step, ...` up to `hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl GridSpec {
    pub fn new(lo: f64, hi: f64, step: f64) -> Self {
        Self { lo, hi, step }
    }

    fn validate(&self, what: &str) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.step.is_finite()) {
            return Err(Error::InvalidConfig(format!("{what} grid is not finite")));
        }
        if !(self.step > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "{what} step must be positive"
            )));
        }
        if self.lo > self.hi {
            return Err(Error::InvalidConfig(format!("{what} grid has lo > hi")));
        }
        Ok(())
    }

    /// Grid nodes, computed as `lo + i * step` so that they do not accumulate
    /// rounding error.
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.hi - self.lo) / self.step * (1.0 + 1e-12)).floor() as usize;
        (0..=n).map(|i| self.lo + i as f64 * self.step).collect()
    }

    fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LambdaMode {
    Fixed(f64),
    Grid(Vec<f64>),
}

impl Default for LambdaMode {
    fn default() -> Self {
        LambdaMode::Fixed(2.0)
    }
}

impl LambdaMode {
    pub fn values(&self) -> Vec<f64> {
        match self {
            LambdaMode::Fixed(l) => vec![*l],
            LambdaMode::Grid(ls) => ls.clone(),
        }
    }
}

/// Inclusive data window in fractional years.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub lambda_mode: LambdaMode,
    pub side: Side,
    pub tc_grid: GridSpec,
    pub alpha_grid: GridSpec,
    pub refine_rounds: u32,
    pub fit_log_price: bool,
    pub min_points: usize,
    /// Restricts the fit to a sub-window of the input series.
    pub window: Option<Window>,
}

impl FitConfig {
    /// Defaults for a window ending before the critical time: daily `t_crit`
    /// grid from one day after the last observation out to half the data
    /// span (at least 30 days), alpha in `[0.05, 1.5]` by 0.05.
    pub fn pre_critical(data_start: f64, data_end: f64) -> Self {
        let reach = (0.5 * (data_end - data_start)).max(30.0 * DAY);
        Self {
            side: Side::PreCritical,
            tc_grid: GridSpec::new(data_end + DAY, data_end + reach, DAY),
            ..Self::base()
        }
    }

    /// Mirror of [`FitConfig::pre_critical`] for decay windows.
    pub fn post_critical(data_start: f64, data_end: f64) -> Self {
        let reach = (0.5 * (data_end - data_start)).max(30.0 * DAY);
        Self {
            side: Side::PostCritical,
            tc_grid: GridSpec::new(data_start - reach, data_start - DAY, DAY),
            ..Self::base()
        }
    }

    fn base() -> Self {
        Self {
            lambda_mode: LambdaMode::default(),
            side: Side::PreCritical,
            tc_grid: GridSpec::new(0.0, 0.0, DAY),
            alpha_grid: GridSpec::new(ALPHA_BOUNDS.0, ALPHA_BOUNDS.1, 0.05),
            refine_rounds: 6,
            fit_log_price: false,
            min_points: 8,
            window: None,
        }
    }

    pub fn with_window(mut self, start: f64, end: f64) -> Self {
        self.window = Some(Window { start, end });
        self
    }

    /// Applies the configured window, if any.
    pub fn select(&self, series: &PriceSeries) -> Result<PriceSeries> {
        match self.window {
            Some(w) => slice_window(series, w.start, w.end),
            None => Ok(series.clone()),
        }
    }

    /// Checks the configuration against the (already windowed) data.
    pub fn validate(&self, data: &PriceSeries) -> Result<()> {
        self.tc_grid.validate("t_crit")?;
        self.alpha_grid.validate("alpha")?;
        let (a_lo, a_hi) = ALPHA_BOUNDS;
        if self.alpha_grid.lo < a_lo || self.alpha_grid.hi > a_hi {
            return Err(Error::InvalidConfig(format!(
                "alpha grid must lie within [{a_lo}, {a_hi}]"
            )));
        }
        let lambdas = self.lambda_mode.values();
        if lambdas.is_empty() || lambdas.iter().any(|l| !(*l > 1.0) || !l.is_finite()) {
            return Err(Error::InvalidConfig(
                "every lambda must be finite and > 1".into(),
            ));
        }
        if self.min_points < 8 {
            return Err(Error::InvalidConfig("min_points must be at least 8".into()));
        }
        match self.side {
            Side::PreCritical if self.tc_grid.lo < data.last_t() => {
                Err(Error::InvalidConfig(format!(
                    "pre-critical t_crit grid starts at {} before the last observation {}",
                    self.tc_grid.lo,
                    data.last_t()
                )))
            }
            Side::PostCritical if self.tc_grid.hi > data.first_t() => {
                Err(Error::InvalidConfig(format!(
                    "post-critical t_crit grid ends at {} after the first observation {}",
                    self.tc_grid.hi,
                    data.first_t()
                )))
            }
            _ => Ok(()),
        }
    }
}

/// One evaluated grid node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub t_crit: f64,
    pub alpha: f64,
    pub lambda: f64,
    pub sse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: ModelParams,
    pub rmse: f64,
    pub sse: f64,
    pub n_points: usize,
    /// Every successfully evaluated node, coarse grid first, in grid order.
    pub objective_trace: Vec<TracePoint>,
    /// Oscillation indistinguishable from the envelope or from noise.
    pub degenerate: bool,
}

impl FitResult {
    /// `B / |a_env|` and `B / rmse`; the fit is flagged when either is small.
    pub fn oscillation_ratios(&self) -> (f64, f64) {
        let (b, _) = to_amplitude_phase(&self.params);
        (b / self.params.a_env.abs(), b / self.rmse)
    }
}

fn is_degenerate(b: f64, a_env: f64, rmse: f64) -> bool {
    // written so that a zero denominator reads as "ratio is infinite"
    b < 1e-3 * a_env.abs() || b < rmse || b == 0.0
}

/// Coefficients of the linear subproblem plus its residual sum of squares.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearSolution {
    pub p_crit: f64,
    pub a_env: f64,
    pub c_cos: f64,
    pub d_sin: f64,
    pub sse: f64,
    /// 2-norm condition number of the basis matrix.
    pub condition: f64,
}

/// Per-`(t_crit, lambda)` quantities shared by every alpha.
struct Basis {
    ln_x: Vec<f64>,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl Basis {
    fn new(times: &[f64], t_crit: f64, lambda: f64, side: Side) -> Result<Self> {
        let omega = omega_for(lambda);
        let n = times.len();
        let (mut ln_x, mut cos, mut sin) = (
            Vec::with_capacity(n),
            Vec::with_capacity(n),
            Vec::with_capacity(n),
        );
        for &t in times {
            if !side.admits(t, t_crit) {
                return Err(Error::SideViolation { t, t_crit });
            }
            let l = (t - t_crit).abs().ln();
            let (s, c) = (omega * l).sin_cos();
            ln_x.push(l);
            cos.push(c);
            sin.push(s);
        }
        Ok(Self { ln_x, cos, sin })
    }

    fn solve(&self, target: &[f64], alpha: f64) -> Result<LinearSolution> {
        let envelope: Vec<f64> = self.ln_x.iter().map(|l| (alpha * l).exp()).collect();
        self.solve_envelope(target, &envelope)
    }

    /// Solves every alpha of a regular grid, stepping the envelope
    /// `x^alpha` multiplicatively instead of re-exponentiating.
    fn solve_grid(
        &self,
        target: &[f64],
        alphas: &[f64],
        step: f64,
    ) -> Vec<(f64, Result<LinearSolution>)> {
        let Some(&first) = alphas.first() else {
            return Vec::new();
        };
        let mut envelope: Vec<f64> = self.ln_x.iter().map(|l| (first * l).exp()).collect();
        let ratio: Vec<f64> = self.ln_x.iter().map(|l| (step * l).exp()).collect();
        let mut out = Vec::with_capacity(alphas.len());
        for (k, &alpha) in alphas.iter().enumerate() {
            if k > 0 {
                envelope.iter_mut().zip(&ratio).for_each(|(e, r)| *e *= r);
            }
            out.push((alpha, self.solve_envelope(target, &envelope)));
        }
        out
    }

    fn solve_envelope(&self, target: &[f64], envelope: &[f64]) -> Result<LinearSolution> {
        let n = target.len();
        let mut design = Vec::with_capacity(4 * n);
        design.extend(std::iter::repeat_n(1.0, n));
        design.extend_from_slice(envelope);
        for trig in [&self.cos, &self.sin] {
            design.extend(envelope.iter().zip(trig.iter()).map(|(e, c)| e * c));
        }
        let mut work = target.to_vec();
        let sol = lstsq::solve_in_place(&mut design, &mut work).ok_or(Error::RankDeficient {
            condition: f64::INFINITY,
        })?;
        if !(sol.condition <= CONDITION_LIMIT) {
            return Err(Error::RankDeficient {
                condition: sol.condition,
            });
        }
        let [p_crit, a_env, c_cos, d_sin] = sol.beta;
        Ok(LinearSolution {
            p_crit,
            a_env,
            c_cos,
            d_sin,
            sse: sol.sse,
            condition: sol.condition,
        })
    }
}

fn targets(series: &PriceSeries, fit_log_price: bool) -> Vec<f64> {
    if fit_log_price {
        series.prices().map(f64::ln).collect()
    } else {
        series.prices().collect()
    }
}

/// Least-squares coefficients for fixed `(t_crit, alpha, lambda)`.
pub fn solve_linear(
    series: &PriceSeries,
    t_crit: f64,
    alpha: f64,
    lambda: f64,
    side: Side,
    fit_log_price: bool,
) -> Result<LinearSolution> {
    if series.len() < 4 {
        return Err(Error::InsufficientData {
            have: series.len(),
            need: 4,
        });
    }
    let times: Vec<f64> = series.times().collect();
    Basis::new(&times, t_crit, lambda, side)?.solve(&targets(series, fit_log_price), alpha)
}

/// Pointwise `(t, observed - model)`, in input order. With `fit_log_price`
/// the observation is `ln(price)`.
pub fn residuals(
    series: &PriceSeries,
    params: &ModelParams,
    fit_log_price: bool,
) -> Result<Vec<(f64, f64)>> {
    series
        .points()
        .iter()
        .map(|p| {
            let obs = if fit_log_price { p.price.ln() } else { p.price };
            Ok((p.t, obs - evaluate_model(params, p.t)?))
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    t_crit: f64,
    alpha: f64,
    lambda: f64,
    solution: LinearSolution,
}

impl Candidate {
    fn trace(&self) -> TracePoint {
        TracePoint {
            t_crit: self.t_crit,
            alpha: self.alpha,
            lambda: self.lambda,
            sse: self.solution.sse,
        }
    }
}

/// Total order used to pick the incumbent: smaller sse, then `t_crit`
/// closer to the data, then smaller alpha, then smaller lambda.
fn rank(a: &Candidate, b: &Candidate, side: Side, first: f64, last: f64) -> Ordering {
    let gap = |c: &Candidate| match side {
        Side::PreCritical => c.t_crit - last,
        Side::PostCritical => first - c.t_crit,
    };
    a.solution
        .sse
        .total_cmp(&b.solution.sse)
        .then(gap(a).total_cmp(&gap(b)))
        .then(a.alpha.total_cmp(&b.alpha))
        .then(a.lambda.total_cmp(&b.lambda))
}

/// Fits the model with the default execution mode.
pub fn fit_lppl(series: &PriceSeries, config: &FitConfig) -> Result<FitResult> {
    fit_lppl_with(series, config, Execution::default())
}

pub fn fit_lppl_with(
    series: &PriceSeries,
    config: &FitConfig,
    exec: Execution,
) -> Result<FitResult> {
    let data = config.select(series)?;
    if data.len() < config.min_points.max(4) {
        return Err(Error::InsufficientData {
            have: data.len(),
            need: config.min_points.max(4),
        });
    }
    config.validate(&data)?;

    let times: Vec<f64> = data.times().collect();
    let target = targets(&data, config.fit_log_price);
    let (first, last) = (data.first_t(), data.last_t());
    let side = config.side;
    let better = |a: &Candidate, b: &Candidate| rank(a, b, side, first, last) == Ordering::Less;

    let lambdas = config.lambda_mode.values();
    let alphas = config.alpha_grid.points();
    let columns: Vec<(f64, f64)> = lambdas
        .iter()
        .flat_map(|&l| config.tc_grid.points().into_iter().map(move |tc| (l, tc)))
        .collect();

    let coarse: Vec<Vec<Candidate>> = exec.map(&columns, |&(lambda, t_crit)| {
        let Ok(basis) = Basis::new(&times, t_crit, lambda, side) else {
            return Vec::new();
        };
        basis
            .solve_grid(&target, &alphas, config.alpha_grid.step)
            .into_iter()
            .filter_map(|(alpha, solution)| {
                solution.ok().map(|solution| Candidate {
                    t_crit,
                    alpha,
                    lambda,
                    solution,
                })
            })
            .collect()
    });

    let mut trace = Vec::new();
    let mut best: Option<Candidate> = None;
    for c in coarse.into_iter().flatten() {
        trace.push(c.trace());
        if best.as_ref().is_none_or(|b| better(&c, b)) {
            best = Some(c);
        }
    }
    let mut best = best.ok_or(Error::NoValidGridPoint)?;

    let (mut tc_step, mut alpha_step) = (config.tc_grid.step, config.alpha_grid.step);
    for _ in 0..config.refine_rounds {
        tc_step *= 0.5;
        alpha_step *= 0.5;
        let centre = best;
        let mut nodes = Vec::with_capacity(24);
        for i in -2i32..=2 {
            let t_crit = centre.t_crit + i as f64 * tc_step;
            if !config.tc_grid.contains(t_crit) {
                continue;
            }
            for j in -2i32..=2 {
                let alpha = centre.alpha + j as f64 * alpha_step;
                if (i, j) != (0, 0) && config.alpha_grid.contains(alpha) {
                    nodes.push((t_crit, alpha));
                }
            }
        }
        let lambda = centre.lambda;
        let local: Vec<Option<Candidate>> = exec.map(&nodes, |&(t_crit, alpha)| {
            let solution = Basis::new(&times, t_crit, lambda, side)
                .and_then(|b| b.solve(&target, alpha))
                .ok()?;
            Some(Candidate {
                t_crit,
                alpha,
                lambda,
                solution,
            })
        });
        for c in local.into_iter().flatten() {
            trace.push(c.trace());
            if better(&c, &best) {
                best = c;
            }
        }
    }

    let s = best.solution;
    let params = ModelParams {
        t_crit: best.t_crit,
        alpha: best.alpha,
        lambda: best.lambda,
        p_crit: s.p_crit,
        a_env: s.a_env,
        c_cos: s.c_cos,
        d_sin: s.d_sin,
        side,
    };
    let n_points = data.len();
    let rmse = (s.sse / n_points as f64).sqrt();
    let (b, _) = to_amplitude_phase(&params);
    Ok(FitResult {
        params,
        rmse,
        sse: s.sse,
        n_points,
        objective_trace: trace,
        degenerate: is_degenerate(b, params.a_env, rmse),
    })
}
