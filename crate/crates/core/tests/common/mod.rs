#![allow(dead_code)]

use lppl_core::{
    generate, FitConfig, ModelParams, PriceSeries, Side, SuperBubbleOverlay, SynthConfig,
};

pub const DAY: f64 = 1.0 / 365.0;

/// Long-term bubble: critical time 2010.75, alpha 0.6, lambda 2, oscillation
/// amplitude 10% of the envelope amplitude.
pub fn long_bubble() -> ModelParams {
    let (b, phi) = (5.0, 1.0f64);
    ModelParams {
        t_crit: 2010.75,
        alpha: 0.6,
        lambda: 2.0,
        p_crit: 250.0,
        a_env: -50.0,
        c_cos: b * phi.cos(),
        d_sin: b * phi.sin(),
        side: Side::PreCritical,
    }
}

/// Daily samples 1999.5 to 2008.4 of [`long_bubble`].
pub fn recovery_config(noise: f64, seed: u64) -> SynthConfig {
    SynthConfig {
        base: long_bubble(),
        superbubble: None,
        noise_sigma_rel: noise,
        seed,
        t_from: 1999.5,
        t_to: 2008.4,
        step: DAY,
    }
}

pub const SB_LONG_TC: f64 = 2010.7;
pub const SB_SHORT_TC: f64 = 2008.53;
pub const SB_RAMP_START: f64 = 2007.5;
pub const SB_DATA_END: f64 = 2008.45;
pub const SB_SHORT_START: f64 = 2007.6;

/// Long bubble ending 2010.7 with a local bubble ending 2008.53 switched on
/// from 2007.5. `height` is the overlay's rise from ramp start to its
/// critical time; the overlay oscillation amplitude equals its envelope
/// amplitude.
pub fn superbubble_config(height: f64, noise: f64, seed: u64) -> SynthConfig {
    let (b, phi) = (10.0, 1.0f64);
    let long = ModelParams {
        t_crit: SB_LONG_TC,
        c_cos: b * phi.cos(),
        d_sin: b * phi.sin(),
        ..long_bubble()
    };
    let alpha_s = 0.5;
    let a_s = -height / (SB_SHORT_TC - SB_RAMP_START).powf(alpha_s);
    let psi = 2.0f64;
    let short = ModelParams {
        t_crit: SB_SHORT_TC,
        alpha: alpha_s,
        lambda: 2.0,
        p_crit: height,
        a_env: a_s,
        c_cos: a_s.abs() * psi.cos(),
        d_sin: a_s.abs() * psi.sin(),
        side: Side::PreCritical,
    };
    SynthConfig {
        base: long,
        superbubble: Some(SuperBubbleOverlay {
            params: short,
            ramp_start: SB_RAMP_START,
        }),
        noise_sigma_rel: noise,
        seed,
        t_from: 1999.5,
        t_to: SB_DATA_END,
        step: DAY,
    }
}

/// Long config over the whole series and a short config over its final
/// stretch, both searching the same critical-time range.
pub fn superbubble_fit_configs(series: &PriceSeries) -> (FitConfig, FitConfig) {
    let long = FitConfig::pre_critical(series.first_t(), series.last_t());
    let mut short = FitConfig::pre_critical(SB_SHORT_START, series.last_t())
        .with_window(SB_SHORT_START, series.last_t());
    short.tc_grid = long.tc_grid;
    (long, short)
}

pub fn series(cfg: &SynthConfig) -> PriceSeries {
    generate(cfg).expect("synthetic config is valid")
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
