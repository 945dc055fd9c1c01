//! Parameter types and pure evaluation of the log-periodic power law.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which side of the critical time a data window lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    /// `t < t_crit`: oscillations accelerate and accumulate at `t_crit`.
    PreCritical,
    /// `t > t_crit`: oscillations decelerate away from `t_crit`.
    PostCritical,
}

impl Side {
    /// Whether `t` lies strictly on this side of `t_crit`.
    pub fn admits(self, t: f64, t_crit: f64) -> bool {
        match self {
            Side::PreCritical => t < t_crit,
            Side::PostCritical => t > t_crit,
        }
    }

    /// Clock time at distance `x` from `t_crit` on this side.
    pub fn time_at(self, t_crit: f64, x: f64) -> f64 {
        match self {
            Side::PreCritical => t_crit - x,
            Side::PostCritical => t_crit + x,
        }
    }
}

/// Full parameter set of the model.
///
/// The oscillation is stored in linearized form `(c_cos, d_sin)`; the
/// amplitude/phase pair `(B, phi)` is recovered with [`to_amplitude_phase`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Critical time, fractional years.
    pub t_crit: f64,
    /// Power-law exponent of the envelope.
    pub alpha: f64,
    /// Preferred scaling factor, `> 1`.
    pub lambda: f64,
    /// Baseline level at the critical time.
    pub p_crit: f64,
    /// Envelope amplitude `A`.
    pub a_env: f64,
    pub c_cos: f64,
    pub d_sin: f64,
    pub side: Side,
}

impl ModelParams {
    /// Angular log-frequency `2 pi / ln(lambda)`.
    pub fn omega(&self) -> f64 {
        omega_for(self.lambda)
    }

    /// Oscillation amplitude `B`.
    pub fn amplitude(&self) -> f64 {
        self.c_cos.hypot(self.d_sin)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.t_crit,
            self.alpha,
            self.lambda,
            self.p_crit,
            self.a_env,
            self.c_cos,
            self.d_sin,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParams("non-finite field".into()));
        }
        if self.lambda <= 1.0 {
            return Err(Error::InvalidParams(format!(
                "lambda must exceed 1, got {}",
                self.lambda
            )));
        }
        Ok(())
    }

    /// The oscillatory factor `c_cos cos(omega ln x) + d_sin sin(omega ln x)`.
    pub fn oscillation(&self, x: f64) -> f64 {
        let (s, c) = (self.omega() * x.ln()).sin_cos();
        self.c_cos * c + self.d_sin * s
    }
}

pub(crate) fn omega_for(lambda: f64) -> f64 {
    TAU / lambda.ln()
}

/// Distance `x = |t - t_crit|` to the critical time.
pub fn distance_to_critical(t: f64, t_crit: f64) -> f64 {
    (t - t_crit).abs()
}

/// The periodic factor `A + B cos(2 pi y - phi)` as a function of the
/// log-scale coordinate `y = ln(x) / ln(lambda)`. Period 1 in `y`.
///
/// `(B, phi)` follow [`to_amplitude_phase`], so that
/// `evaluate_pi(ln(x)/ln(lambda))` equals the bracket of [`evaluate_model`].
pub fn evaluate_pi(y: f64, params: &ModelParams) -> f64 {
    let (b, phi) = to_amplitude_phase(params);
    params.a_env + b * (TAU * y - phi).cos()
}

/// Evaluates the model at clock time `t`.
pub fn evaluate_model(params: &ModelParams, t: f64) -> Result<f64> {
    let x = distance_to_critical(t, params.t_crit);
    if x == 0.0 {
        return if params.alpha > 0.0 {
            Ok(params.p_crit)
        } else {
            Err(Error::SingularAtCritical {
                alpha: params.alpha,
            })
        };
    }
    let envelope = x.powf(params.alpha);
    Ok(params.p_crit + envelope * (params.a_env + params.oscillation(x)))
}

/// Converts `(c_cos, d_sin)` to `(B, phi)` with `phi` in `[0, 2 pi)` such that
/// `c_cos cos(theta) + d_sin sin(theta) = B cos(theta - phi)`.
pub fn to_amplitude_phase(params: &ModelParams) -> (f64, f64) {
    let b = params.amplitude();
    if b == 0.0 {
        return (0.0, 0.0);
    }
    let mut phi = params.d_sin.atan2(params.c_cos);
    if phi < 0.0 {
        phi += TAU;
    }
    // atan2 of a tiny negative angle can round up to exactly 2 pi
    if phi >= TAU {
        phi -= TAU;
    }
    debug_assert!((0.0..TAU).contains(&phi) || phi.is_nan());
    (b, phi)
}

/// Inverse of [`to_amplitude_phase`].
pub fn from_amplitude_phase(b: f64, phi: f64) -> (f64, f64) {
    let (s, c) = phi.sin_cos();
    (b * c, b * s)
}
