//! Phase-locked loop reference estimators.
//!
//! A synchronous-reference-frame PLL for three-phase (alpha/beta) input
//! and a transport-delay quadrature PLL for single-phase input. Both
//! rotate the measured voltage into an estimated dq frame, drive the
//! q-axis component to zero through a PI controller (v_d > 0 alignment)
//! and integrate the resulting frequency forward-Euler at the sample
//! rate. Output is causal: the estimate at sample k depends only on
//! samples up to k.

use crate::error::{Error, Result};
use crate::geometry::{EstimatorId, FrequencyTrace};
use crate::waveforms::SignalBuffer;
use std::f64::consts::PI;

/// PI gains, initial frequency and (for the single-phase PLL) the
/// transport delay. Gains are in rad/s per per-unit volt, so input
/// buffers are expected normalized to per-unit.
#[derive(Debug, Clone, PartialEq)]
pub struct PllConfig {
    pub kp: f64,
    pub ki: f64,
    /// Initial frequency estimate; `None` starts at the nominal frequency.
    pub omega_init: Option<f64>,
    /// Transport delay in seconds (single-phase quadrature only).
    pub tau: f64,
}

impl Default for PllConfig {
    /// Roughly 20 Hz loop bandwidth with damping ~0.7 on a 50 Hz base,
    /// quarter-period delay.
    fn default() -> Self {
        PllConfig { kp: 92.0, ki: 4230.0, omega_init: None, tau: 0.005 }
    }
}

impl PllConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.kp > 0.0) || !(self.ki > 0.0) {
            return Err(Error::validation("PLL gains kp, ki must be positive"));
        }
        if self.tau < 0.0 {
            return Err(Error::validation("PLL transport delay must be non-negative"));
        }
        Ok(())
    }
}

/// Instantaneous loop state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PllState {
    /// Estimated phase, wrapped to [0, 2*pi).
    pub theta_hat: f64,
    /// Estimated angular frequency, rad/s.
    pub omega_hat: f64,
    /// PI integrator value, rad/s.
    pub integrator: f64,
}

/// Streaming SRF-PLL core.
#[derive(Debug, Clone)]
pub struct SrfPll {
    kp: f64,
    ki: f64,
    omega_nominal: f64,
    dt: f64,
    state: PllState,
}

impl SrfPll {
    pub fn new(omega_nominal: f64, dt: f64, cfg: &PllConfig) -> Result<Self> {
        cfg.validate()?;
        if !(omega_nominal > 0.0) || !(dt > 0.0) {
            return Err(Error::validation("omega_nominal and dt must be positive"));
        }
        let omega_init = cfg.omega_init.unwrap_or(omega_nominal);
        Ok(SrfPll {
            kp: cfg.kp,
            ki: cfg.ki,
            omega_nominal,
            dt,
            state: PllState {
                theta_hat: 0.0,
                omega_hat: omega_init,
                // With zero error signal the loop holds omega_init.
                integrator: omega_init - omega_nominal,
            },
        })
    }

    /// Preset the phase estimate (e.g. from the first sample's angle).
    pub fn preset_phase(&mut self, theta: f64) {
        self.state.theta_hat = theta.rem_euclid(2.0 * PI);
    }

    pub fn state(&self) -> PllState {
        self.state
    }

    /// Advance one sample: Park-rotate (v_alpha, v_beta) by -theta_hat,
    /// drive v_q to zero through the PI, integrate the phase. Returns the
    /// updated frequency estimate in rad/s.
    pub fn step(&mut self, v_alpha: f64, v_beta: f64) -> f64 {
        let (sin_t, cos_t) = self.state.theta_hat.sin_cos();
        let v_q = -sin_t * v_alpha + cos_t * v_beta;
        self.state.integrator += self.ki * v_q * self.dt;
        self.state.omega_hat = self.omega_nominal + self.kp * v_q + self.state.integrator;
        self.state.theta_hat =
            (self.state.theta_hat + self.state.omega_hat * self.dt).rem_euclid(2.0 * PI);
        self.state.omega_hat
    }

    /// Advance one sample with zero error signal (coasting).
    fn coast(&mut self) -> f64 {
        self.state.omega_hat = self.omega_nominal + self.state.integrator;
        self.state.theta_hat =
            (self.state.theta_hat + self.state.omega_hat * self.dt).rem_euclid(2.0 * PI);
        self.state.omega_hat
    }
}

/// Run the SRF-PLL over a two-channel alpha/beta buffer (per-unit).
///
/// The phase estimate is preset from the first sample's angle, so a
/// stationary input starts essentially locked.
pub fn srf_pll_run(
    alpha_beta: &SignalBuffer,
    omega_nominal: f64,
    cfg: &PllConfig,
) -> Result<FrequencyTrace> {
    if alpha_beta.channels.len() != 2 {
        return Err(Error::validation(format!(
            "SRF-PLL needs exactly 2 channels, got {}",
            alpha_beta.channels.len()
        )));
    }
    let a = &alpha_beta.channels[0].samples;
    let b = &alpha_beta.channels[1].samples;
    let mut pll = SrfPll::new(omega_nominal, alpha_beta.dt, cfg)?;
    if a[0] != 0.0 || b[0] != 0.0 {
        pll.preset_phase(b[0].atan2(a[0]));
    }
    let omega_pu: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(&va, &vb)| pll.step(va, vb) / omega_nominal)
        .collect();
    let n = omega_pu.len();
    Ok(FrequencyTrace {
        t0: alpha_beta.t0,
        dt: alpha_beta.dt,
        omega_pu,
        valid: vec![true; n],
        estimator: EstimatorId::SrfPll,
    })
}

/// Run the transport-delay quadrature PLL over a single-channel buffer
/// (per-unit): the quadrature signal is the input delayed by `cfg.tau`
/// (nearest sample), then the SRF machinery applies. Samples before one
/// full delay are flagged invalid.
///
/// A delay that rounds to zero samples makes the quadrature identical to
/// the in-phase signal; the run proceeds but every sample is flagged
/// invalid.
pub fn delay_pll_run(
    v: &SignalBuffer,
    omega_nominal: f64,
    cfg: &PllConfig,
) -> Result<FrequencyTrace> {
    if v.channels.len() != 1 {
        return Err(Error::validation(format!(
            "delay PLL needs exactly 1 channel, got {}",
            v.channels.len()
        )));
    }
    let x = &v.channels[0].samples;
    let n = x.len();
    let duration = (n - 1) as f64 * v.dt;
    if cfg.tau > duration {
        return Err(Error::validation(format!(
            "transport delay {} s exceeds buffer duration {} s",
            cfg.tau, duration
        )));
    }
    let delay = (cfg.tau / v.dt).round() as usize;
    let mut pll = SrfPll::new(omega_nominal, v.dt, cfg)?;
    let mut omega_pu = Vec::with_capacity(n);
    let mut valid = Vec::with_capacity(n);
    let mut preset = false;
    for k in 0..n {
        if k < delay {
            omega_pu.push(pll.coast() / omega_nominal);
            valid.push(false);
            continue;
        }
        if !preset {
            if x[k] != 0.0 || x[k - delay] != 0.0 {
                pll.preset_phase(x[k - delay].atan2(x[k]));
            }
            preset = true;
        }
        omega_pu.push(pll.step(x[k], x[k - delay]) / omega_nominal);
        valid.push(delay > 0);
    }
    Ok(FrequencyTrace {
        t0: v.t0,
        dt: v.dt,
        omega_pu,
        valid,
        estimator: EstimatorId::DelayPll,
    })
}
