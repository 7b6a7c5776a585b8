//! Second-order Butterworth low-pass filtering.
//!
//! One biquad, designed by bilinear transform with frequency pre-warping,
//! applied either causally or forward-backward (zero phase). Used to
//! pre-filter measured voltages before differentiation and to smooth
//! estimated frequency traces.

use crate::error::{Error, Result};

/// Normalized biquad recurrence coefficients
/// `y[n] = b0 x[n] + b1 x[n-1] + b2 x[n-2] - a1 y[n-1] - a2 y[n-2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiquadCoeffs {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
    pub cutoff_hz: f64,
    pub sample_rate: f64,
}

impl BiquadCoeffs {
    /// DC gain `(b0 + b1 + b2) / (1 + a1 + a2)`; unity for the low-pass
    /// designs produced here.
    pub fn dc_gain(&self) -> f64 {
        (self.b0 + self.b1 + self.b2) / (1.0 + self.a1 + self.a2)
    }

    /// Magnitude response at `freq_hz`.
    pub fn magnitude_at(&self, freq_hz: f64) -> f64 {
        let w = 2.0 * std::f64::consts::PI * freq_hz / self.sample_rate;
        let (c1, s1) = (w.cos(), w.sin());
        let (c2, s2) = ((2.0 * w).cos(), (2.0 * w).sin());
        let num_re = self.b0 + self.b1 * c1 + self.b2 * c2;
        let num_im = -(self.b1 * s1 + self.b2 * s2);
        let den_re = 1.0 + self.a1 * c1 + self.a2 * c2;
        let den_im = -(self.a1 * s1 + self.a2 * s2);
        (num_re.hypot(num_im)) / (den_re.hypot(den_im))
    }

    /// Moduli of the two poles (roots of `z^2 + a1 z + a2`); both must be
    /// inside the unit circle for stability.
    pub fn pole_moduli(&self) -> [f64; 2] {
        let disc = self.a1 * self.a1 - 4.0 * self.a2;
        if disc >= 0.0 {
            let root = disc.sqrt();
            [
                ((-self.a1 + root) / 2.0).abs(),
                ((-self.a1 - root) / 2.0).abs(),
            ]
        } else {
            // Complex-conjugate pair: modulus is sqrt(a2).
            let m = self.a2.sqrt();
            [m, m]
        }
    }

    pub fn is_stable(&self) -> bool {
        self.pole_moduli().iter().all(|m| *m < 1.0)
    }
}

/// Design a second-order Butterworth low-pass biquad by bilinear transform
/// with frequency pre-warping (the digital response hits -3.01 dB exactly
/// at `cutoff_hz`).
pub fn design_butterworth2(cutoff_hz: f64, sample_rate: f64) -> Result<BiquadCoeffs> {
    if !(sample_rate > 0.0) {
        return Err(Error::validation("sample_rate must be positive"));
    }
    if !(cutoff_hz > 0.0) || cutoff_hz >= sample_rate / 2.0 {
        return Err(Error::validation(format!(
            "cutoff {cutoff_hz} Hz must lie strictly between 0 and Nyquist ({} Hz)",
            sample_rate / 2.0
        )));
    }
    let w0 = 2.0 * std::f64::consts::PI * cutoff_hz / sample_rate;
    let cos_w0 = w0.cos();
    // Q = 1/sqrt(2) is the Butterworth prototype.
    let q = std::f64::consts::FRAC_1_SQRT_2;
    let alpha = w0.sin() / (2.0 * q);
    let a0 = 1.0 + alpha;
    Ok(BiquadCoeffs {
        b0: (1.0 - cos_w0) / 2.0 / a0,
        b1: (1.0 - cos_w0) / a0,
        b2: (1.0 - cos_w0) / 2.0 / a0,
        a1: -2.0 * cos_w0 / a0,
        a2: (1.0 - alpha) / a0,
        cutoff_hz,
        sample_rate,
    })
}

/// How [`filter_apply`] traverses the sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterMode {
    /// Single forward pass; output lags the input by the filter's group
    /// delay. Suitable for streaming.
    Causal,
    /// Forward then backward pass: squared magnitude response, zero phase
    /// shift. Offline analysis only.
    ZeroPhase,
}

/// One causal pass, direct form II transposed. State is initialized to the
/// steady-state response for the first sample's value, which suppresses
/// the startup transient (a DC input passes through unchanged from sample
/// zero).
fn causal_pass(coeffs: &BiquadCoeffs, x: &[f64]) -> Vec<f64> {
    let BiquadCoeffs { b0, b1, b2, a1, a2, .. } = *coeffs;
    let x0 = x.first().copied().unwrap_or(0.0);
    let y0 = coeffs.dc_gain() * x0;
    let mut s2 = b2 * x0 - a2 * y0;
    let mut s1 = b1 * x0 - a1 * y0 + s2;
    let mut out = Vec::with_capacity(x.len());
    for &xn in x {
        let y = b0 * xn + s1;
        s1 = b1 * xn - a1 * y + s2;
        s2 = b2 * xn - a2 * y;
        out.push(y);
    }
    out
}

/// Run the biquad over `x` in the given mode. Zero-phase mode filters
/// forward, reverses, filters again and reverses back, doubling the
/// stop-band attenuation and cancelling the phase shift.
pub fn filter_apply(coeffs: &BiquadCoeffs, x: &[f64], mode: FilterMode) -> Vec<f64> {
    if x.is_empty() {
        return Vec::new();
    }
    match mode {
        FilterMode::Causal => causal_pass(coeffs, x),
        FilterMode::ZeroPhase => {
            let mut forward = causal_pass(coeffs, x);
            forward.reverse();
            let mut back = causal_pass(coeffs, &forward);
            back.reverse();
            back
        }
    }
}
