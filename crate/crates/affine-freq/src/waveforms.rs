//! Synthetic AC voltage generation with exact analytic ground truth.
//!
//! Scenarios are described declaratively: per-phase magnitude and
//! phase-modulation functions drawn from a small closed algebra
//! ([`TimeFn`]), so every scenario serializes to a config file and its
//! instantaneous frequency is available in closed form for oracle
//! comparisons.

use crate::error::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::f64::consts::{FRAC_PI_2, PI};

/// Minimum sampling density relative to the nominal frequency.
pub const MIN_SAMPLES_PER_CYCLE: f64 = 20.0;

/// Time-dependent scalar function from a closed, symbolically
/// differentiable algebra.
///
/// The algebra is closed under differentiation, which is what makes exact
/// ground-truth frequency traces and slow-variation checks possible
/// without numerical differentiation.
#[derive(Debug, Clone, PartialEq)]
pub enum TimeFn {
    /// `c`
    Constant(f64),
    /// `slope * t`
    Ramp(f64),
    /// `amplitude * sin(omega * t + phase)`
    Sinusoid { amplitude: f64, omega: f64, phase: f64 },
    /// `exp(-rate * t) * inner(t)`
    ExpDecay { rate: f64, inner: Box<TimeFn> },
    /// Pointwise sum of terms.
    Sum(Vec<TimeFn>),
    /// `factor * inner(t)`
    Scale(f64, Box<TimeFn>),
}

impl TimeFn {
    pub fn constant(c: f64) -> Self {
        TimeFn::Constant(c)
    }

    pub fn ramp(slope: f64) -> Self {
        TimeFn::Ramp(slope)
    }

    pub fn sinusoid(amplitude: f64, omega: f64, phase: f64) -> Self {
        TimeFn::Sinusoid { amplitude, omega, phase }
    }

    /// `amplitude * cos(omega * t)`, expressed inside the algebra.
    pub fn cosine(amplitude: f64, omega: f64) -> Self {
        TimeFn::Sinusoid { amplitude, omega, phase: FRAC_PI_2 }
    }

    pub fn exp_decay(rate: f64, inner: TimeFn) -> Self {
        TimeFn::ExpDecay { rate, inner: Box::new(inner) }
    }

    pub fn sum(terms: Vec<TimeFn>) -> Self {
        TimeFn::Sum(terms)
    }

    pub fn scale(factor: f64, inner: TimeFn) -> Self {
        TimeFn::Scale(factor, Box::new(inner))
    }

    /// Evaluate at time `t` (seconds).
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            TimeFn::Constant(c) => *c,
            TimeFn::Ramp(slope) => slope * t,
            TimeFn::Sinusoid { amplitude, omega, phase } => amplitude * (omega * t + phase).sin(),
            TimeFn::ExpDecay { rate, inner } => (-rate * t).exp() * inner.eval(t),
            TimeFn::Sum(terms) => terms.iter().map(|f| f.eval(t)).sum(),
            TimeFn::Scale(factor, inner) => factor * inner.eval(t),
        }
    }

    /// Exact derivative, staying inside the algebra.
    pub fn derivative(&self) -> TimeFn {
        match self {
            TimeFn::Constant(_) => TimeFn::Constant(0.0),
            TimeFn::Ramp(slope) => TimeFn::Constant(*slope),
            TimeFn::Sinusoid { amplitude, omega, phase } => TimeFn::Sinusoid {
                amplitude: amplitude * omega,
                omega: *omega,
                phase: phase + FRAC_PI_2,
            },
            // d/dt [e^{-rt} g] = e^{-rt} (g' - r g)
            TimeFn::ExpDecay { rate, inner } => TimeFn::ExpDecay {
                rate: *rate,
                inner: Box::new(TimeFn::Sum(vec![
                    inner.derivative(),
                    TimeFn::Scale(-rate, inner.clone()),
                ])),
            },
            TimeFn::Sum(terms) => TimeFn::Sum(terms.iter().map(|f| f.derivative()).collect()),
            TimeFn::Scale(factor, inner) => {
                TimeFn::Scale(*factor, Box::new(inner.derivative()))
            }
        }
    }

    /// `n`-th derivative (0 returns a clone).
    pub fn nth_derivative(&self, n: usize) -> TimeFn {
        let mut f = self.clone();
        for _ in 0..n {
            f = f.derivative();
        }
        f
    }

    /// True when the function evaluates to the same value for all `t`.
    pub fn is_constant(&self) -> bool {
        match self {
            TimeFn::Constant(_) => true,
            TimeFn::Ramp(slope) => *slope == 0.0,
            TimeFn::Sinusoid { amplitude, .. } => *amplitude == 0.0,
            TimeFn::ExpDecay { rate, inner } => {
                inner.is_constant() && (*rate == 0.0 || inner.eval(0.0) == 0.0)
            }
            TimeFn::Sum(terms) => terms.iter().all(|f| f.is_constant()),
            TimeFn::Scale(factor, inner) => *factor == 0.0 || inner.is_constant(),
        }
    }
}

/// One phase of a scenario: magnitude in volts, phase modulation in
/// radians, and a fixed displacement in radians (the additive offset as it
/// appears inside the sine argument, sign included).
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpec {
    pub magnitude: TimeFn,
    pub phase_mod: TimeFn,
    pub displacement: f64,
}

impl PhaseSpec {
    pub fn new(magnitude: TimeFn, phase_mod: TimeFn, displacement: f64) -> Self {
        PhaseSpec { magnitude, phase_mod, displacement }
    }

    /// Stationary phase: constant magnitude, no modulation.
    pub fn stationary(magnitude_volts: f64, displacement: f64) -> Self {
        PhaseSpec {
            magnitude: TimeFn::constant(magnitude_volts),
            phase_mod: TimeFn::constant(0.0),
            displacement,
        }
    }
}

/// Declarative description of a synthetic voltage waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub label: String,
    /// Nominal angular frequency in rad/s.
    pub omega_nominal: f64,
    /// Sampling rate in Hz.
    pub sample_rate: f64,
    /// Generation window in seconds, starting at t = 0.
    pub duration: f64,
    /// Exactly one (single-phase) or three (a, b, c) entries.
    pub phases: Vec<PhaseSpec>,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega_nominal > 0.0) {
            return Err(Error::validation("omega_nominal must be positive"));
        }
        if !(self.duration > 0.0) {
            return Err(Error::validation("duration must be positive"));
        }
        let nominal_hz = self.omega_nominal / (2.0 * PI);
        if self.sample_rate < MIN_SAMPLES_PER_CYCLE * nominal_hz {
            return Err(Error::validation(format!(
                "sample_rate {} Hz is below {} samples per nominal cycle ({} Hz minimum)",
                self.sample_rate,
                MIN_SAMPLES_PER_CYCLE,
                MIN_SAMPLES_PER_CYCLE * nominal_hz
            )));
        }
        match self.phases.len() {
            1 | 3 => Ok(()),
            n => Err(Error::validation(format!(
                "scenario must have 1 or 3 phases, got {n}"
            ))),
        }
    }

    /// Number of samples generated for this spec (t = 0 ..= duration).
    pub fn sample_count(&self) -> usize {
        (self.duration * self.sample_rate).round() as usize + 1
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.sample_rate
    }

    pub fn nominal_hz(&self) -> f64 {
        self.omega_nominal / (2.0 * PI)
    }
}

/// Physical units of the samples held by a [`SignalBuffer`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Units {
    Volts,
    PerUnit,
}

/// A named, uniformly sampled channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub name: String,
    pub samples: Vec<f64>,
}

/// Uniformly sampled multi-channel waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalBuffer {
    pub t0: f64,
    pub dt: f64,
    pub units: Units,
    pub channels: Vec<Channel>,
}

impl SignalBuffer {
    /// Build a buffer, enforcing equal channel lengths (>= 4) and dt > 0.
    pub fn new(t0: f64, dt: f64, units: Units, channels: Vec<Channel>) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::validation("dt must be positive"));
        }
        if channels.is_empty() {
            return Err(Error::validation("buffer needs at least one channel"));
        }
        let len = channels[0].samples.len();
        if len < 4 {
            return Err(Error::validation(format!(
                "channels need at least 4 samples, got {len}"
            )));
        }
        if channels.iter().any(|c| c.samples.len() != len) {
            return Err(Error::validation("all channels must have the same length"));
        }
        Ok(SignalBuffer { t0, dt, units, channels })
    }

    pub fn len(&self) -> usize {
        self.channels[0].samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sample_rate(&self) -> f64 {
        1.0 / self.dt
    }

    pub fn time(&self, index: usize) -> f64 {
        self.t0 + index as f64 * self.dt
    }

    pub fn channel(&self, name: &str) -> Option<&Channel> {
        self.channels.iter().find(|c| c.name == name)
    }

    pub fn channel_names(&self) -> Vec<&str> {
        self.channels.iter().map(|c| c.name.as_str()).collect()
    }
}

/// Exact instantaneous frequency of a generated scenario, in per-unit of
/// the nominal angular frequency, sample-aligned with its buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub t0: f64,
    pub dt: f64,
    /// Scalar reference trace: phase a's instantaneous frequency.
    pub if_pu: Vec<f64>,
    /// Per-phase traces (one per generated phase). Phases with distinct
    /// modulation functions have distinct instantaneous frequencies; the
    /// scalar reference above is always the first phase.
    pub per_phase_pu: Vec<Vec<f64>>,
}

impl GroundTruth {
    pub fn len(&self) -> usize {
        self.if_pu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.if_pu.is_empty()
    }
}

fn generate(spec: &ScenarioSpec, expect_phases: usize) -> Result<(SignalBuffer, GroundTruth)> {
    spec.validate()?;
    if spec.phases.len() != expect_phases {
        return Err(Error::validation(format!(
            "expected {expect_phases} phase(s), spec has {}",
            spec.phases.len()
        )));
    }

    let n = spec.sample_count();
    let dt = spec.dt();
    let names: &[&str] = if expect_phases == 3 { &["a", "b", "c"] } else { &["v"] };

    let mut channels = Vec::with_capacity(expect_phases);
    let mut per_phase_pu = Vec::with_capacity(expect_phases);

    for (phase, name) in spec.phases.iter().zip(names) {
        let phase_rate = phase.phase_mod.derivative();
        let mut samples = Vec::with_capacity(n);
        let mut if_pu = Vec::with_capacity(n);
        for k in 0..n {
            let t = k as f64 * dt;
            let magnitude = phase.magnitude.eval(t);
            if !(magnitude > 0.0) {
                return Err(Error::validation(format!(
                    "phase {name} magnitude is non-positive at t = {t} ({magnitude})"
                )));
            }
            let theta = spec.omega_nominal * t + phase.phase_mod.eval(t) + phase.displacement;
            samples.push(magnitude * theta.sin());
            if_pu.push(1.0 + phase_rate.eval(t) / spec.omega_nominal);
        }
        channels.push(Channel { name: name.to_string(), samples });
        per_phase_pu.push(if_pu);
    }

    let truth = GroundTruth {
        t0: 0.0,
        dt,
        if_pu: per_phase_pu[0].clone(),
        per_phase_pu,
    };
    let buffer = SignalBuffer::new(0.0, dt, Units::Volts, channels)?;
    Ok((buffer, truth))
}

/// Generate the three-phase voltage `v_i(t) = V_i(t) sin(w_o t + phi_i(t) + d_i)`
/// with channels named a, b, c, plus its exact instantaneous frequency.
pub fn generate_three_phase(spec: &ScenarioSpec) -> Result<(SignalBuffer, GroundTruth)> {
    generate(spec, 3)
}

/// Generate a single-phase voltage (channel named v) plus ground truth.
pub fn generate_single_phase(spec: &ScenarioSpec) -> Result<(SignalBuffer, GroundTruth)> {
    generate(spec, 1)
}

/// Generate whichever form the spec describes (1 or 3 phases).
pub fn generate_scenario(spec: &ScenarioSpec) -> Result<(SignalBuffer, GroundTruth)> {
    spec.validate()?;
    match spec.phases.len() {
        3 => generate_three_phase(spec),
        _ => generate_single_phase(spec),
    }
}

/// Nominal angular frequency shared by the whole catalog: 100*pi rad/s (50 Hz).
pub const CATALOG_OMEGA: f64 = 100.0 * PI;

/// Default catalog sampling rate in Hz.
pub const CATALOG_SAMPLE_RATE: f64 = 10_000.0;

const ZETA_THIRD: f64 = 2.0 * PI / 3.0;
const KV12: f64 = 12_000.0;
const KV8: f64 = 8_000.0;

fn stationary_three(label: &str, mags: [f64; 3], disp: [f64; 3], duration: f64) -> ScenarioSpec {
    ScenarioSpec {
        label: label.to_string(),
        omega_nominal: CATALOG_OMEGA,
        sample_rate: CATALOG_SAMPLE_RATE,
        duration,
        phases: vec![
            PhaseSpec::stationary(mags[0], disp[0]),
            PhaseSpec::stationary(mags[1], disp[1]),
            PhaseSpec::stationary(mags[2], disp[2]),
        ],
    }
}

/// The built-in scenario catalog: E1-E7 (three-phase) and S1 (single-phase).
///
/// E1: balanced, 12 kV. E2: balanced, magnitudes 12 + 3 sin(pi t) kV.
/// E3: unbalanced magnitudes 12/8/12 kV. E4: unbalanced, time-varying
/// magnitudes. E5: unequal displacements. E6: balanced with common phase
/// modulation pi sin(0.4 pi t). E7: per-phase modulation (phase c swings
/// 10% wider). S1: single-phase with a decaying phase transient.
pub fn scenario_catalog() -> Vec<ScenarioSpec> {
    let disp_std = [0.0, -ZETA_THIRD, ZETA_THIRD];
    let swell_12 = TimeFn::sum(vec![
        TimeFn::constant(KV12),
        TimeFn::sinusoid(3_000.0, PI, 0.0),
    ]);
    let swell_8 = TimeFn::sum(vec![
        TimeFn::constant(KV8),
        TimeFn::sinusoid(2_000.0, 2.0 * PI, 0.0),
    ]);
    let phase_swing = TimeFn::sinusoid(PI, 0.4 * PI, 0.0);
    let phase_swing_c = TimeFn::sinusoid(1.1 * PI, 0.4 * PI, 0.0);

    let mut catalog = vec![
        stationary_three("E1", [KV12; 3], disp_std, 2.0),
        ScenarioSpec {
            label: "E2".to_string(),
            omega_nominal: CATALOG_OMEGA,
            sample_rate: CATALOG_SAMPLE_RATE,
            duration: 2.0,
            phases: vec![
                PhaseSpec::new(swell_12.clone(), TimeFn::constant(0.0), disp_std[0]),
                PhaseSpec::new(swell_12.clone(), TimeFn::constant(0.0), disp_std[1]),
                PhaseSpec::new(swell_12.clone(), TimeFn::constant(0.0), disp_std[2]),
            ],
        },
        stationary_three("E3", [KV12, KV8, KV12], disp_std, 2.0),
        ScenarioSpec {
            label: "E4".to_string(),
            omega_nominal: CATALOG_OMEGA,
            sample_rate: CATALOG_SAMPLE_RATE,
            duration: 2.0,
            phases: vec![
                PhaseSpec::new(swell_12.clone(), TimeFn::constant(0.0), disp_std[0]),
                PhaseSpec::new(swell_8, TimeFn::constant(0.0), disp_std[1]),
                PhaseSpec::new(swell_12, TimeFn::constant(0.0), disp_std[2]),
            ],
        },
        // zeta_b = -2pi/3 enters as -zeta_b = +2pi/3; zeta_c = 1.5pi/3 = pi/2.
        stationary_three("E5", [KV12; 3], [0.0, ZETA_THIRD, 1.5 * PI / 3.0], 2.0),
        ScenarioSpec {
            label: "E6".to_string(),
            omega_nominal: CATALOG_OMEGA,
            sample_rate: CATALOG_SAMPLE_RATE,
            duration: 5.0,
            phases: vec![
                PhaseSpec::new(TimeFn::constant(KV12), phase_swing.clone(), disp_std[0]),
                PhaseSpec::new(TimeFn::constant(KV12), phase_swing.clone(), disp_std[1]),
                PhaseSpec::new(TimeFn::constant(KV12), phase_swing.clone(), disp_std[2]),
            ],
        },
        ScenarioSpec {
            label: "E7".to_string(),
            omega_nominal: CATALOG_OMEGA,
            sample_rate: CATALOG_SAMPLE_RATE,
            duration: 5.0,
            phases: vec![
                PhaseSpec::new(TimeFn::constant(KV12), phase_swing.clone(), disp_std[0]),
                PhaseSpec::new(TimeFn::constant(KV12), phase_swing, disp_std[1]),
                PhaseSpec::new(TimeFn::constant(KV12), phase_swing_c, disp_std[2]),
            ],
        },
        ScenarioSpec {
            label: "S1".to_string(),
            omega_nominal: CATALOG_OMEGA,
            sample_rate: CATALOG_SAMPLE_RATE,
            duration: 5.0,
            phases: vec![PhaseSpec::new(
                TimeFn::constant(KV12),
                // 0.05 w_o e^{-t} (1 - cos(pi t))
                TimeFn::exp_decay(
                    1.0,
                    TimeFn::sum(vec![
                        TimeFn::constant(0.05 * CATALOG_OMEGA),
                        TimeFn::cosine(-0.05 * CATALOG_OMEGA, PI),
                    ]),
                ),
                0.0,
            )],
        },
    ];
    // Keep labels unique and ordered; other code relies on ordering for
    // deterministic reports.
    catalog.sort_by(|a, b| a.label.cmp(&b.label));
    catalog
}

/// Look up a catalog scenario by label (case-insensitive).
pub fn scenario_by_label(label: &str) -> Result<ScenarioSpec> {
    scenario_catalog()
        .into_iter()
        .find(|s| s.label.eq_ignore_ascii_case(label))
        .ok_or_else(|| Error::validation(format!("unknown scenario label '{label}'")))
}

/// Add zero-mean white Gaussian noise at the requested SNR (dB, per
/// channel, relative to each channel's RMS). Seeded for reproducibility.
pub fn add_white_noise(buffer: &mut SignalBuffer, snr_db: f64, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for channel in &mut buffer.channels {
        let n = channel.samples.len() as f64;
        let rms = (channel.samples.iter().map(|x| x * x).sum::<f64>() / n).sqrt();
        if rms == 0.0 {
            continue;
        }
        let sigma = rms * 10f64.powf(-snr_db / 20.0);
        let normal = Normal::new(0.0, sigma).expect("sigma is finite and positive");
        for x in &mut channel.samples {
            *x += normal.sample(&mut rng);
        }
    }
}

/// Add a sinusoidal term to one channel. Used to inject harmonic content
/// for degenerate-bracket testing.
pub fn add_sinusoid_to_channel(
    buffer: &mut SignalBuffer,
    channel_index: usize,
    amplitude: f64,
    omega: f64,
    phase: f64,
) -> Result<()> {
    let t0 = buffer.t0;
    let dt = buffer.dt;
    let channel = buffer
        .channels
        .get_mut(channel_index)
        .ok_or_else(|| Error::validation(format!("no channel at index {channel_index}")))?;
    for (k, x) in channel.samples.iter_mut().enumerate() {
        let t = t0 + k as f64 * dt;
        *x += amplitude * (omega * t + phase).sin();
    }
    Ok(())
}
