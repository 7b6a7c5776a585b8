//! Affine invariants of planar voltage trajectories and the geometric
//! frequency estimators.
//!
//! For a plane curve traced by the voltage `v` (with `v'`, `v''` its time
//! derivatives), the affine arc-length rate and affine curvature are
//!
//! ```text
//! sigma_dot = [v, v']^(1/3)
//! kappa_a   = [v', v''] / sigma_dot^5
//! ```
//!
//! and combining them eliminates the conic's shape entirely:
//!
//! ```text
//! omega_a = sqrt(kappa_a) * sigma_dot = sqrt([v', v''] / [v, v'])
//! ```
//!
//! `omega_a` is exact on any stationary ellipse — which is why magnitude or
//! displacement unbalance does not perturb it — while the Euclidean
//! curvature estimate `omega_k = [v, v'] / |v|^2` is exact only on circles
//! and ripples periodically on ellipses.
//!
//! Samples where the defining bracket is too small to trust (relative to
//! its median magnitude over the window) are flagged invalid rather than
//! clamped or repaired.

use crate::error::{Error, Result};
use crate::transforms::{bracket, PlanarTrajectory};
use crate::waveforms::ScenarioSpec;
use std::fmt;

/// Relative guard threshold used when none is supplied explicitly.
pub const DEFAULT_GUARD: f64 = 1e-6;

/// Quantified reading of "much smaller than" for the slow-variation
/// conditions: every ratio must stay below this.
pub const SLOW_VARIATION_LIMIT: f64 = 0.1;

/// Identifies which estimator produced a [`FrequencyTrace`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EstimatorId {
    Affine,
    Frenet,
    SrfPll,
    DelayPll,
}

impl EstimatorId {
    pub fn as_str(&self) -> &'static str {
        match self {
            EstimatorId::Affine => "affine",
            EstimatorId::Frenet => "frenet",
            EstimatorId::SrfPll => "srf_pll",
            EstimatorId::DelayPll => "delay_pll",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name.trim() {
            "affine" => Ok(EstimatorId::Affine),
            "frenet" => Ok(EstimatorId::Frenet),
            "srf_pll" => Ok(EstimatorId::SrfPll),
            "delay_pll" => Ok(EstimatorId::DelayPll),
            other => Err(Error::parse(format!(
                "unknown estimator '{other}' (expected affine, frenet, srf_pll or delay_pll)"
            ))),
        }
    }
}

impl fmt::Display for EstimatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-sample frequency estimate in per-unit of the nominal angular
/// frequency. `omega_pu[k]` is meaningful only where `valid[k]`; invalid
/// samples hold 0.0 so the trace never carries non-finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyTrace {
    pub t0: f64,
    pub dt: f64,
    pub omega_pu: Vec<f64>,
    pub valid: Vec<bool>,
    pub estimator: EstimatorId,
}

impl FrequencyTrace {
    pub fn len(&self) -> usize {
        self.omega_pu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega_pu.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    /// Fraction of samples flagged valid.
    pub fn fraction_valid(&self) -> f64 {
        if self.valid.is_empty() {
            return 0.0;
        }
        self.valid.iter().filter(|v| **v).count() as f64 / self.valid.len() as f64
    }
}

/// Per-sample affine arc-length rate and affine curvature.
///
/// `sigma_dot` keeps the sign of the defining bracket (negative for
/// clockwise trajectories such as the raw quadrature embedding);
/// `kappa_a` is orientation-free and positive on ellipses.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineInvariants {
    pub sigma_dot: Vec<f64>,
    pub kappa_a: Vec<f64>,
    pub valid: Vec<bool>,
}

/// Median of absolute values, used as the robust scale for guard
/// thresholds. Returns 0.0 for an empty selection.
fn median_abs(values: impl Iterator<Item = f64>) -> f64 {
    let mut mags: Vec<f64> = values.map(f64::abs).collect();
    if mags.is_empty() {
        return 0.0;
    }
    mags.sort_by(|a, b| a.partial_cmp(b).expect("finite magnitudes"));
    let n = mags.len();
    if n % 2 == 1 {
        mags[n / 2]
    } else {
        0.5 * (mags[n / 2 - 1] + mags[n / 2])
    }
}

fn brackets_pos_d1(traj: &PlanarTrajectory) -> Result<Vec<f64>> {
    let d1 = traj.d1()?;
    Ok((0..traj.len()).map(|k| bracket(traj.v.at(k), d1.at(k))).collect())
}

fn brackets_d1_d2(traj: &PlanarTrajectory) -> Result<Vec<f64>> {
    let d1 = traj.d1()?;
    let d2 = traj.d2()?;
    Ok((0..traj.len()).map(|k| bracket(d1.at(k), d2.at(k))).collect())
}

fn guard_threshold(values: &[f64], valid: &[bool], guard: f64) -> f64 {
    guard
        * median_abs(
            values
                .iter()
                .zip(valid)
                .filter(|(_, ok)| **ok)
                .map(|(v, _)| *v),
        )
}

/// Affine arc-length rate `[v, v']^(1/3)` and affine curvature
/// `[v', v''] / sigma_dot^5`, flagging samples whose defining bracket
/// magnitude falls at or below `guard` times its median over the window.
pub fn affine_invariants(traj: &PlanarTrajectory, guard: f64) -> Result<AffineInvariants> {
    let b1 = brackets_pos_d1(traj)?;
    let b2 = brackets_d1_d2(traj)?;
    let threshold = guard_threshold(&b1, &traj.valid, guard);

    let n = traj.len();
    let mut sigma_dot = vec![0.0; n];
    let mut kappa_a = vec![0.0; n];
    let mut valid = vec![false; n];
    for k in 0..n {
        if !traj.valid[k] || b1[k].abs() <= threshold {
            continue;
        }
        let sd = b1[k].cbrt();
        sigma_dot[k] = sd;
        kappa_a[k] = b2[k] / sd.powi(5);
        valid[k] = true;
    }
    Ok(AffineInvariants { sigma_dot, kappa_a, valid })
}

/// The affine estimator `omega_a = sqrt([v', v''] / [v, v'])`, reported in
/// per-unit of `omega_nominal`.
///
/// A sample is invalid where the trajectory's own flags say so, where
/// either bracket magnitude falls within the guard band, or where the
/// bracket ratio is not positive (so the square root would not be real).
/// A fully-invalid trace is a normal return, not an error.
pub fn omega_affine(
    traj: &PlanarTrajectory,
    omega_nominal: f64,
    guard: f64,
) -> Result<FrequencyTrace> {
    if !(omega_nominal > 0.0) {
        return Err(Error::validation("omega_nominal must be positive"));
    }
    let b1 = brackets_pos_d1(traj)?;
    let b2 = brackets_d1_d2(traj)?;
    let thr1 = guard_threshold(&b1, &traj.valid, guard);
    let thr2 = guard_threshold(&b2, &traj.valid, guard);

    let n = traj.len();
    let mut omega_pu = vec![0.0; n];
    let mut valid = vec![false; n];
    for k in 0..n {
        if !traj.valid[k] || b1[k].abs() <= thr1 || b2[k].abs() <= thr2 {
            continue;
        }
        let ratio = b2[k] / b1[k];
        if ratio <= 0.0 {
            continue;
        }
        omega_pu[k] = ratio.sqrt() / omega_nominal;
        valid[k] = true;
    }
    Ok(FrequencyTrace { t0: traj.t0, dt: traj.dt, omega_pu, valid, estimator: EstimatorId::Affine })
}

/// The Frenet (Euclidean curvature) estimator `omega_k = [v, v'] / |v|^2`
/// in per-unit of `omega_nominal`.
///
/// The bracket sign is normalized to the window's dominant orientation so
/// that clockwise trajectories report positive frequency; samples whose
/// squared radius falls within the guard band, or whose oriented bracket
/// is not positive, are invalid.
pub fn omega_frenet(
    traj: &PlanarTrajectory,
    omega_nominal: f64,
    guard: f64,
) -> Result<FrequencyTrace> {
    if !(omega_nominal > 0.0) {
        return Err(Error::validation("omega_nominal must be positive"));
    }
    let b1 = brackets_pos_d1(traj)?;
    let radius2: Vec<f64> = (0..traj.len())
        .map(|k| {
            let v = traj.v.at(k);
            v[0] * v[0] + v[1] * v[1]
        })
        .collect();
    let thr = guard_threshold(&radius2, &traj.valid, guard);
    let orientation = dominant_orientation(&b1, &traj.valid);

    let n = traj.len();
    let mut omega_pu = vec![0.0; n];
    let mut valid = vec![false; n];
    for k in 0..n {
        if !traj.valid[k] || radius2[k] <= thr {
            continue;
        }
        let oriented = orientation * b1[k];
        if oriented <= 0.0 {
            continue;
        }
        omega_pu[k] = oriented / radius2[k] / omega_nominal;
        valid[k] = true;
    }
    Ok(FrequencyTrace { t0: traj.t0, dt: traj.dt, omega_pu, valid, estimator: EstimatorId::Frenet })
}

/// Sign of the median bracket over valid samples; +1.0 when degenerate.
fn dominant_orientation(b1: &[f64], valid: &[bool]) -> f64 {
    let mut vals: Vec<f64> = b1
        .iter()
        .zip(valid)
        .filter(|(_, ok)| **ok)
        .map(|(v, _)| *v)
        .collect();
    if vals.is_empty() {
        return 1.0;
    }
    vals.sort_by(|a, b| a.partial_cmp(b).expect("finite brackets"));
    if vals[vals.len() / 2] < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Count of samples whose bracket `[v, v']` opposes the window's dominant
/// orientation (or vanishes) — the signature of harmonic contamination.
pub fn bracket_sign_violations(traj: &PlanarTrajectory) -> Result<usize> {
    let b1 = brackets_pos_d1(traj)?;
    let orientation = dominant_orientation(&b1, &traj.valid);
    Ok(b1
        .iter()
        .zip(&traj.valid)
        .filter(|(b, ok)| **ok && orientation * **b <= 0.0)
        .count())
}

/// Which scenario function a slow-variation ratio was computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarginKind {
    PhaseMod,
    Magnitude,
}

impl fmt::Display for MarginKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MarginKind::PhaseMod => f.write_str("phase_mod"),
            MarginKind::Magnitude => f.write_str("magnitude"),
        }
    }
}

/// One evaluated slow-variation ratio `max_t |d^h f / dt^h| / omega_o^h`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlowVariationMargin {
    pub kind: MarginKind,
    pub phase: usize,
    pub order: usize,
    pub ratio: f64,
}

/// Validity summary of an estimation run and/or a scenario's
/// slow-variation margins.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidityReport {
    pub fraction_valid: f64,
    pub bracket_sign_violations: usize,
    pub slow_variation_margins: Vec<SlowVariationMargin>,
}

impl ValidityReport {
    /// True when every evaluated ratio is below [`SLOW_VARIATION_LIMIT`].
    pub fn conditions_satisfied(&self) -> bool {
        self.slow_variation_margins
            .iter()
            .all(|m| m.ratio < SLOW_VARIATION_LIMIT)
    }

    /// Largest evaluated ratio (0.0 when none were evaluated).
    pub fn worst_ratio(&self) -> f64 {
        self.slow_variation_margins
            .iter()
            .map(|m| m.ratio)
            .fold(0.0, f64::max)
    }
}

/// Evaluate the slow-variation conditions on a scenario's closed-form
/// functions: for each phase and each order `h = 1..=h_max` (2 for
/// three-phase use, 3 for single-phase), the ratios
/// `max_t |phi^(h)| / omega_o^h` and `max_t |(V / <V>)^(h)| / omega_o^h`.
pub fn check_slow_variation(spec: &ScenarioSpec, h_max: usize) -> Result<ValidityReport> {
    if h_max != 2 && h_max != 3 {
        return Err(Error::validation("h_max must be 2 or 3"));
    }
    spec.validate()?;
    let n = spec.sample_count();
    let dt = spec.dt();
    let grid = || (0..n).map(move |k| k as f64 * dt);

    let mut margins = Vec::new();
    for (index, phase) in spec.phases.iter().enumerate() {
        let mean_mag = grid().map(|t| phase.magnitude.eval(t)).sum::<f64>() / n as f64;
        if !(mean_mag > 0.0) {
            return Err(Error::validation(format!(
                "phase {index} has non-positive mean magnitude"
            )));
        }
        let mut phi = phase.phase_mod.clone();
        let mut mag = phase.magnitude.clone();
        for order in 1..=h_max {
            phi = phi.derivative();
            mag = mag.derivative();
            let omega_pow = spec.omega_nominal.powi(order as i32);
            let phi_max = grid().map(|t| phi.eval(t).abs()).fold(0.0, f64::max);
            let mag_max = grid().map(|t| mag.eval(t).abs()).fold(0.0, f64::max);
            margins.push(SlowVariationMargin {
                kind: MarginKind::PhaseMod,
                phase: index,
                order,
                ratio: phi_max / omega_pow,
            });
            margins.push(SlowVariationMargin {
                kind: MarginKind::Magnitude,
                phase: index,
                order,
                ratio: mag_max / (mean_mag * omega_pow),
            });
        }
    }
    Ok(ValidityReport {
        fraction_valid: 1.0,
        bracket_sign_violations: 0,
        slow_variation_margins: margins,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::three_phase_trajectory;
    use crate::transforms::PlanarPair;
    use crate::waveforms::{scenario_by_label, TimeFn};
    use std::f64::consts::PI;

    /// Axis-aligned stationary ellipse with exact derivatives.
    fn ellipse(a1: f64, a2: f64, omega: f64, n: usize, dt: f64) -> PlanarTrajectory {
        let mut v1 = Vec::with_capacity(n);
        let mut v2 = Vec::with_capacity(n);
        let mut d1_1 = Vec::with_capacity(n);
        let mut d1_2 = Vec::with_capacity(n);
        let mut d2_1 = Vec::with_capacity(n);
        let mut d2_2 = Vec::with_capacity(n);
        for k in 0..n {
            let theta = omega * k as f64 * dt;
            let (s, c) = theta.sin_cos();
            v1.push(a1 * c);
            v2.push(a2 * s);
            d1_1.push(-a1 * omega * s);
            d1_2.push(a2 * omega * c);
            d2_1.push(-a1 * omega * omega * c);
            d2_2.push(-a2 * omega * omega * s);
        }
        PlanarTrajectory {
            t0: 0.0,
            dt,
            v: PlanarPair { v1, v2 },
            d1: Some(PlanarPair { v1: d1_1, v2: d1_2 }),
            d2: Some(PlanarPair { v1: d2_1, v2: d2_2 }),
            d3: None,
            valid: vec![true; n],
        }
    }

    #[test]
    fn invariants_on_two_by_one_ellipse() {
        // omega V1 V2 = 2: sigma_dot = 2^(1/3), kappa_a = 2 / 2^(5/3) = 2^(-2/3).
        let traj = ellipse(2.0, 1.0, 1.0, 500, 0.01);
        let inv = affine_invariants(&traj, DEFAULT_GUARD).unwrap();
        let sigma_want = 2f64.powf(1.0 / 3.0);
        let kappa_want = 2f64.powf(-2.0 / 3.0);
        assert!((sigma_want - 1.259921).abs() < 1e-6);
        assert!((kappa_want - 0.629961).abs() < 1e-6);
        for k in 0..traj.len() {
            assert!(inv.valid[k]);
            assert!((inv.sigma_dot[k] - sigma_want).abs() < 1e-12);
            assert!((inv.kappa_a[k] - kappa_want).abs() < 1e-12);
        }
    }

    #[test]
    fn sigma_dot_constant_on_circle() {
        let omega = 100.0 * PI;
        let v = 1.3;
        let traj = ellipse(v, v, omega, 800, 1e-4);
        let inv = affine_invariants(&traj, DEFAULT_GUARD).unwrap();
        let want = (omega * v * v).powf(1.0 / 3.0);
        for k in 0..traj.len() {
            assert!(((inv.sigma_dot[k] - want) / want).abs() < 1e-12);
        }
    }

    #[test]
    fn collinear_position_and_velocity_is_fully_invalid() {
        // v2 = 0 with d1 parallel to v: bracket vanishes identically.
        let n = 100;
        let line = PlanarPair { v1: (0..n).map(|k| 1.0 + k as f64).collect(), v2: vec![0.0; n] };
        let d1 = PlanarPair { v1: vec![1.0; n], v2: vec![0.0; n] };
        let d2 = PlanarPair { v1: vec![0.0; n], v2: vec![0.0; n] };
        let traj = PlanarTrajectory {
            t0: 0.0,
            dt: 0.01,
            v: line,
            d1: Some(d1),
            d2: Some(d2),
            d3: None,
            valid: vec![true; n],
        };
        let inv = affine_invariants(&traj, DEFAULT_GUARD).unwrap();
        assert!(inv.valid.iter().all(|v| !v));
        let trace = omega_affine(&traj, 100.0 * PI, DEFAULT_GUARD).unwrap();
        assert!(trace.valid.iter().all(|v| !v));
        assert_eq!(trace.fraction_valid(), 0.0);
        assert!(trace.omega_pu.iter().all(|w| w.is_finite()));
    }

    #[test]
    fn missing_derivatives_is_an_error() {
        let mut traj = ellipse(1.0, 1.0, 1.0, 64, 0.01);
        traj.d2 = None;
        assert!(affine_invariants(&traj, DEFAULT_GUARD).is_err());
        assert!(omega_affine(&traj, 1.0, DEFAULT_GUARD).is_err());
        // Frenet needs only d1.
        assert!(omega_frenet(&traj, 1.0, DEFAULT_GUARD).is_ok());
    }

    #[test]
    fn affine_estimator_is_exact_on_stationary_scenarios() {
        for label in ["E1", "E3", "E5"] {
            let mut spec = scenario_by_label(label).unwrap();
            spec.duration = 0.5;
            let traj = three_phase_trajectory(&spec, 12_000.0).unwrap();
            let trace = omega_affine(&traj, spec.omega_nominal, DEFAULT_GUARD).unwrap();
            assert_eq!(trace.fraction_valid(), 1.0, "{label}");
            for &w in &trace.omega_pu {
                assert!((w - 1.0).abs() < 1e-10, "{label}: {w}");
            }
        }
    }

    #[test]
    fn frenet_constant_on_balanced_rippled_on_unbalanced() {
        let mut e1 = scenario_by_label("E1").unwrap();
        e1.duration = 0.5;
        let traj = three_phase_trajectory(&e1, 12_000.0).unwrap();
        let trace = omega_frenet(&traj, e1.omega_nominal, DEFAULT_GUARD).unwrap();
        for &w in &trace.omega_pu {
            assert!((w - 1.0).abs() < 1e-10);
        }

        // E3's Clarke ellipse axes follow from its sequence components:
        // |V+| = (12 + 8 + 12)/3 = 32/3, |V-| = 4/3 (computed below by the
        // independent phasor route), so omega_k swings between
        // (|V+|-|V-|)/(|V+|+|V-|) = 7/9 and 9/7 of nominal.
        let mut e3 = scenario_by_label("E3").unwrap();
        e3.duration = 0.5;
        let (vp, vn) = sequence_magnitudes(&[12.0, 8.0, 12.0], &[0.0, -2.0 * PI / 3.0, 2.0 * PI / 3.0]);
        assert!((vp - 32.0 / 3.0).abs() < 1e-12);
        assert!((vn - 4.0 / 3.0).abs() < 1e-12);
        let max_want = (vp + vn) / (vp - vn);
        let min_want = (vp - vn) / (vp + vn);
        assert!((max_want - 9.0 / 7.0).abs() < 1e-12);

        let traj = three_phase_trajectory(&e3, 12_000.0).unwrap();
        let trace = omega_frenet(&traj, e3.omega_nominal, DEFAULT_GUARD).unwrap();
        let max = trace.omega_pu.iter().cloned().fold(f64::MIN, f64::max);
        let min = trace.omega_pu.iter().cloned().fold(f64::MAX, f64::min);
        assert!((max - max_want).abs() < 1e-4, "max {max} vs {max_want}");
        assert!((min - min_want).abs() < 1e-4, "min {min} vs {min_want}");
        assert!(max - min > 0.1);
    }

    /// Positive/negative sequence magnitudes of phasors `V_i exp(j d_i)`.
    /// Independent oracle route used by the Frenet extremes test.
    fn sequence_magnitudes(mags: &[f64; 3], disp: &[f64; 3]) -> (f64, f64) {
        let rot = |angle: f64| (angle.cos(), angle.sin());
        let mul = |(ar, ai): (f64, f64), (br, bi): (f64, f64)| (ar * br - ai * bi, ar * bi + ai * br);
        let a = rot(2.0 * PI / 3.0);
        let a2 = rot(4.0 * PI / 3.0);
        let phasor = |i: usize| mul((mags[i], 0.0), rot(disp[i]));
        let add3 = |x: (f64, f64), y: (f64, f64), z: (f64, f64)| {
            ((x.0 + y.0 + z.0) / 3.0, (x.1 + y.1 + z.1) / 3.0)
        };
        let vp = add3(phasor(0), mul(a, phasor(1)), mul(a2, phasor(2)));
        let vn = add3(phasor(0), mul(a2, phasor(1)), mul(a, phasor(2)));
        (vp.0.hypot(vp.1), vn.0.hypot(vn.1))
    }

    #[test]
    fn omega_affine_is_scale_invariant() {
        let mut spec = scenario_by_label("E6").unwrap();
        spec.duration = 0.5;
        let traj = three_phase_trajectory(&spec, 1.0).unwrap();
        let reference = omega_affine(&traj, spec.omega_nominal, DEFAULT_GUARD).unwrap();

        for lambda in [1e-4, 0.37, 12_000.0] {
            let scaled = three_phase_trajectory(&spec, lambda).unwrap();
            let trace = omega_affine(&scaled, spec.omega_nominal, DEFAULT_GUARD).unwrap();
            for k in 0..trace.len() {
                let rel = (trace.omega_pu[k] - reference.omega_pu[k]).abs()
                    / reference.omega_pu[k].abs();
                assert!(rel < 1e-12, "lambda {lambda} sample {k}: rel {rel}");
            }
        }
    }

    #[test]
    fn omega_affine_ignores_anisotropic_axis_scaling() {
        // Scaling v1 by l1 and v2 by l2 turns a circle into an ellipse; the
        // affine estimate must not move. This is exactly why unbalance does
        // not perturb it.
        let omega = 100.0 * PI;
        let base = ellipse(1.0, 1.0, omega, 1000, 1e-4);
        let reference = omega_affine(&base, omega, DEFAULT_GUARD).unwrap();
        let (l1, l2) = (1.9, 0.4);
        let scale_pair = |p: &PlanarPair| PlanarPair {
            v1: p.v1.iter().map(|x| l1 * x).collect(),
            v2: p.v2.iter().map(|x| l2 * x).collect(),
        };
        let scaled = PlanarTrajectory {
            t0: base.t0,
            dt: base.dt,
            v: scale_pair(&base.v),
            d1: base.d1.as_ref().map(&scale_pair),
            d2: base.d2.as_ref().map(&scale_pair),
            d3: None,
            valid: base.valid.clone(),
        };
        let trace = omega_affine(&scaled, omega, DEFAULT_GUARD).unwrap();
        for k in 0..trace.len() {
            assert!((trace.omega_pu[k] - reference.omega_pu[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn estimators_coincide_on_circles() {
        let omega = 100.0 * PI;
        let traj = ellipse(0.8, 0.8, omega, 2000, 1e-4);
        let affine = omega_affine(&traj, omega, DEFAULT_GUARD).unwrap();
        let frenet = omega_frenet(&traj, omega, DEFAULT_GUARD).unwrap();
        for k in 0..traj.len() {
            assert!((affine.omega_pu[k] - frenet.omega_pu[k]).abs() < 1e-10);
            assert!((affine.omega_pu[k] - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn kappa_constant_and_positive_on_ellipses() {
        let traj = ellipse(1.7, 0.6, 100.0 * PI, 4000, 1e-4);
        let inv = affine_invariants(&traj, DEFAULT_GUARD).unwrap();
        let n = inv.kappa_a.len() as f64;
        let mean = inv.kappa_a.iter().sum::<f64>() / n;
        let var = inv.kappa_a.iter().map(|k| (k - mean) * (k - mean)).sum::<f64>() / n;
        assert!(mean > 0.0);
        assert!(var.sqrt() / mean < 1e-8, "relative stddev {}", var.sqrt() / mean);
    }

    #[test]
    fn omega_equals_sqrt_kappa_times_sigma_dot() {
        let mut spec = scenario_by_label("E3").unwrap();
        spec.duration = 0.2;
        let traj = three_phase_trajectory(&spec, 12_000.0).unwrap();
        let inv = affine_invariants(&traj, DEFAULT_GUARD).unwrap();
        let trace = omega_affine(&traj, spec.omega_nominal, DEFAULT_GUARD).unwrap();
        for k in 0..trace.len() {
            assert!(inv.valid[k] && trace.valid[k]);
            let composed = inv.kappa_a[k].sqrt() * inv.sigma_dot[k] / spec.omega_nominal;
            let rel = (composed - trace.omega_pu[k]).abs() / trace.omega_pu[k];
            assert!(rel < 1e-12, "sample {k}: rel {rel}");
        }
    }

    #[test]
    fn quadrature_orientation_still_estimates() {
        // The raw quadrature embedding (v, v') runs clockwise: [v, v'] < 0.
        // omega_a works off the bracket ratio; frenet relies on the
        // orientation normalization.
        let mut spec = scenario_by_label("S1").unwrap();
        spec.duration = 0.2;
        spec.phases[0].phase_mod = TimeFn::constant(0.0);
        let traj = crate::analytic::single_phase_trajectory(&spec, 12_000.0).unwrap();
        let affine = omega_affine(&traj, spec.omega_nominal, DEFAULT_GUARD).unwrap();
        assert_eq!(affine.fraction_valid(), 1.0);
        for &w in &affine.omega_pu {
            assert!((w - 1.0).abs() < 1e-10);
        }
        let frenet = omega_frenet(&traj, spec.omega_nominal, DEFAULT_GUARD).unwrap();
        assert_eq!(frenet.fraction_valid(), 1.0);
        assert!(frenet.omega_pu.iter().all(|&w| w > 0.0));
    }

    #[test]
    fn slow_variation_ratios() {
        // E6: |phi_dot| max = 0.4 pi^2, so the h = 1 ratio is 0.4 pi / 100.
        let e6 = scenario_by_label("E6").unwrap();
        let report = check_slow_variation(&e6, 2).unwrap();
        assert!(report.conditions_satisfied());
        let h1_phase = report
            .slow_variation_margins
            .iter()
            .find(|m| m.kind == MarginKind::PhaseMod && m.order == 1 && m.phase == 0)
            .unwrap();
        assert!((h1_phase.ratio - 0.4 * PI / 100.0).abs() < 1e-9);
        assert!((h1_phase.ratio - 0.012566).abs() < 1e-6);

        let e1 = scenario_by_label("E1").unwrap();
        let report = check_slow_variation(&e1, 2).unwrap();
        assert!(report.conditions_satisfied());
        assert_eq!(report.worst_ratio(), 0.0);

        // phi = omega_o t doubles the frequency: h = 1 ratio is exactly 1.
        let mut doubled = scenario_by_label("S1").unwrap();
        doubled.phases[0].phase_mod = TimeFn::ramp(doubled.omega_nominal);
        let report = check_slow_variation(&doubled, 3).unwrap();
        assert!(!report.conditions_satisfied());
        assert!((report.worst_ratio() - 1.0).abs() < 1e-12);

        assert!(check_slow_variation(&e1, 4).is_err());
    }
}
