//! Exact planar trajectories for synthetic scenarios.
//!
//! Scenario channels are `v(t) = V(t) sin(theta(t))` with symbolically
//! differentiable `V` and `theta`, so every time derivative is available
//! in closed form. This path injects exact derivatives into the
//! estimators, isolating estimator error from numerical-differentiation
//! error, and doubles as the oracle the stencil pipeline is checked
//! against.

use crate::error::{Error, Result};
use crate::transforms::{PlanarPair, PlanarTrajectory};
use crate::waveforms::{PhaseSpec, ScenarioSpec};

const SQRT_2_3: f64 = 0.816496580927726;
const SQRT_3_2: f64 = 0.8660254037844386;

/// Exact derivatives of one scenario channel, orders 0..=3.
struct ChannelDerivs {
    v: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
    d3: Vec<f64>,
}

fn channel_derivs(phase: &PhaseSpec, omega_nominal: f64, n: usize, dt: f64) -> ChannelDerivs {
    let mag = &phase.magnitude;
    let mag1 = mag.derivative();
    let mag2 = mag1.derivative();
    let mag3 = mag2.derivative();
    let phi = &phase.phase_mod;
    let phi1 = phi.derivative();
    let phi2 = phi1.derivative();
    let phi3 = phi2.derivative();

    let mut out = ChannelDerivs {
        v: Vec::with_capacity(n),
        d1: Vec::with_capacity(n),
        d2: Vec::with_capacity(n),
        d3: Vec::with_capacity(n),
    };
    for k in 0..n {
        let t = k as f64 * dt;
        let theta = omega_nominal * t + phi.eval(t) + phase.displacement;
        let (s, c) = theta.sin_cos();
        let v0 = mag.eval(t);
        let v1 = mag1.eval(t);
        let v2 = mag2.eval(t);
        let v3 = mag3.eval(t);
        let th1 = omega_nominal + phi1.eval(t);
        let th2 = phi2.eval(t);
        let th3 = phi3.eval(t);

        out.v.push(v0 * s);
        out.d1.push(v1 * s + v0 * th1 * c);
        out.d2.push(v2 * s + 2.0 * v1 * th1 * c + v0 * th2 * c - v0 * th1 * th1 * s);
        out.d3.push(
            v3 * s + 3.0 * v2 * th1 * c + 3.0 * v1 * th2 * c - 3.0 * v1 * th1 * th1 * s
                + v0 * th3 * c
                - 3.0 * v0 * th1 * th2 * s
                - v0 * th1 * th1 * th1 * c,
        );
    }
    out
}

fn clarke_rows(a: &[f64], b: &[f64], c: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let alpha = a
        .iter()
        .zip(b)
        .zip(c)
        .map(|((a, b), c)| SQRT_2_3 * (a - 0.5 * b - 0.5 * c))
        .collect();
    let beta = b
        .iter()
        .zip(c)
        .map(|(b, c)| SQRT_2_3 * SQRT_3_2 * (b - c))
        .collect();
    (alpha, beta)
}

fn scaled(mut pair: (Vec<f64>, Vec<f64>), base: f64) -> PlanarPair {
    if base != 1.0 {
        for x in pair.0.iter_mut().chain(pair.1.iter_mut()) {
            *x /= base;
        }
    }
    PlanarPair { v1: pair.0, v2: pair.1 }
}

/// Exact alpha/beta trajectory of a three-phase scenario with derivative
/// orders 1 and 2 populated. All samples are valid. `base` divides every
/// sequence (use 1.0 for volts).
pub fn three_phase_trajectory(spec: &ScenarioSpec, base: f64) -> Result<PlanarTrajectory> {
    spec.validate()?;
    if spec.phases.len() != 3 {
        return Err(Error::validation("analytic three-phase trajectory needs 3 phases"));
    }
    if !(base > 0.0) || !base.is_finite() {
        return Err(Error::validation("base must be positive and finite"));
    }
    let n = spec.sample_count();
    let dt = spec.dt();
    let derivs: Vec<ChannelDerivs> = spec
        .phases
        .iter()
        .map(|p| channel_derivs(p, spec.omega_nominal, n, dt))
        .collect();

    let pos = clarke_rows(&derivs[0].v, &derivs[1].v, &derivs[2].v);
    let d1 = clarke_rows(&derivs[0].d1, &derivs[1].d1, &derivs[2].d1);
    let d2 = clarke_rows(&derivs[0].d2, &derivs[1].d2, &derivs[2].d2);

    Ok(PlanarTrajectory {
        t0: 0.0,
        dt,
        v: scaled(pos, base),
        d1: Some(scaled(d1, base)),
        d2: Some(scaled(d2, base)),
        d3: None,
        valid: vec![true; n],
    })
}

/// Exact quadrature trajectory `(v, v')` of a single-phase scenario with
/// derivative orders 1 and 2 populated (internally uses the channel's
/// third derivative). All samples are valid.
pub fn single_phase_trajectory(spec: &ScenarioSpec, base: f64) -> Result<PlanarTrajectory> {
    spec.validate()?;
    if spec.phases.len() != 1 {
        return Err(Error::validation("analytic single-phase trajectory needs 1 phase"));
    }
    if !(base > 0.0) || !base.is_finite() {
        return Err(Error::validation("base must be positive and finite"));
    }
    let n = spec.sample_count();
    let dt = spec.dt();
    let d = channel_derivs(&spec.phases[0], spec.omega_nominal, n, dt);

    Ok(PlanarTrajectory {
        t0: 0.0,
        dt,
        v: scaled((d.v.clone(), d.d1.clone()), base),
        d1: Some(scaled((d.d1, d.d2.clone()), base)),
        d2: Some(scaled((d.d2, d.d3), base)),
        d3: None,
        valid: vec![true; n],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transforms::{
        clarke, differentiate, quadrature_embed, DerivativeConfig, DerivativeOrders,
    };
    use crate::waveforms::{generate_single_phase, generate_three_phase, scenario_by_label};

    /// The stencil pipeline and the closed-form derivatives are fully
    /// independent routes; they must agree on interior samples.
    #[test]
    fn analytic_matches_numerical_differentiation_three_phase() {
        for label in ["E3", "E6"] {
            let mut spec = scenario_by_label(label).unwrap();
            spec.duration = 0.3;
            let analytic = three_phase_trajectory(&spec, 1.0).unwrap();
            let (abc, _) = generate_three_phase(&spec).unwrap();
            let ab = clarke(&abc).unwrap();
            let numeric =
                differentiate(&ab, DerivativeOrders::up_to(2), &DerivativeConfig::default())
                    .unwrap();
            let w = spec.omega_nominal;
            let d1a = analytic.d1.as_ref().unwrap();
            let d1n = numeric.d1.as_ref().unwrap();
            let d2a = analytic.d2.as_ref().unwrap();
            let d2n = numeric.d2.as_ref().unwrap();
            let scale1 = 12_000.0 * w;
            let scale2 = 12_000.0 * w * w;
            for k in 0..numeric.len() {
                if !numeric.valid[k] {
                    continue;
                }
                assert!((analytic.v.v1[k] - numeric.v.v1[k]).abs() < 1e-9 * 12_000.0);
                assert!(
                    (d1a.v1[k] - d1n.v1[k]).abs() < 1e-6 * scale1,
                    "{label} d1 v1 at {k}: {} vs {}",
                    d1a.v1[k],
                    d1n.v1[k]
                );
                assert!((d1a.v2[k] - d1n.v2[k]).abs() < 1e-6 * scale1);
                assert!((d2a.v1[k] - d2n.v1[k]).abs() < 1e-6 * scale2);
                assert!((d2a.v2[k] - d2n.v2[k]).abs() < 1e-6 * scale2);
            }
        }
    }

    #[test]
    fn analytic_matches_numerical_quadrature_single_phase() {
        let mut spec = scenario_by_label("S1").unwrap();
        spec.duration = 0.3;
        let analytic = single_phase_trajectory(&spec, 1.0).unwrap();
        let (buffer, _) = generate_single_phase(&spec).unwrap();
        let numeric = quadrature_embed(&buffer, &DerivativeConfig::default()).unwrap();
        let w = spec.omega_nominal;
        let d1a = analytic.d1.as_ref().unwrap();
        let d1n = numeric.d1.as_ref().unwrap();
        let d2a = analytic.d2.as_ref().unwrap();
        let d2n = numeric.d2.as_ref().unwrap();
        let v0 = 12_000.0;
        for k in 0..numeric.len() {
            if !numeric.valid[k] {
                continue;
            }
            assert!((analytic.v.v2[k] - numeric.v.v2[k]).abs() < 1e-6 * v0 * w);
            assert!((d1a.v2[k] - d1n.v2[k]).abs() < 1e-6 * v0 * w * w);
            assert!(
                (d2a.v2[k] - d2n.v2[k]).abs() < 2e-6 * v0 * w * w * w,
                "third derivative at {k}: {} vs {}",
                d2a.v2[k],
                d2n.v2[k]
            );
        }
    }

    #[test]
    fn rejects_wrong_phase_counts() {
        let three = scenario_by_label("E1").unwrap();
        let one = scenario_by_label("S1").unwrap();
        assert!(single_phase_trajectory(&three, 1.0).is_err());
        assert!(three_phase_trajectory(&one, 1.0).is_err());
    }
}
