//! Quantitative comparison of frequency traces against ground truth.

use crate::error::{Error, Result};
use crate::geometry::FrequencyTrace;
use crate::waveforms::GroundTruth;

/// Band used for the settle-time measurement: the trace has settled once
/// its residual stays within this many per-unit of the reference.
pub const SETTLE_BAND_PU: f64 = 0.01;

/// Metrics for one estimator's trace. Error statistics are present only
/// when ground truth was available; ripple is the peak-to-peak of the
/// residual against truth (or of the raw trace about its own median when
/// truth is absent).
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorMetrics {
    pub estimator: crate::geometry::EstimatorId,
    pub rmse_pu: Option<f64>,
    pub max_abs_error_pu: Option<f64>,
    pub ripple_pp_pu: f64,
    pub settle_time_s: f64,
    pub fraction_valid: f64,
}

/// Metrics for every trace of a comparison run, all computed over valid
/// samples after the settling window.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub settle_s: f64,
    pub entries: Vec<EstimatorMetrics>,
}

impl MetricsReport {
    pub fn entry(&self, id: crate::geometry::EstimatorId) -> Option<&EstimatorMetrics> {
        self.entries.iter().find(|e| e.estimator == id)
    }
}

fn same_time_base(traces: &[FrequencyTrace]) -> bool {
    let first = &traces[0];
    traces.iter().all(|t| {
        t.len() == first.len()
            && (t.t0 - first.t0).abs() <= first.dt * 1e-6
            && ((t.dt - first.dt) / first.dt).abs() <= 1e-12
    })
}

/// Compute per-estimator metrics over valid samples at or after
/// `settle_s`. All traces must share one time base; truth, when given,
/// must be sample-aligned with them.
pub fn compute_metrics(
    traces: &[FrequencyTrace],
    truth: Option<&GroundTruth>,
    settle_s: f64,
) -> Result<MetricsReport> {
    if traces.is_empty() {
        return Err(Error::validation("no traces to compare"));
    }
    if !same_time_base(traces) {
        return Err(Error::validation("traces do not share a time base"));
    }
    let n = traces[0].len();
    if let Some(truth) = truth {
        if truth.len() != n {
            return Err(Error::validation(format!(
                "ground truth length {} does not match traces ({n})",
                truth.len()
            )));
        }
    }
    let dt = traces[0].dt;
    let t0 = traces[0].t0;
    let duration = (n - 1) as f64 * dt;
    if settle_s < 0.0 || settle_s >= duration {
        return Err(Error::validation(format!(
            "settle window {settle_s} s does not leave samples in a {duration} s trace"
        )));
    }
    let k0 = ((settle_s - t0) / dt).ceil().max(0.0) as usize;

    let entries = traces
        .iter()
        .map(|trace| {
            let window = k0..n;
            let window_len = window.len();
            let mut residuals: Vec<(usize, f64)> = Vec::new();
            for k in window {
                if !trace.valid[k] {
                    continue;
                }
                let reference = truth.map(|t| t.if_pu[k]).unwrap_or(0.0);
                residuals.push((k, trace.omega_pu[k] - reference));
            }
            let fraction_valid = residuals.len() as f64 / window_len as f64;

            let (rmse, max_abs, ripple) = if residuals.is_empty() {
                (None, None, 0.0)
            } else {
                let sum_sq: f64 = residuals.iter().map(|(_, e)| e * e).sum();
                let rmse = (sum_sq / residuals.len() as f64).sqrt();
                let max_abs = residuals.iter().map(|(_, e)| e.abs()).fold(0.0, f64::max);
                let max = residuals.iter().map(|(_, e)| *e).fold(f64::MIN, f64::max);
                let min = residuals.iter().map(|(_, e)| *e).fold(f64::MAX, f64::min);
                let ripple = max - min;
                if truth.is_some() {
                    (Some(rmse), Some(max_abs), ripple)
                } else {
                    (None, None, ripple)
                }
            };

            let settle_time = settle_time_s(trace, truth, t0, dt, duration);
            EstimatorMetrics {
                estimator: trace.estimator,
                rmse_pu: rmse,
                max_abs_error_pu: max_abs,
                ripple_pp_pu: ripple,
                settle_time_s: settle_time,
                fraction_valid,
            }
        })
        .collect();

    Ok(MetricsReport { settle_s, entries })
}

/// First time (seconds from the start of the trace) after which every
/// valid sample's residual stays within [`SETTLE_BAND_PU`] of the
/// reference. Returns the trace duration when it never settles.
fn settle_time_s(
    trace: &FrequencyTrace,
    truth: Option<&GroundTruth>,
    t0: f64,
    dt: f64,
    duration: f64,
) -> f64 {
    let reference_at = |k: usize| -> f64 {
        match truth {
            Some(t) => t.if_pu[k],
            None => 0.0,
        }
    };
    // Without truth, measure about the median of the valid tail so a
    // constant trace settles at zero.
    let offset = if truth.is_none() {
        let mut tail: Vec<f64> = trace
            .omega_pu
            .iter()
            .zip(&trace.valid)
            .filter(|(_, ok)| **ok)
            .map(|(w, _)| *w)
            .collect();
        if tail.is_empty() {
            return duration;
        }
        tail.sort_by(|a, b| a.partial_cmp(b).expect("finite trace"));
        tail[tail.len() / 2]
    } else {
        0.0
    };

    let mut saw_valid = false;
    let mut last_outside: Option<usize> = None;
    let mut first_valid = 0usize;
    for k in 0..trace.len() {
        if !trace.valid[k] {
            continue;
        }
        if !saw_valid {
            first_valid = k;
            saw_valid = true;
        }
        let residual = trace.omega_pu[k] - reference_at(k) - offset;
        if residual.abs() > SETTLE_BAND_PU {
            last_outside = Some(k);
        }
    }
    if !saw_valid {
        return duration;
    }
    match last_outside {
        None => (t0 + first_valid as f64 * dt - t0).max(0.0),
        Some(k) if k + 1 >= trace.len() => duration,
        Some(k) => (k + 1) as f64 * dt,
    }
}

fn fmt_opt(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{v:.6e}"),
        None => "-".to_string(),
    }
}

/// Render a fixed-width text table of the report.
pub fn render_table(scenario: &str, report: &MetricsReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "scenario {scenario} (metrics over valid samples after {:.3} s)\n",
        report.settle_s
    ));
    out.push_str(&format!(
        "{:<10} {:>13} {:>13} {:>13} {:>10} {:>9}\n",
        "estimator", "rmse_pu", "max_err_pu", "ripple_pp_pu", "settle_s", "valid"
    ));
    for e in &report.entries {
        out.push_str(&format!(
            "{:<10} {:>13} {:>13} {:>13} {:>10.4} {:>9.4}\n",
            e.estimator.as_str(),
            fmt_opt(e.rmse_pu),
            fmt_opt(e.max_abs_error_pu),
            format!("{:.6e}", e.ripple_pp_pu),
            e.settle_time_s,
            e.fraction_valid,
        ));
    }
    out
}

/// Render the report as machine-readable `key=value` lines.
pub fn render_kv(scenario: &str, report: &MetricsReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("scenario={scenario}\n"));
    out.push_str(&format!("settle_s={}\n", report.settle_s));
    for e in &report.entries {
        let name = e.estimator.as_str();
        if let Some(v) = e.rmse_pu {
            out.push_str(&format!("{name}.rmse_pu={v:.12e}\n"));
        }
        if let Some(v) = e.max_abs_error_pu {
            out.push_str(&format!("{name}.max_abs_error_pu={v:.12e}\n"));
        }
        out.push_str(&format!("{name}.ripple_pp_pu={:.12e}\n", e.ripple_pp_pu));
        out.push_str(&format!("{name}.settle_time_s={:.12e}\n", e.settle_time_s));
        out.push_str(&format!("{name}.fraction_valid={:.12e}\n", e.fraction_valid));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{EstimatorId, FrequencyTrace};

    fn flat_trace(value: f64, n: usize, id: EstimatorId) -> FrequencyTrace {
        FrequencyTrace {
            t0: 0.0,
            dt: 1e-3,
            omega_pu: vec![value; n],
            valid: vec![true; n],
            estimator: id,
        }
    }

    fn unit_truth(n: usize) -> GroundTruth {
        GroundTruth { t0: 0.0, dt: 1e-3, if_pu: vec![1.0; n], per_phase_pu: vec![vec![1.0; n]] }
    }

    #[test]
    fn constant_trace_scores_zero_error() {
        let trace = flat_trace(1.0, 1000, EstimatorId::Affine);
        let truth = unit_truth(1000);
        let report = compute_metrics(&[trace], Some(&truth), 0.2).unwrap();
        let e = &report.entries[0];
        assert_eq!(e.rmse_pu, Some(0.0));
        assert_eq!(e.max_abs_error_pu, Some(0.0));
        assert_eq!(e.ripple_pp_pu, 0.0);
        assert_eq!(e.settle_time_s, 0.0);
        assert_eq!(e.fraction_valid, 1.0);
    }

    #[test]
    fn settle_window_must_fit() {
        let trace = flat_trace(1.0, 100, EstimatorId::Affine);
        assert!(compute_metrics(&[trace.clone()], None, 0.2).is_err());
        assert!(compute_metrics(&[trace], None, 0.05).is_ok());
    }

    #[test]
    fn ripple_is_residual_peak_to_peak_against_truth() {
        let n = 2000;
        let mut trace = flat_trace(0.0, n, EstimatorId::Frenet);
        let mut truth = unit_truth(n);
        for k in 0..n {
            let t = k as f64 * 1e-3;
            truth.if_pu[k] = 1.0 + 0.1 * (2.0 * t).sin();
            // Perfect tracking plus a 0.02-pp wiggle.
            trace.omega_pu[k] = truth.if_pu[k] + 0.01 * (300.0 * t).sin();
        }
        let report = compute_metrics(&[trace], Some(&truth), 0.2).unwrap();
        let e = &report.entries[0];
        assert!((e.ripple_pp_pu - 0.02).abs() < 1e-3, "{}", e.ripple_pp_pu);
        assert!(e.rmse_pu.unwrap() < 0.01);
    }

    #[test]
    fn without_truth_rmse_is_omitted_and_ripple_uses_the_trace() {
        let n = 1000;
        let mut trace = flat_trace(1.0, n, EstimatorId::SrfPll);
        for k in 0..n {
            trace.omega_pu[k] = 1.0 + 0.05 * (0.3 * k as f64).sin();
        }
        let report = compute_metrics(&[trace], None, 0.1).unwrap();
        let e = &report.entries[0];
        assert!(e.rmse_pu.is_none());
        assert!(e.max_abs_error_pu.is_none());
        assert!((e.ripple_pp_pu - 0.1).abs() < 1e-3);
    }

    #[test]
    fn settle_time_finds_the_transient() {
        let n = 1000;
        let mut trace = flat_trace(1.0, n, EstimatorId::SrfPll);
        // 1.2 pu until sample 300, then locked.
        for k in 0..300 {
            trace.omega_pu[k] = 1.2;
        }
        let truth = unit_truth(n);
        let report = compute_metrics(&[trace], Some(&truth), 0.5).unwrap();
        let e = &report.entries[0];
        assert!((e.settle_time_s - 0.3).abs() < 2e-3, "{}", e.settle_time_s);
    }

    #[test]
    fn all_invalid_trace_reports_empty_metrics() {
        let n = 500;
        let mut trace = flat_trace(0.0, n, EstimatorId::Affine);
        trace.valid = vec![false; n];
        let truth = unit_truth(n);
        let report = compute_metrics(&[trace], Some(&truth), 0.1).unwrap();
        let e = &report.entries[0];
        assert!(e.rmse_pu.is_none());
        assert_eq!(e.fraction_valid, 0.0);
        assert_eq!(e.ripple_pp_pu, 0.0);
    }

    #[test]
    fn mismatched_time_bases_are_rejected() {
        let a = flat_trace(1.0, 100, EstimatorId::Affine);
        let mut b = flat_trace(1.0, 100, EstimatorId::Frenet);
        b.dt = 2e-3;
        assert!(compute_metrics(&[a, b], None, 0.01).is_err());
    }

    #[test]
    fn rendering_is_stable() {
        let trace = flat_trace(1.0, 1000, EstimatorId::Affine);
        let truth = unit_truth(1000);
        let report = compute_metrics(&[trace], Some(&truth), 0.2).unwrap();
        let kv1 = render_kv("E1", &report);
        let kv2 = render_kv("E1", &report);
        assert_eq!(kv1, kv2);
        assert!(kv1.contains("affine.rmse_pu=0.000000000000e0"));
        let table = render_table("E1", &report);
        assert!(table.contains("estimator"));
        assert!(table.lines().count() >= 3);
    }
}
