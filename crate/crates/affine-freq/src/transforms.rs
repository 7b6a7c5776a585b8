//! Planar projection of voltages and sample-wise numerical derivatives.
//!
//! Three-phase buffers map to the plane through the power-invariant
//! Clarke transform; single-phase buffers through the quadrature
//! embedding `(v, v')`. Derivatives are central finite differences with
//! configurable stencil width; samples within a stencil half-width of the
//! buffer edges are flagged invalid rather than extrapolated.

use crate::error::{Error, Result};
use crate::waveforms::{Channel, SignalBuffer, Units};

const SQRT_2_3: f64 = 0.816496580927726; // sqrt(2/3)
const SQRT_3_2: f64 = 0.8660254037844386; // sqrt(3)/2

/// Planar bracket `[a, b] = a1*b2 - b1*a2`: the signed area spanned by
/// two plane vectors. Antisymmetric and bilinear.
#[inline]
pub fn bracket(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - b[0] * a[1]
}

/// Power-invariant Clarke transform of channels a, b, c into alpha, beta.
///
/// Zero-sequence content is rejected: both output rows sum to zero over
/// the phase axis.
pub fn clarke(abc: &SignalBuffer) -> Result<SignalBuffer> {
    let (a, b, c) = match (abc.channel("a"), abc.channel("b"), abc.channel("c")) {
        (Some(a), Some(b), Some(c)) => (&a.samples, &b.samples, &c.samples),
        _ => {
            return Err(Error::validation(format!(
                "clarke transform needs channels a, b, c; buffer has {:?}",
                abc.channel_names()
            )))
        }
    };
    let n = a.len();
    let mut alpha = Vec::with_capacity(n);
    let mut beta = Vec::with_capacity(n);
    for k in 0..n {
        alpha.push(SQRT_2_3 * (a[k] - 0.5 * b[k] - 0.5 * c[k]));
        beta.push(SQRT_2_3 * (SQRT_3_2 * (b[k] - c[k])));
    }
    SignalBuffer::new(
        abc.t0,
        abc.dt,
        abc.units,
        vec![
            Channel { name: "alpha".to_string(), samples: alpha },
            Channel { name: "beta".to_string(), samples: beta },
        ],
    )
}

/// Central finite-difference configuration.
///
/// `stencil_halfwidth` applies to first and second derivatives (default 2,
/// a 5-point 4th-order stencil). Third derivatives use one extra point per
/// side (default 7-point, also 4th-order).
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeConfig {
    pub stencil_halfwidth: usize,
}

impl Default for DerivativeConfig {
    fn default() -> Self {
        DerivativeConfig { stencil_halfwidth: 2 }
    }
}

impl DerivativeConfig {
    /// Half-width used for the given derivative order.
    pub fn halfwidth_for(&self, order: usize) -> usize {
        if order >= 3 {
            self.stencil_halfwidth + 1
        } else {
            self.stencil_halfwidth
        }
    }

    fn check_order(&self, order: usize) -> Result<()> {
        if order == 0 || order > 3 {
            return Err(Error::validation(format!(
                "derivative order must be 1..=3, got {order}"
            )));
        }
        if self.halfwidth_for(order) < order {
            return Err(Error::validation(format!(
                "stencil halfwidth {} too small for derivative order {order}",
                self.stencil_halfwidth
            )));
        }
        Ok(())
    }
}

/// Which derivative orders to populate on a [`PlanarTrajectory`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DerivativeOrders {
    pub first: bool,
    pub second: bool,
    pub third: bool,
}

impl DerivativeOrders {
    /// Orders 1..=max.
    pub fn up_to(max: usize) -> Self {
        DerivativeOrders { first: max >= 1, second: max >= 2, third: max >= 3 }
    }

    fn max_order(&self) -> Option<usize> {
        if self.third {
            Some(3)
        } else if self.second {
            Some(2)
        } else if self.first {
            Some(1)
        } else {
            None
        }
    }

    fn list(&self) -> Vec<usize> {
        let mut orders = Vec::new();
        if self.first {
            orders.push(1);
        }
        if self.second {
            orders.push(2);
        }
        if self.third {
            orders.push(3);
        }
        orders
    }
}

/// One derivative order of a planar curve: component sequences for both
/// axes.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarPair {
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
}

impl PlanarPair {
    pub fn at(&self, k: usize) -> [f64; 2] {
        [self.v1[k], self.v2[k]]
    }

    pub fn len(&self) -> usize {
        self.v1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v1.is_empty()
    }
}

/// A planar curve with sample-aligned time derivatives and validity flags.
///
/// `valid[k]` is false within a stencil half-width of the buffer edges,
/// where derivative values are left at zero instead of being extrapolated.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarTrajectory {
    pub t0: f64,
    pub dt: f64,
    pub v: PlanarPair,
    pub d1: Option<PlanarPair>,
    pub d2: Option<PlanarPair>,
    pub d3: Option<PlanarPair>,
    pub valid: Vec<bool>,
}

impl PlanarTrajectory {
    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn d1(&self) -> Result<&PlanarPair> {
        self.d1.as_ref().ok_or_else(|| Error::validation("trajectory is missing first derivatives"))
    }

    pub fn d2(&self) -> Result<&PlanarPair> {
        self.d2
            .as_ref()
            .ok_or_else(|| Error::validation("trajectory is missing second derivatives"))
    }
}

/// Weights of the central finite-difference stencil for `order` on a unit
/// grid of offsets `-halfwidth ..= halfwidth` (Fornberg's recursion).
/// Divide by `dt^order` when applying to a sampled sequence.
pub fn central_weights(order: usize, halfwidth: usize) -> Vec<f64> {
    assert!(order >= 1 && 2 * halfwidth >= order, "stencil cannot resolve the order");
    let nodes: Vec<f64> = (-(halfwidth as isize)..=halfwidth as isize)
        .map(|i| i as f64)
        .collect();
    let n = nodes.len();
    let mut c = vec![vec![0.0; order + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = nodes[0];
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i];
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

/// Apply the central stencil to the interior of `x`; edge samples are left
/// at zero (callers flag them invalid).
pub fn derivative_series(x: &[f64], dt: f64, order: usize, halfwidth: usize) -> Vec<f64> {
    let weights = central_weights(order, halfwidth);
    let scale = dt.powi(order as i32);
    let n = x.len();
    let mut out = vec![0.0; n];
    if n < 2 * halfwidth + 1 {
        return out;
    }
    for k in halfwidth..n - halfwidth {
        let mut acc = 0.0;
        for (j, w) in weights.iter().enumerate() {
            acc += w * x[k - halfwidth + j];
        }
        out[k] = acc / scale;
    }
    out
}

/// Differentiate a two-channel planar buffer, producing the requested
/// derivative orders. Interior accuracy is the stencil's order; samples
/// within the widest half-width of either edge are flagged invalid.
pub fn differentiate(
    buffer: &SignalBuffer,
    orders: DerivativeOrders,
    cfg: &DerivativeConfig,
) -> Result<PlanarTrajectory> {
    if buffer.channels.len() != 2 {
        return Err(Error::validation(format!(
            "differentiate needs exactly 2 channels, got {}",
            buffer.channels.len()
        )));
    }
    let max_order = orders
        .max_order()
        .ok_or_else(|| Error::validation("no derivative orders requested"))?;
    for order in orders.list() {
        cfg.check_order(order)?;
    }
    let hw_max = cfg.halfwidth_for(max_order);
    let n = buffer.len();
    if n < 2 * hw_max + 1 {
        return Err(Error::validation(format!(
            "buffer too short: {n} samples < {} required by the stencil",
            2 * hw_max + 1
        )));
    }

    let x1 = &buffer.channels[0].samples;
    let x2 = &buffer.channels[1].samples;
    let pair_for = |order: usize| -> PlanarPair {
        let hw = cfg.halfwidth_for(order);
        PlanarPair {
            v1: derivative_series(x1, buffer.dt, order, hw),
            v2: derivative_series(x2, buffer.dt, order, hw),
        }
    };

    let valid: Vec<bool> = (0..n).map(|k| k >= hw_max && k < n - hw_max).collect();
    Ok(PlanarTrajectory {
        t0: buffer.t0,
        dt: buffer.dt,
        v: PlanarPair { v1: x1.clone(), v2: x2.clone() },
        d1: orders.first.then(|| pair_for(1)),
        d2: orders.second.then(|| pair_for(2)),
        d3: orders.third.then(|| pair_for(3)),
        valid,
    })
}

/// Quadrature embedding of a single-phase voltage: `v1 = v`, `v2 = v'`.
///
/// Populating the embedded curve's first and second derivatives requires
/// derivatives of `v` up to order three, all taken directly from the raw
/// samples (never by differentiating an already-differentiated sequence).
pub fn quadrature_embed(buffer: &SignalBuffer, cfg: &DerivativeConfig) -> Result<PlanarTrajectory> {
    if buffer.channels.len() != 1 {
        return Err(Error::validation(format!(
            "quadrature embedding needs exactly 1 channel, got {}",
            buffer.channels.len()
        )));
    }
    for order in 1..=3 {
        cfg.check_order(order)?;
    }
    let hw3 = cfg.halfwidth_for(3);
    let n = buffer.len();
    if n < 2 * hw3 + 1 {
        return Err(Error::validation(format!(
            "buffer too short: {n} samples < {} required by the third-derivative stencil",
            2 * hw3 + 1
        )));
    }

    let x = &buffer.channels[0].samples;
    let dv = derivative_series(x, buffer.dt, 1, cfg.halfwidth_for(1));
    let d2v = derivative_series(x, buffer.dt, 2, cfg.halfwidth_for(2));
    let d3v = derivative_series(x, buffer.dt, 3, hw3);

    let valid: Vec<bool> = (0..n).map(|k| k >= hw3 && k < n - hw3).collect();
    Ok(PlanarTrajectory {
        t0: buffer.t0,
        dt: buffer.dt,
        v: PlanarPair { v1: x.clone(), v2: dv.clone() },
        d1: Some(PlanarPair { v1: dv, v2: d2v.clone() }),
        d2: Some(PlanarPair { v1: d2v, v2: d3v }),
        d3: None,
        valid,
    })
}

/// Amplitude base for per-unit scaling: `sqrt(2 * mean(x^2))` averaged
/// across channels over the first `window` samples. For a sinusoid this
/// recovers its amplitude; for a balanced Clarke pair, the trajectory
/// radius.
pub fn pu_base(buffer: &SignalBuffer, window: usize) -> Result<f64> {
    let window = window.min(buffer.len());
    if window == 0 {
        return Err(Error::validation("pu base window must be nonempty"));
    }
    let mut mean_square = 0.0;
    for channel in &buffer.channels {
        mean_square +=
            channel.samples[..window].iter().map(|x| x * x).sum::<f64>() / window as f64;
    }
    mean_square /= buffer.channels.len() as f64;
    Ok((2.0 * mean_square).sqrt())
}

/// Scale every channel by `1 / base` and mark the buffer per-unit.
pub fn to_per_unit(buffer: &SignalBuffer, base: f64) -> Result<SignalBuffer> {
    if !(base > 0.0) || !base.is_finite() {
        return Err(Error::validation(format!("pu base must be positive and finite, got {base}")));
    }
    let channels = buffer
        .channels
        .iter()
        .map(|c| Channel {
            name: c.name.clone(),
            samples: c.samples.iter().map(|x| x / base).collect(),
        })
        .collect();
    SignalBuffer::new(buffer.t0, buffer.dt, Units::PerUnit, channels)
}
