//! Continuum reference for the chain simulation.
//!
//! The centroid of a Gaussian packet in a (possibly moving) harmonic trap
//! follows `x'' + omega^2(t) (x - X0(t)) = 0` independent of the mass, and the
//! overlap of two equal-width Gaussians has a closed form. Together they give
//! a cheap check on the mapping from chain to trapped particle.

use crate::chain::ChainSpec;
use crate::control::ControlProtocol;
use crate::error::{Error, Result};
use crate::states::WaveState;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassicalState {
    pub position: f64,
    pub velocity: f64,
}

impl ClassicalState {
    pub fn new(position: f64, velocity: f64) -> Self {
        ClassicalState { position, velocity }
    }
}

/// Integrates the centroid equation with classical RK4 from `(x0, v0)` at
/// `t = 0` to `t_f`. The step is shrunk so that it tiles `[0, t_f]`; the
/// returned samples include both end points.
pub fn classical_trajectory(
    protocol: &ControlProtocol,
    x0: f64,
    v0: f64,
    t_f: f64,
    dt: f64,
) -> Result<Vec<(f64, ClassicalState)>> {
    if !(dt > 0.0) {
        return Err(Error::invalid("dt", format!("must be positive, got {dt}")));
    }
    if !(t_f >= 0.0) || t_f > protocol.duration {
        return Err(Error::invalid(
            "t_f",
            format!("must lie in [0, {}], got {t_f}", protocol.duration),
        ));
    }
    let steps = (t_f / dt - 1e-9).ceil().max(0.0) as usize;
    let h = if steps > 0 { t_f / steps as f64 } else { 0.0 };

    let accel = |t: f64, x: f64| -> Result<f64> {
        let (omega_sq, center) = protocol.controls(t.min(protocol.duration))?;
        Ok(-omega_sq * (x - center))
    };

    let mut out = Vec::with_capacity(steps + 1);
    let (mut x, mut v) = (x0, v0);
    out.push((0.0, ClassicalState::new(x, v)));
    for k in 0..steps {
        let t = k as f64 * h;
        let k1x = v;
        let k1v = accel(t, x)?;
        let k2x = v + 0.5 * h * k1v;
        let k2v = accel(t + 0.5 * h, x + 0.5 * h * k1x)?;
        let k3x = v + 0.5 * h * k2v;
        let k3v = accel(t + 0.5 * h, x + 0.5 * h * k2x)?;
        let k4x = v + h * k3v;
        let k4v = accel(t + h, x + h * k3x)?;
        x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        let t_next = (k + 1) as f64 * h;
        if !(x.is_finite() && v.is_finite()) {
            return Err(Error::NonFinite { t: t_next });
        }
        out.push((t_next, ClassicalState::new(x, v)));
    }
    Ok(out)
}

/// `|<a|b>|^2` for two Gaussian packets of width `sigma` displaced by
/// `delta_x` in position and `delta_p` in momentum (`hbar = 1`).
pub fn continuum_fidelity(delta_x: f64, delta_p: f64, sigma: f64) -> f64 {
    (-delta_x * delta_x / (2.0 * sigma * sigma) - delta_p * delta_p * sigma * sigma / 2.0).exp()
}

/// `|<x>_chain(t) - x_classical(t)|` at every chain sample, with the
/// classical position interpolated linearly in time.
pub fn ehrenfest_deviation(
    chain_states: &[WaveState],
    spec: &ChainSpec,
    classical: &[(f64, ClassicalState)],
) -> Result<Vec<(f64, f64)>> {
    let (first, last) = match (classical.first(), classical.last()) {
        (Some(a), Some(b)) => (a.0, b.0),
        _ => return Err(Error::GridMismatch("empty classical trajectory".into())),
    };
    let slack = 1e-9 * (last - first).abs().max(1.0);
    chain_states
        .iter()
        .map(|psi| {
            let t = psi.time;
            if t < first - slack || t > last + slack {
                return Err(Error::GridMismatch(format!(
                    "chain time {t} outside classical range [{first}, {last}]"
                )));
            }
            let x = interpolate_position(classical, t.clamp(first, last));
            Ok((t, (psi.mean_position(spec) - x).abs()))
        })
        .collect()
}

fn interpolate_position(samples: &[(f64, ClassicalState)], t: f64) -> f64 {
    let idx = samples.partition_point(|(ts, _)| *ts < t);
    if idx == 0 {
        return samples[0].1.position;
    }
    if idx == samples.len() {
        return samples[samples.len() - 1].1.position;
    }
    let (t0, a) = samples[idx - 1];
    let (t1, b) = samples[idx];
    if t1 == t0 {
        return b.position;
    }
    let w = (t - t0) / (t1 - t0);
    a.position + w * (b.position - a.position)
}
