//! Single-excitation states, Gaussian magnon packets and observables.

use num_complex::Complex64;

use crate::chain::{ChainSpec, TrapConfig};
use crate::error::{Error, Result};

/// Tolerance on the unit-norm invariant of [`WaveState`].
pub const NORM_TOL: f64 = 1e-9;

/// Amplitudes in the `|phi_n>` basis at a given time.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveState {
    pub amplitudes: Vec<Complex64>,
    pub time: f64,
}

impl WaveState {
    /// Wraps amplitudes that already have unit norm.
    pub fn new(amplitudes: Vec<Complex64>, time: f64) -> Result<Self> {
        let state = WaveState { amplitudes, time };
        let norm = state.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::invalid("amplitudes", format!("norm {norm} is not 1")));
        }
        Ok(state)
    }

    /// Scales the amplitudes to unit norm.
    pub fn normalized(mut amplitudes: Vec<Complex64>, time: f64) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::invalid("amplitudes", "cannot normalise a zero or non-finite vector"));
        }
        amplitudes.iter_mut().for_each(|a| *a /= norm);
        Ok(WaveState { amplitudes, time })
    }

    /// The fully localised excitation `|phi_site>`.
    pub fn site(n_sites: usize, site: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); n_sites];
        amplitudes[site] = Complex64::new(1.0, 0.0);
        WaveState { amplitudes, time: 0.0 }
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `<x> = sum_n x_n |psi_n|^2`.
    pub fn mean_position(&self, spec: &ChainSpec) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(n, a)| spec.site_position(n) * a.norm_sqr())
            .sum()
    }

    pub fn conj(&self) -> Self {
        WaveState {
            amplitudes: self.amplitudes.iter().map(|a| a.conj()).collect(),
            time: self.time,
        }
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }
}

/// Gaussian packet `b_n(u) = exp(-(x_n - u)^2 / 2 sigma^2)`, normalised, with
/// `sigma` taken from the trap's initial frequency.
pub fn gaussian_packet(center: f64, trap: &TrapConfig, spec: &ChainSpec) -> Result<WaveState> {
    gaussian_packet_with_width(center, trap.sigma(spec.coupling()), spec)
}

/// Ground-state packet at `x_A`.
pub fn initial_packet(trap: &TrapConfig, spec: &ChainSpec) -> Result<WaveState> {
    gaussian_packet(trap.x_start, trap, spec)
}

/// Target packet at `x_B`, with the width set by the final frequency.
pub fn target_packet(trap: &TrapConfig, spec: &ChainSpec) -> Result<WaveState> {
    gaussian_packet_with_width(trap.x_end(), trap.sigma_final(spec.coupling()), spec)
}

/// Gaussian packet with an explicit width.
pub fn gaussian_packet_with_width(center: f64, sigma: f64, spec: &ChainSpec) -> Result<WaveState> {
    if !(0.0..=spec.length()).contains(&center) {
        return Err(Error::invalid(
            "center",
            format!("{center} lies outside the chain [0, {}]", spec.length()),
        ));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid("sigma", format!("must be positive, got {sigma}")));
    }
    let amplitudes: Vec<Complex64> = (0..spec.n_sites())
        .map(|n| {
            let u = (spec.site_position(n) - center) / sigma;
            Complex64::new((-0.5 * u * u).exp(), 0.0)
        })
        .collect();
    let state = WaveState::normalized(amplitudes, 0.0)?;
    let occupied = state.amplitudes.iter().filter(|a| a.re > 1e-6).count();
    if occupied < 3 {
        log::warn!(
            "packet of width {sigma} covers only {occupied} sites; the continuum mapping does not hold"
        );
    }
    Ok(state)
}

/// `F = |<a|b>|^2`, clamped to `[0, 1]` against rounding.
pub fn fidelity(a: &WaveState, b: &WaveState) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    Ok(overlap(&a.amplitudes, &b.amplitudes).norm_sqr().clamp(0.0, 1.0))
}

/// `<a|b>` on raw amplitude slices of equal length.
pub(crate) fn overlap(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// `<sigma_z^n> = 2 |psi_n|^2 - 1`: every spin but the excitation points down.
pub fn local_magnetization(psi: &WaveState) -> Vec<f64> {
    psi.amplitudes.iter().map(|a| 2.0 * a.norm_sqr() - 1.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(n: usize) -> ChainSpec {
        ChainSpec::uniform(n, 1.0).unwrap()
    }

    #[test]
    fn neighbour_ratio_for_sigma_two() {
        let spec = chain(101);
        let trap = TrapConfig::new(0.5, 50.0, 0.0);
        let psi = gaussian_packet(50.0, &trap, &spec).unwrap();
        let ratio = psi.amplitudes[51].re / psi.amplitudes[50].re;
        assert!((ratio - (-0.125f64).exp()).abs() < 1e-14);
        assert!((ratio - 0.8825).abs() < 1e-4);
    }

    #[test]
    fn packet_is_normalised_and_peaked() {
        let spec = chain(80);
        let psi = gaussian_packet_with_width(33.3, 3.1, &spec).unwrap();
        assert!((psi.norm() - 1.0).abs() < 1e-14);
        let argmax = psi
            .amplitudes
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.re.partial_cmp(&b.1.re).unwrap())
            .unwrap()
            .0;
        assert_eq!(argmax, 33);
        assert!(psi.amplitudes.iter().all(|a| a.re >= 0.0 && a.im == 0.0));
    }

    #[test]
    fn symmetric_about_site_center() {
        let spec = chain(61);
        let psi = gaussian_packet_with_width(30.0, 2.0, &spec).unwrap();
        for k in 1..=30 {
            assert_eq!(psi.amplitudes[30 - k], psi.amplitudes[30 + k]);
        }
    }

    #[test]
    fn overlap_two_sigma_apart() {
        // continuum: |<a|b>|^2 = exp(-D^2 / (2 sigma^2)) = e^-2 at D = 2 sigma
        let spec = chain(101);
        let a = gaussian_packet_with_width(40.0, 2.0, &spec).unwrap();
        let b = gaussian_packet_with_width(44.0, 2.0, &spec).unwrap();
        let f = fidelity(&a, &b).unwrap();
        let expect = (-2.0f64).exp();
        assert!((f - expect).abs() / expect < 0.01, "{f}");
        assert!((f - 0.1353).abs() < 0.0014);
    }

    #[test]
    fn fidelity_basics() {
        let spec = chain(20);
        let psi = gaussian_packet_with_width(7.2, 1.7, &spec).unwrap();
        assert!((fidelity(&psi, &psi).unwrap() - 1.0).abs() < 1e-14);
        let phase = Complex64::from_polar(1.0, 0.73);
        let rotated = WaveState {
            amplitudes: psi.amplitudes.iter().map(|a| a * phase).collect(),
            time: 0.0,
        };
        assert!((fidelity(&psi, &rotated).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(fidelity(&WaveState::site(20, 0), &WaveState::site(20, 1)).unwrap(), 0.0);
        assert!(matches!(
            fidelity(&WaveState::site(20, 0), &WaveState::site(21, 0)),
            Err(Error::LengthMismatch(20, 21))
        ));
    }

    #[test]
    fn localized_magnetization() {
        let m = local_magnetization(&WaveState::site(7, 3));
        for (n, v) in m.iter().enumerate() {
            assert_eq!(*v, if n == 3 { 1.0 } else { -1.0 });
        }
    }

    #[test]
    fn center_magnetization_of_packet() {
        // sum_n exp(-(x_n - u)^2 / sigma^2) ~ sigma sqrt(pi)
        let spec = chain(101);
        let psi = gaussian_packet_with_width(50.0, 2.0, &spec).unwrap();
        let m = local_magnetization(&psi)[50];
        let expect = 2.0 / (2.0 * std::f64::consts::PI.sqrt()) - 1.0;
        assert!(((m - expect) / expect).abs() < 0.02, "{m} vs {expect}");
    }

    #[test]
    fn rejects_center_outside_chain() {
        let spec = chain(10);
        assert!(gaussian_packet_with_width(-1.0, 2.0, &spec).is_err());
        assert!(gaussian_packet_with_width(9.5, 2.0, &spec).is_err());
        assert!(gaussian_packet_with_width(4.0, 0.0, &spec).is_err());
    }

    #[test]
    fn new_checks_norm() {
        assert!(WaveState::new(vec![Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)], 0.0).is_ok());
        assert!(WaveState::new(vec![Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.7)], 0.0).is_err());
    }
}
