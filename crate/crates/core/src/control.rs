//! Control protocols `(omega^2(t), X0(t))` for the trap.
//!
//! Protocols are stored as closed-form generators plus their parameters and
//! are evaluated on demand; nothing is tabulated.

use serde::{Deserialize, Serialize};

use crate::chain::TrapConfig;
use crate::error::{Error, Result};

/// Default lower bound on `|omega^2|` wherever the trap centre is recovered
/// by dividing by it.
pub const DEFAULT_OMEGA_SQ_FLOOR: f64 = 1e-6;

/// Grid used to scan an inverse-engineered protocol for division hazards.
const HAZARD_SCAN_POINTS: usize = 10_001;
/// Relative tolerance on protocol time arguments.
const TIME_SLACK: f64 = 1e-12;

/// Boundary tolerance, relative to the larger of 1 and the endpoint scale,
/// that an ansatz must meet before it is inverted.
const ANSATZ_BC_TOL: f64 = 1e-9;

/// Polynomial in the reduced time `s = t / t_f`, `sum_k c_k s^k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SPoly {
    pub coeffs: Vec<f64>,
}

impl SPoly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        SPoly { coeffs }
    }

    pub fn constant(c: f64) -> Self {
        SPoly { coeffs: vec![c] }
    }

    /// `start + (end - start) (10 s^3 - 15 s^4 + 6 s^5)`: the lowest-degree
    /// bridge with vanishing first and second derivatives at both ends.
    pub fn quintic_bridge(start: f64, end: f64) -> Self {
        let span = end - start;
        if span == 0.0 {
            return Self::constant(start);
        }
        SPoly {
            coeffs: vec![start, 0.0, 0.0, 10.0 * span, -15.0 * span, 6.0 * span],
        }
    }

    /// `order`-th derivative with respect to `s`, evaluated by Horner.
    pub fn derivative(&self, s: f64, order: usize) -> f64 {
        let mut acc = 0.0;
        for k in (order..self.coeffs.len()).rev() {
            let falling: f64 = (0..order).map(|j| (k - j) as f64).product();
            acc = acc * s + falling * self.coeffs[k];
        }
        acc
    }

    pub fn value(&self, s: f64) -> f64 {
        self.derivative(s, 0)
    }
}

/// Auxiliary functions `X_c(t)` and `rho(t)` of the invariant-based design,
/// with analytic derivatives.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuxiliaryAnsatz {
    pub duration: f64,
    pub x_c: SPoly,
    pub rho: SPoly,
    /// `sqrt(omega0 / omega_f)`, the required `rho(t_f)`.
    pub gamma: f64,
    pub x_start: f64,
    pub x_end: f64,
}

impl AuxiliaryAnsatz {
    /// `[X_c, dX_c/dt, d2X_c/dt2]` at time `t`.
    pub fn x_c_derivatives(&self, t: f64) -> [f64; 3] {
        time_derivatives(&self.x_c, t, self.duration)
    }

    /// `[rho, drho/dt, d2rho/dt2]` at time `t`.
    pub fn rho_derivatives(&self, t: f64) -> [f64; 3] {
        time_derivatives(&self.rho, t, self.duration)
    }
}

fn time_derivatives(p: &SPoly, t: f64, duration: f64) -> [f64; 3] {
    let s = t / duration;
    [
        p.value(s),
        p.derivative(s, 1) / duration,
        p.derivative(s, 2) / (duration * duration),
    ]
}

/// Quintic `X_c` from `x_A` to `x_B` and, when the trap frequency changes,
/// the quintic `rho` bridge from 1 to `gamma`.
pub fn polynomial_xc(trap: &TrapConfig, t_f: f64) -> Result<AuxiliaryAnsatz> {
    check_duration(t_f)?;
    let gamma = (trap.omega0 / trap.omega_f).sqrt();
    Ok(AuxiliaryAnsatz {
        duration: t_f,
        x_c: SPoly::quintic_bridge(trap.x_start, trap.x_end()),
        rho: SPoly::quintic_bridge(1.0, gamma),
        gamma,
        x_start: trap.x_start,
        x_end: trap.x_end(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryCheck {
    pub name: &'static str,
    pub value: f64,
    pub target: f64,
    pub passed: bool,
}

/// Endpoint values of `X_c`, `rho` and their first two derivatives.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryReport {
    pub checks: Vec<BoundaryCheck>,
}

impl BoundaryReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &BoundaryCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&BoundaryCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Checks the transport and width boundary conditions at `t = 0` and
/// `t = t_f`, each to absolute tolerance `tol`.
pub fn verify_boundary_conditions(ansatz: &AuxiliaryAnsatz, t_f: f64, tol: f64) -> BoundaryReport {
    let x0 = time_derivatives(&ansatz.x_c, 0.0, t_f);
    let x1 = time_derivatives(&ansatz.x_c, t_f, t_f);
    let r0 = time_derivatives(&ansatz.rho, 0.0, t_f);
    let r1 = time_derivatives(&ansatz.rho, t_f, t_f);
    let rows: [(&'static str, f64, f64); 12] = [
        ("x_c(0)", x0[0], ansatz.x_start),
        ("x_c(tf)", x1[0], ansatz.x_end),
        ("x_c'(0)", x0[1], 0.0),
        ("x_c'(tf)", x1[1], 0.0),
        ("x_c''(0)", x0[2], 0.0),
        ("x_c''(tf)", x1[2], 0.0),
        ("rho(0)", r0[0], 1.0),
        ("rho(tf)", r1[0], ansatz.gamma),
        ("rho'(0)", r0[1], 0.0),
        ("rho'(tf)", r1[1], 0.0),
        ("rho''(0)", r0[2], 0.0),
        ("rho''(tf)", r1[2], 0.0),
    ];
    BoundaryReport {
        checks: rows
            .into_iter()
            .map(|(name, value, target)| BoundaryCheck {
                name,
                value,
                target,
                passed: (value - target).abs() <= tol,
            })
            .collect(),
    }
}

/// Closed-form generator behind a [`ControlProtocol`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProtocolKind {
    /// `X0 = x_A + s d`, constant frequency.
    LinearRamp {
        x_start: f64,
        distance: f64,
        omega0: f64,
    },
    /// Shortcut trajectory from the quintic `X_c` with `rho = 1`.
    StaPolynomial {
        x_start: f64,
        distance: f64,
        omega0: f64,
    },
    /// `omega^2 = (omega0^2 / rho^3 - rho'') / rho`, `X0 = X_c'' / omega^2 + X_c`.
    InverseEngineered {
        ansatz: AuxiliaryAnsatz,
        omega0: f64,
        omega_sq_floor: f64,
    },
    /// Fixed trap, used for frozen-Hamiltonian runs.
    Stationary { center: f64, omega_sq: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlProtocol {
    pub label: String,
    pub duration: f64,
    pub kind: ProtocolKind,
    /// Evaluate at `t_f - t` instead of `t`.
    #[serde(default)]
    pub reversed: bool,
}

fn check_duration(t_f: f64) -> Result<()> {
    if t_f > 0.0 && t_f.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("t_f", format!("duration must be positive, got {t_f}")))
    }
}

impl ControlProtocol {
    pub fn linear_ramp(trap: &TrapConfig, t_f: f64) -> Result<Self> {
        check_duration(t_f)?;
        Ok(ControlProtocol {
            label: "linear".into(),
            duration: t_f,
            kind: ProtocolKind::LinearRamp {
                x_start: trap.x_start,
                distance: trap.distance,
                omega0: trap.omega0,
            },
            reversed: false,
        })
    }

    pub fn sta_polynomial(trap: &TrapConfig, t_f: f64) -> Result<Self> {
        check_duration(t_f)?;
        if !(trap.omega0 > 0.0) {
            return Err(Error::invalid("omega0", "must be positive"));
        }
        Ok(ControlProtocol {
            label: "sta".into(),
            duration: t_f,
            kind: ProtocolKind::StaPolynomial {
                x_start: trap.x_start,
                distance: trap.distance,
                omega0: trap.omega0,
            },
            reversed: false,
        })
    }

    pub fn stationary(center: f64, omega_sq: f64, duration: f64) -> Result<Self> {
        check_duration(duration)?;
        Ok(ControlProtocol {
            label: "stationary".into(),
            duration,
            kind: ProtocolKind::Stationary { center, omega_sq },
            reversed: false,
        })
    }

    /// Same as [`inverse_engineer`] with an explicit `|omega^2|` floor.
    pub fn inverse_engineered(
        ansatz: &AuxiliaryAnsatz,
        trap: &TrapConfig,
        t_f: f64,
        omega_sq_floor: f64,
    ) -> Result<Self> {
        check_duration(t_f)?;
        if (ansatz.duration - t_f).abs() > 1e-12 * t_f {
            return Err(Error::invalid(
                "ansatz",
                format!("ansatz duration {} differs from t_f = {t_f}", ansatz.duration),
            ));
        }
        let scale = 1f64.max(ansatz.x_start.abs()).max(ansatz.x_end.abs());
        let report = verify_boundary_conditions(ansatz, t_f, ANSATZ_BC_TOL * scale);
        if let Some(bad) = report.failures().next() {
            return Err(Error::invalid(
                "ansatz",
                format!("boundary condition {} = {} (want {})", bad.name, bad.value, bad.target),
            ));
        }
        let kind = ProtocolKind::InverseEngineered {
            ansatz: ansatz.clone(),
            omega0: trap.omega0,
            omega_sq_floor,
        };
        let mut previous: Option<f64> = None;
        for i in 0..HAZARD_SCAN_POINTS {
            let t = t_f * i as f64 / (HAZARD_SCAN_POINTS - 1) as f64;
            let omega_sq = inverse_omega_sq(ansatz, trap.omega0, t);
            let xc_accel = ansatz.x_c_derivatives(t)[2];
            // a sign change between samples means |omega^2| dipped below any floor
            let crossed = previous.is_some_and(|p| p * omega_sq < 0.0);
            previous = Some(omega_sq);
            if (omega_sq.abs() < omega_sq_floor || crossed) && xc_accel != 0.0 {
                return Err(Error::DivisionHazard {
                    t,
                    omega_sq,
                    floor: omega_sq_floor,
                    xc_accel,
                });
            }
        }
        Ok(ControlProtocol {
            label: "inverse".into(),
            duration: t_f,
            kind,
            reversed: false,
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// The protocol run backwards in time.
    pub fn reversed(&self) -> Self {
        let mut out = self.clone();
        out.reversed = !self.reversed;
        out
    }

    /// `(omega^2(t), X0(t))`, rejecting `t` outside `[0, t_f]`. Rounding
    /// excursions of a few ulps past either end are clamped.
    pub fn controls(&self, t: f64) -> Result<(f64, f64)> {
        let slack = TIME_SLACK * self.duration.max(1.0);
        if !(t >= -slack && t <= self.duration + slack) {
            return Err(Error::TimeOutOfRange {
                t,
                duration: self.duration,
            });
        }
        let t = t.clamp(0.0, self.duration);
        let t = if self.reversed { self.duration - t } else { t };
        Ok(self.eval(t))
    }

    pub fn trap_center(&self, t: f64) -> Result<f64> {
        Ok(self.controls(t)?.1)
    }

    pub fn omega_sq(&self, t: f64) -> Result<f64> {
        Ok(self.controls(t)?.0)
    }

    fn eval(&self, t: f64) -> (f64, f64) {
        let s = t / self.duration;
        match &self.kind {
            ProtocolKind::LinearRamp {
                x_start,
                distance,
                omega0,
            } => (omega0 * omega0, x_start + s * distance),
            ProtocolKind::StaPolynomial {
                x_start,
                distance,
                omega0,
            } => {
                let quintic = s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
                let correction = 60.0 * s / (omega0 * omega0 * self.duration * self.duration)
                    * (1.0 - 3.0 * s + 2.0 * s * s);
                (omega0 * omega0, x_start + distance * (quintic + correction))
            }
            ProtocolKind::InverseEngineered { ansatz, omega0, .. } => {
                let omega_sq = inverse_omega_sq(ansatz, *omega0, t);
                let [x_c, _, x_c_ddot] = ansatz.x_c_derivatives(t);
                let center = if x_c_ddot == 0.0 {
                    x_c
                } else {
                    x_c_ddot / omega_sq + x_c
                };
                (omega_sq, center)
            }
            ProtocolKind::Stationary { center, omega_sq } => (*omega_sq, *center),
        }
    }
}

fn inverse_omega_sq(ansatz: &AuxiliaryAnsatz, omega0: f64, t: f64) -> f64 {
    let [rho, _, rho_ddot] = ansatz.rho_derivatives(t);
    (omega0 * omega0 / (rho * rho * rho) - rho_ddot) / rho
}

/// Inverts the auxiliary equations for `(omega^2, X0)` using the default
/// `|omega^2|` floor.
pub fn inverse_engineer(ansatz: &AuxiliaryAnsatz, trap: &TrapConfig, t_f: f64) -> Result<ControlProtocol> {
    ControlProtocol::inverse_engineered(ansatz, trap, t_f, DEFAULT_OMEGA_SQ_FLOOR)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_trap() -> TrapConfig {
        TrapConfig::new(0.5, 50.0, 150.0)
    }

    #[test]
    fn linear_ramp_values() {
        let trap = reference_trap();
        let p = ControlProtocol::linear_ramp(&trap, 200.0).unwrap();
        assert_eq!(p.trap_center(0.0).unwrap(), 50.0);
        assert_eq!(p.trap_center(100.0).unwrap(), 125.0);
        assert_eq!(p.trap_center(200.0).unwrap(), 200.0);
        for t in [0.0, 13.0, 77.7, 200.0] {
            assert_eq!(p.omega_sq(t).unwrap(), 0.25);
        }
    }

    #[test]
    fn non_positive_duration_rejected() {
        let trap = reference_trap();
        assert!(ControlProtocol::linear_ramp(&trap, 0.0).is_err());
        assert!(ControlProtocol::sta_polynomial(&trap, -1.0).is_err());
        assert!(polynomial_xc(&trap, 0.0).is_err());
    }

    #[test]
    fn sta_endpoints_and_midpoint() {
        let trap = reference_trap();
        let p = ControlProtocol::sta_polynomial(&trap, 200.0).unwrap();
        assert!((p.trap_center(0.0).unwrap() - 50.0).abs() < 1e-12);
        assert!((p.trap_center(200.0).unwrap() - 200.0).abs() < 1e-12);
        assert!((p.trap_center(100.0).unwrap() - 125.0).abs() < 1e-12);
    }

    #[test]
    fn sta_quarter_point() {
        // quintic at s = 1/4 is 0.103515625; correction 60 s (1 - 3s + 2s^2) / (w^2 tf^2)
        let trap = reference_trap();
        let p = ControlProtocol::sta_polynomial(&trap, 200.0).unwrap();
        let expected: f64 = 150.0 * (0.103515625 + 60.0 * 0.25 * 0.375 / (0.25 * 40000.0));
        assert!((expected - 15.61171875).abs() < 1e-12);
        assert!((p.trap_center(50.0).unwrap() - 50.0 - expected).abs() < 1e-12);
    }

    #[test]
    fn quintic_second_derivative() {
        let trap = reference_trap();
        let a = polynomial_xc(&trap, 200.0).unwrap();
        let t = 50.0;
        let accel = a.x_c_derivatives(t)[2];
        assert!((accel - 5.625 * 150.0 / 40000.0).abs() < 1e-15);
        // central differences on the value
        let h = 1e-2;
        let fd = (a.x_c_derivatives(t + h)[0] - 2.0 * a.x_c_derivatives(t)[0]
            + a.x_c_derivatives(t - h)[0])
            / (h * h);
        assert!((fd - accel).abs() < 1e-6, "{fd} vs {accel}");
    }

    #[test]
    fn constant_frequency_has_flat_rho() {
        let a = polynomial_xc(&reference_trap(), 100.0).unwrap();
        for t in [0.0, 10.0, 50.0, 99.0, 100.0] {
            assert_eq!(a.rho_derivatives(t), [1.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn polynomial_ansatz_boundary_conditions() {
        let a = polynomial_xc(&reference_trap(), 200.0).unwrap();
        let report = verify_boundary_conditions(&a, 200.0, 1e-10);
        assert_eq!(report.checks.len(), 12);
        assert!(report.passed(), "{:?}", report.failures().collect::<Vec<_>>());
    }

    #[test]
    fn rho_bridge_with_sqrt_two() {
        // omega_f = omega0 / 2 gives gamma = sqrt(2)
        let trap = reference_trap().with_final_frequency(0.25);
        let a = polynomial_xc(&trap, 120.0).unwrap();
        assert!((a.gamma - 2f64.sqrt()).abs() < 1e-15);
        let report = verify_boundary_conditions(&a, 120.0, 1e-10);
        for name in ["rho(0)", "rho(tf)", "rho'(0)", "rho'(tf)", "rho''(0)", "rho''(tf)"] {
            assert!(report.get(name).unwrap().passed, "{name}");
        }
    }

    #[test]
    fn linear_xc_fails_slope_conditions() {
        let a = AuxiliaryAnsatz {
            duration: 100.0,
            x_c: SPoly::new(vec![50.0, 150.0]),
            rho: SPoly::constant(1.0),
            gamma: 1.0,
            x_start: 50.0,
            x_end: 200.0,
        };
        let report = verify_boundary_conditions(&a, 100.0, 1e-10);
        assert!(!report.passed());
        assert!(!report.get("x_c'(0)").unwrap().passed);
        assert!((report.get("x_c'(0)").unwrap().value - 1.5).abs() < 1e-15);
        assert!(report.get("x_c(0)").unwrap().passed);
        assert!(report.get("x_c''(0)").unwrap().passed);
        let trap = reference_trap();
        assert!(inverse_engineer(&a, &trap, 100.0).is_err());
    }

    #[test]
    fn flat_rho_keeps_frequency() {
        let trap = reference_trap();
        let a = polynomial_xc(&trap, 200.0).unwrap();
        let p = inverse_engineer(&a, &trap, 200.0).unwrap();
        for i in 0..=20 {
            assert_eq!(p.omega_sq(10.0 * i as f64).unwrap(), 0.25);
        }
    }

    #[test]
    fn constant_xc_keeps_center() {
        let trap = TrapConfig::new(0.5, 50.0, 0.0);
        let a = polynomial_xc(&trap, 80.0).unwrap();
        let p = inverse_engineer(&a, &trap, 80.0).unwrap();
        for i in 0..=8 {
            assert_eq!(p.trap_center(10.0 * i as f64).unwrap(), 50.0);
        }
    }

    #[test]
    fn inverse_engineering_matches_sta() {
        let trap = reference_trap();
        let sta = ControlProtocol::sta_polynomial(&trap, 200.0).unwrap();
        let inv = inverse_engineer(&polynomial_xc(&trap, 200.0).unwrap(), &trap, 200.0).unwrap();
        let a = sta.trap_center(50.0).unwrap();
        let b = inv.trap_center(50.0).unwrap();
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        assert!((b - 65.61171875).abs() < 1e-12);
    }

    #[test]
    fn division_hazard_reported() {
        // a rho bridge steep enough that omega^2 crosses zero
        let trap = TrapConfig::new(0.05, 50.0, 20.0).with_final_frequency(0.0125);
        let a = polynomial_xc(&trap, 10.0).unwrap();
        match inverse_engineer(&a, &trap, 10.0) {
            Err(Error::DivisionHazard { t, .. }) => assert!(t > 0.0 && t < 10.0),
            other => panic!("expected division hazard, got {other:?}"),
        }
    }

    #[test]
    fn reversed_protocol_runs_backwards() {
        let trap = reference_trap();
        let p = ControlProtocol::sta_polynomial(&trap, 200.0).unwrap();
        let r = p.reversed();
        for t in [0.0, 31.0, 100.0, 177.0, 200.0] {
            assert_eq!(r.controls(t).unwrap(), p.controls(200.0 - t).unwrap());
        }
        assert_eq!(r.reversed(), p);
    }

    #[test]
    fn sta_overshoots_for_short_durations() {
        // the trap leaves [x_A, x_B] once omega0 t_f drops below about 2.505
        let trap = reference_trap();
        let exits = |t_f: f64| {
            let p = ControlProtocol::sta_polynomial(&trap, t_f).unwrap();
            (0..=4000).any(|i| {
                let x = p.trap_center(t_f * i as f64 / 4000.0).unwrap();
                x > trap.x_end() + 1e-9 || x < trap.x_start - 1e-9
            })
        };
        assert!(exits(4.0));
        assert!(exits(5.0));
        assert!(!exits(5.2));
        assert!(!exits(10.0));
        // below omega0 t_f = 4 the trap runs backwards around s = 1/2
        let p = ControlProtocol::sta_polynomial(&trap, 6.0).unwrap();
        assert!(p.trap_center(3.1).unwrap() < p.trap_center(2.9).unwrap());
    }

    #[test]
    fn metadata_serializes() {
        let trap = reference_trap();
        let p = ControlProtocol::sta_polynomial(&trap, 200.0).unwrap();
        let json = serde_json::to_string(&p).unwrap();
        assert!(json.contains("\"kind\":\"sta_polynomial\""));
        let back: ControlProtocol = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
    }
}
