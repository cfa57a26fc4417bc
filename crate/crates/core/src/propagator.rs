//! Time stepping of `i d/dt psi = H_s(t) psi` on the tridiagonal subspace
//! Hamiltonian.
//!
//! The default step is a fourth-order commutator-free Magnus map built from
//! two exponentials at the Gauss-Legendre nodes; the exponential mid-point
//! rule `exp(-i dt H_s(t + dt/2))` is kept as a second-order option. The
//! exponential action is computed in a Lanczos basis:
//! with `T_m = Q^T H Q` the `m x m` tridiagonal projection,
//! `exp(-i dt H) psi ~ |psi| Q exp(-i dt T_m) e_1`, and `exp(-i dt T_m)` is
//! formed by a scaled Taylor series on the small matrix. The result is unitary up to
//! the orthogonality of `Q`, so the norm is conserved to rounding.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::chain::{build_static_hamiltonian, field_values_into, ChainSpec, Tridiagonal, TrapConfig};
use crate::control::ControlProtocol;
use crate::error::{Error, Result};
use crate::states::{fidelity, overlap, WaveState};

pub const DEFAULT_DT: f64 = 0.02;
pub const DEFAULT_TOLERANCE: f64 = 1e-8;

/// Per-step truncation target for the Lanczos expansion.
const KRYLOV_TOL: f64 = 1e-13;
const KRYLOV_MAX_DIM: usize = 40;
/// Norm drift that aborts a run.
const NORM_ABORT: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct PropagationPlan {
    pub t_final: f64,
    pub dt: f64,
    /// Record every `record_stride` steps (the initial and final states are
    /// always recorded).
    pub record_stride: usize,
    /// Required `1 - F` between the `dt` and `dt/2` final states when
    /// `verify` is set.
    pub tolerance: f64,
    pub verify: bool,
    pub scheme: Scheme,
}

impl PropagationPlan {
    pub fn new(t_final: f64) -> Self {
        PropagationPlan {
            t_final,
            dt: DEFAULT_DT,
            record_stride: 1,
            tolerance: DEFAULT_TOLERANCE,
            verify: false,
            scheme: Scheme::default(),
        }
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride;
        self
    }

    pub fn with_verification(mut self, tolerance: f64) -> Self {
        self.verify = true;
        self.tolerance = tolerance;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(Error::invalid("t_final", format!("must be >= 0, got {}", self.t_final)));
        }
        if !(self.dt > 0.0) || (self.t_final > 0.0 && self.dt > self.t_final) {
            return Err(Error::invalid(
                "dt",
                format!("need 0 < dt <= t_final, got dt = {} and t_final = {}", self.dt, self.t_final),
            ));
        }
        if self.record_stride == 0 {
            return Err(Error::invalid("record_stride", "must be at least 1"));
        }
        Ok(())
    }

    /// Number of steps; the step is shrunk so that they tile `[0, t_final]`.
    pub fn steps(&self) -> (usize, f64) {
        if self.t_final == 0.0 {
            return (0, self.dt);
        }
        let n = (self.t_final / self.dt - 1e-9).ceil().max(1.0) as usize;
        (n, self.t_final / n as f64)
    }

    fn halved(&self) -> Self {
        PropagationPlan {
            dt: self.dt / 2.0,
            verify: false,
            ..self.clone()
        }
    }
}

/// Scratch space for repeated Lanczos exponentials of one dimension.
pub struct KrylovExp {
    basis: Vec<Vec<Complex64>>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    w: Vec<Complex64>,
    tol: f64,
}

impl KrylovExp {
    pub fn new(dim: usize) -> Self {
        KrylovExp {
            basis: (0..KRYLOV_MAX_DIM).map(|_| vec![Complex64::new(0.0, 0.0); dim]).collect(),
            alpha: Vec::with_capacity(KRYLOV_MAX_DIM),
            beta: Vec::with_capacity(KRYLOV_MAX_DIM),
            w: vec![Complex64::new(0.0, 0.0); dim],
            tol: KRYLOV_TOL,
        }
    }

    /// Overwrites `psi` with `exp(-i dt (H + diag(field))) psi`.
    ///
    /// Returns the Krylov dimension used, or `None` if the expansion did not
    /// reach the tolerance within the size limit.
    pub fn apply(&mut self, h: &Tridiagonal, field: &[f64], dt: f64, psi: &mut [Complex64]) -> Option<usize> {
        let n = psi.len();
        let norm0 = psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm0 == 0.0 {
            return Some(0);
        }
        self.alpha.clear();
        self.beta.clear();
        for (q, p) in self.basis[0].iter_mut().zip(psi.iter()) {
            *q = p / norm0;
        }

        // running bound dt^m prod(beta) / m! on the neglected coefficient
        let mut bound = 1.0;
        let mut dim = 0;
        for j in 0..KRYLOV_MAX_DIM {
            let alpha = apply_hamiltonian(h, field, &self.basis[j], &mut self.w);
            let prev_beta = if j > 0 { self.beta[j - 1] } else { 0.0 };
            let prev = if j > 0 { j - 1 } else { j };
            let mut beta_sq = 0.0;
            for ((w, q), p) in self.w.iter_mut().zip(&self.basis[j]).zip(&self.basis[prev]) {
                *w -= q * alpha + p * prev_beta;
                beta_sq += w.norm_sqr();
            }
            self.alpha.push(alpha);
            let beta = beta_sq.sqrt();
            bound *= dt * beta / (j + 1) as f64;
            if bound < self.tol || beta <= f64::EPSILON * n as f64 {
                dim = j + 1;
                break;
            }
            if j + 1 == KRYLOV_MAX_DIM {
                return None;
            }
            self.beta.push(beta);
            let inv = 1.0 / beta;
            for (q, w) in self.basis[j + 1].iter_mut().zip(&self.w) {
                *q = w * inv;
            }
        }

        let coeffs = small_exponential(&self.alpha[..dim], &self.beta[..dim - 1], dt);
        psi.iter_mut().for_each(|p| *p = Complex64::new(0.0, 0.0));
        for (c, q) in coeffs.iter().zip(&self.basis[..dim]) {
            let c = c * norm0;
            for (p, qv) in psi.iter_mut().zip(q) {
                *p += c * qv;
            }
        }
        Some(dim)
    }
}

/// `w = (H + diag(field)) v` for tridiagonal `H`; returns `Re <v|w>`.
fn apply_hamiltonian(h: &Tridiagonal, field: &[f64], v: &[Complex64], w: &mut [Complex64]) -> f64 {
    let n = v.len();
    let mut rayleigh = 0.0;
    let mut push = |i: usize, val: Complex64| {
        rayleigh += v[i].re * val.re + v[i].im * val.im;
        w[i] = val;
    };
    push(0, v[0] * (h.diag[0] + field[0]) + v[1] * h.off[0]);
    for i in 1..n - 1 {
        push(
            i,
            v[i] * (h.diag[i] + field[i]) + v[i - 1] * h.off[i - 1] + v[i + 1] * h.off[i],
        );
    }
    push(n - 1, v[n - 1] * (h.diag[n - 1] + field[n - 1]) + v[n - 2] * h.off[n - 2]);
    rayleigh
}

/// First column of `exp(-i dt T)` for the symmetric tridiagonal `T`.
///
/// Uses the Taylor series on the vector `e_1`, split into `s` sub-steps so
/// that each has `|dt T / s|_1 <= 1/2`; terms are summed until they drop
/// below machine precision.
fn small_exponential(alpha: &[f64], beta: &[f64], dt: f64) -> Vec<Complex64> {
    let m = alpha.len();
    let norm1 = (0..m)
        .map(|i| {
            alpha[i].abs()
                + if i > 0 { beta[i - 1].abs() } else { 0.0 }
                + if i + 1 < m { beta[i].abs() } else { 0.0 }
        })
        .fold(0.0, f64::max);
    let substeps = ((dt.abs() * norm1) / 0.5).ceil().max(1.0) as usize;
    let tau = dt / substeps as f64;

    let mut y = vec![Complex64::new(0.0, 0.0); m];
    y[0] = Complex64::new(1.0, 0.0);
    let mut term = vec![Complex64::new(0.0, 0.0); m];
    let mut next = vec![Complex64::new(0.0, 0.0); m];
    for _ in 0..substeps {
        term.copy_from_slice(&y);
        for k in 1..60 {
            // next = (-i tau / k) T term
            let scale = Complex64::new(0.0, -tau / k as f64);
            for i in 0..m {
                let mut acc = term[i] * alpha[i];
                if i > 0 {
                    acc += term[i - 1] * beta[i - 1];
                }
                if i + 1 < m {
                    acc += term[i + 1] * beta[i];
                }
                next[i] = acc * scale;
            }
            std::mem::swap(&mut term, &mut next);
            let mut size = 0.0;
            for (yi, ti) in y.iter_mut().zip(&term) {
                *yi += ti;
                size += ti.norm_sqr();
            }
            if size < 1e-34 {
                break;
            }
        }
    }
    y
}

/// One-step map `psi(t) -> psi(t + dt)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// `exp(-i dt H(t + dt/2))`; second order.
    Midpoint,
    /// Two-exponential commutator-free Magnus step on the Gauss-Legendre
    /// nodes; fourth order.
    #[default]
    Magnus4,
}

const GAUSS_OFFSET: f64 = 0.288_675_134_594_812_9; // sqrt(3) / 6
const CF4_SMALL: f64 = -0.038_675_134_594_812_87; // (3 - 2 sqrt(3)) / 12
const CF4_LARGE: f64 = 0.538_675_134_594_812_9; // (3 + 2 sqrt(3)) / 12

struct Stepper {
    krylov: KrylovExp,
    early: Vec<f64>,
    late: Vec<f64>,
    mixed: Vec<f64>,
}

impl Stepper {
    fn new(n: usize) -> Self {
        Stepper {
            krylov: KrylovExp::new(n),
            early: vec![0.0; n],
            late: vec![0.0; n],
            mixed: vec![0.0; n],
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn step(
        &mut self,
        scheme: Scheme,
        h0: &Tridiagonal,
        chain: &ChainSpec,
        trap: &TrapConfig,
        protocol: &ControlProtocol,
        t: f64,
        dt: f64,
        psi: &mut [Complex64],
    ) -> Result<()> {
        match scheme {
            Scheme::Midpoint => {
                let (omega_sq, center) = protocol.controls(t + 0.5 * dt)?;
                field_values_into(omega_sq, center, trap, chain, &mut self.early);
                self.exp(h0, dt, t, psi, true)
            }
            Scheme::Magnus4 => {
                let (w1, c1) = protocol.controls(t + (0.5 - GAUSS_OFFSET) * dt)?;
                let (w2, c2) = protocol.controls(t + (0.5 + GAUSS_OFFSET) * dt)?;
                field_values_into(w1, c1, trap, chain, &mut self.early);
                field_values_into(w2, c2, trap, chain, &mut self.late);
                // a H(t1) + b H(t2) = (H0 + 2 a B1 + 2 b B2) / 2 since a + b = 1/2
                for (first, second) in [(CF4_LARGE, CF4_SMALL), (CF4_SMALL, CF4_LARGE)] {
                    for ((m, e), l) in self.mixed.iter_mut().zip(&self.early).zip(&self.late) {
                        *m = 2.0 * (first * e + second * l);
                    }
                    self.exp(h0, 0.5 * dt, t, psi, false)?;
                }
                Ok(())
            }
        }
    }

    fn exp(&mut self, h0: &Tridiagonal, tau: f64, t: f64, psi: &mut [Complex64], early: bool) -> Result<()> {
        let field = if early { &self.early } else { &self.mixed };
        match self.krylov.apply(h0, field, tau, psi) {
            Some(_) => Ok(()),
            None => Err(Error::KrylovNotConverged {
                t,
                dt: tau,
                iterations: KRYLOV_MAX_DIM,
            }),
        }
    }
}

/// Drives the state through the protocol and hands every step to `observe`.
fn propagate<F>(
    psi0: &WaveState,
    chain: &ChainSpec,
    trap: &TrapConfig,
    protocol: &ControlProtocol,
    plan: &PropagationPlan,
    mut observe: F,
) -> Result<WaveState>
where
    F: FnMut(usize, f64, &[Complex64]),
{
    plan.validate()?;
    if psi0.len() != chain.n_sites() {
        return Err(Error::LengthMismatch(psi0.len(), chain.n_sites()));
    }
    if (psi0.norm() - 1.0).abs() > crate::states::NORM_TOL {
        return Err(Error::invalid("psi0", format!("norm {} is not 1", psi0.norm())));
    }
    if protocol.duration < plan.t_final {
        return Err(Error::invalid(
            "protocol",
            format!("duration {} shorter than t_final {}", protocol.duration, plan.t_final),
        ));
    }
    let h0 = build_static_hamiltonian(chain)?;
    let (steps, dt) = plan.steps();
    let mut psi = psi0.amplitudes.clone();
    let mut stepper = Stepper::new(chain.n_sites());
    let t0 = psi0.time;

    observe(0, t0, &psi);
    for k in 0..steps {
        let t_start = k as f64 * dt;
        let t_end = (k + 1) as f64 * dt;
        stepper.step(plan.scheme, &h0, chain, trap, protocol, t_start, dt, &mut psi)?;
        let norm_sq: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
        if !norm_sq.is_finite() {
            return Err(Error::NonFinite { t: t0 + t_end });
        }
        let drift = (norm_sq.sqrt() - 1.0).abs();
        if drift > NORM_ABORT {
            return Err(Error::NormDrift {
                t: t0 + t_end,
                drift,
                dt,
            });
        }
        observe(k + 1, t0 + t_end, &psi);
    }
    Ok(WaveState {
        amplitudes: psi,
        time: t0 + plan.t_final,
    })
}

fn is_recorded(step: usize, total: usize, stride: usize) -> bool {
    step % stride == 0 || step == total
}

/// Fidelity between the final states obtained with `dt` and `dt / 2`.
fn step_halving_check(
    reference: &WaveState,
    psi0: &WaveState,
    chain: &ChainSpec,
    trap: &TrapConfig,
    protocol: &ControlProtocol,
    plan: &PropagationPlan,
) -> Result<f64> {
    let fine = propagate(psi0, chain, trap, protocol, &plan.halved(), |_, _, _| {})?;
    let f = fidelity(reference, &fine)?;
    if f < 1.0 - plan.tolerance {
        return Err(Error::StepHalving {
            fidelity: f,
            required: 1.0 - plan.tolerance,
        });
    }
    Ok(f)
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub states: Vec<WaveState>,
    /// Fidelity between the `dt` and `dt/2` final states, when verified.
    pub step_halving: Option<f64>,
}

impl Trajectory {
    pub fn final_state(&self) -> &WaveState {
        self.states.last().expect("trajectory always holds the initial state")
    }

    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.time).collect()
    }
}

/// Evolves `psi0` under `H_0 + H_1(t)` and records states at the plan's
/// stride.
pub fn evolve(
    psi0: &WaveState,
    chain: &ChainSpec,
    trap: &TrapConfig,
    protocol: &ControlProtocol,
    plan: &PropagationPlan,
) -> Result<Trajectory> {
    plan.validate()?;
    let (steps, _) = plan.steps();
    let mut states = Vec::new();
    let last = propagate(psi0, chain, trap, protocol, plan, |k, t, psi| {
        if is_recorded(k, steps, plan.record_stride) {
            states.push(WaveState {
                amplitudes: psi.to_vec(),
                time: t,
            });
        }
    })?;
    let step_halving = if plan.verify {
        Some(step_halving_check(&last, psi0, chain, trap, protocol, plan)?)
    } else {
        None
    };
    Ok(Trajectory { states, step_halving })
}

/// One recorded sample of a fidelity run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FidelitySample {
    pub time: f64,
    pub fidelity: f64,
    pub norm: f64,
}

#[derive(Clone, Debug)]
pub struct FidelityRun {
    pub series: Vec<FidelitySample>,
    pub final_fidelity: f64,
    pub final_state: WaveState,
    pub step_halving: Option<f64>,
}

/// Like [`evolve`] but records `F(t) = |<target|psi(t)>|^2` instead of the
/// states.
pub fn evolve_fidelity(
    psi0: &WaveState,
    target: &WaveState,
    chain: &ChainSpec,
    trap: &TrapConfig,
    protocol: &ControlProtocol,
    plan: &PropagationPlan,
) -> Result<FidelityRun> {
    plan.validate()?;
    if target.len() != psi0.len() {
        return Err(Error::LengthMismatch(target.len(), psi0.len()));
    }
    let (steps, _) = plan.steps();
    let mut series = Vec::new();
    let last = propagate(psi0, chain, trap, protocol, plan, |k, t, psi| {
        if is_recorded(k, steps, plan.record_stride) {
            series.push(FidelitySample {
                time: t,
                fidelity: overlap(&target.amplitudes, psi).norm_sqr().clamp(0.0, 1.0),
                norm: psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt(),
            });
        }
    })?;
    let final_fidelity = fidelity(target, &last)?;
    let step_halving = if plan.verify {
        Some(step_halving_check(&last, psi0, chain, trap, protocol, plan)?)
    } else {
        None
    };
    Ok(FidelityRun {
        series,
        final_fidelity,
        final_state: last,
        step_halving,
    })
}

/// Final state only; nothing is recorded.
pub fn evolve_final(
    psi0: &WaveState,
    chain: &ChainSpec,
    trap: &TrapConfig,
    protocol: &ControlProtocol,
    plan: &PropagationPlan,
) -> Result<WaveState> {
    propagate(psi0, chain, trap, protocol, plan, |_, _, _| {})
}
