//! Magnon transport in a one-dimensional Heisenberg spin chain.
//!
//! The chain is simulated in its single-excitation subspace, where the
//! Hamiltonian is an `N x N` real symmetric tridiagonal matrix. A parabolic
//! magnetic field maps the magnon onto a harmonically trapped particle with
//! negative effective mass, so trap-transport controls designed for the
//! particle (adiabatic ramps and invariant-based shortcuts) can be used to
//! move the excitation along the chain.
//!
//! Units are natural throughout: `hbar = J = dx = 1`. Times are in `hbar/J`,
//! frequencies in `J/hbar` and lengths in lattice spacings.
//!
//! Modules:
//!
//! * [`chain`]: static hopping matrix, trap field profile and disorder.
//! * [`control`]: linear ramp, polynomial shortcut and general inverse
//!   engineering of `(omega^2(t), X0(t))`.
//! * [`states`]: Gaussian wavepackets, fidelity, local magnetisation.
//! * [`propagator`]: exponential mid-point integrator with Lanczos action.
//! * [`oracle`]: classical centroid dynamics and Gaussian overlap reference.
//! * [`experiments`]: configuration, sweeps, ensembles and CSV/SVG output.

pub mod chain;
pub mod control;
pub mod error;
pub mod experiments;
pub mod oracle;
pub mod propagator;
pub mod states;

pub use chain::{ChainSpec, DisorderMode, DisorderSpec, Tridiagonal, TrapConfig};
pub use control::{AuxiliaryAnsatz, BoundaryReport, ControlProtocol, ProtocolKind, SPoly};
pub use error::{Error, Result};
pub use propagator::{evolve, evolve_fidelity, FidelityRun, PropagationPlan, Trajectory};
pub use states::{fidelity, gaussian_packet, local_magnetization, WaveState};
