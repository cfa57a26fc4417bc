//! Single-excitation Hamiltonian of the Heisenberg chain.
//!
//! In the basis `|phi_n>` (one flipped spin at site `n`) the Hamiltonian is
//! `H_s(t) = H_0 + H_1(t)`: a static real symmetric tridiagonal hopping part
//! and a diagonal field `B_n(t)`. Site `n` (0-based here) sits at
//! `x_n = n * dx` with `dx = 1`.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::control::ControlProtocol;
use crate::error::{Error, Result};

/// Lattice spacing in natural units.
pub const LATTICE_SPACING: f64 = 1.0;

/// Which parts of the Hamiltonian see the disordered bond couplings.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisorderMode {
    /// Both the hopping and the exchange-induced diagonal use `J_n`.
    #[default]
    Full,
    /// Only the hopping uses `J_n`; the diagonal keeps the uniform `J`.
    HoppingOnly,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    n_sites: usize,
    coupling: f64,
    bond_couplings: Vec<f64>,
    mode: DisorderMode,
}

impl ChainSpec {
    pub fn uniform(n_sites: usize, coupling: f64) -> Result<Self> {
        if n_sites < 3 {
            return Err(Error::TooFewSites(n_sites));
        }
        Self::with_bonds(n_sites, coupling, vec![coupling; n_sites - 1])
    }

    pub fn with_bonds(n_sites: usize, coupling: f64, bond_couplings: Vec<f64>) -> Result<Self> {
        if n_sites < 3 {
            return Err(Error::TooFewSites(n_sites));
        }
        if bond_couplings.len() != n_sites - 1 {
            return Err(Error::BondCountMismatch {
                expected: n_sites - 1,
                got: bond_couplings.len(),
            });
        }
        if !coupling.is_finite() || bond_couplings.iter().any(|j| !j.is_finite()) {
            return Err(Error::invalid("coupling", "couplings must be finite"));
        }
        Ok(ChainSpec {
            n_sites,
            coupling,
            bond_couplings,
            mode: DisorderMode::Full,
        })
    }

    /// Replaces the bond couplings with one disorder realization.
    pub fn disordered(&self, dis: &DisorderSpec) -> Result<Self> {
        let bonds = sample_disordered_couplings(self, dis)?;
        let mut out = Self::with_bonds(self.n_sites, self.coupling, bonds)?;
        out.mode = self.mode;
        Ok(out)
    }

    pub fn with_mode(mut self, mode: DisorderMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn bond_couplings(&self) -> &[f64] {
        &self.bond_couplings
    }

    pub fn mode(&self) -> DisorderMode {
        self.mode
    }

    pub fn site_position(&self, site: usize) -> f64 {
        site as f64 * LATTICE_SPACING
    }

    pub fn length(&self) -> f64 {
        self.site_position(self.n_sites - 1)
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n_sites).map(|n| self.site_position(n)).collect()
    }
}

/// Real symmetric tridiagonal matrix stored as its diagonal and first
/// off-diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl Tridiagonal {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            m[i][i] = self.diag[i];
        }
        for (i, &h) in self.off.iter().enumerate() {
            m[i][i + 1] = h;
            m[i + 1][i] = h;
        }
        m
    }
}

/// Static part `H_0` of the single-excitation Hamiltonian.
///
/// The diagonal at site `n` is `-(J_{n-1} + J_n)` with `J_0 = J_N = 0` and the
/// hopping between `n` and `n+1` is `+J_n`. For uniform couplings this is
/// `-2J` in the bulk, `-J` at the two edges and `+J` hopping. In
/// [`DisorderMode::HoppingOnly`] the diagonal is built from the uniform `J`.
pub fn build_static_hamiltonian(spec: &ChainSpec) -> Result<Tridiagonal> {
    let n = spec.n_sites;
    if n < 3 {
        return Err(Error::TooFewSites(n));
    }
    if spec.bond_couplings.len() != n - 1 {
        return Err(Error::BondCountMismatch {
            expected: n - 1,
            got: spec.bond_couplings.len(),
        });
    }
    let diag_bond = |i: usize| match spec.mode {
        DisorderMode::Full => spec.bond_couplings[i],
        DisorderMode::HoppingOnly => spec.coupling,
    };
    let diag = (0..n)
        .map(|i| {
            let left = if i > 0 { diag_bond(i - 1) } else { 0.0 };
            let right = if i + 1 < n { diag_bond(i) } else { 0.0 };
            -(left + right)
        })
        .collect();
    Ok(Tridiagonal {
        diag,
        off: spec.bond_couplings.clone(),
    })
}

/// Geometry and frequency of the harmonic trap realised by the field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrapConfig {
    pub omega0: f64,
    pub omega_f: f64,
    pub x_start: f64,
    pub distance: f64,
    pub truncation_radius: f64,
}

impl TrapConfig {
    /// Constant-frequency trap truncated at five widths.
    pub fn new(omega0: f64, x_start: f64, distance: f64) -> Self {
        TrapConfig {
            omega0,
            omega_f: omega0,
            x_start,
            distance,
            truncation_radius: 5.0 * packet_width(omega0, 1.0),
        }
    }

    pub fn with_final_frequency(mut self, omega_f: f64) -> Self {
        self.omega_f = omega_f;
        self
    }

    pub fn with_truncation_radius(mut self, radius: f64) -> Self {
        self.truncation_radius = radius;
        self
    }

    pub fn x_end(&self) -> f64 {
        self.x_start + self.distance
    }

    /// Ground-state width `sigma = dx * sqrt(2J / (hbar omega0))`.
    pub fn sigma(&self, coupling: f64) -> f64 {
        packet_width(self.omega0, coupling)
    }

    pub fn sigma_final(&self, coupling: f64) -> f64 {
        packet_width(self.omega_f, coupling)
    }

    /// The continuum mapping needs `omega << 2J/hbar`.
    pub fn mapping_valid(&self, coupling: f64) -> bool {
        self.omega0 < 2.0 * coupling.abs() && self.omega_f < 2.0 * coupling.abs()
    }

    pub fn validate(&self, spec: &ChainSpec) -> Result<()> {
        if !(self.omega0 > 0.0 && self.omega0.is_finite()) {
            return Err(Error::invalid("omega0", format!("must be positive, got {}", self.omega0)));
        }
        if !(self.omega_f > 0.0 && self.omega_f.is_finite()) {
            return Err(Error::invalid("omega_f", format!("must be positive, got {}", self.omega_f)));
        }
        if !(self.truncation_radius > 0.0) {
            return Err(Error::invalid(
                "truncation_radius",
                format!("must be positive, got {}", self.truncation_radius),
            ));
        }
        let len = spec.length();
        for (name, x) in [("x_start", self.x_start), ("x_end", self.x_end())] {
            if !(x > 0.0 && x < len) {
                return Err(Error::invalid(
                    name,
                    format!("{x} must lie strictly inside (0, {len})"),
                ));
            }
        }
        if !self.mapping_valid(spec.coupling) {
            log::warn!(
                "trap frequency {} (final {}) is not small against 2J = {}; continuum mapping is unreliable",
                self.omega0,
                self.omega_f,
                2.0 * spec.coupling
            );
        }
        Ok(())
    }
}

/// `dx * sqrt(2J / (hbar omega))`, from `sigma^2 = hbar / (|m| omega)` with
/// `|m| = hbar^2 / (2 J dx^2)`.
pub fn packet_width(omega: f64, coupling: f64) -> f64 {
    LATTICE_SPACING * (2.0 * coupling.abs() / omega).sqrt()
}

/// Writes `B_n` for a trap at `center` with squared frequency `omega_sq`.
pub fn field_values_into(
    omega_sq: f64,
    center: f64,
    trap: &TrapConfig,
    spec: &ChainSpec,
    out: &mut [f64],
) {
    let prefactor = -omega_sq / (4.0 * spec.coupling);
    for (n, b) in out.iter_mut().enumerate() {
        let offset = spec.site_position(n) - center;
        *b = if offset.abs() <= trap.truncation_radius {
            let u = offset / LATTICE_SPACING;
            prefactor * u * u
        } else {
            0.0
        };
    }
}

/// Diagonal field `B_n(t) = -(hbar^2 omega^2(t) / 4J) ((x_n - X0(t)) / dx)^2`,
/// cut to zero beyond the truncation radius.
pub fn field_profile(
    t: f64,
    protocol: &ControlProtocol,
    trap: &TrapConfig,
    spec: &ChainSpec,
) -> Result<Vec<f64>> {
    let (omega_sq, center) = protocol.controls(t)?;
    let mut out = vec![0.0; spec.n_sites];
    field_values_into(omega_sq, center, trap, spec, &mut out);
    Ok(out)
}

/// One disorder realization: `eps_n` uniform on `[-amplitude, amplitude]`.
///
/// The random stream is ChaCha8 keyed by `master_seed` (bytes 0..8, little
/// endian) and `realization_index` (bytes 8..16), remaining key bytes zero.
/// Each draw takes the top 53 bits of one `u64` as `u in [0, 1)` and maps it
/// to `amplitude * (2u - 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisorderSpec {
    pub amplitude: f64,
    pub master_seed: u64,
    pub realization_index: u64,
}

impl DisorderSpec {
    pub fn new(amplitude: f64, master_seed: u64, realization_index: u64) -> Self {
        DisorderSpec {
            amplitude,
            master_seed,
            realization_index,
        }
    }

    fn rng(&self) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.master_seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.realization_index.to_le_bytes());
        ChaCha8Rng::from_seed(key)
    }

    /// The first `count` relative deviations `eps_n`.
    pub fn deviations(&self, count: usize) -> Vec<f64> {
        let mut rng = self.rng();
        (0..count)
            .map(|_| {
                let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
                self.amplitude * (2.0 * u - 1.0)
            })
            .collect()
    }
}

/// Bond couplings `J_n = J (1 + eps_n)` for one realization.
pub fn sample_disordered_couplings(spec: &ChainSpec, dis: &DisorderSpec) -> Result<Vec<f64>> {
    if !(dis.amplitude >= 0.0) || !dis.amplitude.is_finite() {
        return Err(Error::invalid(
            "amplitude",
            format!("disorder amplitude must be finite and >= 0, got {}", dis.amplitude),
        ));
    }
    Ok(dis
        .deviations(spec.n_sites - 1)
        .into_iter()
        .map(|eps| spec.coupling * (1.0 + eps))
        .collect())
}
