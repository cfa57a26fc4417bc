//! Run configuration: a single JSON document, unknown keys rejected.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::chain::{ChainSpec, DisorderMode, TrapConfig};
use crate::control::{inverse_engineer, polynomial_xc, ControlProtocol};
use crate::error::{Error, Result};
use crate::propagator::{PropagationPlan, Scheme, DEFAULT_DT, DEFAULT_TOLERANCE};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    pub n_sites: usize,
    pub coupling: f64,
    #[serde(default)]
    pub disorder_mode: DisorderMode,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapSection {
    pub omega0: f64,
    /// Defaults to `omega0`.
    #[serde(default)]
    pub omega_f: Option<f64>,
    pub x_start: f64,
    pub distance: f64,
    /// Defaults to five packet widths at `omega0`.
    #[serde(default)]
    pub truncation_radius: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolName {
    Linear,
    Sta,
    /// Inverse engineering of the quintic `X_c` and `rho` bridges.
    Inverse,
}

impl ProtocolName {
    pub fn label(self) -> &'static str {
        match self {
            ProtocolName::Linear => "linear",
            ProtocolName::Sta => "sta",
            ProtocolName::Inverse => "inverse",
        }
    }

    pub fn build(self, trap: &TrapConfig, t_f: f64) -> Result<ControlProtocol> {
        match self {
            ProtocolName::Linear => ControlProtocol::linear_ramp(trap, t_f),
            ProtocolName::Sta => ControlProtocol::sta_polynomial(trap, t_f),
            ProtocolName::Inverse => inverse_engineer(&polynomial_xc(trap, t_f)?, trap, t_f),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    pub name: ProtocolName,
    pub tf: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanConfig {
    pub dt: f64,
    pub record_stride: usize,
    pub tolerance: f64,
    #[serde(default)]
    pub verify: bool,
    #[serde(default)]
    pub scheme: Scheme,
}

impl Default for PlanConfig {
    fn default() -> Self {
        PlanConfig {
            dt: DEFAULT_DT,
            record_stride: 50,
            tolerance: DEFAULT_TOLERANCE,
            verify: false,
            scheme: Scheme::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub tf_grid: Vec<f64>,
    pub omega0_list: Vec<f64>,
    pub protocols: Vec<ProtocolName>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            tf_grid: grid(50.0, 700.0, 10.0),
            omega0_list: vec![0.5],
            protocols: vec![ProtocolName::Linear, ProtocolName::Sta],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    pub tf_grid: Vec<f64>,
    pub d_grid: Vec<f64>,
    pub omega0_list: Vec<f64>,
    /// Spacing of the extra `t_f` points placed around each transition; 0
    /// disables refinement.
    pub refine_step: f64,
    /// Fidelity level that defines the transition time `t*(d)`.
    pub threshold: f64,
}

impl Default for MapConfig {
    fn default() -> Self {
        MapConfig {
            tf_grid: grid(20.0, 400.0, 10.0),
            d_grid: grid(20.0, 160.0, 10.0),
            omega0_list: vec![0.5],
            refine_step: 1.0,
            threshold: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisorderConfig {
    pub deltas: Vec<f64>,
    pub realizations: usize,
    pub master_seed: u64,
}

impl Default for DisorderConfig {
    fn default() -> Self {
        DisorderConfig {
            deltas: vec![0.0, 0.01, 0.02, 0.05, 0.1, 0.15, 0.2],
            realizations: 1000,
            master_seed: 2020,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub chain: ChainConfig,
    pub trap: TrapSection,
    pub protocol: ProtocolConfig,
    #[serde(default)]
    pub plan: PlanConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub map: MapConfig,
    #[serde(default)]
    pub disorder: DisorderConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_workers")]
    pub workers: usize,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_workers() -> usize {
    1
}

/// `start, start + step, ...` up to and including `stop`.
pub fn grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    (0..count).map(|i| start + step * i as f64).collect()
}

impl Default for RunConfig {
    /// Parameters of the headline transport run: `N = 251`, `omega0 = 0.5`,
    /// `x_A = 50`, `d = 150`, shortcut protocol with `t_f = 200`.
    fn default() -> Self {
        RunConfig {
            chain: ChainConfig {
                n_sites: 251,
                coupling: 1.0,
                disorder_mode: DisorderMode::Full,
            },
            trap: TrapSection {
                omega0: 0.5,
                omega_f: None,
                x_start: 50.0,
                distance: 150.0,
                truncation_radius: None,
            },
            protocol: ProtocolConfig {
                name: ProtocolName::Sta,
                tf: 200.0,
            },
            plan: PlanConfig::default(),
            sweep: SweepConfig::default(),
            map: MapConfig::default(),
            disorder: DisorderConfig::default(),
            output_dir: default_output_dir(),
            workers: default_workers(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        let cfg = Self::from_json(&text).map_err(|source| Error::Config {
            path: path.to_owned(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        for (name, g) in [
            ("sweep.tf_grid", &self.sweep.tf_grid),
            ("sweep.omega0_list", &self.sweep.omega0_list),
            ("map.tf_grid", &self.map.tf_grid),
            ("map.d_grid", &self.map.d_grid),
            ("map.omega0_list", &self.map.omega0_list),
            ("disorder.deltas", &self.disorder.deltas),
        ] {
            if g.is_empty() {
                return bad(format!("{name} is empty"));
            }
            if g.iter().any(|v| !v.is_finite()) {
                return bad(format!("{name} has a non-finite entry"));
            }
        }
        if self.sweep.protocols.is_empty() {
            return bad("sweep.protocols is empty".into());
        }
        if self.disorder.realizations == 0 {
            return bad("disorder.realizations must be at least 1".into());
        }
        if self.disorder.deltas.iter().any(|&d| d < 0.0) {
            return bad("disorder.deltas must be >= 0".into());
        }
        if self.workers == 0 {
            return bad("workers must be at least 1".into());
        }
        if !(self.map.refine_step >= 0.0) {
            return bad("map.refine_step must be >= 0".into());
        }
        if !(self.map.threshold > 0.0 && self.map.threshold < 1.0) {
            return bad("map.threshold must lie in (0, 1)".into());
        }
        if self.sweep.tf_grid.iter().chain(&self.map.tf_grid).any(|&t| t <= 0.0) {
            return bad("t_f grids must be positive".into());
        }
        let chain = self.chain_spec()?;
        self.trap_config().validate(&chain)?;
        self.plan_for(self.protocol.tf).validate()?;
        Ok(())
    }

    pub fn chain_spec(&self) -> Result<ChainSpec> {
        Ok(ChainSpec::uniform(self.chain.n_sites, self.chain.coupling)?.with_mode(self.chain.disorder_mode))
    }

    pub fn trap_config(&self) -> TrapConfig {
        self.trap_with(self.trap.omega0, self.trap.distance)
    }

    /// The configured trap with frequency and distance replaced.
    pub fn trap_with(&self, omega0: f64, distance: f64) -> TrapConfig {
        let mut trap = TrapConfig::new(omega0, self.trap.x_start, distance)
            .with_final_frequency(self.trap.omega_f.unwrap_or(omega0));
        if let Some(r) = self.trap.truncation_radius {
            trap = trap.with_truncation_radius(r);
        }
        trap
    }

    pub fn plan_for(&self, t_final: f64) -> PropagationPlan {
        PropagationPlan {
            t_final,
            dt: self.plan.dt.min(t_final),
            record_stride: self.plan.record_stride,
            tolerance: self.plan.tolerance,
            verify: self.plan.verify,
            scheme: self.plan.scheme,
        }
    }
}
