//! CSV and metadata writers. Column headers are fixed:
//!
//! | file              | columns                                  |
//! |-------------------|------------------------------------------|
//! | heatmap           | `t,site,x_n,sz`                          |
//! | fidelity series   | `t,fidelity,norm`                        |
//! | sweep / map       | `protocol,omega0,tf,d,fidelity`          |
//! | ensemble          | `delta,realization,seed,fidelity`        |
//! | ensemble summary  | `delta,mean_fidelity,std_fidelity,count` |
//!
//! Floats are written in shortest round-trip form, so identical results give
//! identical bytes.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_owned(),
        source,
    })
}

pub fn write_csv<R: Serialize>(path: &Path, rows: &[R]) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_owned(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

/// Like [`write_csv`] but always emits the header, even with no rows.
pub fn write_csv_with_header<R: Serialize>(path: &Path, header: &[&str], rows: &[R]) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_owned(),
        source,
    };
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HeatmapRow {
    pub t: f64,
    pub site: usize,
    pub x_n: f64,
    pub sz: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FidelityRow {
    pub t: f64,
    pub fidelity: f64,
    pub norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundaryRow {
    pub t: f64,
    pub x0: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FieldRow {
    pub t: f64,
    pub site: usize,
    pub x_n: f64,
    pub b_n: f64,
}

/// One point of a fidelity sweep. The wall time goes to the metadata file,
/// not the CSV.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRecord {
    pub protocol: String,
    pub omega0: f64,
    pub tf: f64,
    pub d: f64,
    pub fidelity: f64,
    #[serde(skip)]
    pub wall_time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnsembleRecord {
    pub delta: f64,
    pub realization: u64,
    pub seed: u64,
    pub fidelity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnsembleSummary {
    pub delta: f64,
    pub mean_fidelity: f64,
    pub std_fidelity: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnsembleSeriesRow {
    pub delta: f64,
    pub t: f64,
    pub mean_fidelity: f64,
    pub std_fidelity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransitionRow {
    pub omega0: f64,
    pub d: f64,
    pub t_star: f64,
    pub t_low: f64,
    pub t_high: f64,
    pub window: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpeedLimitRow {
    pub omega0: f64,
    pub v_b: f64,
    pub group_velocity: f64,
    pub lieb_robinson: f64,
    pub fitted: usize,
    pub excluded: usize,
}
