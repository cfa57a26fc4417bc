//! Experiment drivers behind the CLI: single evolutions with magnetisation
//! heatmaps, fidelity sweeps over `t_f`, `(t_f, d)` maps with speed-limit
//! extraction, and disorder ensembles.
//!
//! Independent evolutions run on a rayon pool of `workers` threads. Results
//! are collected in task order, so output does not depend on scheduling.

pub mod config;
pub mod output;
pub mod svg;

use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde_json::json;

use crate::chain::{field_values_into, ChainSpec, DisorderSpec, TrapConfig};
use crate::error::{Error, Result};
use crate::oracle::{classical_trajectory, ehrenfest_deviation};
use crate::propagator::{evolve, evolve_fidelity, evolve_final};
use crate::states::{fidelity, initial_packet, local_magnetization, target_packet};

pub use config::{ProtocolName, RunConfig};
pub use output::{EnsembleRecord, EnsembleSummary, SweepRecord};

use output::*;

/// Maximum magnon group velocity, `2 dx J / hbar`.
pub const GROUP_VELOCITY: f64 = 2.0;
/// Lieb-Robinson velocity of the Heisenberg chain, `6 dx J / hbar`.
pub const LIEB_ROBINSON_VELOCITY: f64 = 6.0;

/// Fidelity levels bracketing the transition window.
const WINDOW_LOW: f64 = 0.05;
const WINDOW_HIGH: f64 = 0.95;

/// Maps `f` over `items` on `workers` threads, keeping input order.
pub fn par_map<T, R, F>(workers: usize, items: &[T], f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync + Send,
{
    if workers <= 1 {
        return items.iter().map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot build worker pool: {e}")))?;
    pool.install(|| items.par_iter().map(f).collect())
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn write_metadata(out: &Path, command: &str, cfg: &RunConfig, started: Instant, extra: serde_json::Value) -> Result<()> {
    let doc = json!({
        "command": command,
        "finished_unix": unix_now(),
        "wall_seconds": started.elapsed().as_secs_f64(),
        "workers": cfg.workers,
        "details": extra,
    });
    write_text(
        &out.join("metadata.json"),
        &serde_json::to_string_pretty(&doc).expect("metadata serialises"),
    )
}

/// Final fidelity of one transport run.
pub fn transport_fidelity(
    chain: &ChainSpec,
    trap: &TrapConfig,
    protocol: ProtocolName,
    t_f: f64,
    cfg: &RunConfig,
) -> Result<f64> {
    let psi0 = initial_packet(trap, chain)?;
    let target = target_packet(trap, chain)?;
    let p = protocol.build(trap, t_f)?;
    let plan = cfg.plan_for(t_f);
    if plan.verify {
        return Ok(evolve_fidelity(&psi0, &target, chain, trap, &p, &plan.with_stride(usize::MAX))?.final_fidelity);
    }
    fidelity(&target, &evolve_final(&psi0, chain, trap, &p, &plan)?)
}

// ---------------------------------------------------------------------------
// single evolution

#[derive(Clone, Debug)]
pub struct EvolutionOutcome {
    pub final_fidelity: f64,
    pub heatmap: Vec<HeatmapRow>,
    pub series: Vec<FidelityRow>,
    pub boundary: Vec<BoundaryRow>,
    pub deviation: Vec<(f64, f64)>,
    pub step_halving: Option<f64>,
}

/// Runs the configured protocol once, recording magnetisation, fidelity,
/// trap boundary and the centroid deviation from the classical oracle.
pub fn evolution(cfg: &RunConfig) -> Result<EvolutionOutcome> {
    let chain = cfg.chain_spec()?;
    let trap = cfg.trap_config();
    trap.validate(&chain)?;
    let t_f = cfg.protocol.tf;
    let protocol = cfg.protocol.name.build(&trap, t_f)?;
    let plan = cfg.plan_for(t_f);
    let psi0 = initial_packet(&trap, &chain)?;
    let target = target_packet(&trap, &chain)?;
    let traj = evolve(&psi0, &chain, &trap, &protocol, &plan)?;

    let mut heatmap = Vec::with_capacity(traj.states.len() * chain.n_sites());
    let mut series = Vec::with_capacity(traj.states.len());
    let mut boundary = Vec::with_capacity(traj.states.len());
    for psi in &traj.states {
        for (n, sz) in local_magnetization(psi).into_iter().enumerate() {
            heatmap.push(HeatmapRow {
                t: psi.time,
                site: n + 1,
                x_n: chain.site_position(n),
                sz,
            });
        }
        series.push(FidelityRow {
            t: psi.time,
            fidelity: fidelity(&target, psi)?,
            norm: psi.norm(),
        });
        let x0 = protocol.trap_center(psi.time.min(t_f))?;
        boundary.push(BoundaryRow {
            t: psi.time,
            x0,
            lower: x0 - trap.truncation_radius,
            upper: x0 + trap.truncation_radius,
        });
    }
    let classical = classical_trajectory(&protocol, trap.x_start, 0.0, t_f, plan.dt)?;
    let deviation = ehrenfest_deviation(&traj.states, &chain, &classical)?;
    Ok(EvolutionOutcome {
        final_fidelity: fidelity(&target, traj.final_state())?,
        heatmap,
        series,
        boundary,
        deviation,
        step_halving: traj.step_halving,
    })
}

/// Writes `heatmap.csv`, `fidelity.csv`, `boundary.csv`, `ehrenfest.csv`,
/// `heatmap.svg` and `metadata.json` under `out`.
pub fn run_evolution(cfg: &RunConfig, out: &Path) -> Result<EvolutionOutcome> {
    let started = Instant::now();
    ensure_dir(out)?;
    let result = evolution(cfg)?;
    write_csv(&out.join("heatmap.csv"), &result.heatmap)?;
    write_csv(&out.join("fidelity.csv"), &result.series)?;
    write_csv(&out.join("boundary.csv"), &result.boundary)?;
    let dev_rows: Vec<(f64, f64)> = result.deviation.clone();
    write_csv_with_header(&out.join("ehrenfest.csv"), &["t", "deviation"], &dev_rows)?;

    let n = cfg.chain.n_sites;
    let times: Vec<f64> = result.series.iter().map(|r| r.t).collect();
    let rows: Vec<Vec<f64>> = result.heatmap.chunks(n).map(|c| c.iter().map(|r| r.sz).collect()).collect();
    let bounds: Vec<(f64, f64)> = result.boundary.iter().map(|b| (b.lower, b.upper)).collect();
    write_text(&out.join("heatmap.svg"), &svg::render_heatmap(&times, &rows, &bounds))?;

    write_metadata(
        out,
        "evolve",
        cfg,
        started,
        json!({ "final_fidelity": result.final_fidelity, "step_halving": result.step_halving }),
    )?;
    Ok(result)
}

// ---------------------------------------------------------------------------
// t_f sweep

/// Final fidelity for every `(protocol, omega0, t_f)` on the sweep grid.
pub fn tf_sweep(cfg: &RunConfig) -> Result<Vec<SweepRecord>> {
    let chain = cfg.chain_spec()?;
    let d = cfg.trap.distance;
    let mut tasks = Vec::new();
    for &protocol in &cfg.sweep.protocols {
        for &omega0 in &cfg.sweep.omega0_list {
            let trap = cfg.trap_with(omega0, d);
            trap.validate(&chain)?;
            for &tf in &cfg.sweep.tf_grid {
                tasks.push((protocol, omega0, tf));
            }
        }
    }
    par_map(cfg.workers, &tasks, |&(protocol, omega0, tf)| {
        let started = Instant::now();
        let trap = cfg.trap_with(omega0, d);
        let f = transport_fidelity(&chain, &trap, protocol, tf, cfg)?;
        Ok(SweepRecord {
            protocol: protocol.label().to_string(),
            omega0,
            tf,
            d,
            fidelity: f,
            wall_time: started.elapsed().as_secs_f64(),
        })
    })
}

/// Local maxima of each protocol's fidelity curve (candidate "magic"
/// durations of the adiabatic ramp).
pub fn fidelity_peaks(records: &[SweepRecord]) -> Vec<SweepRecord> {
    let mut peaks = Vec::new();
    let mut i = 0;
    while i < records.len() {
        let mut j = i;
        while j < records.len()
            && records[j].protocol == records[i].protocol
            && records[j].omega0 == records[i].omega0
        {
            j += 1;
        }
        let curve = &records[i..j];
        for k in 1..curve.len().saturating_sub(1) {
            if curve[k].fidelity > curve[k - 1].fidelity && curve[k].fidelity >= curve[k + 1].fidelity {
                peaks.push(curve[k].clone());
            }
        }
        i = j;
    }
    peaks
}

/// Writes `sweep.csv`, `peaks.csv` and `metadata.json`.
pub fn run_tf_sweep(cfg: &RunConfig, out: &Path) -> Result<Vec<SweepRecord>> {
    let started = Instant::now();
    ensure_dir(out)?;
    let records = tf_sweep(cfg)?;
    write_csv_with_header(&out.join("sweep.csv"), &["protocol", "omega0", "tf", "d", "fidelity"], &records)?;
    write_csv_with_header(
        &out.join("peaks.csv"),
        &["protocol", "omega0", "tf", "d", "fidelity"],
        &fidelity_peaks(&records),
    )?;
    let walls: Vec<f64> = records.iter().map(|r| r.wall_time).collect();
    write_metadata(out, "sweep-tf", cfg, started, json!({ "wall_time_per_row": walls }))?;
    Ok(records)
}

// ---------------------------------------------------------------------------
// (t_f, d) map and speed limit

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transition {
    /// First upward crossing of the threshold.
    pub t_star: f64,
    /// Last upward crossing of 0.05 before `t_star`, if any.
    pub t_low: Option<f64>,
    /// First upward crossing of 0.95 after `t_star`, if any.
    pub t_high: Option<f64>,
}

impl Transition {
    pub fn window(&self) -> Option<f64> {
        Some(self.t_high? - self.t_low?)
    }
}

fn crossing(a: (f64, f64), b: (f64, f64), level: f64) -> f64 {
    a.0 + (level - a.1) * (b.0 - a.0) / (b.1 - a.1)
}

/// Transition of a fidelity curve sampled at increasing `t_f`. `None` when
/// the curve never crosses `threshold` from below within the samples.
pub fn find_transition(curve: &[(f64, f64)], threshold: f64) -> Option<Transition> {
    let i = (1..curve.len()).find(|&i| curve[i - 1].1 < threshold && curve[i].1 >= threshold)?;
    let t_star = crossing(curve[i - 1], curve[i], threshold);
    let t_low = (1..i)
        .rev()
        .chain(std::iter::once(i))
        .find(|&k| curve[k - 1].1 <= WINDOW_LOW && curve[k].1 > WINDOW_LOW)
        .map(|k| crossing(curve[k - 1], curve[k], WINDOW_LOW));
    let t_high = (i..curve.len())
        .find(|&k| curve[k].1 >= WINDOW_HIGH)
        .map(|k| {
            if k == 0 || curve[k - 1].1 >= WINDOW_HIGH {
                curve[k].0
            } else {
                crossing(curve[k - 1], curve[k], WINDOW_HIGH)
            }
        });
    Some(Transition { t_star, t_low, t_high })
}

/// Slope of the least-squares line `d = v t*` through the origin.
pub fn fit_speed(points: &[(f64, f64)]) -> Option<f64> {
    let (num, den) = points
        .iter()
        .fold((0.0, 0.0), |(n, m), &(d, t)| (n + d * t, m + t * t));
    (den > 0.0).then(|| num / den)
}

#[derive(Clone, Debug)]
pub struct MapOutcome {
    pub records: Vec<SweepRecord>,
    pub transitions: Vec<TransitionRow>,
    pub speed_limits: Vec<SpeedLimitRow>,
    /// `(omega0, d)` pairs without a crossing in the grid.
    pub excluded: Vec<(f64, f64)>,
}

impl MapOutcome {
    pub fn speed_limit(&self, omega0: f64) -> Option<f64> {
        self.speed_limits.iter().find(|r| r.omega0 == omega0).map(|r| r.v_b)
    }
}

/// Refinement points between the last coarse sample at or below 0.05 before
/// the crossing and the first at or above 0.95 after it.
fn refinement_points(curve: &[(f64, f64)], threshold: f64, step: f64) -> Vec<f64> {
    if step <= 0.0 {
        return Vec::new();
    }
    let Some(i) = (1..curve.len()).find(|&i| curve[i - 1].1 < threshold && curve[i].1 >= threshold) else {
        return Vec::new();
    };
    let lo = (0..i).rev().find(|&k| curve[k].1 <= WINDOW_LOW).unwrap_or(i - 1);
    let hi = (i..curve.len()).find(|&k| curve[k].1 >= WINDOW_HIGH).unwrap_or(i);
    let (t_lo, t_hi) = (curve[lo].0, curve[hi].0);
    let mut pts = Vec::new();
    let mut k = 1;
    loop {
        let t = t_lo + step * k as f64;
        if t >= t_hi - 1e-9 {
            break;
        }
        if !curve.iter().any(|(c, _)| (c - t).abs() < 1e-9) {
            pts.push(t);
        }
        k += 1;
    }
    pts
}

/// STA fidelity over the `(t_f, d)` grid for each configured `omega0`, with
/// transition times and the fitted limit velocity `v_b`.
pub fn dt_map(cfg: &RunConfig) -> Result<MapOutcome> {
    let chain = cfg.chain_spec()?;
    let protocol = ProtocolName::Sta;
    let run = |&(omega0, d, tf): &(f64, f64, f64)| -> Result<SweepRecord> {
        let started = Instant::now();
        let trap = cfg.trap_with(omega0, d);
        let f = transport_fidelity(&chain, &trap, protocol, tf, cfg)?;
        Ok(SweepRecord {
            protocol: protocol.label().to_string(),
            omega0,
            tf,
            d,
            fidelity: f,
            wall_time: started.elapsed().as_secs_f64(),
        })
    };

    let mut coarse = Vec::new();
    for &omega0 in &cfg.map.omega0_list {
        for &d in &cfg.map.d_grid {
            cfg.trap_with(omega0, d).validate(&chain)?;
            for &tf in &cfg.map.tf_grid {
                coarse.push((omega0, d, tf));
            }
        }
    }
    let mut records = par_map(cfg.workers, &coarse, run)?;

    let curve_of = |records: &[SweepRecord], omega0: f64, d: f64| -> Vec<(f64, f64)> {
        let mut c: Vec<(f64, f64)> = records
            .iter()
            .filter(|r| r.omega0 == omega0 && r.d == d)
            .map(|r| (r.tf, r.fidelity))
            .collect();
        c.sort_by(|a, b| a.0.total_cmp(&b.0));
        c
    };

    let mut fine = Vec::new();
    for &omega0 in &cfg.map.omega0_list {
        for &d in &cfg.map.d_grid {
            let curve = curve_of(&records, omega0, d);
            for tf in refinement_points(&curve, cfg.map.threshold, cfg.map.refine_step) {
                fine.push((omega0, d, tf));
            }
        }
    }
    records.extend(par_map(cfg.workers, &fine, run)?);
    let order = |v: f64| {
        cfg.map
            .omega0_list
            .iter()
            .position(|&w| w == v)
            .unwrap_or(usize::MAX)
    };
    records.sort_by(|a, b| {
        order(a.omega0)
            .cmp(&order(b.omega0))
            .then(a.d.total_cmp(&b.d))
            .then(a.tf.total_cmp(&b.tf))
    });

    let mut transitions = Vec::new();
    let mut speed_limits = Vec::new();
    let mut excluded = Vec::new();
    for &omega0 in &cfg.map.omega0_list {
        let mut points = Vec::new();
        for &d in &cfg.map.d_grid {
            match find_transition(&curve_of(&records, omega0, d), cfg.map.threshold) {
                Some(tr) => {
                    points.push((d, tr.t_star));
                    transitions.push(TransitionRow {
                        omega0,
                        d,
                        t_star: tr.t_star,
                        t_low: tr.t_low.unwrap_or(f64::NAN),
                        t_high: tr.t_high.unwrap_or(f64::NAN),
                        window: tr.window().unwrap_or(f64::NAN),
                    });
                }
                None => {
                    log::warn!("omega0 = {omega0}, d = {d}: no fidelity crossing in the t_f grid; excluded from the fit");
                    excluded.push((omega0, d));
                }
            }
        }
        let n_excluded = cfg.map.d_grid.len() - points.len();
        speed_limits.push(SpeedLimitRow {
            omega0,
            v_b: fit_speed(&points).unwrap_or(f64::NAN),
            group_velocity: GROUP_VELOCITY,
            lieb_robinson: LIEB_ROBINSON_VELOCITY,
            fitted: points.len(),
            excluded: n_excluded,
        });
    }
    Ok(MapOutcome {
        records,
        transitions,
        speed_limits,
        excluded,
    })
}

/// Writes `map.csv`, `transitions.csv`, `speed_limit.csv` and
/// `metadata.json`.
pub fn run_dt_map(cfg: &RunConfig, out: &Path) -> Result<MapOutcome> {
    let started = Instant::now();
    ensure_dir(out)?;
    let result = dt_map(cfg)?;
    write_csv_with_header(&out.join("map.csv"), &["protocol", "omega0", "tf", "d", "fidelity"], &result.records)?;
    write_csv_with_header(
        &out.join("transitions.csv"),
        &["omega0", "d", "t_star", "t_low", "t_high", "window"],
        &result.transitions,
    )?;
    write_csv(&out.join("speed_limit.csv"), &result.speed_limits)?;
    write_metadata(
        out,
        "map-dt",
        cfg,
        started,
        json!({
            "excluded": result.excluded,
            "wall_time_per_row": result.records.iter().map(|r| r.wall_time).collect::<Vec<_>>(),
        }),
    )?;
    Ok(result)
}

// ---------------------------------------------------------------------------
// disorder ensemble

#[derive(Clone, Debug)]
pub struct EnsembleOutcome {
    pub records: Vec<EnsembleRecord>,
    pub summary: Vec<EnsembleSummary>,
    pub series: Vec<EnsembleSeriesRow>,
}

/// Mean and sample standard deviation (`n - 1` denominator, zero for a
/// single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Aggregates member rows per `delta`, in first-appearance order.
pub fn summarize(records: &[EnsembleRecord]) -> Vec<EnsembleSummary> {
    let mut deltas: Vec<f64> = Vec::new();
    for r in records {
        if !deltas.contains(&r.delta) {
            deltas.push(r.delta);
        }
    }
    deltas
        .into_iter()
        .map(|delta| {
            let values: Vec<f64> = records.iter().filter(|r| r.delta == delta).map(|r| r.fidelity).collect();
            let (mean, std) = mean_std(&values);
            EnsembleSummary {
                delta,
                mean_fidelity: mean,
                std_fidelity: std,
                count: values.len(),
            }
        })
        .collect()
}

/// Configured protocol on `realizations` disordered chains per amplitude.
/// Realization `r` at amplitude `delta` uses `DisorderSpec(delta, seed, r)`.
pub fn disorder_ensemble(cfg: &RunConfig) -> Result<EnsembleOutcome> {
    let base = cfg.chain_spec()?;
    let trap = cfg.trap_config();
    trap.validate(&base)?;
    let t_f = cfg.protocol.tf;
    let protocol = cfg.protocol.name.build(&trap, t_f)?;
    let plan = cfg.plan_for(t_f);
    let psi0 = initial_packet(&trap, &base)?;
    let target = target_packet(&trap, &base)?;
    let seed = cfg.disorder.master_seed;

    let mut tasks = Vec::new();
    for &delta in &cfg.disorder.deltas {
        // without disorder every realization is the same chain
        let count = if delta == 0.0 { 1 } else { cfg.disorder.realizations as u64 };
        for r in 0..count {
            tasks.push((delta, r));
        }
    }
    let runs = par_map(cfg.workers, &tasks, |&(delta, r)| {
        let chain = base.disordered(&DisorderSpec::new(delta, seed, r))?;
        evolve_fidelity(&psi0, &target, &chain, &trap, &protocol, &plan)
    })?;

    let mut records = Vec::new();
    let mut series = Vec::new();
    let mut cursor = 0;
    for &delta in &cfg.disorder.deltas {
        let group = if delta == 0.0 {
            vec![&runs[cursor]; cfg.disorder.realizations]
        } else {
            runs[cursor..cursor + cfg.disorder.realizations].iter().collect()
        };
        cursor += if delta == 0.0 { 1 } else { cfg.disorder.realizations };
        for (r, run) in group.iter().enumerate() {
            records.push(EnsembleRecord {
                delta,
                realization: r as u64,
                seed,
                fidelity: run.final_fidelity,
            });
        }
        for (k, sample) in group[0].series.iter().enumerate() {
            let values: Vec<f64> = group.iter().map(|run| run.series[k].fidelity).collect();
            let (mean, std) = mean_std(&values);
            series.push(EnsembleSeriesRow {
                delta,
                t: sample.time,
                mean_fidelity: mean,
                std_fidelity: std,
            });
        }
    }
    let summary = summarize(&records);
    Ok(EnsembleOutcome {
        records,
        summary,
        series,
    })
}

/// Writes `ensemble.csv`, `summary.csv`, `ensemble_series.csv` and
/// `metadata.json`.
pub fn run_disorder_ensemble(cfg: &RunConfig, out: &Path) -> Result<EnsembleOutcome> {
    let started = Instant::now();
    ensure_dir(out)?;
    let result = disorder_ensemble(cfg)?;
    write_csv_with_header(
        &out.join("ensemble.csv"),
        &["delta", "realization", "seed", "fidelity"],
        &result.records,
    )?;
    write_csv_with_header(
        &out.join("summary.csv"),
        &["delta", "mean_fidelity", "std_fidelity", "count"],
        &result.summary,
    )?;
    write_csv_with_header(
        &out.join("ensemble_series.csv"),
        &["delta", "t", "mean_fidelity", "std_fidelity"],
        &result.series,
    )?;
    write_metadata(out, "disorder", cfg, started, json!({ "evolutions": result.records.len() }))?;
    Ok(result)
}

// ---------------------------------------------------------------------------
// field dump

/// `B_n(t)` on every site at every `record_stride`-th step of the plan.
pub fn field_samples(cfg: &RunConfig) -> Result<Vec<FieldRow>> {
    let chain = cfg.chain_spec()?;
    let trap = cfg.trap_config();
    trap.validate(&chain)?;
    let t_f = cfg.protocol.tf;
    let protocol = cfg.protocol.name.build(&trap, t_f)?;
    let plan = cfg.plan_for(t_f);
    plan.validate()?;
    let (steps, dt) = plan.steps();
    let mut field = vec![0.0; chain.n_sites()];
    let mut rows = Vec::new();
    for k in (0..=steps).filter(|k| k % plan.record_stride == 0 || *k == steps) {
        let t = (k as f64 * dt).min(t_f);
        let (omega_sq, center) = protocol.controls(t)?;
        field_values_into(omega_sq, center, &trap, &chain, &mut field);
        for (n, &b) in field.iter().enumerate() {
            rows.push(FieldRow {
                t,
                site: n + 1,
                x_n: chain.site_position(n),
                b_n: b,
            });
        }
    }
    Ok(rows)
}

/// Writes `field.csv` and `metadata.json`.
pub fn run_field_dump(cfg: &RunConfig, out: &Path) -> Result<usize> {
    let started = Instant::now();
    ensure_dir(out)?;
    let rows = field_samples(cfg)?;
    write_csv(&out.join("field.csv"), &rows)?;
    write_metadata(out, "field-dump", cfg, started, json!({ "rows": rows.len() }))?;
    Ok(rows.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transition_on_synthetic_curve() {
        let curve = vec![(10.0, 0.0), (20.0, 0.02), (30.0, 0.3), (40.0, 0.7), (50.0, 0.97), (60.0, 1.0)];
        let tr = find_transition(&curve, 0.5).unwrap();
        assert!((tr.t_star - 35.0).abs() < 1e-12);
        assert!((tr.t_low.unwrap() - (20.0 + 0.03 / 0.28 * 10.0)).abs() < 1e-12);
        assert!((tr.t_high.unwrap() - (40.0 + 0.25 / 0.27 * 10.0)).abs() < 1e-12);
    }

    #[test]
    fn no_crossing_gives_none() {
        assert!(find_transition(&[(10.0, 0.6), (20.0, 0.9)], 0.5).is_none());
        assert!(find_transition(&[(10.0, 0.1), (20.0, 0.2)], 0.5).is_none());
    }

    #[test]
    fn through_origin_fit() {
        let pts = vec![(20.0, 21.0), (40.0, 42.0), (80.0, 84.0)];
        assert!((fit_speed(&pts).unwrap() - 20.0 / 21.0).abs() < 1e-14);
        assert!(fit_speed(&[]).is_none());
    }

    #[test]
    fn refinement_brackets_transition() {
        let curve = vec![(10.0, 0.0), (20.0, 0.02), (30.0, 0.3), (40.0, 0.7), (50.0, 0.97), (60.0, 1.0)];
        let pts = refinement_points(&curve, 0.5, 2.5);
        assert_eq!(pts.first(), Some(&22.5));
        assert_eq!(pts.last(), Some(&47.5));
        assert!(!pts.contains(&30.0));
        assert!(refinement_points(&curve, 0.5, 0.0).is_empty());
    }

    #[test]
    fn sample_statistics() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_std(&[0.7]), (0.7, 0.0));
    }

    #[test]
    fn peaks_of_oscillating_curve() {
        let rec = |tf: f64, f: f64| SweepRecord {
            protocol: "linear".into(),
            omega0: 0.5,
            tf,
            d: 150.0,
            fidelity: f,
            wall_time: 0.0,
        };
        let records = vec![rec(1.0, 0.1), rec(2.0, 0.5), rec(3.0, 0.2), rec(4.0, 0.8), rec(5.0, 0.6)];
        let peaks = fidelity_peaks(&records);
        assert_eq!(peaks.iter().map(|r| r.tf).collect::<Vec<_>>(), vec![2.0, 4.0]);
    }
}
