//! Runs a validated scenario and writes its result bundle.

use std::path::{Path, PathBuf};

use ngoa_core::ecr::{compute_ecr, EcrError};
use ngoa_core::energy::{account_run, energy_report, EnergyReport};
use ngoa_core::qoe::{QoeMetric, QoeSampleSet};
use ngoa_core::sim::SimTime;
use ngoa_core::simulation::{run_replication, SimError};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bundle::{BundleError, BundleWriter};
use crate::scenario::{Mode, Scenario};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Bundle(#[from] BundleError),
    #[error("replication {replication}: {source}")]
    Simulation { replication: u32, source: SimError },
    #[error(transparent)]
    Ecr(#[from] EcrError),
}

#[derive(Serialize, Deserialize)]
pub struct QoeRow {
    pub replication: u32,
    pub metric: QoeMetric,
    /// Empty when the replication had no eligible samples.
    pub value: Option<f64>,
}

#[derive(Serialize)]
struct MacRow {
    onu: u32,
    bytes_in: u64,
    bytes_out: u64,
    drops: u64,
    mean_queue_delay_s: f64,
    mean_packet_delay_s: f64,
}

#[derive(Serialize, Deserialize)]
pub struct PowerRow {
    pub time_s: f64,
    pub core_w: f64,
    pub l2_switch_w: f64,
    pub olt_w: f64,
    pub onu_w: f64,
    pub total_w: f64,
}

struct Replication {
    mac: Vec<MacRow>,
    qoe: Vec<QoeRow>,
    energy: EnergyReport,
    power: Vec<PowerRow>,
}

fn replicate(sc: &Scenario, k: u32) -> Result<Replication, RunError> {
    let cfg = sc.run_config(k);
    let out = run_replication(&cfg).map_err(|source| RunError::Simulation { replication: k, source })?;
    let mac = out
        .mac
        .iter()
        .map(|m| MacRow {
            onu: m.onu,
            bytes_in: m.bytes_in,
            bytes_out: m.bytes_out,
            drops: m.drops,
            mean_queue_delay_s: m.mean_queue_delay(),
            mean_packet_delay_s: m.mean_packet_delay(),
        })
        .collect();
    let qoe = sc
        .qoe
        .metrics
        .iter()
        .map(|m| QoeRow { replication: k, metric: m.metric, value: out.metric(m.metric).ok() })
        .collect();
    let timeline = account_run(&out.activity, &sc.architecture, &sc.energy.profile, out.horizon);
    let energy = energy_report(&timeline, out.delivered_bytes * 8);
    let power = timeline
        .binned(SimTime::from_secs(sc.energy.bin_s))
        .into_iter()
        .map(|(t, w)| PowerRow {
            time_s: t.as_secs(),
            core_w: w.core,
            l2_switch_w: w.l2_switch,
            olt_w: w.olt,
            onu_w: w.onu,
            total_w: w.total(),
        })
        .collect();
    Ok(Replication { mac, qoe, energy, power })
}

/// Executes `sc` in `mode` and writes the bundle to `out`. On failure the
/// files written so far are kept and the manifest is marked incomplete.
pub fn execute(sc: &Scenario, mode: Mode, out: &Path) -> Result<PathBuf, RunError> {
    let mut w = BundleWriter::create(out)?;
    w.write("scenario.resolved.toml", sc.echo().as_bytes())?;
    let result = match mode {
        Mode::Simulate => simulate(sc, &mut w),
        Mode::Ecr => ecr(sc, &mut w),
    };
    match result {
        Ok(()) => Ok(w.finish(true)?),
        Err(e) => {
            w.finish(false)?;
            Err(e)
        }
    }
}

fn simulate(sc: &Scenario, w: &mut BundleWriter) -> Result<(), RunError> {
    let reps: Vec<Result<Replication, RunError>> =
        (0..sc.run.replications).into_par_iter().map(|k| replicate(sc, k)).collect();
    let mut qoe = Vec::new();
    let mut first_error = None;
    for (k, r) in reps.into_iter().enumerate() {
        match r {
            Ok(r) => {
                let dir = format!("runs/rep-{k:03}");
                w.write_csv(&format!("{dir}/mac.csv"), &r.mac)?;
                w.write_csv(&format!("{dir}/power.csv"), &r.power)?;
                w.write_json(&format!("{dir}/energy.json"), &r.energy)?;
                qoe.extend(r.qoe);
            }
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    w.write_csv("qoe.csv", &qoe)?;
    first_error.map_or(Ok(()), Err)
}

pub fn sample_rows(set: &QoeSampleSet) -> Vec<QoeRow> {
    let mut rows = Vec::new();
    for (i, &k) in set.replications.iter().enumerate() {
        for (&metric, values) in &set.samples {
            rows.push(QoeRow { replication: k, metric, value: Some(values[i]) });
        }
    }
    rows
}

fn ecr(sc: &Scenario, w: &mut BundleWriter) -> Result<(), RunError> {
    let result = compute_ecr(&sc.ecr_request())?;
    w.write_csv("qoe/candidate.csv", &sample_rows(&result.candidate))?;
    for e in &result.evaluations {
        w.write_csv(&format!("qoe/reference-{:.0}.csv", e.rate), &sample_rows(&e.reference))?;
    }
    w.write_json("ecr.json", &result)?;
    Ok(())
}
