//! Human-readable summaries and plot-ready tables from a finished bundle.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ngoa_core::ecr::{EcrResult, EcrValue};
use ngoa_core::energy::EnergyReport;
use ngoa_core::qoe::QoeMetric;
use ngoa_core::stats::SampleSummary;

use crate::bundle::{BundleError, Manifest};
use crate::execute::{PowerRow, QoeRow};

const CLASSES: [&str; 4] = ["core", "l2_switch", "olt", "onu"];

fn read(root: &Path, rel: &str) -> Result<Vec<u8>, BundleError> {
    let path = root.join(rel);
    fs::read(&path).map_err(|source| BundleError::Io { path: path.display().to_string(), source })
}

fn write(root: &Path, rel: &str, bytes: &[u8]) -> Result<(), BundleError> {
    let path = root.join("report").join(rel);
    let dir = path.parent().expect("report subdirectory");
    fs::create_dir_all(dir).map_err(|source| BundleError::Io { path: dir.display().to_string(), source })?;
    fs::write(&path, bytes).map_err(|source| BundleError::Io { path: path.display().to_string(), source })
}

fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>, BundleError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.into_inner().map_err(|e| BundleError::Io { path: "report".into(), source: std::io::Error::other(e.to_string()) })
}

fn mbps(bps: f64) -> String {
    format!("{} Mb/s", bps / 1e6)
}

/// Verifies the bundle, writes `report/` and returns the summary text.
pub fn report(root: &Path) -> Result<String, BundleError> {
    let manifest = Manifest::read(root)?;
    manifest.verify(root)?;
    let summary = if manifest.files.contains_key("ecr.json") {
        ecr_report(root)?
    } else {
        run_report(root, &manifest)?
    };
    write(root, "summary.txt", summary.as_bytes())?;
    Ok(summary)
}

fn ecr_report(root: &Path) -> Result<String, BundleError> {
    let res: EcrResult = serde_json::from_slice(&read(root, "ecr.json")?)?;
    let mut s = String::new();
    let value = match res.ecr {
        EcrValue::Rate(r) => mbps(r),
        EcrValue::BelowGrid => format!("below grid (< {})", mbps(res.grid[0])),
        EcrValue::AboveGrid => format!("above grid (>= {})", mbps(*res.grid.last().expect("non-empty grid"))),
    };
    writeln!(s, "ECR: {value}").unwrap();
    writeln!(s, "rate bound min(trunk, distribution): {}", mbps(res.rate_bound)).unwrap();
    writeln!(s, "pairing {:?}, search {:?}, alpha {}, {} replications per arm", res.pairing, res.search, res.alpha, res.replications)
        .unwrap();
    writeln!(s).unwrap();

    let metrics: Vec<QoeMetric> = res.metrics.iter().map(|m| m.metric).collect();
    let mut header = vec!["rate_bps".to_string(), "status".to_string(), "decision".to_string()];
    for m in &metrics {
        header.push(format!("{m}_bound"));
        header.push(format!("{m}_margin"));
    }
    let mut table = Vec::new();
    let mut qoe_rows = Vec::new();
    writeln!(s, "{:>14}  {:<14}  {}", "rate", "decision", "bounds (margin)").unwrap();
    let evaluated: BTreeMap<u64, _> = res.evaluations.iter().map(|e| (e.rate.to_bits(), e)).collect();
    for &rate in res.grid.iter().chain(&res.clipped) {
        let mut row = vec![format!("{rate}")];
        match evaluated.get(&rate.to_bits()) {
            Some(e) => {
                let decision = if e.iut.decision.is_non_inferior() { "non_inferior" } else { "not_demonstrated" };
                row.push("evaluated".into());
                row.push(decision.into());
                let mut bounds = Vec::new();
                for c in &e.iut.components {
                    row.push(format!("{}", c.bound));
                    row.push(format!("{}", c.margin));
                    bounds.push(format!("{} {:.6} ({:.6})", c.metric, c.bound, c.margin));
                    qoe_rows.push(vec![
                        format!("{rate}"),
                        c.metric.clone(),
                        format!("{}", c.candidate.mean),
                        format!("{}", c.reference.mean),
                        format!("{}", c.estimate),
                        format!("{}", c.bound),
                        format!("{}", c.margin),
                    ]);
                }
                writeln!(s, "{:>14}  {:<16}  {}", mbps(rate), decision, bounds.join(", ")).unwrap();
            }
            None => {
                let status = if res.clipped.contains(&rate) { "clipped" } else { "not_evaluated" };
                row.push(status.into());
                row.push(String::new());
                row.extend(std::iter::repeat_n(String::new(), 2 * metrics.len()));
                writeln!(s, "{:>14}  {status}", mbps(rate)).unwrap();
            }
        }
        table.push(row);
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write(root, "ecr_table.csv", &csv_bytes(&header, &table)?)?;
    write(
        root,
        "rate_qoe.csv",
        &csv_bytes(
            &["rate_bps", "metric", "candidate_mean", "reference_mean", "estimate", "bound", "margin"],
            &qoe_rows,
        )?,
    )?;
    Ok(s)
}

fn run_report(root: &Path, manifest: &Manifest) -> Result<String, BundleError> {
    let mut s = String::new();
    let qoe: Vec<QoeRow> = csv::Reader::from_reader(&read(root, "qoe.csv")?[..])
        .deserialize()
        .collect::<Result<_, _>>()?;
    let mut by_metric: BTreeMap<QoeMetric, Vec<f64>> = BTreeMap::new();
    for r in &qoe {
        let e = by_metric.entry(r.metric).or_default();
        if let Some(v) = r.value {
            e.push(v);
        }
    }
    writeln!(s, "QoE over replications:").unwrap();
    let mut rows = Vec::new();
    for (m, v) in &by_metric {
        if v.is_empty() {
            writeln!(s, "  {m}: no eligible samples").unwrap();
            rows.push(vec![m.to_string(), "0".into(), String::new(), String::new()]);
            continue;
        }
        let sum = SampleSummary::of(v);
        writeln!(s, "  {m}: mean {:.6}, sd {:.6}, n {}", sum.mean, sum.sd, sum.n).unwrap();
        rows.push(vec![m.to_string(), sum.n.to_string(), sum.mean.to_string(), sum.sd.to_string()]);
    }
    write(root, "qoe_summary.csv", &csv_bytes(&["metric", "n", "mean", "sd"], &rows)?)?;

    let runs: Vec<&String> = manifest.files.keys().filter(|f| f.ends_with("/energy.json")).collect();
    let mut joules = [0.0; 4];
    let mut power: Vec<(f64, [f64; 4])> = Vec::new();
    for rel in &runs {
        let e: EnergyReport = serde_json::from_slice(&read(root, rel)?)?;
        let j = e.per_class_j;
        for (acc, x) in joules.iter_mut().zip([j.core, j.l2_switch, j.olt, j.onu]) {
            *acc += x / runs.len() as f64;
        }
        let power_rel = rel.replace("energy.json", "power.csv");
        let rows: Vec<PowerRow> = csv::Reader::from_reader(&read(root, &power_rel)?[..])
            .deserialize()
            .collect::<Result<_, _>>()?;
        for (i, r) in rows.iter().enumerate() {
            if power.len() <= i {
                power.push((r.time_s, [0.0; 4]));
            }
            for (acc, x) in power[i].1.iter_mut().zip([r.core_w, r.l2_switch_w, r.olt_w, r.onu_w]) {
                *acc += x / runs.len() as f64;
            }
        }
    }
    let total: f64 = joules.iter().sum();
    writeln!(s, "\nEnergy per replication (mean of {}):", runs.len()).unwrap();
    let mut share_rows = Vec::new();
    for (c, j) in CLASSES.iter().zip(joules) {
        let pct = if total > 0.0 { 100.0 * j / total } else { 0.0 };
        writeln!(s, "  {c:<10} {j:>14.3} J  {pct:>6.2} %").unwrap();
        share_rows.push(vec![c.to_string(), j.to_string(), pct.to_string()]);
    }
    writeln!(s, "  {:<10} {total:>14.3} J", "total").unwrap();
    write(root, "energy_shares.csv", &csv_bytes(&["class", "energy_j", "share_pct"], &share_rows)?)?;
    let power_rows: Vec<Vec<String>> = power
        .iter()
        .map(|(t, w)| {
            let mut r = vec![t.to_string()];
            r.extend(w.iter().map(|x| x.to_string()));
            r.push(w.iter().sum::<f64>().to_string());
            r
        })
        .collect();
    write(
        root,
        "power.csv",
        &csv_bytes(&["time_s", "core_w", "l2_switch_w", "olt_w", "onu_w", "total_w"], &power_rows)?,
    )?;
    Ok(s)
}
