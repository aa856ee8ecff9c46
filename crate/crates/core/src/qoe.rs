//! User-perceived quality measures: mean web page delay and the decodable
//! frame rate of streamed video.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::SimTime;
use crate::traffic::{FrameType, GopPattern};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QoeMetric {
    PageDelay,
    DecodableFrameRate,
}

impl QoeMetric {
    pub fn name(self) -> &'static str {
        match self {
            QoeMetric::PageDelay => "page_delay",
            QoeMetric::DecodableFrameRate => "decodable_frame_rate",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "page_delay" => Some(QoeMetric::PageDelay),
            "decodable_frame_rate" => Some(QoeMetric::DecodableFrameRate),
            _ => None,
        }
    }
}

impl std::fmt::Display for QoeMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum QoeError {
    #[error("insufficient data for {metric}: {eligible} eligible of {total} ({censored} censored, {before_warmup} before warm-up)")]
    InsufficientData {
        metric: QoeMetric,
        total: usize,
        eligible: usize,
        censored: usize,
        before_warmup: usize,
    },
    #[error("replication {replication} lacks metric {metric}")]
    MissingMetric { replication: u32, metric: QoeMetric },
    #[error("sample for {metric} out of range: {value}")]
    OutOfRange { metric: QoeMetric, value: f64 },
}

/// One web page: request time and completion of its last object.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PageTrace {
    pub request: SimTime,
    /// `None` if the run ended first.
    pub completion: Option<SimTime>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PageDelaySummary {
    pub mean_s: f64,
    pub pages: usize,
    pub censored: usize,
    pub before_warmup: usize,
}

/// Mean page delay over completed pages requested at or after `warmup`.
pub fn page_delay_stats(traces: &[PageTrace], warmup: SimTime) -> Result<PageDelaySummary, QoeError> {
    let mut sum = 0.0;
    let (mut pages, mut censored, mut before) = (0, 0, 0);
    for t in traces {
        if t.request < warmup {
            before += 1;
            continue;
        }
        match t.completion {
            Some(c) => {
                sum += (c - t.request).as_secs();
                pages += 1;
            }
            None => censored += 1,
        }
    }
    if pages == 0 {
        return Err(QoeError::InsufficientData {
            metric: QoeMetric::PageDelay,
            total: traces.len(),
            eligible: 0,
            censored,
            before_warmup: before,
        });
    }
    Ok(PageDelaySummary { mean_s: sum / pages as f64, pages, censored, before_warmup: before })
}

/// Reception outcome of one sent frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FrameReceipt {
    pub stream: u32,
    pub index: u32,
    pub gop: u32,
    /// Display position within the GOP.
    pub pos: u32,
    /// Frames in the GOP.
    pub gop_len: u32,
    pub frame_type: FrameType,
    pub in_time: bool,
}

/// Decodable frames in one closed GOP. `received[p]` is the in-time flag of
/// the frame at display position `p`.
pub fn decodable_in_gop(received: &[bool], gop: &GopPattern) -> Vec<bool> {
    let len = received.len() as u32;
    let mut ok = vec![false; received.len()];
    // References first, in display order, so every P sees its predecessor.
    for p in (0..len).filter(|&p| gop.frame_type(p) != FrameType::B) {
        ok[p as usize] = received[p as usize] && gop.references(p, len).iter().all(|&r| ok[r as usize]);
    }
    for p in (0..len).filter(|&p| gop.frame_type(p) == FrameType::B) {
        ok[p as usize] = received[p as usize] && gop.references(p, len).iter().all(|&r| ok[r as usize]);
    }
    ok
}

/// Count of decodable frames and of frames sent.
pub fn decodable_counts(receipts: &[FrameReceipt], gop: &GopPattern) -> (usize, usize) {
    let mut gops: BTreeMap<(u32, u32), Vec<bool>> = BTreeMap::new();
    for r in receipts {
        let v = gops.entry((r.stream, r.gop)).or_insert_with(|| vec![false; r.gop_len as usize]);
        v[r.pos as usize] = r.in_time;
    }
    let decodable = gops
        .values()
        .map(|recv| decodable_in_gop(recv, gop).iter().filter(|&&d| d).count())
        .sum();
    (decodable, receipts.len())
}

/// Fraction of sent frames that are decodable. I frames need only
/// themselves; a P frame needs the preceding reference; a B frame needs both
/// surrounding references, or only the preceding one when it trails the last
/// reference of its GOP.
pub fn decodable_frame_rate(receipts: &[FrameReceipt], gop: &GopPattern) -> Result<f64, QoeError> {
    let (d, total) = decodable_counts(receipts, gop);
    if total == 0 {
        return Err(QoeError::InsufficientData {
            metric: QoeMetric::DecodableFrameRate,
            total: 0,
            eligible: 0,
            censored: 0,
            before_warmup: 0,
        });
    }
    Ok(d as f64 / total as f64)
}

/// Per-replication scalar samples, one series per metric.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct QoeSampleSet {
    pub replications: Vec<u32>,
    pub samples: BTreeMap<QoeMetric, Vec<f64>>,
    pub warmup_applied: bool,
}

impl QoeSampleSet {
    pub fn new(metrics: &[QoeMetric], warmup_applied: bool) -> Self {
        QoeSampleSet {
            replications: Vec::new(),
            samples: metrics.iter().map(|&m| (m, Vec::new())).collect(),
            warmup_applied,
        }
    }

    /// Adds one replication; every metric of the set must be present.
    pub fn push(&mut self, replication: u32, values: &BTreeMap<QoeMetric, f64>) -> Result<(), QoeError> {
        for (&metric, _) in self.samples.iter() {
            let v = *values.get(&metric).ok_or(QoeError::MissingMetric { replication, metric })?;
            let ok = match metric {
                QoeMetric::PageDelay => v > 0.0 && v.is_finite(),
                QoeMetric::DecodableFrameRate => (0.0..=1.0).contains(&v),
            };
            if !ok {
                return Err(QoeError::OutOfRange { metric, value: v });
            }
        }
        for (metric, series) in self.samples.iter_mut() {
            series.push(values[metric]);
        }
        self.replications.push(replication);
        Ok(())
    }

    pub fn get(&self, metric: QoeMetric) -> &[f64] {
        self.samples.get(&metric).map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn len(&self) -> usize {
        self.replications.len()
    }

    pub fn is_empty(&self) -> bool {
        self.replications.is_empty()
    }
}
