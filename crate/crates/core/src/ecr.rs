//! Equivalent circuit rate: the highest point-to-point reference rate against
//! which a candidate architecture stays non-inferior on every QoE metric.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arch::ArchitectureConfig;
use crate::qoe::{QoeError, QoeMetric, QoeSampleSet};
use crate::sim::SimTime;
use crate::simulation::{run_replication, RunConfig, SimError};
use crate::stats::{iut_decision, noninferiority, Direction, IutResult, MetricSpec, StatsError, TestKind};
use crate::traffic::TrafficConfig;

/// Default rate ladder in bits/s.
pub const DEFAULT_GRID: [f64; 8] = [10e6, 25e6, 50e6, 100e6, 155e6, 300e6, 622e6, 1000e6];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    Independent,
    /// Both arms see the same workload in replication k.
    #[default]
    CommonRandomNumbers,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchPolicy {
    /// Increasing rates until the first failure.
    #[default]
    Scan,
    /// Bisection over the grid, assuming monotone decisions.
    Binary,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Margin {
    Absolute(f64),
    /// Fraction of the reference-arm sample mean.
    Relative(f64),
}

impl Margin {
    pub fn materialize(self, reference: &[f64]) -> f64 {
        match self {
            Margin::Absolute(d) => d,
            Margin::Relative(f) => f * (reference.iter().sum::<f64>() / reference.len() as f64).abs(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricConfig {
    pub metric: QoeMetric,
    pub margin: Margin,
    #[serde(default)]
    pub test: TestKind,
}

impl MetricConfig {
    pub fn direction(&self) -> Direction {
        match self.metric {
            QoeMetric::PageDelay => Direction::SmallerBetter,
            QoeMetric::DecodableFrameRate => Direction::LargerBetter,
        }
    }

    pub fn spec(&self, reference: &[f64]) -> MetricSpec {
        MetricSpec {
            name: self.metric.name().to_string(),
            direction: self.direction(),
            margin: self.margin.materialize(reference),
            test: self.test,
        }
    }
}

/// Page delay within 10% of the reference mean, decodable frame rate within 0.02.
pub fn default_metrics() -> Vec<MetricConfig> {
    vec![
        MetricConfig { metric: QoeMetric::PageDelay, margin: Margin::Relative(0.10), test: TestKind::Welch },
        MetricConfig { metric: QoeMetric::DecodableFrameRate, margin: Margin::Absolute(0.02), test: TestKind::Welch },
    ]
}

#[derive(Clone, Debug)]
pub struct EcrRequest {
    pub candidate: ArchitectureConfig,
    pub traffic: TrafficConfig,
    pub duration: SimTime,
    pub warmup: SimTime,
    pub rate_grid: Vec<f64>,
    pub metrics: Vec<MetricConfig>,
    pub alpha: f64,
    pub replications: u32,
    pub root_seed: u64,
    pub pairing: Pairing,
    pub search: SearchPolicy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arm {
    Candidate,
    Reference,
}

impl std::fmt::Display for Arm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Arm::Candidate => "candidate",
            Arm::Reference => "reference",
        })
    }
}

#[derive(Debug, Error)]
pub enum EcrError {
    #[error("rate grid is empty")]
    EmptyGrid,
    #[error("rate grid must be positive and strictly increasing")]
    BadGrid,
    #[error("no grid rate is at or below the candidate's bound of {bound} bit/s")]
    EmptyClippedGrid { bound: f64 },
    #[error("at least 3 replications per arm are needed, got {0}")]
    TooFewReplications(u32),
    #[error("at least one metric is needed")]
    NoMetrics,
    #[error("{arm} replication {replication}{}: {source}", rate_label(*.rate))]
    Run { arm: Arm, replication: u32, rate: Option<f64>, source: SimError },
    #[error("{arm} replication {replication}{}: {source}", rate_label(*.rate))]
    Qoe { arm: Arm, replication: u32, rate: Option<f64>, source: QoeError },
    #[error("test at {rate} bit/s: {source}")]
    Stats { rate: f64, source: StatsError },
}

fn rate_label(rate: Option<f64>) -> String {
    rate.map(|r| format!(" at {r} bit/s")).unwrap_or_default()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "bps", rename_all = "snake_case")]
pub enum EcrValue {
    Rate(f64),
    /// The lowest grid rate already fails.
    BelowGrid,
    /// Every grid rate passes, none was clipped and the highest lies below
    /// the rate bound, so the true value may be higher.
    AboveGrid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateEvaluation {
    pub rate: f64,
    pub reference: QoeSampleSet,
    pub iut: IutResult,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EcrResult {
    pub ecr: EcrValue,
    /// min(trunk, distribution) of the candidate.
    pub rate_bound: f64,
    pub grid: Vec<f64>,
    pub clipped: Vec<f64>,
    pub pairing: Pairing,
    pub search: SearchPolicy,
    pub alpha: f64,
    pub replications: u32,
    pub metrics: Vec<MetricConfig>,
    pub candidate: QoeSampleSet,
    /// In increasing rate order.
    pub evaluations: Vec<RateEvaluation>,
}

impl EcrRequest {
    pub fn new(candidate: ArchitectureConfig, traffic: TrafficConfig, duration: SimTime, warmup: SimTime) -> Self {
        EcrRequest {
            candidate,
            traffic,
            duration,
            warmup,
            rate_grid: DEFAULT_GRID.to_vec(),
            metrics: default_metrics(),
            alpha: 0.05,
            replications: 10,
            root_seed: 1,
            pairing: Pairing::default(),
            search: SearchPolicy::default(),
        }
    }

    pub fn validate(&self) -> Result<(), EcrError> {
        if self.rate_grid.is_empty() {
            return Err(EcrError::EmptyGrid);
        }
        let positive = self.rate_grid.iter().all(|r| r.is_finite() && *r > 0.0);
        if !positive || self.rate_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(EcrError::BadGrid);
        }
        if self.replications < 3 {
            return Err(EcrError::TooFewReplications(self.replications));
        }
        if self.metrics.is_empty() {
            return Err(EcrError::NoMetrics);
        }
        Ok(())
    }

    fn stream_prefix(&self, arm: Arm, replication: u32) -> String {
        match self.pairing {
            Pairing::CommonRandomNumbers => format!("rep/{replication}"),
            Pairing::Independent => format!("arm/{arm}/rep/{replication}"),
        }
    }

    fn run_config(&self, arch: ArchitectureConfig, arm: Arm, replication: u32) -> RunConfig {
        RunConfig {
            architecture: arch,
            traffic: self.traffic.clone(),
            duration: self.duration,
            warmup: self.warmup,
            root_seed: self.root_seed,
            stream_prefix: self.stream_prefix(arm, replication),
            trace_hash: false,
        }
    }

    /// Runs all replications of one arm, in parallel, merged in replication order.
    pub fn run_arm(&self, arm: Arm, rate: Option<f64>) -> Result<QoeSampleSet, EcrError> {
        let arch = match rate {
            Some(r) => self.candidate.reference_at(r),
            None => self.candidate.clone(),
        };
        let metrics: Vec<QoeMetric> = self.metrics.iter().map(|m| m.metric).collect();
        let values: Vec<_> = (0..self.replications)
            .into_par_iter()
            .map(|k| {
                let out = run_replication(&self.run_config(arch.clone(), arm, k))
                    .map_err(|source| EcrError::Run { arm, replication: k, rate, source })?;
                out.metrics(&metrics)
                    .map_err(|source| EcrError::Qoe { arm, replication: k, rate, source })
            })
            .collect();
        let mut set = QoeSampleSet::new(&metrics, self.warmup > SimTime::ZERO);
        for (k, v) in values.into_iter().enumerate() {
            let k = k as u32;
            set.push(k, &v?).map_err(|source| EcrError::Qoe { arm, replication: k, rate, source })?;
        }
        Ok(set)
    }

    fn test_against(&self, candidate: &QoeSampleSet, rate: f64) -> Result<RateEvaluation, EcrError> {
        let reference = self.run_arm(Arm::Reference, Some(rate))?;
        let components = self
            .metrics
            .iter()
            .map(|m| {
                let r = reference.get(m.metric);
                noninferiority(candidate.get(m.metric), r, &m.spec(r), self.alpha)
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(|source| EcrError::Stats { rate, source })?;
        let iut = iut_decision(components).map_err(|source| EcrError::Stats { rate, source })?;
        Ok(RateEvaluation { rate, reference, iut })
    }
}

/// Compares the candidate with the point-to-point reference at `rate`.
pub fn evaluate_rate(req: &EcrRequest, rate: f64) -> Result<RateEvaluation, EcrError> {
    req.validate()?;
    if !(rate.is_finite() && rate > 0.0) {
        return Err(EcrError::BadGrid);
    }
    let candidate = req.run_arm(Arm::Candidate, None)?;
    req.test_against(&candidate, rate)
}

pub fn compute_ecr(req: &EcrRequest) -> Result<EcrResult, EcrError> {
    req.validate()?;
    let bound = req.candidate.rate_bound();
    let (grid, clipped): (Vec<f64>, Vec<f64>) = req.rate_grid.iter().partition(|&&r| r <= bound);
    if grid.is_empty() {
        return Err(EcrError::EmptyClippedGrid { bound });
    }
    let candidate = req.run_arm(Arm::Candidate, None)?;
    let mut evaluations = Vec::new();
    // Index of the highest passing rate, if any.
    let best = match req.search {
        SearchPolicy::Scan => {
            let mut best = None;
            for (i, &rate) in grid.iter().enumerate() {
                let e = req.test_against(&candidate, rate)?;
                let pass = e.iut.decision.is_non_inferior();
                evaluations.push(e);
                if !pass {
                    break;
                }
                best = Some(i);
            }
            best
        }
        SearchPolicy::Binary => {
            // Invariant: every index <= lo passes, every index >= hi fails.
            let (mut lo, mut hi) = (-1isize, grid.len() as isize);
            while hi - lo > 1 {
                let mid = (lo + hi) / 2;
                let e = req.test_against(&candidate, grid[mid as usize])?;
                if e.iut.decision.is_non_inferior() {
                    lo = mid;
                } else {
                    hi = mid;
                }
                evaluations.push(e);
            }
            evaluations.sort_by(|a, b| a.rate.total_cmp(&b.rate));
            (lo >= 0).then_some(lo as usize)
        }
    };
    let ecr = match best {
        None => EcrValue::BelowGrid,
        Some(i) if i + 1 == grid.len() && clipped.is_empty() && grid[i] < bound => EcrValue::AboveGrid,
        Some(i) => EcrValue::Rate(grid[i]),
    };
    Ok(EcrResult {
        ecr,
        rate_bound: bound,
        grid,
        clipped,
        pairing: req.pairing,
        search: req.search,
        alpha: req.alpha,
        replications: req.replications,
        metrics: req.metrics.clone(),
        candidate,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::ArchKind;
    use crate::stats::Decision;
    use crate::traffic::DayProfileSpec;

    fn request(kind: ArchKind) -> EcrRequest {
        let arch = ArchitectureConfig { kind, onu_count: 8, users_per_onu: 2, ..Default::default() };
        let traffic = TrafficConfig {
            sessions_per_hour: 120.0,
            web_fraction: 1.0,
            day_profile: Some(DayProfileSpec::Named("flat".into())),
            ..Default::default()
        };
        let mut req = EcrRequest::new(arch, traffic, SimTime::from_secs(300.0), SimTime::from_secs(5.0));
        req.metrics.truncate(1);
        req.replications = 5;
        req
    }

    #[test]
    fn margins_materialize() {
        assert_eq!(Margin::Absolute(0.02).materialize(&[5.0]), 0.02);
        assert!((Margin::Relative(0.1).materialize(&[1.0, 3.0]) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn request_validation() {
        let mut r = request(ArchKind::PointToPoint);
        r.replications = 2;
        assert!(matches!(r.validate(), Err(EcrError::TooFewReplications(2))));
        let mut r = request(ArchKind::PointToPoint);
        r.rate_grid = vec![10e6, 10e6];
        assert!(matches!(r.validate(), Err(EcrError::BadGrid)));
        r.rate_grid.clear();
        assert!(matches!(r.validate(), Err(EcrError::EmptyGrid)));
        let mut r = request(ArchKind::PointToPoint);
        r.rate_grid = vec![1e9];
        assert!(matches!(compute_ecr(&r), Err(EcrError::EmptyClippedGrid { .. })));
    }

    #[test]
    fn point_to_point_matches_itself() {
        let mut r = request(ArchKind::PointToPoint);
        r.rate_grid = vec![25e6, 50e6, 75e6, 100e6, 125e6];
        let res = compute_ecr(&r).unwrap();
        assert_eq!(res.clipped, vec![125e6]);
        assert_eq!(res.ecr, EcrValue::Rate(100e6));
        assert_eq!(res.evaluations.len(), 4);
    }

    #[test]
    fn grid_ending_at_the_bound_reports_the_bound() {
        let mut r = request(ArchKind::PointToPoint);
        r.rate_grid = vec![50e6, 100e6];
        assert_eq!(compute_ecr(&r).unwrap().ecr, EcrValue::Rate(100e6));
        r.rate_grid = vec![10e6, 50e6];
        assert_eq!(compute_ecr(&r).unwrap().ecr, EcrValue::AboveGrid);
    }

    #[test]
    fn identical_arms_under_crn_give_zero_difference() {
        let r = request(ArchKind::PointToPoint);
        let e = evaluate_rate(&r, 100e6).unwrap();
        assert_eq!(e.iut.decision, Decision::NonInferior);
        assert_eq!(e.iut.components[0].estimate, 0.0);
    }

    #[test]
    fn results_are_deterministic() {
        let mut r = request(ArchKind::PointToPoint);
        r.rate_grid = vec![10e6, 100e6];
        assert_eq!(compute_ecr(&r).unwrap(), compute_ecr(&r).unwrap());
    }

    #[test]
    fn scan_and_binary_agree() {
        let mut r = request(ArchKind::TdmPon);
        r.candidate.onu_count = 2;
        r.candidate.users_per_onu = 8;
        r.rate_grid = vec![1e6, 10e6, 50e6, 100e6, 1e9];
        let a = compute_ecr(&r).unwrap();
        assert!(matches!(a.ecr, EcrValue::Rate(x) if x <= 100e6));
        r.search = SearchPolicy::Binary;
        let b = compute_ecr(&r).unwrap();
        assert_eq!(a.ecr, b.ecr);
    }

    #[test]
    fn starved_candidate_is_below_grid() {
        let mut r = request(ArchKind::TdmPon);
        r.candidate.feeder_rate = 0.5e6;
        r.candidate.distribution_rate = 0.5e6;
        r.candidate.onu_count = 2;
        r.traffic.sessions_per_hour = 600.0;
        r.duration = SimTime::from_secs(60.0);
        r.replications = 3;
        r.rate_grid = vec![0.5e6];
        let res = compute_ecr(&r).unwrap();
        // The same rate, shared by four ONUs, cannot match a dedicated circuit.
        assert_eq!(res.ecr, EcrValue::BelowGrid);
    }
}
