//! Non-inferiority tests and their intersection-union combination.
//!
//! Every test compares a candidate sample against a reference sample on one
//! metric. The hypothesis that the candidate is worse by at least the margin
//! δ is rejected when the one-sided `1 - α` confidence bound on the
//! difference (candidate − reference) stays inside the margin.

pub mod dist;
mod nonparam;
mod welch;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use nonparam::{hodges_lehmann, mann_whitney_null_counts, nonparametric_noninferiority, rank_sum_cdf};
pub use welch::{welch_noninferiority, WelchStatistic};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    SmallerBetter,
    LargerBetter,
}

impl Direction {
    pub fn flipped(self) -> Self {
        match self {
            Direction::SmallerBetter => Direction::LargerBetter,
            Direction::LargerBetter => Direction::SmallerBetter,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    #[default]
    Welch,
    Nonparametric,
}

/// One metric to test, with an absolute margin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSpec {
    pub name: String,
    pub direction: Direction,
    pub margin: f64,
    pub test: TestKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    NonInferior,
    NotDemonstrated,
}

impl Decision {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Decision::NonInferior
        } else {
            Decision::NotDemonstrated
        }
    }

    pub fn is_non_inferior(self) -> bool {
        self == Decision::NonInferior
    }
}

/// Location and spread of one arm's sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub median: f64,
}

impl SampleSummary {
    pub fn of(x: &[f64]) -> Self {
        let n = x.len();
        let mean = mean(x);
        let sd = if n > 1 { variance(x, mean).sqrt() } else { 0.0 };
        let mut s = x.to_vec();
        s.sort_by(f64::total_cmp);
        SampleSummary { n, mean, sd, median: median_sorted(&s) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub metric: String,
    pub test: TestKind,
    pub direction: Direction,
    pub margin: f64,
    pub alpha: f64,
    /// Mean difference (Welch) or Hodges–Lehmann median difference,
    /// candidate − reference.
    pub estimate: f64,
    /// Adverse one-sided bound: upper for smaller-better, lower for
    /// larger-better. Infinite when the sample is too small to bound.
    #[serde(with = "extended_f64")]
    pub bound: f64,
    pub p_value: Option<f64>,
    pub statistic: Option<f64>,
    pub df: Option<f64>,
    pub decision: Decision,
    pub candidate: SampleSummary,
    pub reference: SampleSummary,
}

impl TestResult {
    /// Decision implied by `bound` and the margin.
    pub fn decision_from_bound(direction: Direction, bound: f64, margin: f64) -> Decision {
        Decision::from_bool(match direction {
            Direction::SmallerBetter => bound < margin,
            Direction::LargerBetter => bound > -margin,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IutResult {
    pub components: Vec<TestResult>,
    pub decision: Decision,
}

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("{test} needs at least {needed} samples per arm, got candidate {candidate}, reference {reference}")]
    InsufficientSamples { test: &'static str, needed: usize, candidate: usize, reference: usize },
    #[error("alpha must lie in (0, 0.5), got {0}")]
    BadAlpha(f64),
    #[error("margin must be positive and finite, got {0}")]
    BadMargin(f64),
    #[error("samples contain a non-finite value")]
    NonFinite,
    #[error("intersection-union test needs at least one component")]
    NoComponents,
    #[error("empty sample")]
    Empty,
}

/// JSON has no infinities; they travel as the strings `"inf"` and `"-inf"`.
mod extended_f64 {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Label(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        match *v {
            f64::INFINITY => "inf".serialize(s),
            f64::NEG_INFINITY => "-inf".serialize(s),
            x => x.serialize(s),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Number(x) => Ok(x),
            Repr::Label(l) if l == "inf" => Ok(f64::INFINITY),
            Repr::Label(l) if l == "-inf" => Ok(f64::NEG_INFINITY),
            Repr::Label(l) => Err(serde::de::Error::custom(format!("expected a number, got {l:?}"))),
        }
    }
}

pub(crate) fn check_inputs(c: &[f64], r: &[f64], spec: &MetricSpec, alpha: f64) -> Result<(), StatsError> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(StatsError::BadAlpha(alpha));
    }
    if !(spec.margin > 0.0 && spec.margin.is_finite()) {
        return Err(StatsError::BadMargin(spec.margin));
    }
    if c.iter().chain(r).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    Ok(())
}

pub(crate) fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance.
pub(crate) fn variance(x: &[f64], mean: f64) -> f64 {
    x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (x.len() as f64 - 1.0)
}

pub(crate) fn median_sorted(s: &[f64]) -> f64 {
    let n = s.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Runs the test selected by `spec.test`.
pub fn noninferiority(c: &[f64], r: &[f64], spec: &MetricSpec, alpha: f64) -> Result<TestResult, StatsError> {
    match spec.test {
        TestKind::Welch => welch_noninferiority(c, r, spec, alpha),
        TestKind::Nonparametric => nonparametric_noninferiority(c, r, spec, alpha),
    }
}

/// Overall non-inferiority holds only if it holds for every component.
pub fn iut_decision(components: Vec<TestResult>) -> Result<IutResult, StatsError> {
    if components.is_empty() {
        return Err(StatsError::NoComponents);
    }
    let decision = Decision::from_bool(components.iter().all(|c| c.decision.is_non_inferior()));
    Ok(IutResult { components, decision })
}
