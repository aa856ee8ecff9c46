//! Web browsing sessions: pages made of one main object and embedded objects.

use rand_distr::{Distribution, Geometric, LogNormal};
use serde::{Deserialize, Serialize};

use super::{check, TrafficError};
use crate::sim::RngStream;

/// Object size distribution in bytes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SizeDist {
    Fixed { bytes: u64 },
    /// Lognormal with the given mean; `sigma_ln` is the standard deviation of
    /// the underlying normal.
    LogNormal { mean_bytes: f64, sigma_ln: f64 },
}

impl SizeDist {
    fn validate(&self, name: &'static str, max: u64) -> Result<(), TrafficError> {
        match *self {
            SizeDist::Fixed { bytes } => check(name, bytes as f64, bytes >= 1 && bytes <= max),
            SizeDist::LogNormal { mean_bytes, sigma_ln } => {
                check(name, mean_bytes, mean_bytes >= 1.0 && mean_bytes.is_finite())?;
                check(name, sigma_ln, sigma_ln >= 0.0 && sigma_ln.is_finite())
            }
        }
    }

    /// Draws a size in `[1, max]` bytes; lognormal draws above `max` are
    /// rejected and redrawn.
    fn sample(&self, max: u64, stream: &mut RngStream) -> u64 {
        match *self {
            SizeDist::Fixed { bytes } => bytes,
            SizeDist::LogNormal { mean_bytes, sigma_ln } => {
                let mu = mean_bytes.ln() - sigma_ln * sigma_ln / 2.0;
                let d = LogNormal::new(mu, sigma_ln).expect("validated parameters");
                // A pathological bound could reject forever; after many
                // attempts the bound itself is returned.
                for _ in 0..10_000 {
                    let x = d.sample(stream).round().max(1.0);
                    if x <= max as f64 {
                        return x as u64;
                    }
                }
                max
            }
        }
    }
}

/// Count distribution on `{min, min + 1, ...}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CountDist {
    Fixed { value: u32 },
    Geometric { mean: f64, #[serde(default)] min: u32 },
}

impl CountDist {
    fn validate(&self, name: &'static str) -> Result<(), TrafficError> {
        match *self {
            CountDist::Fixed { .. } => Ok(()),
            CountDist::Geometric { mean, min } => check(name, mean, mean >= min as f64 && mean.is_finite()),
        }
    }

    fn sample(&self, stream: &mut RngStream) -> u32 {
        match *self {
            CountDist::Fixed { value } => value,
            CountDist::Geometric { mean, min } => {
                let p = 1.0 / (mean - min as f64 + 1.0);
                let g = Geometric::new(p).expect("validated parameters");
                min.saturating_add(g.sample(stream).min(u32::MAX as u64) as u32)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WebModel {
    pub pages_per_session: CountDist,
    pub main_size: SizeDist,
    pub embedded_count: CountDist,
    pub embedded_size: SizeDist,
    pub think_time_mean_s: f64,
    pub max_object_bytes: u64,
}

impl Default for WebModel {
    fn default() -> Self {
        WebModel {
            pages_per_session: CountDist::Geometric { mean: 5.0, min: 1 },
            main_size: SizeDist::LogNormal { mean_bytes: 10.0 * 1024.0, sigma_ln: 1.0 },
            embedded_count: CountDist::Geometric { mean: 5.0, min: 0 },
            embedded_size: SizeDist::LogNormal { mean_bytes: 7.5 * 1024.0, sigma_ln: 1.0 },
            think_time_mean_s: 10.0,
            max_object_bytes: 1 << 20,
        }
    }
}

impl WebModel {
    pub fn validate(&self) -> Result<(), TrafficError> {
        let max = self.max_object_bytes;
        check("web.max_object_bytes", max as f64, max >= 1)?;
        self.pages_per_session.validate("web.pages_per_session")?;
        self.main_size.validate("web.main_size", max)?;
        self.embedded_count.validate("web.embedded_count")?;
        self.embedded_size.validate("web.embedded_size", max)?;
        check("web.think_time_mean_s", self.think_time_mean_s, self.think_time_mean_s >= 0.0 && self.think_time_mean_s.is_finite())
    }

    pub fn pages_in_session(&self, stream: &mut RngStream) -> u32 {
        self.pages_per_session.sample(stream)
    }

    pub fn think_time(&self, stream: &mut RngStream) -> f64 {
        stream.exponential(self.think_time_mean_s)
    }
}

/// Object sizes of one page, main object first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PageSpec {
    pub main: u64,
    pub embedded: Vec<u64>,
}

impl PageSpec {
    pub fn objects(&self) -> impl Iterator<Item = u64> + '_ {
        std::iter::once(self.main).chain(self.embedded.iter().copied())
    }

    pub fn total_bytes(&self) -> u64 {
        self.objects().sum()
    }
}

pub fn generate_page(model: &WebModel, stream: &mut RngStream) -> PageSpec {
    let max = model.max_object_bytes;
    let main = model.main_size.sample(max, stream);
    let n = model.embedded_count.sample(stream);
    let embedded = (0..n).map(|_| model.embedded_size.sample(max, stream)).collect();
    PageSpec { main, embedded }
}
