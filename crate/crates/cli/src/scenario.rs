//! Scenario files: a TOML document with one table per concern.

use std::path::{Path, PathBuf};

use ngoa_core::arch::ArchitectureConfig;
use ngoa_core::ecr::{default_metrics, EcrRequest, Margin, MetricConfig, Pairing, SearchPolicy, DEFAULT_GRID};
use ngoa_core::energy::PowerProfile;
use ngoa_core::qoe::QoeMetric;
use ngoa_core::sim::SimTime;
use ngoa_core::simulation::RunConfig;
use ngoa_core::stats::TestKind;
use ngoa_core::traffic::{DayProfileSpec, TrafficConfig};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: String, source: Box<toml::de::Error> },
    #[error("override `{0}` is not of the form key=value")]
    OverrideSyntax(String),
    #[error("unknown key `{key}`")]
    UnknownKey { key: String },
    #[error("override `{key}`: {message}")]
    Override { key: String, message: String },
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Independent replications of the configured architecture.
    #[default]
    Simulate,
    /// Full equivalent-circuit-rate search.
    Ecr,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricEntry {
    pub metric: QoeMetric,
    pub margin: Margin,
    /// Falls back to `stats.test`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test: Option<TestKind>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QoeSection {
    pub warmup_s: f64,
    pub metrics: Vec<MetricEntry>,
}

impl Default for QoeSection {
    fn default() -> Self {
        QoeSection {
            warmup_s: 60.0,
            metrics: default_metrics()
                .into_iter()
                .map(|m| MetricEntry { metric: m.metric, margin: m.margin, test: None })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StatsSection {
    pub alpha: f64,
    pub test: TestKind,
}

impl Default for StatsSection {
    fn default() -> Self {
        StatsSection { alpha: 0.05, test: TestKind::Welch }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EcrSection {
    pub grid_bps: Vec<f64>,
    pub replications: u32,
    pub pairing: Pairing,
    pub search: SearchPolicy,
}

impl Default for EcrSection {
    fn default() -> Self {
        EcrSection {
            grid_bps: DEFAULT_GRID.to_vec(),
            replications: 10,
            pairing: Pairing::default(),
            search: SearchPolicy::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnergySection {
    /// Width of the bins in the power time series.
    pub bin_s: f64,
    pub profile: PowerProfile,
}

impl Default for EnergySection {
    fn default() -> Self {
        EnergySection { bin_s: 1.0, profile: PowerProfile::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub mode: Mode,
    pub duration_s: f64,
    pub root_seed: u64,
    pub replications: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection { mode: Mode::Simulate, duration_s: 600.0, root_seed: 1, replications: 1, output_dir: None }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scenario {
    pub architecture: ArchitectureConfig,
    pub traffic: TrafficConfig,
    pub qoe: QoeSection,
    pub stats: StatsSection,
    pub ecr: EcrSection,
    pub energy: EnergySection,
    pub run: RunSection,
}

impl Scenario {
    pub fn parse(text: &str, origin: &str) -> Result<Self, ScenarioError> {
        toml::from_str(text).map_err(|e| ScenarioError::Parse { path: origin.to_string(), source: Box::new(e) })
    }

    /// Reads, applies `key=value` overrides, resolves file references and
    /// validates. Nothing is simulated.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, ScenarioError> {
        let mut sc = Scenario::read(path, overrides)?;
        sc.resolve(path.parent().unwrap_or(Path::new(".")))?;
        sc.validate()?;
        Ok(sc)
    }

    /// Reads and applies overrides without resolving or validating.
    pub fn read(path: &Path, overrides: &[String]) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })?;
        Scenario::parse(&text, &path.display().to_string())?.with_overrides(overrides)
    }

    pub fn with_overrides(self, overrides: &[String]) -> Result<Self, ScenarioError> {
        if overrides.is_empty() {
            return Ok(self);
        }
        let mut doc = toml::Table::try_from(&self).map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        let mut keys = Vec::new();
        for o in overrides {
            let (key, raw) = o.split_once('=').ok_or_else(|| ScenarioError::OverrideSyntax(o.clone()))?;
            let key = key.trim();
            set_path(&mut doc, key, parse_value(raw.trim()))?;
            keys.push(key.to_string());
        }
        doc.try_into::<Scenario>().map_err(|e| {
            let message = e.to_string();
            // Point at the override that introduced an unknown field.
            let culprit = keys
                .iter()
                .find(|k| message.contains(&format!("`{}`", k.rsplit('.').next().unwrap_or(k))));
            match culprit {
                Some(key) if message.contains("unknown field") => ScenarioError::UnknownKey { key: key.clone() },
                Some(key) => ScenarioError::Override { key: key.clone(), message },
                None => ScenarioError::Override { key: keys.join(", "), message },
            }
        })
    }

    /// Replaces the day profile by its 24 values, reading files relative to `base`.
    fn resolve(&mut self, base: &Path) -> Result<(), ScenarioError> {
        if let Some(DayProfileSpec::Named(name)) = &self.traffic.day_profile {
            let builtin = matches!(name.as_str(), "business" | "residential" | "flat");
            if !builtin && Path::new(name).is_relative() {
                self.traffic.day_profile = Some(DayProfileSpec::Named(base.join(name).display().to_string()));
            }
        }
        let profile = self.traffic.resolve_profile().map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        self.traffic.day_profile = Some(DayProfileSpec::Values(profile.values().to_vec()));
        for m in &mut self.qoe.metrics {
            m.test.get_or_insert(self.stats.test);
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let invalid = |e: &dyn std::fmt::Display| ScenarioError::Invalid(e.to_string());
        self.architecture.validate().map_err(|e| invalid(&e))?;
        self.traffic.validate().map_err(|e| invalid(&e))?;
        self.energy.profile.validate().map_err(|e| invalid(&e))?;
        let r = &self.run;
        if !(r.duration_s > 0.0 && r.duration_s.is_finite()) {
            return Err(ScenarioError::Invalid(format!("run.duration_s must be positive, got {}", r.duration_s)));
        }
        if !(self.qoe.warmup_s >= 0.0 && self.qoe.warmup_s < r.duration_s) {
            return Err(ScenarioError::Invalid(format!(
                "qoe.warmup_s must lie in [0, run.duration_s), got {}",
                self.qoe.warmup_s
            )));
        }
        if !(self.energy.bin_s > 0.0 && self.energy.bin_s.is_finite()) {
            return Err(ScenarioError::Invalid(format!("energy.bin_s must be positive, got {}", self.energy.bin_s)));
        }
        if r.replications == 0 {
            return Err(ScenarioError::Invalid("run.replications must be at least 1".into()));
        }
        if self.qoe.metrics.is_empty() {
            return Err(ScenarioError::Invalid("qoe.metrics is empty".into()));
        }
        for m in &self.qoe.metrics {
            let d = match m.margin {
                Margin::Absolute(d) | Margin::Relative(d) => d,
            };
            if !(d > 0.0 && d.is_finite()) {
                return Err(ScenarioError::Invalid(format!("margin of {} must be positive, got {d}", m.metric)));
            }
        }
        if !(self.stats.alpha > 0.0 && self.stats.alpha < 0.5) {
            return Err(ScenarioError::Invalid(format!("stats.alpha must lie in (0, 0.5), got {}", self.stats.alpha)));
        }
        if r.mode == Mode::Ecr {
            self.ecr_request().validate().map_err(|e| invalid(&e))?;
        }
        Ok(())
    }

    pub fn metrics(&self) -> Vec<MetricConfig> {
        self.qoe
            .metrics
            .iter()
            .map(|m| MetricConfig { metric: m.metric, margin: m.margin, test: m.test.unwrap_or(self.stats.test) })
            .collect()
    }

    pub fn run_config(&self, replication: u32) -> RunConfig {
        RunConfig {
            architecture: self.architecture.clone(),
            traffic: self.traffic.clone(),
            duration: SimTime::from_secs(self.run.duration_s),
            warmup: SimTime::from_secs(self.qoe.warmup_s),
            root_seed: self.run.root_seed,
            stream_prefix: format!("rep/{replication}"),
            trace_hash: false,
        }
    }

    pub fn ecr_request(&self) -> EcrRequest {
        EcrRequest {
            candidate: self.architecture.clone(),
            traffic: self.traffic.clone(),
            duration: SimTime::from_secs(self.run.duration_s),
            warmup: SimTime::from_secs(self.qoe.warmup_s),
            rate_grid: self.ecr.grid_bps.clone(),
            metrics: self.metrics(),
            alpha: self.stats.alpha,
            replications: self.ecr.replications,
            root_seed: self.run.root_seed,
            pairing: self.ecr.pairing,
            search: self.ecr.search,
        }
    }

    /// The fully resolved scenario as TOML, without the output location.
    pub fn echo(&self) -> String {
        let mut sc = self.clone();
        sc.run.output_dir = None;
        toml::to_string(&sc).expect("scenario serializes")
    }
}

fn parse_value(raw: &str) -> toml::Value {
    // Anything that is not a TOML literal is taken as a bare string.
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn set_path(doc: &mut toml::Table, key: &str, value: toml::Value) -> Result<(), ScenarioError> {
    let unknown = || ScenarioError::UnknownKey { key: key.to_string() };
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(unknown());
    }
    let (last, parents) = parts.split_last().expect("non-empty key");
    let mut table = doc;
    for (depth, p) in parents.iter().enumerate() {
        // Top-level sections always exist; deeper optional tables may not.
        if depth == 0 && !table.contains_key(*p) {
            return Err(unknown());
        }
        let entry = table.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry.as_table_mut().ok_or_else(unknown)?;
    }
    if parents.is_empty() {
        return Err(unknown());
    }
    table.insert(last.to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ngoa_core::arch::ArchKind;

    #[test]
    fn empty_document_gives_defaults() {
        let sc = Scenario::parse("", "t").unwrap();
        assert_eq!(sc, Scenario::default());
    }

    #[test]
    fn unknown_field_is_rejected_with_line() {
        let e = Scenario::parse("[architecture]\nonu_count = 4\nfeeder_rat = 1e9\n", "t.toml").unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("feeder_rat") && msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn overrides_apply_and_type_check() {
        let sc = Scenario::default()
            .with_overrides(&["architecture.kind=hybrid_twdm_pon".into(), "run.root_seed=7".into()])
            .unwrap();
        assert_eq!(sc.architecture.kind, ArchKind::HybridTwdmPon);
        assert_eq!(sc.run.root_seed, 7);
        let e = Scenario::default().with_overrides(&["run.root_seed=\"x\"".into()]).unwrap_err();
        assert!(matches!(e, ScenarioError::Override { ref key, .. } if key == "run.root_seed"), "{e}");
    }

    #[test]
    fn unknown_override_names_the_key() {
        for key in ["architecture.feeder_rat", "nosuch.x", "run"] {
            let e = Scenario::default().with_overrides(&[format!("{key}=1")]).unwrap_err();
            assert!(matches!(e, ScenarioError::UnknownKey { key: ref k } if k == key), "{key}: {e}");
            assert!(e.to_string().contains(key));
        }
    }

    #[test]
    fn optional_tables_can_be_set() {
        let sc = Scenario::default().with_overrides(&["traffic.probe.down_bps_per_onu=1e6".into()]).unwrap();
        assert_eq!(sc.traffic.probe.unwrap().down_bps_per_onu, 1e6);
    }

    #[test]
    fn echo_round_trips_with_materialized_profile() {
        let mut sc = Scenario::default();
        sc.resolve(Path::new(".")).unwrap();
        let text = sc.echo();
        let back = Scenario::parse(&text, "echo").unwrap();
        assert_eq!(back, sc);
        assert!(matches!(back.traffic.day_profile, Some(DayProfileSpec::Values(ref v)) if v.len() == 24));
        assert!(back.qoe.metrics.iter().all(|m| m.test.is_some()));
    }

    #[test]
    fn validation_catches_bad_values() {
        let mut sc = Scenario::default();
        sc.qoe.warmup_s = sc.run.duration_s;
        assert!(sc.validate().is_err());
        let mut sc = Scenario::default();
        sc.run.mode = Mode::Ecr;
        sc.ecr.replications = 2;
        assert!(sc.validate().unwrap_err().to_string().contains("3 replications"));
        let mut sc = Scenario::default();
        sc.architecture.onu_count = 0;
        assert!(sc.validate().is_err());
    }
}
