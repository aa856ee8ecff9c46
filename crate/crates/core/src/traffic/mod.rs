//! Multi-level traffic generation.
//!
//! A user-behaviour layer draws session arrivals from a non-homogeneous
//! Poisson process shaped by a 24-hour day profile. Each session is either a
//! web browsing session or a video stream; the application models live in
//! [`web`] and [`video`].

pub mod video;
pub mod web;

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::{RngStream, SimTime};

pub use video::{generate_gop_schedule, FrameEmission, FrameType, GopPattern, VideoModel};
pub use web::{generate_page, CountDist, PageSpec, SizeDist, WebModel};

const RESIDENTIAL: &str = include_str!("../../data/residential.txt");
const BUSINESS: &str = include_str!("../../data/business.txt");

#[derive(Debug, Error)]
pub enum TrafficError {
    #[error("day profile: {0}")]
    Profile(String),
    #[error("cannot read day profile {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid traffic parameter {name} = {value}")]
    Invalid { name: &'static str, value: f64 },
}

fn check(name: &'static str, value: f64, ok: bool) -> Result<(), TrafficError> {
    if ok {
        Ok(())
    } else {
        Err(TrafficError::Invalid { name, value })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UserClass {
    Business,
    #[default]
    Residential,
}

/// Hourly session-rate multipliers averaging 1.
#[derive(Clone, Debug, PartialEq)]
pub struct DayProfile {
    bins: [f64; 24],
}

impl DayProfile {
    pub fn new(values: &[f64]) -> Result<Self, TrafficError> {
        if values.len() != 24 {
            return Err(TrafficError::Profile(format!("expected 24 multipliers, got {}", values.len())));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(TrafficError::Profile(format!("multiplier {v} is negative or not finite")));
        }
        let mean = values.iter().sum::<f64>() / 24.0;
        if (mean - 1.0).abs() > 1e-9 {
            return Err(TrafficError::Profile(format!("multipliers average {mean}, not 1")));
        }
        let mut bins = [0.0; 24];
        bins.copy_from_slice(values);
        Ok(DayProfile { bins })
    }

    pub fn flat() -> Self {
        DayProfile { bins: [1.0; 24] }
    }

    pub fn builtin(class: UserClass) -> Self {
        let text = match class {
            UserClass::Business => BUSINESS,
            UserClass::Residential => RESIDENTIAL,
        };
        Self::parse(text).expect("built-in profile is valid")
    }

    /// Parses one multiplier per line; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, TrafficError> {
        let mut values = Vec::with_capacity(24);
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let v: f64 = line
                .parse()
                .map_err(|_| TrafficError::Profile(format!("line {}: not a number: {line:?}", n + 1)))?;
            values.push(v);
        }
        Self::new(&values)
    }

    pub fn load(path: &Path) -> Result<Self, TrafficError> {
        let text = std::fs::read_to_string(path).map_err(|source| TrafficError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn values(&self) -> &[f64; 24] {
        &self.bins
    }

    pub fn multiplier(&self, hour: usize) -> f64 {
        self.bins[hour % 24]
    }

    pub fn peak(&self) -> f64 {
        self.bins.iter().cloned().fold(0.0, f64::max)
    }
}

/// Session behaviour of one class of users.
#[derive(Clone, Debug, PartialEq)]
pub struct UserProfile {
    pub class: UserClass,
    pub day_profile: DayProfile,
    pub sessions_per_hour: f64,
    /// Probability that a session is web browsing rather than video.
    pub web_fraction: f64,
    /// Wall-clock hour at simulation time zero.
    pub start_hour: f64,
}

impl UserProfile {
    fn rate_at(&self, t: f64) -> f64 {
        let hour = ((t / 3600.0 + self.start_hour).floor() as i64).rem_euclid(24) as usize;
        self.sessions_per_hour / 3600.0 * self.day_profile.multiplier(hour)
    }
}

/// Next session arrival strictly after `now`, by thinning a homogeneous
/// process at the peak rate. `None` when the profile never generates sessions.
pub fn next_session_time(profile: &UserProfile, now: SimTime, stream: &mut RngStream) -> Option<SimTime> {
    let peak = profile.sessions_per_hour / 3600.0 * profile.day_profile.peak();
    if !(peak > 0.0) {
        return None;
    }
    let mut t = now.as_secs();
    loop {
        t += stream.exponential(1.0 / peak);
        if stream.uniform() * peak < profile.rate_at(t) {
            let at = SimTime::from_secs(t);
            // Sub-picosecond draws would otherwise round onto `now`.
            return Some(if at > now { at } else { SimTime::from_ps(now.as_ps() + 1) });
        }
    }
}

/// One transport segment of an application object.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Segment {
    pub index: u32,
    pub payload: u32,
}

/// Splits `size` bytes into `ceil(size / mtu_payload)` segments.
pub fn segment_object(size: u64, mtu_payload: u32) -> Vec<Segment> {
    assert!(mtu_payload >= 1, "mtu payload must be positive");
    let mtu = mtu_payload as u64;
    let count = size.div_ceil(mtu);
    (0..count)
        .map(|i| Segment {
            index: i as u32,
            payload: (size - i * mtu).min(mtu) as u32,
        })
        .collect()
}

/// Parameters of the windowed reliable transfer used by web objects.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransportConfig {
    pub window_segments: u32,
    pub mtu_payload: u32,
    pub header_bytes: u32,
    pub ack_bytes: u32,
    pub request_bytes: u32,
    pub rto_s: f64,
    /// Round trip between the OLT and the servers.
    pub core_rtt_s: f64,
}

impl Default for TransportConfig {
    fn default() -> Self {
        TransportConfig {
            window_segments: 16,
            mtu_payload: 1460,
            header_bytes: 40,
            ack_bytes: 40,
            request_bytes: 400,
            rto_s: 0.2,
            core_rtt_s: 0.01,
        }
    }
}

/// Poisson packet load per ONU, without application endpoints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeLoad {
    pub down_bps_per_onu: f64,
    pub up_bps_per_onu: f64,
    pub packet_bytes: u32,
}

impl Default for ProbeLoad {
    fn default() -> Self {
        ProbeLoad { down_bps_per_onu: 0.0, up_bps_per_onu: 0.0, packet_bytes: 1500 }
    }
}

/// Where the day profile comes from: a built-in name, a file, or inline values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DayProfileSpec {
    Named(String),
    Values(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrafficConfig {
    pub user_class: UserClass,
    /// `"business"`, `"residential"`, `"flat"`, a file path, or 24 numbers.
    /// Defaults to the built-in profile of `user_class`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub day_profile: Option<DayProfileSpec>,
    pub start_hour: f64,
    pub sessions_per_hour: f64,
    pub web_fraction: f64,
    pub web: WebModel,
    pub video: VideoModel,
    pub transport: TransportConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeLoad>,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        TrafficConfig {
            user_class: UserClass::Residential,
            day_profile: None,
            start_hour: 20.0,
            sessions_per_hour: 20.0,
            web_fraction: 0.8,
            web: WebModel::default(),
            video: VideoModel::default(),
            transport: TransportConfig::default(),
            probe: None,
        }
    }
}

impl TrafficConfig {
    pub fn resolve_profile(&self) -> Result<DayProfile, TrafficError> {
        match &self.day_profile {
            None => Ok(DayProfile::builtin(self.user_class)),
            Some(DayProfileSpec::Values(v)) => DayProfile::new(v),
            Some(DayProfileSpec::Named(name)) => match name.as_str() {
                "business" => Ok(DayProfile::builtin(UserClass::Business)),
                "residential" => Ok(DayProfile::builtin(UserClass::Residential)),
                "flat" => Ok(DayProfile::flat()),
                path => DayProfile::load(Path::new(path)),
            },
        }
    }

    pub fn user_profile(&self) -> Result<UserProfile, TrafficError> {
        Ok(UserProfile {
            class: self.user_class,
            day_profile: self.resolve_profile()?,
            sessions_per_hour: self.sessions_per_hour,
            web_fraction: self.web_fraction,
            start_hour: self.start_hour,
        })
    }

    pub fn validate(&self) -> Result<(), TrafficError> {
        self.resolve_profile()?;
        check("sessions_per_hour", self.sessions_per_hour, self.sessions_per_hour >= 0.0 && self.sessions_per_hour.is_finite())?;
        check("web_fraction", self.web_fraction, (0.0..=1.0).contains(&self.web_fraction))?;
        check("start_hour", self.start_hour, (0.0..24.0).contains(&self.start_hour))?;
        self.web.validate()?;
        self.video.validate()?;
        let t = &self.transport;
        check("transport.window_segments", t.window_segments as f64, t.window_segments >= 1)?;
        check("transport.mtu_payload", t.mtu_payload as f64, t.mtu_payload >= 1)?;
        check("transport.request_bytes", t.request_bytes as f64, t.request_bytes >= 1)?;
        check("transport.rto_s", t.rto_s, t.rto_s > 0.0 && t.rto_s.is_finite())?;
        check("transport.core_rtt_s", t.core_rtt_s, t.core_rtt_s >= 0.0 && t.core_rtt_s.is_finite())?;
        if let Some(p) = &self.probe {
            check("probe.down_bps_per_onu", p.down_bps_per_onu, p.down_bps_per_onu >= 0.0 && p.down_bps_per_onu.is_finite())?;
            check("probe.up_bps_per_onu", p.up_bps_per_onu, p.up_bps_per_onu >= 0.0 && p.up_bps_per_onu.is_finite())?;
            check("probe.packet_bytes", p.packet_bytes as f64, p.packet_bytes >= 1)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::derive_stream;

    fn profile(rate: f64, day: DayProfile) -> UserProfile {
        UserProfile {
            class: UserClass::Residential,
            day_profile: day,
            sessions_per_hour: rate,
            web_fraction: 1.0,
            start_hour: 0.0,
        }
    }

    #[test]
    fn builtin_profiles_average_one() {
        for class in [UserClass::Business, UserClass::Residential] {
            let p = DayProfile::builtin(class);
            let mean = p.values().iter().sum::<f64>() / 24.0;
            assert!((mean - 1.0).abs() <= 1e-9);
        }
        assert_eq!(DayProfile::builtin(UserClass::Residential).multiplier(3), 0.0);
    }

    #[test]
    fn profile_rejects_bad_input() {
        assert!(DayProfile::new(&[1.0; 23]).is_err());
        let mut v = [1.0; 24];
        v[0] = -0.5;
        v[1] = 2.5;
        assert!(DayProfile::new(&v).is_err());
        assert!(DayProfile::new(&[1.1; 24]).is_err());
        assert!(DayProfile::parse("1\n".repeat(23).as_str()).is_err());
        assert!(DayProfile::parse(&format!("# c\n{}", "1.0\n".repeat(24))).is_ok());
    }

    #[test]
    fn zero_rate_has_no_arrivals() {
        let mut s = derive_stream(1, "t");
        assert_eq!(next_session_time(&profile(0.0, DayProfile::flat()), SimTime::ZERO, &mut s), None);
    }

    #[test]
    fn flat_profile_interarrival_mean() {
        let lambda_per_hour = 3600.0; // one per second
        let p = profile(lambda_per_hour, DayProfile::flat());
        let mut s = derive_stream(7, "arrivals");
        let mut t = SimTime::ZERO;
        let n = 100_000;
        for _ in 0..n {
            let next = next_session_time(&p, t, &mut s).unwrap();
            assert!(next > t);
            t = next;
        }
        let mean = t.as_secs() / n as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean inter-arrival {mean}");
    }

    #[test]
    fn zero_bin_hour_stays_empty() {
        let p = UserProfile { day_profile: DayProfile::builtin(UserClass::Residential), ..profile(2.0, DayProfile::flat()) };
        let mut s = derive_stream(3, "res");
        // The profile repeats daily, so each day is replayed from its offset
        // within the day rather than from an absolute clock.
        let day = SimTime::from_secs(86_400.0);
        let mut days = 0;
        let mut t = SimTime::ZERO;
        let mut count = 0;
        while days < 10_000 {
            let mut next = next_session_time(&p, t, &mut s).unwrap();
            while next >= day {
                next = next - day;
                days += 1;
            }
            let hour = (next.as_secs() / 3600.0).floor() as u64;
            assert_ne!(hour, 3, "arrival at {}", next.as_secs());
            count += 1;
            t = next;
        }
        assert!(count > 400_000);
    }

    #[test]
    fn same_stream_same_sessions() {
        let p = profile(60.0, DayProfile::builtin(UserClass::Business));
        let draw = || {
            let mut s = derive_stream(11, "u/0");
            let mut t = SimTime::ZERO;
            (0..50)
                .map(|_| {
                    t = next_session_time(&p, t, &mut s).unwrap();
                    t
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(), draw());
    }

    #[test]
    fn segmentation_examples() {
        let sizes = |v: Vec<Segment>| v.iter().map(|s| s.payload).collect::<Vec<_>>();
        assert_eq!(sizes(segment_object(4000, 1460)), vec![1460, 1460, 1080]);
        assert_eq!(sizes(segment_object(1460, 1460)), vec![1460]);
        assert_eq!(sizes(segment_object(1, 1460)), vec![1]);
        let segs = segment_object(123_457, 1000);
        assert!(segs.iter().enumerate().all(|(i, s)| s.index == i as u32));
        assert_eq!(segs.iter().map(|s| s.payload as u64).sum::<u64>(), 123_457);
    }

    #[test]
    fn named_profiles_resolve() {
        let mut cfg = TrafficConfig::default();
        assert_eq!(cfg.resolve_profile().unwrap(), DayProfile::builtin(UserClass::Residential));
        cfg.day_profile = Some(DayProfileSpec::Named("flat".into()));
        assert_eq!(cfg.resolve_profile().unwrap(), DayProfile::flat());
        cfg.day_profile = Some(DayProfileSpec::Named("/nonexistent/profile.txt".into()));
        assert!(matches!(cfg.resolve_profile(), Err(TrafficError::Io { .. })));
    }
}
