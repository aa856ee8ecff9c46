//! Access architecture models: point-to-point, TDM-PON and hybrid TDM/WDM-PON.

pub mod dba;
pub mod link;
pub mod network;
pub mod pool;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::SimTime;

pub use dba::{Dba, Grant};
pub use network::{Conservation, Direction, MacStats, MediumUse, NetEvent, Network, Packet, PacketKind};
pub use pool::{assign_transceiver, Assignment, PoolPolicy, Powered, TransceiverState};

/// Group velocity of light in fibre used for propagation delays, in m/s.
pub const DEFAULT_GROUP_VELOCITY: f64 = 2.0e8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArchKind {
    PointToPoint,
    TdmPon,
    HybridTwdmPon,
}

impl std::fmt::Display for ArchKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ArchKind::PointToPoint => "point_to_point",
            ArchKind::TdmPon => "tdm_pon",
            ArchKind::HybridTwdmPon => "hybrid_twdm_pon",
        })
    }
}

/// Declarative description of one access network.
///
/// Rates are in bit/s. `line_rate` is only used by point-to-point, where each
/// ONU has a dedicated OLT transceiver at that rate. For the hybrid network
/// `feeder_rate` is the per-wavelength rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArchitectureConfig {
    pub kind: ArchKind,
    pub onu_count: u32,
    pub users_per_onu: u32,
    pub feeder_rate: f64,
    pub distribution_rate: f64,
    pub line_rate: f64,
    pub feeder_length_km: f64,
    pub wavelength_count: u32,
    pub transceiver_pool: u32,
    pub tuning_time_s: f64,
    pub guard_time_s: f64,
    pub max_grant_bytes: u64,
    pub buffer_bytes: u64,
    pub group_velocity: f64,
    pub pool_policy: PoolPolicy,
}

impl Default for ArchitectureConfig {
    fn default() -> Self {
        ArchitectureConfig {
            kind: ArchKind::TdmPon,
            onu_count: 32,
            users_per_onu: 1,
            feeder_rate: 1e9,
            distribution_rate: 1e8,
            line_rate: 1e8,
            feeder_length_km: 20.0,
            wavelength_count: 4,
            transceiver_pool: 2,
            tuning_time_s: 1e-3,
            guard_time_s: 1e-6,
            max_grant_bytes: 15_500,
            buffer_bytes: 1 << 20,
            group_velocity: DEFAULT_GROUP_VELOCITY,
            pool_policy: PoolPolicy::OldestFirst,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("onu_count must be at least 1")]
    NoOnus,
    #[error("users_per_onu must be at least 1")]
    NoUsers,
    #[error("{name} must be a positive finite rate, got {value}")]
    BadRate { name: &'static str, value: f64 },
    #[error("{name} must be non-negative and finite, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error("hybrid network requires 1 <= transceiver_pool <= wavelength_count <= onu_count, got K={pool}, W={wavelengths}, N={onus}")]
    BadPool { pool: u32, wavelengths: u32, onus: u32 },
    #[error("max_grant_bytes must be at least 1")]
    ZeroGrant,
    #[error("buffer_bytes must be at least 1")]
    ZeroBuffer,
}

fn check_rate(name: &'static str, value: f64) -> Result<(), ConfigError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::BadRate { name, value })
    }
}

fn check_non_negative(name: &'static str, value: f64) -> Result<(), ConfigError> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(ConfigError::Negative { name, value })
    }
}

impl ArchitectureConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.onu_count == 0 {
            return Err(ConfigError::NoOnus);
        }
        if self.users_per_onu == 0 {
            return Err(ConfigError::NoUsers);
        }
        check_rate("distribution_rate", self.distribution_rate)?;
        match self.kind {
            ArchKind::PointToPoint => check_rate("line_rate", self.line_rate)?,
            _ => check_rate("feeder_rate", self.feeder_rate)?,
        }
        check_rate("group_velocity", self.group_velocity)?;
        check_non_negative("feeder_length_km", self.feeder_length_km)?;
        check_non_negative("guard_time_s", self.guard_time_s)?;
        check_non_negative("tuning_time_s", self.tuning_time_s)?;
        if self.max_grant_bytes == 0 {
            return Err(ConfigError::ZeroGrant);
        }
        if self.buffer_bytes == 0 {
            return Err(ConfigError::ZeroBuffer);
        }
        if self.kind == ArchKind::HybridTwdmPon {
            let (k, w, n) = (self.transceiver_pool, self.wavelength_count, self.onu_count);
            if !(1 <= k && k <= w && w <= n) {
                return Err(ConfigError::BadPool { pool: k, wavelengths: w, onus: n });
            }
        }
        Ok(())
    }

    /// Effective trunk rate: the dedicated line rate for point-to-point, the
    /// (per-wavelength) feeder rate otherwise.
    pub fn trunk_rate(&self) -> f64 {
        match self.kind {
            ArchKind::PointToPoint => self.line_rate,
            _ => self.feeder_rate,
        }
    }

    /// Upper bound on the equivalent circuit rate: no user can be offered more
    /// than the smaller of the trunk and distribution rates.
    pub fn rate_bound(&self) -> f64 {
        self.trunk_rate().min(self.distribution_rate)
    }

    pub fn user_count(&self) -> u32 {
        self.onu_count * self.users_per_onu
    }

    /// One-way feeder propagation delay.
    pub fn feeder_delay(&self) -> SimTime {
        propagation_delay_with(self.feeder_length_km, self.group_velocity)
            .expect("validated length")
    }

    /// Wavelength an ONU listens on in the hybrid network (`i mod W`).
    pub fn wavelength_of(&self, onu: u32) -> u32 {
        onu % self.wavelength_count.max(1)
    }

    /// Point-to-point reference at `rate` serving the same user population
    /// over the same feeder length.
    pub fn reference_at(&self, rate: f64) -> ArchitectureConfig {
        ArchitectureConfig {
            kind: ArchKind::PointToPoint,
            line_rate: rate,
            distribution_rate: rate,
            ..self.clone()
        }
    }
}

#[derive(Debug, Error, PartialEq)]
#[error("fibre length must be non-negative, got {0} km")]
pub struct NegativeLength(pub f64);

/// Propagation delay over `length_km` of fibre at the default group velocity.
pub fn propagation_delay(length_km: f64) -> Result<f64, NegativeLength> {
    propagation_delay_with(length_km, DEFAULT_GROUP_VELOCITY).map(SimTime::as_secs)
}

pub fn propagation_delay_with(length_km: f64, velocity: f64) -> Result<SimTime, NegativeLength> {
    if !(length_km >= 0.0) {
        return Err(NegativeLength(length_km));
    }
    Ok(SimTime::from_secs(length_km * 1000.0 / velocity))
}
