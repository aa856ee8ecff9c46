//! Limited-service interleaved polling for the shared TDM-PON feeder.
//!
//! Grant start times are expressed at the OLT: a grant's burst begins
//! arriving on the feeder at `start` and occupies it for `8 * length / F`.
//! The ONU therefore transmits at `start - one_way_delay`, which is only
//! possible if `start >= now + rtt` when the grant is issued.

use serde::{Deserialize, Serialize};

use crate::sim::SimTime;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grant {
    pub onu: u32,
    pub start: SimTime,
    pub length: u64,
    pub wavelength: Option<u32>,
}

impl Grant {
    pub fn end(&self, rate_bps: f64) -> SimTime {
        self.start + SimTime::transmission(self.length, rate_bps)
    }
}

/// Feeder grant scheduler state.
#[derive(Clone, Debug)]
pub struct Dba {
    rate_bps: f64,
    guard: SimTime,
    max_grant: u64,
    last_end: Option<SimTime>,
}

impl Dba {
    pub fn new(rate_bps: f64, guard: SimTime, max_grant: u64) -> Self {
        Dba { rate_bps, guard, max_grant, last_end: None }
    }

    /// End of the last scheduled burst on the feeder.
    pub fn feeder_free_at(&self) -> Option<SimTime> {
        self.last_end
    }

    /// Schedules the next burst of one ONU after its report reaches the OLT.
    pub fn grant_one(&mut self, onu: u32, report: u64, rtt: SimTime, now: SimTime) -> Grant {
        let length = report.min(self.max_grant);
        let earliest = now + rtt;
        let start = match self.last_end {
            Some(end) => earliest.max(end + self.guard),
            None => earliest,
        };
        let grant = Grant { onu, start, length, wavelength: None };
        self.last_end = Some(grant.end(self.rate_bps));
        grant
    }

    /// One polling cycle over all ONUs in round-robin order.
    ///
    /// `reports[i]` is ONU `i`'s queue occupancy in bytes (zero still yields a
    /// polling slot); `rtts[i]` is its round-trip time.
    pub fn grant_cycle(&mut self, reports: &[u64], rtts: &[SimTime], now: SimTime) -> Vec<Grant> {
        assert_eq!(reports.len(), rtts.len(), "one report and rtt per ONU");
        reports
            .iter()
            .zip(rtts)
            .enumerate()
            .map(|(i, (&r, &rtt))| self.grant_one(i as u32, r, rtt, now))
            .collect()
    }
}
